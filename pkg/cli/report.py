"""Text and JSON rendering of verification reports

Both renderers take the dictionary form of a report so a report reloaded
from the state file renders exactly like a fresh one.
"""

import json
from typing import Dict, List

from core.debug_logger import debug_log

FORMATS = ('text', 'json')
REQUIRED_KEYS = ('scenario', 'seed', 'checks')


def validate_report(data: Dict) -> bool:
    """Whether a stored dictionary has the report structure"""
    return (isinstance(data, dict) and all(key in data for key in REQUIRED_KEYS)
            and all({'name', 'status'} <= set(check) for check in data['checks']))


def _format_elapsed(seconds: float) -> str:
    if seconds < 1:
        return f"{seconds * 1000:.0f}ms"
    return f"{seconds:.2f}s"


def render_text(data: Dict, show_timings: bool = False) -> str:
    """One CHECK line per check and a summary line

    Example:
        CHECK assoc [flagship] PASS moyal associative mod lambda^3
        2 checks: 2 passed, 0 failed, 0 skipped (seed 0)
    """
    scenario = data['scenario']
    lines: List[str] = []
    counts = {'PASS': 0, 'FAIL': 0, 'SKIPPED': 0}
    for check in data['checks']:
        status = check['status']
        counts[status] = counts.get(status, 0) + 1
        line = f"CHECK {check['name']} [{scenario}] {status}"
        if check.get('detail'):
            line += f" {check['detail']}"
        if show_timings and 'elapsed' in check:
            line += f" ({_format_elapsed(check['elapsed'])})"
        lines.append(line)
    total = len(data['checks'])
    lines.append(f"{total} checks: {counts['PASS']} passed, {counts['FAIL']} failed, "
                 f"{counts['SKIPPED']} skipped (seed {data['seed']})")
    debug_log('report', 'Text report rendered', scenario=scenario, checks=total)
    return '\n'.join(lines)


def render_json(data: Dict) -> str:
    """{scenario, seed, checks: [{name, status, detail}]}, keys in schema order"""
    payload = {
        'scenario': data['scenario'],
        'seed': data['seed'],
        'checks': [{'name': c['name'], 'status': c['status'], 'detail': c.get('detail', '')}
                   for c in data['checks']],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False)


def render(data: Dict, fmt: str = 'text', show_timings: bool = False) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}, expected one of {', '.join(FORMATS)}")
    if fmt == 'json':
        return render_json(data)
    return render_text(data, show_timings)
