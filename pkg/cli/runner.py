"""Concurrent execution of scenario checks

Independent checks run concurrently in worker threads; shared artifacts
(star product, lifted idempotent, corner and bundle) are built once by the
CheckContext under its lock.
"""

import asyncio
import random
import time
import zlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from cli.checks import CHECKS, CheckContext, CheckSettings, SkipCheck
from core.debug_logger import debug_error, debug_log, debug_timer_end, debug_timer_start

PASS = 'PASS'
FAIL = 'FAIL'
SKIPPED = 'SKIPPED'


@dataclass
class CheckResult:
    name: str
    status: str
    detail: str = ''
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status != FAIL


@dataclass
class Report:
    """Results of one verify run, sorted by check name"""

    scenario: str
    seed: int
    results: List[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def counts(self) -> Dict[str, int]:
        counts = {PASS: 0, FAIL: 0, SKIPPED: 0}
        for r in self.results:
            counts[r.status] += 1
        return counts

    def to_dict(self, include_timings: bool = False) -> Dict:
        checks = []
        for r in self.results:
            entry = {'name': r.name, 'status': r.status, 'detail': r.detail}
            if include_timings:
                entry['elapsed'] = round(r.elapsed, 4)
            checks.append(entry)
        return {'scenario': self.scenario, 'seed': self.seed, 'checks': checks}


def check_rng(seed: int, name: str) -> random.Random:
    """Per-check generator, independent of execution order"""
    return random.Random(seed ^ zlib.crc32(name.encode()))


def selected_checks(scenario, names: Optional[Sequence[str]] = None) -> List[str]:
    """Explicit names, else the scenario's checks line, else every registered check"""
    if names is not None:
        chosen = list(names)
    elif scenario.checks is not None:
        chosen = list(scenario.checks)
    else:
        chosen = list(CHECKS)
    unknown = [n for n in chosen if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks: {', '.join(unknown)}")
    return sorted(set(chosen))


def run_check(ctx: CheckContext, name: str) -> CheckResult:
    """Run one check synchronously; exceptions become FAIL results"""
    spec = CHECKS[name]
    start = time.perf_counter()
    try:
        outcome = spec.run(ctx, check_rng(ctx.seed, name))
        status = PASS if outcome.passed else FAIL
        detail = outcome.detail
    except SkipCheck as e:
        status, detail = SKIPPED, str(e)
    except Exception as e:
        debug_error('checks', f'Check {name} raised', exception=e)
        status, detail = FAIL, f"{type(e).__name__}: {e}"
    elapsed = time.perf_counter() - start
    debug_log('checks', 'Check finished', check=name, status=status, elapsed=f"{elapsed:.3f}s")
    return CheckResult(name, status, detail, elapsed)


async def run_checks(scenario, seed: int = 0, settings: Optional[CheckSettings] = None,
                     names: Optional[Sequence[str]] = None) -> Report:
    """Run the selected checks concurrently and collect a report

    Args:
        scenario: Parsed scenario
        seed: Seed for every random sample
        settings: Sample counts and degrees, defaults to CheckSettings()
        names: Checks to run, defaults to the scenario's selection

    Returns:
        Report: results sorted by check name
    """
    ctx = CheckContext(scenario, settings, seed)
    chosen = selected_checks(scenario, names)
    start = debug_timer_start('performance', 'run_checks')
    results = await asyncio.gather(*(asyncio.to_thread(run_check, ctx, name) for name in chosen))
    debug_timer_end('performance', 'run_checks', start)
    return Report(scenario.name, seed, sorted(results, key=lambda r: r.name))
