#!/usr/bin/env python3
"""
Deformation Workbench
Command-line verification of star products, deformed idempotents, quantized
line bundles and characteristic class actions
"""

import argparse
import asyncio
import os
import sys
from typing import List, Optional

import aiofiles

from cli.checks import CHECKS, CheckSettings
from cli.report import FORMATS, render, validate_report
from cli.runner import run_checks
from cli.scenario import Scenario, parse_scenario
from core.classes import orbit_equivalent, parse_twist_class
from core.coeffring import parse_poly
from core.debug_logger import (
    debug_error,
    debug_log,
    debug_section,
    enable_all_categories,
    enable_categories,
    print_debug_config,
)
from core.errors import LiteralSyntaxError, ScenarioError, WorkbenchError
from core.matdef import lift_idempotent
from core.preferences_manager import PreferencesManager
from core.star import format_product, star_mul
from core.state_manager import ReportStore

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2


def init_debug_logging(categories: Optional[str] = None):
    """Initialize debug logging from debug_config, then apply the --debug flag"""
    try:
        import debug_config

        if debug_config.ENABLE_ALL:
            enable_all_categories()
        elif debug_config.ENABLE_DEBUG:
            enable_categories(debug_config.ENABLED_CATEGORIES)
    except ImportError:
        pass

    if categories == 'all':
        enable_all_categories()
    elif categories:
        enable_categories(c.strip() for c in categories.split(','))
    if categories:
        print_debug_config()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='deformation-workbench',
        description='Exact verification of deformation quantization identities on polynomial charts')
    parser.add_argument('--debug', nargs='?', const='all', metavar='CATEGORIES',
                        help='enable debug logging on stderr, optionally only for comma-separated categories')
    parser.add_argument('--prefs', metavar='PATH', help='preferences file')
    parser.add_argument('--state', metavar='PATH', help='file holding the last report')
    sub = parser.add_subparsers(dest='command', required=True)

    verify = sub.add_parser('verify', help='run the checks of a scenario')
    verify.add_argument('scenario', help='scenario file')
    verify.add_argument('--seed', type=int, help='seed for random samples')
    verify.add_argument('--order', type=int, help='truncation order, overrides the scenario')
    verify.add_argument('--checks', help='comma-separated checks, overrides the scenario')
    verify.add_argument('--format', choices=FORMATS, help='report format')
    verify.add_argument('--timings', action='store_true', help='append elapsed time to each check')

    product = sub.add_parser('star-mul', help='print f * g for the scenario star product')
    product.add_argument('scenario', help='scenario file')
    product.add_argument('f', help='polynomial literal')
    product.add_argument('g', help='polynomial literal')

    lift = sub.add_parser('lift', help='print the lifted idempotent of the scenario P0')
    lift.add_argument('scenario', help='scenario file')

    orbit = sub.add_parser('orbit', help='decide whether t0 lies in the lattice orbit of a model')
    orbit.add_argument('model', help='scenario file with a model block')
    orbit.add_argument('t0', help='class literal such as (1/2)u')

    report = sub.add_parser('report', help='re-render the last verification report')
    report.add_argument('--format', choices=FORMATS, help='report format')
    report.add_argument('--timings', action='store_true', help='append elapsed time to each check')

    sub.add_parser('checks', help='list the available checks')
    return parser


async def read_text(path: str) -> str:
    async with aiofiles.open(path, 'r', encoding='utf-8') as f:
        return await f.read()


async def load_scenario(path: str, prefs: PreferencesManager) -> Scenario:
    """Read and parse a scenario file; file errors surface as ScenarioError"""
    try:
        text = await read_text(path)
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e.strerror or e}")
    name = os.path.splitext(os.path.basename(path))[0]
    return parse_scenario(text,
                          default_order=prefs.get('series', 'default_order', 2),
                          max_order=prefs.get('series', 'max_order', 4),
                          default_name=name)


async def cmd_verify(args, prefs: PreferencesManager, store: ReportStore) -> int:
    scenario = await load_scenario(args.scenario, prefs)
    if args.order is not None:
        scenario = scenario.with_order(args.order, prefs.get('series', 'max_order', 4))
    names = None
    if args.checks is not None:
        names = [n.strip() for n in args.checks.split(',') if n.strip()]
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            raise ScenarioError(f"unknown check {unknown[0]!r}")
    seed = args.seed if args.seed is not None else prefs.get('checks', 'seed', 0)
    debug_section('checks', f"VERIFY {scenario.name} (seed {seed})")
    report = await run_checks(scenario, seed, CheckSettings.from_preferences(prefs), names)
    show_timings = args.timings or prefs.get('report', 'show_timings', False)
    print(render(report.to_dict(include_timings=show_timings),
                 args.format or prefs.get('report', 'format', 'text'), show_timings))
    await store.save_report(report.to_dict(include_timings=True))
    return report.exit_code


async def cmd_star_mul(args, prefs: PreferencesManager) -> int:
    scenario = await load_scenario(args.scenario, prefs)
    s = scenario.build_star()
    f = parse_poly(args.f, scenario.ring, scenario.names)
    g = parse_poly(args.g, scenario.ring, scenario.names)
    print(format_product(star_mul(s, f, g), scenario.names))
    return EXIT_OK


async def cmd_lift(args, prefs: PreferencesManager) -> int:
    scenario = await load_scenario(args.scenario, prefs)
    if scenario.P0 is None:
        raise ScenarioError(f"scenario {scenario.name!r} has no P0")
    lifted = await asyncio.to_thread(lift_idempotent, scenario.P0, scenario.build_star())
    print(lifted.qP.format(lambda M: M.format(scenario.names)))
    idempotent = lifted.is_idempotent()
    print(f"idempotent mod lambda^{lifted.order + 1}: {'yes' if idempotent else 'no'}")
    return EXIT_OK if idempotent else EXIT_FAILED


async def cmd_orbit(args, prefs: PreferencesManager) -> int:
    scenario = await load_scenario(args.model, prefs)
    if scenario.model is None:
        raise ScenarioError(f"{args.model} has no model block")
    t0 = parse_twist_class(args.t0, scenario.model.b)
    equivalent = orbit_equivalent(scenario.model, t0)
    print(f"{t0.format()}: {'equivalent' if equivalent else 'not equivalent'}")
    return EXIT_OK


async def cmd_report(args, prefs: PreferencesManager, store: ReportStore) -> int:
    data = await store.load_report()
    if data is None or not validate_report(data):
        print(f"no saved report in {store.state_file}", file=sys.stderr)
        return EXIT_FAILED
    show_timings = args.timings or prefs.get('report', 'show_timings', False)
    print(render(data, args.format or prefs.get('report', 'format', 'text'), show_timings))
    return EXIT_OK if all(c['status'] != 'FAIL' for c in data['checks']) else EXIT_FAILED


def cmd_checks() -> int:
    width = max(len(name) for name in CHECKS)
    for name in sorted(CHECKS):
        print(f"{name:{width}s}  {CHECKS[name].description}")
    return EXIT_OK


async def dispatch(args, prefs: PreferencesManager) -> int:
    store = ReportStore(args.state or prefs.get('report', 'state_file'))
    if args.command == 'verify':
        return await cmd_verify(args, prefs, store)
    if args.command == 'star-mul':
        return await cmd_star_mul(args, prefs)
    if args.command == 'lift':
        return await cmd_lift(args, prefs)
    if args.command == 'orbit':
        return await cmd_orbit(args, prefs)
    if args.command == 'report':
        return await cmd_report(args, prefs, store)
    return cmd_checks()


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    args = build_parser().parse_args(argv)
    init_debug_logging(args.debug)
    prefs = PreferencesManager(args.prefs)
    debug_log('scenario', 'Command started', command=args.command)
    try:
        return asyncio.run(dispatch(args, prefs))
    except ScenarioError as e:
        where = f"{e.line}:{e.column}: " if e.line else ''
        print(f"error: {where}{e.reason}", file=sys.stderr)
        return EXIT_INVALID
    except LiteralSyntaxError as e:
        print(f"error: column {e.column}: {e.reason}", file=sys.stderr)
        return EXIT_INVALID
    except WorkbenchError as e:
        debug_error('error', f'{args.command} failed', exception=e)
        return EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
