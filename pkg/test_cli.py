"""End-to-end tests of the command line through main()"""

import asyncio
import json

import pytest

from cli.checks import CheckSettings
from cli.report import render_text, validate_report
from cli.runner import check_rng, run_checks
from cli.scenario import parse_scenario
from conftest import SCENARIOS
from core.debug_logger import debug_error, debug_log, enable_categories, set_debug_enabled
from core.errors import NotIdempotentError
from core.preferences_manager import PreferencesManager
from core.state_manager import ReportStore
from main import EXIT_FAILED, EXIT_INVALID, EXIT_OK, main

FLAGSHIP = str(SCENARIOS / 'flagship.scn')
MODEL_B1 = str(SCENARIOS / 'model_b1.scn')
MODEL_B2 = str(SCENARIOS / 'model_b2.scn')

BROKEN_EXPLICIT = """\
# first order of the Moyal product without its second order term
scenario = broken
vars = x, y
order = 2
pi = dx^dy
star = explicit
C1 = 1/2 @ (1,0)(0,1) ; -1/2 @ (0,1)(1,0)
checks = assoc, bracket
"""


@pytest.fixture
def cli(tmp_path):
    """Global options pointing preferences and state into tmp_path"""
    prefs = tmp_path / 'prefs.json'
    prefs.write_text(json.dumps({'checks': {'random_samples': 3, 'identity_samples': 5}}))
    state = tmp_path / 'report.json'

    def run(*argv):
        return main(['--prefs', str(prefs), '--state', str(state), *argv])

    return run


def write_scenario(tmp_path, text, name='scenario.scn'):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_flagship_verifies(cli, capsys):
    assert cli('verify', FLAGSHIP) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[-1].startswith('17 checks: ')
    assert ', 0 failed, ' in out[-1]
    assert 'CHECK assoc [flagship] PASS moyal associative mod lambda^3' in out
    assert all(line.startswith('CHECK ') for line in out[:-1])


def test_json_report_and_determinism(cli, capsys):
    argv = ('verify', FLAGSHIP, '--checks', 'assoc,gauge,lift,fibred_bracket', '--format', 'json', '--seed', '7')
    assert cli(*argv) == EXIT_OK
    first = capsys.readouterr().out
    assert cli(*argv) == EXIT_OK
    assert capsys.readouterr().out == first
    data = json.loads(first)
    assert list(data) == ['scenario', 'seed', 'checks']
    assert data['seed'] == 7
    assert [c['name'] for c in data['checks']] == ['assoc', 'fibred_bracket', 'gauge', 'lift']
    assert all(set(c) == {'name', 'status', 'detail'} for c in data['checks'])


def test_empty_check_list(cli, capsys, tmp_path):
    path = write_scenario(tmp_path, 'scenario = empty\nvars = x, y\npi = dx^dy\nchecks = []\n')
    assert cli('verify', path) == EXIT_OK
    assert capsys.readouterr().out.strip() == '0 checks: 0 passed, 0 failed, 0 skipped (seed 0)'


def test_failing_check_exits_one(cli, capsys, tmp_path):
    assert cli('verify', write_scenario(tmp_path, BROKEN_EXPLICIT)) == EXIT_FAILED
    out = capsys.readouterr().out
    assert 'CHECK assoc [broken] FAIL defect at lambda^2' in out
    assert 'CHECK bracket [broken] PASS' in out


def test_operator_spellings_agree():
    listed = BROKEN_EXPLICIT.replace('1/2 @ (1,0)(0,1) ; -1/2 @ (0,1)(1,0)',
                                     '[(1/2, (1,0), (0,1)), (-1/2, (0,1), (1,0))]')
    assert listed != BROKEN_EXPLICIT
    s1 = parse_scenario(BROKEN_EXPLICIT).build_star()
    s2 = parse_scenario(listed).build_star()
    assert s1.ops == s2.ops


def test_malformed_literal_reports_its_position(cli, capsys, tmp_path):
    path = write_scenario(tmp_path, 'scenario = bad\nvars = x, y\npi = dx^dy\nP0 = [[$, 0], [0, 0]]\n')
    assert cli('verify', path) == EXIT_INVALID
    err = capsys.readouterr().err
    assert err.startswith('error: 4:8: ')
    assert "unexpected character '$'" in err


def test_non_poisson_bivector_is_rejected(cli, capsys, tmp_path):
    path = write_scenario(tmp_path, 'vars = x, y, z\nstar = kontsevich2\npi = dx^dy + y*dy^dz\n')
    assert cli('verify', path) == EXIT_INVALID
    assert 'not Poisson' in capsys.readouterr().err


def test_invalid_invocations(cli, capsys, tmp_path):
    assert cli('verify', str(tmp_path / 'missing.scn')) == EXIT_INVALID
    assert 'cannot read' in capsys.readouterr().err
    assert cli('verify', FLAGSHIP, '--checks', 'assoc,nope') == EXIT_INVALID
    assert capsys.readouterr().err.strip() == "error: unknown check 'nope'"
    assert cli('verify', FLAGSHIP, '--order', '9') == EXIT_INVALID


def test_orbit_queries(cli, capsys):
    assert cli('orbit', MODEL_B1, '3u') == EXIT_OK
    assert cli('orbit', MODEL_B1, '(1/2)u') == EXIT_OK
    assert cli('orbit', MODEL_B1, '-2u') == EXIT_OK
    assert capsys.readouterr().out.splitlines() == [
        '(3)u: equivalent', '(1/2)u: not equivalent', '(-2)u: equivalent']
    assert cli('orbit', FLAGSHIP, '3u') == EXIT_INVALID


def test_model_scenario_answers_queries(cli, capsys):
    assert cli('verify', MODEL_B1) == EXIT_OK
    out = capsys.readouterr().out
    assert 'CHECK classes [model_b1] PASS' in out
    assert '3u: equivalent; (1/2)u: not equivalent; -2u: equivalent' in out


def test_rank_two_model_scenario(cli, capsys):
    assert cli('verify', MODEL_B2) == EXIT_OK
    out = capsys.readouterr().out
    assert 'CHECK classes [model_b2] PASS b = 2, Poisson action not faithful' in out
    assert '(1, -2)u: equivalent' in out
    assert '(1/2, 1/2)u: not equivalent' in out
    assert '(0, 1)u + (1, 0): not equivalent' in out


def test_star_mul_and_lift(cli, capsys):
    assert cli('star-mul', FLAGSHIP, 'x', 'y') == EXIT_OK
    assert capsys.readouterr().out.strip() == 'x*y + λ*(1/2)'
    assert cli('lift', FLAGSHIP) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[-1] == 'idempotent mod lambda^3: yes'


def test_report_replays_the_last_run(cli, capsys):
    assert cli('report') == EXIT_FAILED
    assert 'no saved report' in capsys.readouterr().err
    assert cli('verify', FLAGSHIP, '--checks', 'assoc,unit') == EXIT_OK
    fresh = capsys.readouterr().out
    assert cli('report') == EXIT_OK
    assert capsys.readouterr().out == fresh
    assert cli('report', '--format', 'json') == EXIT_OK
    assert json.loads(capsys.readouterr().out)['scenario'] == 'flagship'


def test_checks_listing(cli, capsys):
    assert cli('checks') == EXIT_OK
    names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert names == sorted(names)
    assert {'assoc', 'curvature_theorem', 'classes', 'tau_moyal_pair'} <= set(names)


def test_runner_and_store(tmp_path):
    scenario = parse_scenario((SCENARIOS / 'flagship.scn').read_text())
    report = asyncio.run(run_checks(scenario, 3, names=['unit', 'bracket']))
    assert report.ok
    assert [r.name for r in report.results] == ['bracket', 'unit']
    assert check_rng(3, 'unit').random() == check_rng(3, 'unit').random()

    store = ReportStore(str(tmp_path / 'state.json'))
    assert asyncio.run(store.save_report(report.to_dict()))
    loaded = asyncio.run(store.load_report())
    assert validate_report(loaded)
    assert 'last_saved' in loaded
    assert render_text(loaded) == render_text(report.to_dict())
    assert asyncio.run(store.clear())
    assert asyncio.run(store.load_report()) is None


def test_poisson_identities_with_default_samples():
    scenario = parse_scenario((SCENARIOS / 'su2.scn').read_text())
    assert CheckSettings().identity_samples == 50
    report = asyncio.run(run_checks(scenario, 0, CheckSettings(), names=['poisson_identities']))
    [result] = report.results
    assert result.status == 'PASS'
    assert result.detail == '50 samples, all identities'


def test_preferences_merge_with_defaults(tmp_path):
    path = tmp_path / 'prefs.json'
    path.write_text(json.dumps({'series': {'max_order': 3}}))
    prefs = PreferencesManager(str(path))
    assert prefs.get('series', 'max_order') == 3
    assert prefs.get('series', 'default_order') == 2
    assert prefs.get('checks', 'random_samples') == 20
    prefs.set('report', 'format', 'json')
    assert prefs.save_preferences_sync()
    assert PreferencesManager(str(path)).get('report', 'format') == 'json'
    with pytest.raises(ValueError):
        prefs.set('series', 'max_order', -1)


def test_invalid_preferences_fall_back_to_defaults(tmp_path, capsys):
    path = tmp_path / 'prefs.json'
    path.write_text(json.dumps({
        'series': {'default_order': 3, 'max_order': 1},
        'checks': {'random_samples': 0, 'seed': 'x'},
        'report': 'json',
    }))
    prefs = PreferencesManager(str(path))
    assert prefs.get('series', 'max_order') == 1
    assert prefs.get('series', 'default_order') == 1
    assert prefs.get('checks', 'random_samples') == 20
    assert prefs.get('checks', 'seed') == 0
    assert prefs.get('report', 'format') == 'text'
    assert 'checks.random_samples' in capsys.readouterr().err


def test_preferences_async_round_trip(tmp_path):
    path = tmp_path / 'prefs.json'
    prefs = PreferencesManager(str(path))
    prefs.set('checks', 'seed', 11)
    assert asyncio.run(prefs.save_preferences())
    fresh = PreferencesManager(str(tmp_path / 'other.json'))
    fresh.preferences_file = str(path)
    asyncio.run(fresh.load_preferences())
    assert fresh.get('checks', 'seed') == 11
    path.write_text('{not json')
    asyncio.run(fresh.load_preferences())
    assert fresh.get('checks', 'seed') == 0


def test_debug_output_goes_to_stderr(capsys):
    try:
        enable_categories(['lift'])
        debug_log('lift', 'Newton step', step=1)
        debug_log('star', 'hidden')
        debug_error('lift', 'rejected', exception=NotIdempotentError('P0 * P0 != P0'))
    finally:
        set_debug_enabled(False)
    captured = capsys.readouterr()
    assert captured.out == ''
    assert '[LIFT        ]' in captured.err
    assert 'Newton step | step=1' in captured.err
    assert 'hidden' not in captured.err
    assert 'NotIdempotentError: P0 * P0 != P0' in captured.err
