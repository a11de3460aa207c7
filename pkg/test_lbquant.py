"""Tests for the quantized line bundle and its semiclassical connection"""

import random

import pytest

from core.errors import OrderMismatchError, RankError
from core.lbquant import (
    CURVATURE_SIGN, adapted_connection, bimodule_relations_check, connection_axioms_check, connections_agree,
    curvature, curvature_theorem_check, extract_connection, poisson_chern_representative, quantize_line_bundle,
    trivial_bundle_check,
)
from core.matdef import MatPoly, as_mat_series, lift_idempotent
from core.poisson import OneForm, d_pi
from core.star import bracket_of


@pytest.fixture(scope='module')
def flagship_bundle(flagship_lift):
    return quantize_line_bundle(flagship_lift, rng=random.Random(0))


@pytest.fixture(scope='module')
def xy_bundle(xy_lift):
    return quantize_line_bundle(xy_lift, rng=random.Random(0))


@pytest.fixture(scope='module')
def su2_bundle(su2_lift):
    return quantize_line_bundle(su2_lift, rng=random.Random(0))


def test_bundle_shape(flagship_bundle, flagship_P0):
    assert flagship_bundle.order == 2
    assert flagship_bundle.P0 == flagship_P0
    for s in flagship_bundle.sections():
        assert flagship_P0 @ s == s


def test_identity_acts_trivially(flagship_bundle, R2):
    s = flagship_bundle.sections()[0]
    assert flagship_bundle.right_action(s, R2.one) == as_mat_series(s, 2)


@pytest.mark.parametrize('bundle_name', ['flagship_bundle', 'xy_bundle'])
def test_extracted_connection_is_the_adapted_one(bundle_name, request, plane_pi):
    bundle = request.getfixturevalue(bundle_name)
    D = extract_connection(bundle)
    assert connection_axioms_check(D, random.Random(1), samples=3, degree=2).ok
    assert connections_agree(D, adapted_connection(bundle.P0, plane_pi), random.Random(2), samples=3) == []


@pytest.mark.parametrize('bundle_name, checked', [
    ('flagship_bundle', 2),
    ('xy_bundle', 2),
    ('su2_bundle', 6),
])
def test_curvature_matches_tau(bundle_name, checked, request):
    bundle = request.getfixturevalue(bundle_name)
    report = curvature_theorem_check(bundle)
    assert report.ok, report.failures
    assert report.checked == checked
    assert report.tau_closed
    assert not d_pi(bracket_of(bundle.base_star), report.tau)
    chern = poisson_chern_representative(extract_connection(bundle))
    assert chern.scale(CURVATURE_SIGN) == report.tau


def test_su2_bundle_is_a_bimodule(su2_bundle, su2_pi):
    assert su2_bundle.P0 @ su2_bundle.P0 == su2_bundle.P0
    assert bracket_of(su2_bundle.base_star) == su2_pi
    assert bimodule_relations_check(su2_bundle, random.Random(5), samples=1, degree=1).ok


def test_bimodule_relations(xy_bundle):
    assert bimodule_relations_check(xy_bundle, random.Random(4), samples=2, degree=1).ok


def test_constant_projection_is_flat(R2, plane_pi):
    P0 = MatPoly(R2, [[R2.one, R2.zero], [R2.zero, R2.zero]])
    D = adapted_connection(P0, plane_pi)
    assert not poisson_chern_representative(D)


def test_curvature_is_antisymmetric(flagship_P0, plane_pi, R2):
    x, y = R2.gens
    D = adapted_connection(flagship_P0, plane_pi)
    s = flagship_P0 @ MatPoly.basis_column(R2, 2, 0)
    alpha = OneForm(R2, (y, x * x))
    assert not curvature(D, alpha, alpha, s)
    dx, dy = OneForm.coordinate(R2, 0), OneForm.coordinate(R2, 1)
    assert curvature(D, dx, dy, s) == -curvature(D, dy, dx, s)


def test_rank_one_is_required(R2, plane_pi, plane_moyal):
    with pytest.raises(RankError):
        adapted_connection(MatPoly.identity(R2, 2), plane_pi)
    with pytest.raises(RankError):
        quantize_line_bundle(lift_idempotent(MatPoly.identity(R2, 2), plane_moyal))


def test_connection_needs_first_order(flagship_bundle):
    with pytest.raises(OrderMismatchError):
        extract_connection(flagship_bundle.truncate(0))
    with pytest.raises(OrderMismatchError):
        flagship_bundle.truncate(3)


def test_trivial_bundle_recovers_the_product(plane_moyal, su2_star):
    assert trivial_bundle_check(plane_moyal) == []
    assert trivial_bundle_check(su2_star, random.Random(0)) == []
