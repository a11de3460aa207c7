"""Tests for deformed idempotents, the J and I maps and the corner products"""

import random

import pytest

from core.errors import DimensionMismatchError, NotIdempotentError, NotInCornerError, NotInImageError, RankError
from core.matdef import (
    MatPoly, as_mat_series, center_star, corner_unit, first_order_commutator, fibred_bracket_check,
    fibred_leibniz_check, i_inverse, i_map, induced_star, is_full, j_inverse, j_map, lift_idempotent,
    lift_idempotent_stepwise, matrix_bracket, matrix_star, projection_rank, psi, psi_morphism_check,
    random_corner_element, random_section,
)
from core.star import assoc_defect, bracket_of


def test_matrix_arithmetic(R2, flagship_P0):
    x, y = R2.gens
    assert flagship_P0 @ flagship_P0 == flagship_P0
    assert flagship_P0.trace() == R2.one
    assert flagship_P0.shape == (2, 2)
    with pytest.raises(DimensionMismatchError):
        flagship_P0 @ MatPoly.column(R2, [x, y, R2.one])


def test_projection_status(R2, flagship_P0, xy_P0):
    x, _ = R2.gens
    assert is_full(flagship_P0) and is_full(xy_P0)
    assert not is_full(MatPoly.zero(R2, 2))
    assert projection_rank(MatPoly.identity(R2, 2)) == 2
    assert projection_rank(flagship_P0) == 1
    assert projection_rank(MatPoly(R2, [[x, R2.zero], [R2.zero, R2.zero]])) is None


def test_matrix_star_of_scalars(plane_moyal, R2):
    x, y = R2.gens
    product = matrix_star(plane_moyal, MatPoly.scalar(x), MatPoly.scalar(y))
    assert product[1] == MatPoly.scalar(R2.one).scale('1/2')
    identity = MatPoly.identity(R2, 2)
    assert first_order_commutator(plane_moyal, identity.scale(x), identity.scale(y)) == identity
    assert matrix_bracket(plane_moyal.claimed_pi, identity.scale(x), identity.scale(y)) == identity


def test_flagship_lift_is_exact(flagship_lift, flagship_P0):
    assert flagship_lift.is_idempotent()
    assert flagship_lift.is_full()
    assert flagship_lift.qP[0] == flagship_P0
    assert not any(flagship_lift.qP.coeffs[1:])


def test_lift_acquires_corrections(xy_lift, xy_P0, plane_moyal):
    assert xy_lift.is_idempotent()
    assert xy_lift.qP[0] == xy_P0
    assert any(xy_lift.qP.coeffs[1:])
    assert lift_idempotent_stepwise(xy_P0, plane_moyal).is_idempotent()


def test_constant_projection_needs_no_correction(R2, plane_moyal):
    P0 = MatPoly(R2, [[R2.one, R2.zero], [R2.zero, R2.zero]])
    lifted = lift_idempotent(P0, plane_moyal)
    assert lifted.qP == as_mat_series(P0, 2)


def test_lift_rejects_bad_projections(R2, plane_moyal):
    x, _ = R2.gens
    with pytest.raises(NotIdempotentError):
        lift_idempotent(MatPoly(R2, [[x, R2.zero], [R2.zero, R2.zero]]), plane_moyal)
    with pytest.raises(DimensionMismatchError):
        lift_idempotent(MatPoly(R2, [[R2.one, R2.zero]]), plane_moyal)


def test_j_and_i_maps_invert(xy_lift, R2):
    rng = random.Random(3)
    section = random_section(xy_lift, rng, 2)
    assert j_inverse(xy_lift, j_map(xy_lift, section)) == as_mat_series(section, 2)
    corner_element = random_corner_element(xy_lift, rng, 2)
    assert i_inverse(xy_lift, i_map(xy_lift, corner_element)) == as_mat_series(corner_element, 2)
    with pytest.raises(NotInImageError):
        j_map(xy_lift, MatPoly.basis_column(R2, 2, 1))
    with pytest.raises(NotInCornerError):
        i_map(xy_lift, MatPoly.identity(R2, 2))


def test_corner_product(xy_lift):
    corner = induced_star(xy_lift)
    rng = random.Random(5)
    A, B, C = (random_corner_element(xy_lift, rng, 1) for _ in range(3))
    assert corner(corner(A, B), C) == corner(A, corner(B, C))
    unit = corner_unit(xy_lift)
    assert corner(unit, A) == as_mat_series(A, 2)
    assert corner(A, unit) == as_mat_series(A, 2)


def test_fibred_bracket_identities(flagship_lift, xy_lift):
    for lifted in (flagship_lift, xy_lift):
        corner = induced_star(lifted)
        assert fibred_bracket_check(corner, random.Random(0), samples=5).ok
        assert psi_morphism_check(corner, random.Random(1), samples=5).ok
        assert fibred_leibniz_check(corner, random.Random(2), samples=3).ok


def test_center_product_of_rank_one_projection(flagship_lift, plane_pi, R2):
    center, unit = center_star(flagship_lift)
    assert assoc_defect(center) == {}
    assert bracket_of(center) == plane_pi
    assert unit[0] == R2.one
    x, _ = R2.gens
    assert psi(flagship_lift, x) == flagship_lift.P0.scale(x)


def test_center_product_needs_rank_one(R2, plane_moyal):
    lifted = lift_idempotent(MatPoly.identity(R2, 2), plane_moyal)
    with pytest.raises(RankError):
        center_star(lifted)
