"""Tests for star products: Moyal, the order-2 universal product, equivalences and tau"""

from fractions import Fraction

import pytest

from core.coeffring import constant
from core.errors import (
    DegenerateBivectorError, FirstOrderMismatchError, NormalizationError, NotConstantError, NotPoissonError,
    OrderMismatchError,
)
from core.poisson import FormalPoisson, Multivector, OneForm, d_pi, hamiltonian
from core.series import DiffOp, EquivalenceTransform, TruncatedSeries, invert_transform, lie_transform
from core.star import (
    BidiffOp, StarProduct, apply_equivalence, assoc_defect, bracket_of, format_product, kontsevich2, moyal,
    normalize_first_order, normalize_unit, recover_bidifferential, star_commutator_check, star_mul, tau, tau_tilde,
    unit_defect,
)


def second_x_derivative(R, order=2):
    return EquivalenceTransform(R, (DiffOp(R, {(2, 0): R.one}),) + (DiffOp.zero(R),) * (order - 1))


def test_moyal_on_coordinates(plane_moyal, R2):
    x, y = R2.gens
    half = constant(R2, Fraction(1, 2))
    assert star_mul(plane_moyal, x, y) == TruncatedSeries((x * y, half, R2.zero))
    commutator = star_mul(plane_moyal, x, y) - star_mul(plane_moyal, y, x)
    assert commutator == TruncatedSeries((R2.zero, R2.one, R2.zero))
    assert plane_moyal.op(2)(x ** 2, y ** 2) == half
    assert format_product(star_mul(plane_moyal, x, y), ['x', 'y']) == 'x*y + λ*(1/2)'


def test_moyal_is_associative_to_order_four(plane_pi, R4):
    assert assoc_defect(moyal(plane_pi, 4)) == {}
    pi4 = Multivector(R4, 2, {(0, 1): R4.one, (2, 3): R4.one})
    s = moyal(pi4, 4)
    assert assoc_defect(s) == {}
    assert unit_defect(s) == []
    assert star_commutator_check(s) == []
    assert bracket_of(s) == pi4


def test_moyal_needs_constant_bivector(R2):
    x, _ = R2.gens
    with pytest.raises(NotConstantError):
        moyal(Multivector(R2, 2, {(0, 1): x}), 2)


def test_non_poisson_first_order_breaks_associativity_at_order_two(R3):
    _, y, _ = R3.gens
    pi = Multivector(R3, 2, {(0, 1): R3.one, (1, 2): y})
    s = StarProduct(R3, [BidiffOp.pointwise(R3), BidiffOp.from_bivector(pi).scale(Fraction(1, 2)),
                         BidiffOp.zero(R3)], pi, 'first-order')
    assert sorted(assoc_defect(s)) == [2]


def test_kontsevich2_reduces_to_moyal_for_constant_pi(plane_pi, plane_moyal):
    assert kontsevich2(plane_pi, 2) == plane_moyal


def test_kontsevich2_on_su2(su2_star, su2_pi, R3):
    x, y, z = R3.gens
    assert assoc_defect(su2_star) == {}
    assert unit_defect(su2_star) == []
    assert bracket_of(su2_star) == su2_pi
    commutator = star_mul(su2_star, x, y) - star_mul(su2_star, y, x)
    assert commutator == TruncatedSeries((R3.zero, z, R3.zero))


def test_kontsevich2_rejects_bad_input(R3):
    _, y, _ = R3.gens
    with pytest.raises(NotPoissonError):
        kontsevich2(Multivector(R3, 2, {(0, 1): R3.one, (1, 2): y}))
    with pytest.raises(OrderMismatchError):
        kontsevich2(Multivector(R3, 2, {(0, 1): R3.one}), 3)


def test_equivalence_keeps_the_bracket(plane_moyal, plane_pi, R2):
    T = second_x_derivative(R2)
    transformed = apply_equivalence(T, plane_moyal)
    assert transformed != plane_moyal
    assert assoc_defect(transformed) == {}
    assert bracket_of(transformed) == plane_pi
    assert apply_equivalence(invert_transform(T), transformed) == plane_moyal


def test_equivalence_is_a_right_action(plane_moyal, R2):
    x, y = R2.gens
    T1 = second_x_derivative(R2)
    T2 = lie_transform(R2, [[y, x * y], [R2.zero, R2.zero]])
    twice = apply_equivalence(T2, apply_equivalence(T1, plane_moyal))
    assert twice == apply_equivalence(T1.compose(T2), plane_moyal)


def test_normalize_first_order(plane_moyal, R2):
    shifted = apply_equivalence(second_x_derivative(R2), plane_moyal)
    assert shifted.op(1).symmetric_part()
    normalized, T = normalize_first_order(shifted)
    assert normalized.op(1) == plane_moyal.op(1)
    assert T.component(1) == DiffOp(R2, {(2, 0): -R2.one})
    assert assoc_defect(normalized) == {}


def test_normalize_unit(plane_moyal, R2):
    x, _ = R2.gens
    T = EquivalenceTransform(R2, (DiffOp.multiplication(x), DiffOp.zero(R2)))
    shifted = apply_equivalence(T, plane_moyal)
    assert unit_defect(shifted)[0] == 1
    unit = TruncatedSeries((R2.one, -x, x ** 2))
    normalized, T2 = normalize_unit(shifted, unit)
    assert not T2.is_identity()
    assert normalized == plane_moyal
    assert normalize_unit(plane_moyal, R2.one)[0] is plane_moyal
    with pytest.raises(NormalizationError):
        normalize_unit(plane_moyal, TruncatedSeries((2 * R2.one, R2.zero, R2.zero)))


def test_tau_vanishes_on_equal_products(plane_moyal, plane_pi):
    assert not tau(plane_moyal, plane_moyal)
    assert bracket_of(plane_moyal.truncate(0)) == Multivector.zero(plane_pi.ring, 2)


def test_tau_of_moyal_pair_is_minus_rho(plane_pi, plane_moyal, R2):
    rho = Multivector(R2, 2, {(0, 1): constant(R2, 3)})
    shifted = moyal(FormalPoisson.from_terms([plane_pi, rho]), 2)
    assert tau(plane_moyal, shifted) == -rho
    assert assoc_defect(shifted) == {}

    omega = tau_tilde(plane_moyal, shifted, plane_pi)
    x, y = R2.gens
    value = omega(hamiltonian(plane_pi, x), hamiltonian(plane_pi, y))
    assert value == tau(plane_moyal, shifted)(OneForm.exact(x), OneForm.exact(y))
    assert value == constant(R2, -3)
    assert omega.is_closed()


def test_tau_of_gauge_pair_is_minus_d_pi_x(plane_moyal, plane_pi, R2):
    x, y = R2.gens
    field = [x * y, y ** 2]
    T = lie_transform(R2, [field, [R2.zero, R2.zero]])
    value = tau(apply_equivalence(T, plane_moyal), plane_moyal)
    assert value == -d_pi(plane_pi, Multivector.vector_field(R2, field))


def test_tau_input_checks(plane_moyal, R2, R3):
    with pytest.raises(OrderMismatchError):
        tau(plane_moyal.truncate(1), plane_moyal.truncate(1))
    other = moyal(Multivector(R2, 2, {(0, 1): constant(R2, 2)}), 2)
    with pytest.raises(FirstOrderMismatchError):
        tau(plane_moyal, other)
    degenerate = Multivector(R3, 2, {(0, 1): R3.one})
    s = moyal(degenerate, 2)
    with pytest.raises(DegenerateBivectorError):
        tau_tilde(s, s, degenerate)


def test_operators_recovered_from_evaluations(plane_moyal, R2):
    ops = recover_bidifferential(lambda f, g: star_mul(plane_moyal, f, g), R2, 2, 2)
    assert ops == list(plane_moyal.ops)
