"""Tests for truncated series, differential operators and equivalence transforms"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import polynomials
from core.coeffring import function_ring
from core.errors import NotADerivationError, OrderMismatchError
from core.series import (
    DiffOp, EquivalenceTransform, TruncatedSeries, compose_transforms, derivation_generators, invert_transform,
    lie_transform, series_mul, transform_exp, transform_log,
)

PLANE = function_ring(2)


def dx(R, power=1):
    return DiffOp(R, {(power, 0): R.one})


def test_series_multiplication_truncates():
    one_plus = TruncatedSeries((1, 1, 0))
    assert series_mul(one_plus, one_plus) == TruncatedSeries((1, 2, 1))
    x = PLANE.gens[0]
    a = TruncatedSeries((PLANE.one, x))
    b = TruncatedSeries((PLANE.one, -x))
    assert series_mul(a, b) == TruncatedSeries((PLANE.one, PLANE.zero))


def test_series_orders_must_match():
    with pytest.raises(OrderMismatchError):
        TruncatedSeries((1, 2)) + TruncatedSeries((1, 2, 3))
    with pytest.raises(OrderMismatchError):
        TruncatedSeries(())


def test_series_helpers():
    s = TruncatedSeries((0, 0, 5))
    assert s.order == 2
    assert s.lowest_order() == 2
    assert TruncatedSeries.constant(3, 2, zero=0) == TruncatedSeries((3, 0, 0))
    assert s.truncate(1).is_zero()
    assert TruncatedSeries((1, 0, 2)).format() == '1 + λ^2*(2)'


def test_diffop_application(R2):
    x, y = R2.gens
    D = DiffOp(R2, {(1, 0): y, (0, 2): R2.one})
    assert D(x ** 2 * y ** 2) == 2 * x * y ** 3 + 2 * x ** 2
    assert D.order() == 2
    assert D.vector_field() is None
    X = DiffOp.from_vector_field(R2, [y, -x])
    assert X.vector_field() == [y, -x]
    assert DiffOp.zero(R2).order() == -1


def test_diffop_composition(R2):
    x, _ = R2.gens
    # d/dx after multiplication by x is x d/dx + 1
    composed = dx(R2).compose(DiffOp.multiplication(x))
    assert composed == DiffOp(R2, {(1, 0): x, (0, 0): R2.one})
    assert dx(R2) @ dx(R2) == dx(R2, 2)


def test_inverse_of_first_order_shift(R2):
    T = EquivalenceTransform(R2, (dx(R2), DiffOp.zero(R2)))
    expected = EquivalenceTransform(R2, (-dx(R2), dx(R2, 2)))
    assert invert_transform(T) == expected
    assert compose_transforms(T, invert_transform(T)).is_identity()


def test_transform_applies_to_functions(R2):
    x, _ = R2.gens
    T = EquivalenceTransform(R2, (dx(R2), dx(R2, 2)))
    assert T(x ** 2) == TruncatedSeries((x ** 2, 2 * x, 2 * R2.one))


def test_exp_log_of_vector_fields(R2):
    x, y = R2.gens
    fields = [[x * y, y ** 2], [R2.one, x]]
    T = lie_transform(R2, fields)
    assert transform_log(T) == [DiffOp.from_vector_field(R2, f) for f in fields]
    assert derivation_generators(T) == fields


def test_exp_of_derivation_is_an_automorphism(R2):
    x, y = R2.gens
    T = lie_transform(R2, [[x * y, R2.one], [y, x]])
    f, g = x ** 2 + y, x * y
    assert T(f * g) == series_mul(T(f), T(g))


def test_non_derivation_generator_is_rejected(R2):
    T = transform_exp(R2, [dx(R2, 2)])
    with pytest.raises(NotADerivationError):
        derivation_generators(T)


@settings(max_examples=15, deadline=None)
@given(st.data())
def test_composition_with_inverse_is_identity(data):
    ops = [DiffOp(PLANE, {alpha: data.draw(polynomials(PLANE, 1)) for alpha in ((1, 0), (0, 1), (1, 1))})
           for _ in range(2)]
    T = EquivalenceTransform(PLANE, tuple(ops))
    assert T.compose(invert_transform(T)).is_identity()
    assert invert_transform(T).compose(T).is_identity()
