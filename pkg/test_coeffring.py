"""Tests for polynomial coefficients, multi-indices and the literal syntax"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import polynomials
from core.coeffring import (
    constant, derive, format_poly, format_scalar, fraction_parts, function_ring, gaussian, gradient,
    index_multinomial, monomials_upto, parse_poly, partial, poly_add, poly_mul, solve_linear, unit_index,
)
from core.errors import DimensionMismatchError, LiteralSyntaxError, VariableIndexError

PLANE = function_ring(2)


def test_ring_arithmetic(R2):
    x, y = R2.gens
    assert (x + 1) * (x - 1) == x ** 2 - 1
    i = constant(R2, (0, 1))
    assert i * i == -R2.one
    assert partial(x ** 2 * y, 1) == 2 * x * y
    assert partial(x ** 2 * y, 2) == x ** 2


def test_function_ring_is_cached():
    assert function_ring(3) is function_ring(3)
    with pytest.raises(DimensionMismatchError):
        function_ring(0)


def test_partial_rejects_bad_index(R2):
    x, _ = R2.gens
    with pytest.raises(VariableIndexError):
        partial(x, 0)
    with pytest.raises(VariableIndexError):
        partial(x, 3)


def test_charts_do_not_mix(R2, R3):
    with pytest.raises(DimensionMismatchError):
        poly_add(R2.gens[0], R3.gens[0])
    with pytest.raises(DimensionMismatchError):
        poly_mul(R2.gens[0], R3.gens[0])
    x, y = R2.gens
    assert poly_mul(x + 1, x - 1) == x ** 2 - 1
    assert poly_add(x ** 2 + constant(R2, (0, 1)), y) == x ** 2 + y + constant(R2, (0, 1))


def test_gaussian_scalars():
    c = gaussian(Fraction(3, 2), -1)
    assert fraction_parts(c) == (Fraction(3, 2), Fraction(-1))
    assert format_scalar(c) == '(3/2,-1)'
    assert format_scalar(gaussian('-1/4')) == '-1/4'


def test_derive_with_multi_index(R2):
    x, y = R2.gens
    assert derive(x ** 3 * y ** 2, (2, 1)) == 12 * x * y
    assert derive(x * y, (2, 0)) == R2.zero
    assert gradient(x ** 2 + y) == [2 * x, R2.one]


def test_index_helpers():
    assert unit_index(3, 1) == (0, 1, 0)
    assert len(monomials_upto(2, 2)) == 6
    assert index_multinomial([(1, 0), (1, 0)]) == 2


def test_parse_and_format(R2):
    x, y = R2.gens
    p = parse_poly('3/2 - x*y + x^2', R2, ['x', 'y'])
    assert p == x ** 2 - x * y + constant(R2, Fraction(3, 2))
    assert format_poly(p, ['x', 'y']) == 'x^2 - x*y + 3/2'
    assert format_poly(R2.zero) == '0'
    assert parse_poly('x1*x2', R2) == x * y
    assert parse_poly('(0,1)*x', R2, ['x', 'y']) == x * constant(R2, (0, 1))
    assert parse_poly('-(x + 1)^2', R2, ['x', 'y']) == -(x + 1) ** 2
    assert format_poly(parse_poly('3/2*x', R2, ['x', 'y']), ['x', 'y']) == '3/2*x'


@pytest.mark.parametrize('text, column, reason', [
    ('x + $', 5, "unexpected character '$'"),
    ('x + w', 5, "unknown variable 'w'"),
    ('', 1, 'empty polynomial literal'),
    ('x/y', 2, 'division by a non-constant or zero'),
    ('x^y', 3, 'exponent must be a non-negative integer'),
    ('(x, 1)', 3, 'Gaussian literal (a,b) needs constant parts'),
])
def test_parse_errors_carry_columns(text, column, reason):
    with pytest.raises(LiteralSyntaxError) as info:
        parse_poly(text, PLANE, ['x', 'y'])
    assert info.value.column == column
    assert info.value.reason == reason


def test_parse_offset_shifts_columns():
    with pytest.raises(LiteralSyntaxError) as info:
        parse_poly('x + $', PLANE, ['x', 'y'], offset=10)
    assert info.value.column == 15


def test_solve_linear():
    columns = [{'a': gaussian(1), 'b': gaussian(1)}, {'a': gaussian(1), 'b': gaussian(-1)}]
    assert solve_linear(columns, {'a': gaussian(3), 'b': gaussian(1)}) == [gaussian(2), gaussian(1)]
    assert solve_linear([{'a': gaussian(1)}, {'a': gaussian(2)}], {'b': gaussian(1)}) is None


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_leibniz_rule(data):
    f = data.draw(polynomials(PLANE, 3))
    g = data.draw(polynomials(PLANE, 3))
    for i in (1, 2):
        assert partial(f * g, i) == partial(f, i) * g + f * partial(g, i)


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_format_parses_back(data):
    p = data.draw(polynomials(PLANE, 3, max_terms=4))
    assert parse_poly(format_poly(p, ['x', 'y']), PLANE, ['x', 'y']) == p
