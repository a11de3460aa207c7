"""Tests for the Schouten calculus, Poisson cohomology and formal Poisson structures"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bivectors, one_forms, polynomials, vector_fields
from core.coeffring import constant, function_ring
from core.errors import LiteralSyntaxError, NotPoissonError, OrderMismatchError
from core.poisson import (
    JACOBIATOR_CONSTANT, FormalPoisson, Multivector, OneForm, check_formal_poisson, d_pi, find_dpi_primitive,
    gauge_formal_poisson, hamiltonian, is_poisson, koszul, lie_derivative, parse_multivector, pi_sharp,
    pi_star_two_form, poisson_bracket, poisson_jacobiator, schouten,
)
from core.series import lie_transform

SPACE = function_ring(3)
CHART4 = function_ring(4)
X, Y, Z = SPACE.gens
SU2 = Multivector(SPACE, 2, {(0, 1): Z, (1, 2): X, (0, 2): -Y})
SYMPLECTIC4 = Multivector(CHART4, 2, {(0, 1): CHART4.one, (2, 3): CHART4.one})

# Generated inputs per engine identity
IDENTITY_EXAMPLES = 50


def test_bracket_with_a_function_is_the_derivative(R2):
    x, _ = R2.gens
    d_x = Multivector.vector_field(R2, [R2.one, R2.zero])
    assert schouten(d_x, x ** 2).function() == 2 * x
    assert lie_derivative(d_x, x ** 2) == schouten(d_x, x ** 2)


def test_linear_su2_structure_is_poisson():
    assert is_poisson(SU2)
    assert poisson_bracket(SU2, X, Y) == Z
    assert poisson_bracket(SU2, Y, Z) == X
    assert poisson_bracket(SU2, Z, X) == Y


def test_jacobiator_of_a_non_poisson_bivector():
    pi = Multivector(SPACE, 2, {(0, 1): SPACE.one, (1, 2): Y})
    assert not is_poisson(pi)
    assert schouten(pi, pi) == Multivector(SPACE, 3, {(0, 1, 2): constant(SPACE, -2)})
    assert poisson_jacobiator(pi, X, Y, Z) == SPACE.one
    trivector = schouten(pi, pi).scale(JACOBIATOR_CONSTANT)
    assert trivector(OneForm.exact(X), OneForm.exact(Y), OneForm.exact(Z)) == SPACE.one
    with pytest.raises(NotPoissonError):
        d_pi(pi, X)


def test_hamiltonian_vector_field(plane_pi, R2):
    x, y = R2.gens
    assert hamiltonian(plane_pi, x).vector_components() == [R2.zero, -R2.one]
    assert poisson_bracket(plane_pi, x, y) == R2.one


def test_d_pi_of_a_vector_field_is_its_lie_derivative(plane_pi, R2):
    x, _ = R2.gens
    X_field = Multivector.vector_field(R2, [x, R2.zero])
    assert d_pi(plane_pi, X_field) == -plane_pi
    assert lie_derivative(X_field, plane_pi) == -plane_pi


@settings(max_examples=IDENTITY_EXAMPLES, deadline=None)
@given(st.data())
def test_graded_antisymmetry_and_jacobi(data):
    P = data.draw(vector_fields(SPACE, 1))
    Q = data.draw(bivectors(SPACE, 1))
    S = data.draw(vector_fields(SPACE, 1))
    assert schouten(P, Q) == schouten(Q, P)
    assert schouten(P, S) == -schouten(S, P)
    lhs = schouten(Q, schouten(P, S))
    rhs = schouten(schouten(Q, P), S).scale(-1) + schouten(P, schouten(Q, S))
    assert lhs == rhs


@settings(max_examples=IDENTITY_EXAMPLES, deadline=None)
@given(st.data())
def test_d_pi_squares_to_zero(data):
    X_field = data.draw(vector_fields(SPACE, 2))
    assert not d_pi(SU2, d_pi(SU2, X_field))
    f = data.draw(polynomials(SPACE, 2))
    assert not d_pi(SU2, d_pi(SU2, f))


@settings(max_examples=IDENTITY_EXAMPLES, deadline=None)
@given(st.data())
def test_koszul_bracket(data):
    a, b, c = (data.draw(one_forms(SPACE, 1)) for _ in range(3))
    cyclic = koszul(SU2, a, koszul(SU2, b, c)) + koszul(SU2, b, koszul(SU2, c, a)) + koszul(SU2, c, koszul(SU2, a, b))
    assert not cyclic
    assert pi_sharp(SU2, koszul(SU2, a, b)) == -schouten(pi_sharp(SU2, a), pi_sharp(SU2, b))


def test_koszul_bracket_of_exact_forms(plane_pi, R2):
    x, y = R2.gens
    bracket = koszul(plane_pi, OneForm.exact(x ** 2), OneForm.exact(y))
    assert bracket == OneForm.exact(poisson_bracket(plane_pi, x ** 2, y))
    assert bracket == OneForm.exact(2 * x)


@settings(max_examples=IDENTITY_EXAMPLES, deadline=None)
@given(st.data())
def test_pushforward_of_closed_forms_is_d_pi_closed(data):
    alpha = data.draw(one_forms(CHART4, 2))
    assert not d_pi(SYMPLECTIC4, pi_star_two_form(SYMPLECTIC4, alpha.d()))


def test_dpi_primitive():
    B = d_pi(SU2, Multivector.vector_field(SPACE, [Y, X * Z, SPACE.zero]))
    primitive = find_dpi_primitive(SU2, B, 2)
    assert primitive is not None
    assert d_pi(SU2, primitive) == B


def test_dpi_primitive_degree_bound(plane_pi, R2):
    x, _ = R2.gens
    B = Multivector(R2, 2, {(0, 1): x ** 2})
    assert find_dpi_primitive(plane_pi, B, 0) is None
    assert d_pi(plane_pi, find_dpi_primitive(plane_pi, B, 3)) == B


def test_formal_poisson_defects():
    pi = Multivector(SPACE, 2, {(0, 1): SPACE.one})
    report = check_formal_poisson(FormalPoisson.from_terms([pi, Multivector(SPACE, 2, {(0, 2): X})]))
    assert not report.first_order_closed
    assert 1 in report.defects
    closed = check_formal_poisson(FormalPoisson.from_terms([SYMPLECTIC4, SYMPLECTIC4.scale(3)], order=2))
    assert closed.integrable
    assert closed.first_order_closed


def test_gauge_shifts_first_order_term(plane_pi, R2):
    x, y = R2.gens
    pl = FormalPoisson.from_terms([plane_pi, Multivector(R2, 2, {(0, 1): x * y})])
    field = [x, R2.zero]
    gauged = gauge_formal_poisson(lie_transform(R2, [field]), pl)
    assert gauged.term(0) == plane_pi
    expected = pl.term(1) - d_pi(plane_pi, Multivector.vector_field(R2, field))
    assert gauged.term(1) == expected
    assert gauged.term(1) == Multivector(R2, 2, {(0, 1): x * y + 1})


def test_gauge_is_a_right_action(plane_pi, R2):
    x, y = R2.gens
    pl = FormalPoisson.from_terms([plane_pi], order=2)
    T1 = lie_transform(R2, [[x * y, R2.zero], [R2.zero, R2.zero]])
    T2 = lie_transform(R2, [[R2.zero, x ** 2], [y, R2.zero]])
    assert gauge_formal_poisson(T2, gauge_formal_poisson(T1, pl)) == gauge_formal_poisson(T1.compose(T2), pl)


def test_gauge_needs_matching_orders(plane_pi, R2):
    with pytest.raises(OrderMismatchError):
        gauge_formal_poisson(lie_transform(R2, [[R2.one, R2.zero]]), FormalPoisson.from_terms([plane_pi], order=2))


def test_parse_multivector():
    pi = parse_multivector('z*dx^dy + x*dy^dz + y*dz^dx', SPACE, ['x', 'y', 'z'])
    assert pi == SU2
    assert pi.component((2, 0)) == Y
    assert parse_multivector('-dx1^dx2 + dx3^dx4', CHART4).component((0, 1)) == -CHART4.one
    assert SU2.format(['x', 'y', 'z']) == '(z)*dx^dy + (-y)*dx^dz + (x)*dy^dz'


@pytest.mark.parametrize('text, reason', [
    ('', 'empty multivector literal'),
    ('x*dy^dz + y', 'term has no wedge of directions'),
    ('dx^dy + dz', 'terms of different degree'),
    ('dx^dw', "unknown direction 'dw'"),
    ('dx*dy^dz', 'two wedge factors in one term'),
])
def test_parse_multivector_errors(text, reason):
    with pytest.raises(LiteralSyntaxError) as info:
        parse_multivector(text, SPACE, ['x', 'y', 'z'])
    assert info.value.reason == reason
