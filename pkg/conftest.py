"""Shared fixtures and hypothesis strategies for the workbench tests"""

import random
from pathlib import Path

import pytest
from hypothesis import strategies as st

from core.coeffring import function_ring, gaussian, monomials_upto
from core.matdef import MatPoly, lift_idempotent
from core.poisson import Multivector, OneForm
from core.star import kontsevich2, moyal

SCENARIOS = Path(__file__).parent / 'scenarios'


def polynomials(R, degree: int = 2, max_terms: int = 3):
    """Polynomials with small rational coefficients"""
    monomials = monomials_upto(R.ngens, degree)
    coefficients = st.fractions(min_value=-3, max_value=3, max_denominator=2)
    return st.dictionaries(st.sampled_from(monomials), coefficients, max_size=max_terms).map(
        lambda terms: R.from_dict({m: gaussian(c) for m, c in terms.items() if c}) if terms else R.zero)


def vector_fields(R, degree: int = 2):
    return st.lists(polynomials(R, degree), min_size=R.ngens, max_size=R.ngens).map(
        lambda comps: Multivector.vector_field(R, comps))


def bivectors(R, degree: int = 1):
    pairs = [(i, j) for i in range(R.ngens) for j in range(i + 1, R.ngens)]
    return st.lists(polynomials(R, degree), min_size=len(pairs), max_size=len(pairs)).map(
        lambda comps: Multivector(R, 2, dict(zip(pairs, comps))))


def one_forms(R, degree: int = 2):
    return st.lists(polynomials(R, degree), min_size=R.ngens, max_size=R.ngens).map(
        lambda comps: OneForm(R, tuple(comps)))


@pytest.fixture(scope='session')
def R2():
    return function_ring(2)


@pytest.fixture(scope='session')
def R3():
    return function_ring(3)


@pytest.fixture(scope='session')
def R4():
    return function_ring(4)


@pytest.fixture(scope='session')
def plane_pi(R2):
    """dx ^ dy on the plane"""
    return Multivector(R2, 2, {(0, 1): R2.one})


@pytest.fixture(scope='session')
def su2_pi(R3):
    x, y, z = R3.gens
    return Multivector(R3, 2, {(0, 1): z, (1, 2): x, (0, 2): -y})


@pytest.fixture(scope='session')
def plane_moyal(plane_pi):
    return moyal(plane_pi, 2)


@pytest.fixture(scope='session')
def su2_star(su2_pi):
    return kontsevich2(su2_pi, 2)


@pytest.fixture(scope='session')
def flagship_P0(R2):
    x, _ = R2.gens
    return MatPoly(R2, [[x, x], [1 - x, 1 - x]])


@pytest.fixture(scope='session')
def xy_P0(R2):
    x, y = R2.gens
    return MatPoly(R2, [[1 - x * y, y], [x * (1 - x * y), x * y]])


@pytest.fixture(scope='session')
def flagship_lift(flagship_P0, plane_moyal):
    return lift_idempotent(flagship_P0, plane_moyal)


@pytest.fixture(scope='session')
def xy_lift(xy_P0, plane_moyal):
    return lift_idempotent(xy_P0, plane_moyal)


@pytest.fixture
def rng():
    return random.Random(0)


@pytest.fixture(scope='session')
def su2_P0(R3):
    x, _, z = R3.gens
    return MatPoly(R3, [[1 - x * z, z], [x * (1 - x * z), x * z]])


@pytest.fixture(scope='session')
def su2_lift(su2_P0, su2_star):
    return lift_idempotent(su2_P0, su2_star)
