"""Multivector calculus on a polynomial chart

Multivectors are antisymmetric contravariant tensors with polynomial
components indexed by strictly increasing 0-based index tuples. The
Schouten bracket is computed with the odd-variable formula: a k-vector
P is the superfunction sum_I P^I theta_I and

    std[P, Q] = sum_i (d_r P / d theta_i)(dQ / dx_i)
                - (-1)^((p-1)(q-1)) (d_r Q / d theta_i)(dP / dx_i)
    [P, Q]    = (-1)^(p-1) std[P, Q]

where d_r is the right derivative in theta. With this normalization
[X, P] = L_X P for a vector field X, [P, Q] = (-1)^(pq) [Q, P], and
d_pi X = [pi, X] = L_X pi.
"""

import random
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from sympy.polys.rings import PolyRing

from core.coeffring import (
    PolyFun, derive, format_poly, gaussian, is_constant, monomials_upto, parse_poly, random_poly,
    solve_linear, unit_index, variable_names,
)
from core.debug_logger import debug_log
from core.errors import (
    DimensionMismatchError, LiteralSyntaxError, NotPoissonError, OrderMismatchError,
)
from core.series import TruncatedSeries, derivation_generators, invert_transform, EquivalenceTransform

Indices = Tuple[int, ...]

# {f,{g,h}} + cyclic = JACOBIATOR_CONSTANT * [pi,pi](df, dg, dh)
JACOBIATOR_CONSTANT = Fraction(-1, 2)


def _sort_with_sign(indices: Sequence[int]) -> Tuple[int, Indices]:
    """Sort indices, returning the permutation sign (0 if an index repeats)"""
    items = list(indices)
    if len(set(items)) != len(items):
        return 0, ()
    sign = 1
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign, tuple(items)


class Multivector:
    """k-vector field sum_I P^I d_{i1} ^ ... ^ d_{ik} with sorted index tuples I"""

    __slots__ = ('ring', 'degree', 'components')

    def __init__(self, R: PolyRing, degree: int, components: Optional[Mapping[Sequence[int], PolyFun]] = None):
        self.ring = R
        self.degree = degree
        clean: Dict[Indices, PolyFun] = {}
        for indices, value in (components or {}).items():
            indices = tuple(indices)
            if len(indices) != degree:
                raise DimensionMismatchError(f"index tuple {indices} in a {degree}-vector")
            if any(not 0 <= i < R.ngens for i in indices):
                raise DimensionMismatchError(f"index tuple {indices} outside a {R.ngens}-chart")
            sign, key = _sort_with_sign(indices)
            if sign == 0 or not value:
                continue
            clean[key] = clean.get(key, R.zero) + (value if sign > 0 else -value)
        self.components = {k: v for k, v in clean.items() if v}

    @property
    def dim(self) -> int:
        return self.ring.ngens

    @classmethod
    def zero(cls, R: PolyRing, degree: int) -> 'Multivector':
        return cls(R, degree)

    @classmethod
    def from_function(cls, f: PolyFun) -> 'Multivector':
        return cls(f.ring, 0, {(): f})

    @classmethod
    def vector_field(cls, R: PolyRing, components: Sequence[PolyFun]) -> 'Multivector':
        if len(components) != R.ngens:
            raise DimensionMismatchError(f"{len(components)} components on a {R.ngens}-chart")
        return cls(R, 1, {(i,): c for i, c in enumerate(components)})

    @classmethod
    def from_matrix(cls, R: PolyRing, matrix: Sequence[Sequence[PolyFun]]) -> 'Multivector':
        """Bivector from the upper triangle of an antisymmetric matrix"""
        n = R.ngens
        return cls(R, 2, {(i, j): matrix[i][j] for i in range(n) for j in range(i + 1, n)})

    def component(self, indices: Sequence[int]) -> PolyFun:
        """Component for any index order, with the antisymmetry sign"""
        sign, key = _sort_with_sign(indices)
        if sign == 0:
            return self.ring.zero
        value = self.components.get(key, self.ring.zero)
        return value if sign > 0 else -value

    def function(self) -> PolyFun:
        return self.components.get((), self.ring.zero)

    def vector_components(self) -> List[PolyFun]:
        return [self.component((i,)) for i in range(self.dim)]

    def matrix(self) -> List[List[PolyFun]]:
        """Dense antisymmetric matrix of a bivector"""
        return [[self.component((i, j)) for j in range(self.dim)] for i in range(self.dim)]

    def is_constant(self) -> bool:
        return all(is_constant(c) for c in self.components.values())

    def _check_compatible(self, other: 'Multivector'):
        if self.dim != other.dim:
            raise DimensionMismatchError(f"multivectors on charts of dimension {self.dim} and {other.dim}")
        if self.degree != other.degree:
            raise DimensionMismatchError(f"cannot add a {self.degree}-vector and a {other.degree}-vector")

    def __add__(self, other: 'Multivector') -> 'Multivector':
        self._check_compatible(other)
        merged = dict(self.components)
        for k, v in other.components.items():
            merged[k] = merged.get(k, self.ring.zero) + v
        return Multivector(self.ring, self.degree, merged)

    def __neg__(self) -> 'Multivector':
        return Multivector(self.ring, self.degree, {k: -v for k, v in self.components.items()})

    def __sub__(self, other: 'Multivector') -> 'Multivector':
        return self + (-other)

    def scale(self, factor) -> 'Multivector':
        if isinstance(factor, (int, Fraction, str)):
            factor = gaussian(factor)
        return Multivector(self.ring, self.degree, {k: v * factor for k, v in self.components.items()})

    def __eq__(self, other) -> bool:
        return (isinstance(other, Multivector) and self.dim == other.dim
                and self.degree == other.degree and self.components == other.components)

    __hash__ = None

    def __bool__(self) -> bool:
        return bool(self.components)

    def wedge(self, other: 'Multivector') -> 'Multivector':
        result: Dict[Indices, PolyFun] = {}
        for I, a in self.components.items():
            for J, b in other.components.items():
                sign, key = _sort_with_sign(I + J)
                if sign == 0:
                    continue
                term = a * b if sign > 0 else -(a * b)
                result[key] = result.get(key, self.ring.zero) + term
        return Multivector(self.ring, self.degree + other.degree, result)

    def __call__(self, *forms: 'OneForm') -> PolyFun:
        """Evaluate on k one-forms: sum_I P^I det[alpha_a(I_b)]"""
        if len(forms) != self.degree:
            raise DimensionMismatchError(f"a {self.degree}-vector takes {self.degree} forms, got {len(forms)}")
        result = self.ring.zero
        for I, value in self.components.items():
            det = self.ring.zero
            for perm in permutations(range(self.degree)):
                sign, _ = _sort_with_sign(perm)
                term = self.ring.one
                for a, b in enumerate(perm):
                    term = term * forms[a].components[I[b]]
                det += term if sign > 0 else -term
            result += value * det
        return result

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        names = names or variable_names(self.dim)
        if not self.components:
            return '0'
        if self.degree == 0:
            return format_poly(self.function(), names)
        parts = []
        for I in sorted(self.components):
            wedge = '^'.join(f"d{names[i]}" for i in I)
            coeff = format_poly(self.components[I], names)
            if coeff == '1':
                parts.append(wedge)
            elif coeff == '-1':
                parts.append('-' + wedge)
            else:
                parts.append(f"({coeff})*{wedge}")
        out = parts[0]
        for part in parts[1:]:
            out += f" - {part[1:]}" if part.startswith('-') else f" + {part}"
        return out

    def __repr__(self) -> str:
        return f"Multivector[{self.degree}]({self.format()})"


MultivectorLike = Union[Multivector, PolyFun]


def as_multivector(value: MultivectorLike) -> Multivector:
    return value if isinstance(value, Multivector) else Multivector.from_function(value)


@dataclass(frozen=True, eq=False)
class OneForm:
    """alpha = sum_i alpha_i dx_i"""

    ring: PolyRing
    components: Tuple[PolyFun, ...]

    def __post_init__(self):
        object.__setattr__(self, 'components', tuple(self.components))
        if len(self.components) != self.ring.ngens:
            raise DimensionMismatchError(f"{len(self.components)} components on a {self.ring.ngens}-chart")

    @classmethod
    def exact(cls, f: PolyFun) -> 'OneForm':
        """df"""
        return cls(f.ring, [derive(f, unit_index(f.ring.ngens, i)) for i in range(f.ring.ngens)])

    @classmethod
    def coordinate(cls, R: PolyRing, i: int) -> 'OneForm':
        """dx_i for 0-based i"""
        return cls(R, [R.one if k == i else R.zero for k in range(R.ngens)])

    def __add__(self, other: 'OneForm') -> 'OneForm':
        return OneForm(self.ring, [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: 'OneForm') -> 'OneForm':
        return OneForm(self.ring, [a - b for a, b in zip(self.components, other.components)])

    def __neg__(self) -> 'OneForm':
        return OneForm(self.ring, [-a for a in self.components])

    def scale(self, factor) -> 'OneForm':
        if isinstance(factor, (int, Fraction, str)):
            factor = gaussian(factor)
        return OneForm(self.ring, [a * factor for a in self.components])

    def __eq__(self, other) -> bool:
        return isinstance(other, OneForm) and self.components == other.components

    __hash__ = None

    def __bool__(self) -> bool:
        return any(self.components)

    def pair(self, X: Multivector) -> PolyFun:
        """alpha(X) for a vector field X"""
        result = self.ring.zero
        for a, x in zip(self.components, X.vector_components()):
            result += a * x
        return result

    def d(self) -> 'TwoForm':
        n = self.ring.ngens
        comps = {}
        for i in range(n):
            for j in range(i + 1, n):
                comps[(i, j)] = (derive(self.components[j], unit_index(n, i))
                                 - derive(self.components[i], unit_index(n, j)))
        return TwoForm(self.ring, comps)

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        names = names or variable_names(self.ring.ngens)
        parts = [f"({format_poly(c, names)})*d{n}" for c, n in zip(self.components, names) if c]
        return ' + '.join(parts) or '0'


class TwoForm:
    """omega = sum_{i<j} omega_ij dx_i ^ dx_j"""

    __slots__ = ('ring', 'components')

    def __init__(self, R: PolyRing, components: Optional[Mapping[Tuple[int, int], PolyFun]] = None):
        self.ring = R
        clean: Dict[Tuple[int, int], PolyFun] = {}
        for (i, j), value in (components or {}).items():
            if i == j or not value:
                continue
            key, value = ((i, j), value) if i < j else ((j, i), -value)
            clean[key] = clean.get(key, R.zero) + value
        self.components = {k: v for k, v in clean.items() if v}

    @classmethod
    def from_matrix(cls, R: PolyRing, matrix: Sequence[Sequence[PolyFun]]) -> 'TwoForm':
        n = R.ngens
        return cls(R, {(i, j): matrix[i][j] for i in range(n) for j in range(i + 1, n)})

    def component(self, i: int, j: int) -> PolyFun:
        if i == j:
            return self.ring.zero
        if i < j:
            return self.components.get((i, j), self.ring.zero)
        return -self.components.get((j, i), self.ring.zero)

    def matrix(self) -> List[List[PolyFun]]:
        n = self.ring.ngens
        return [[self.component(i, j) for j in range(n)] for i in range(n)]

    def __eq__(self, other) -> bool:
        return isinstance(other, TwoForm) and self.components == other.components

    __hash__ = None

    def __bool__(self) -> bool:
        return bool(self.components)

    def __call__(self, X: Multivector, Y: Multivector) -> PolyFun:
        xs, ys = X.vector_components(), Y.vector_components()
        result = self.ring.zero
        for (i, j), w in self.components.items():
            result += w * (xs[i] * ys[j] - xs[j] * ys[i])
        return result

    def d(self) -> Dict[Tuple[int, int, int], PolyFun]:
        """Components of the exterior derivative, i < j < k"""
        n = self.ring.ngens
        out = {}
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    value = (derive(self.component(j, k), unit_index(n, i))
                             - derive(self.component(i, k), unit_index(n, j))
                             + derive(self.component(i, j), unit_index(n, k)))
                    if value:
                        out[(i, j, k)] = value
        return out

    def is_closed(self) -> bool:
        return not self.d()

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        names = names or variable_names(self.ring.ngens)
        parts = [f"({format_poly(v, names)})*d{names[i]}^d{names[j]}"
                 for (i, j), v in sorted(self.components.items())]
        return ' + '.join(parts) or '0'


def random_multivector(R: PolyRing, rng: random.Random, degree: int, poly_degree: int,
                       terms: int = 2) -> Multivector:
    """Seeded random k-vector with a few random polynomial components"""
    index_sets = list(combinations(range(R.ngens), degree))
    chosen = rng.sample(index_sets, min(terms, len(index_sets)))
    return Multivector(R, degree, {indices: random_poly(R, rng, poly_degree) for indices in chosen})


def random_one_form(R: PolyRing, rng: random.Random, poly_degree: int) -> OneForm:
    return OneForm(R, tuple(random_poly(R, rng, poly_degree) for _ in range(R.ngens)))


# ----------------------------------------------------------------------
# Schouten bracket
# ----------------------------------------------------------------------

def _derivative_term(P: Multivector, Q: Multivector) -> Dict[Indices, PolyFun]:
    """sum_i (d_r P / d theta_i) ^ (dQ / dx_i), as raw index tuples"""
    n = P.dim
    out: Dict[Indices, PolyFun] = {}
    for I, p_value in P.components.items():
        k = len(I)
        for j, i in enumerate(I):
            right_sign = -1 if (k - 1 - j) % 2 else 1
            rest = I[:j] + I[j + 1:]
            for J, q_value in Q.components.items():
                dq = derive(q_value, unit_index(n, i))
                if not dq:
                    continue
                sign, key = _sort_with_sign(rest + J)
                if sign == 0:
                    continue
                term = p_value * dq
                out[key] = out.get(key, P.ring.zero) + (term if sign * right_sign > 0 else -term)
    return out


def schouten(A: MultivectorLike, B: MultivectorLike) -> Multivector:
    """Schouten bracket [A, B] of a j-vector and a k-vector, a (j+k-1)-vector

    On two functions the bracket is the zero function.
    """
    A, B = as_multivector(A), as_multivector(B)
    if A.dim != B.dim:
        raise DimensionMismatchError(f"multivectors on charts of dimension {A.dim} and {B.dim}")
    p, q = A.degree, B.degree
    if p == 0 and q == 0:
        return Multivector.zero(A.ring, 0)
    first = _derivative_term(A, B)
    second = _derivative_term(B, A)
    swap = -1 if ((p - 1) * (q - 1)) % 2 else 1
    overall = -1 if (p - 1) % 2 else 1
    total: Dict[Indices, PolyFun] = dict(first)
    for key, value in second.items():
        total[key] = total.get(key, A.ring.zero) - (value if swap > 0 else -value)
    if overall < 0:
        total = {k: -v for k, v in total.items()}
    return Multivector(A.ring, p + q - 1, total)


def is_poisson(pi: Multivector) -> bool:
    return pi.degree == 2 and not schouten(pi, pi)


def d_pi(pi: Multivector, A: MultivectorLike) -> Multivector:
    """Poisson differential d_pi = [pi, .]

    Raises:
        NotPoissonError: if [pi, pi] != 0
    """
    if not is_poisson(pi):
        raise NotPoissonError(f"[pi, pi] != 0 for pi = {pi.format()}")
    return schouten(pi, A)


def lie_derivative(X: Multivector, A: MultivectorLike) -> Multivector:
    """L_X A = [X, A] for a vector field X"""
    return schouten(X, A)


def pi_sharp(pi: Multivector, alpha: OneForm) -> Multivector:
    """The map alpha -> pi(., alpha): V^i = sum_j pi^ij alpha_j"""
    n = pi.dim
    comps = []
    for i in range(n):
        value = pi.ring.zero
        for j in range(n):
            value += pi.component((i, j)) * alpha.components[j]
        comps.append(value)
    return Multivector.vector_field(pi.ring, comps)


def hamiltonian(pi: Multivector, f: PolyFun) -> Multivector:
    """X_f = pi(., df), so X_f(g) = pi(dg, df)"""
    return pi_sharp(pi, OneForm.exact(f))


def poisson_bracket(pi: Multivector, f: PolyFun, g: PolyFun) -> PolyFun:
    """{f, g} = pi(df, dg)"""
    return pi(OneForm.exact(f), OneForm.exact(g))


def apply_vector_field(X: Multivector, f: PolyFun) -> PolyFun:
    return OneForm.exact(f).pair(X)


def lie_derivative_form(X: Multivector, alpha: OneForm) -> OneForm:
    """L_X alpha = d(i_X alpha) + i_X d alpha, expanded in coordinates"""
    n = X.dim
    xs = X.vector_components()
    comps = []
    for j in range(n):
        value = X.ring.zero
        for i in range(n):
            value += xs[i] * derive(alpha.components[j], unit_index(n, i))
            value += alpha.components[i] * derive(xs[i], unit_index(n, j))
        comps.append(value)
    return OneForm(X.ring, comps)


def koszul(pi: Multivector, alpha: OneForm, beta: OneForm) -> OneForm:
    """[alpha, beta] = -L_{pi~ alpha} beta + L_{pi~ beta} alpha - d(pi(alpha, beta))"""
    return (-lie_derivative_form(pi_sharp(pi, alpha), beta)
            + lie_derivative_form(pi_sharp(pi, beta), alpha)
            - OneForm.exact(pi(alpha, beta)))


def poisson_jacobiator(pi: Multivector, f: PolyFun, g: PolyFun, h: PolyFun) -> PolyFun:
    """{f,{g,h}} + {g,{h,f}} + {h,{f,g}}"""
    br = lambda a, b: poisson_bracket(pi, a, b)
    return br(f, br(g, h)) + br(g, br(h, f)) + br(h, br(f, g))


def pi_star_two_form(pi: Multivector, omega: TwoForm) -> Multivector:
    """(pi* omega)(alpha, beta) = omega(pi~ alpha, pi~ beta)"""
    n = pi.dim
    P = pi.matrix()
    W = omega.matrix()
    comps = {}
    for a in range(n):
        for b in range(a + 1, n):
            value = pi.ring.zero
            for i in range(n):
                for j in range(n):
                    if W[i][j] and P[i][a] and P[j][b]:
                        value += W[i][j] * P[i][a] * P[j][b]
            comps[(a, b)] = value
    return Multivector(pi.ring, 2, comps)


def find_dpi_primitive(pi: Multivector, B: Multivector, max_degree: int) -> Optional[Multivector]:
    """Polynomial vector field X of degree <= max_degree with d_pi X = B, or None"""
    if not is_poisson(pi):
        raise NotPoissonError(f"[pi, pi] != 0 for pi = {pi.format()}")
    R = pi.ring
    unknowns = []
    columns = []
    for i in range(pi.dim):
        for monom in monomials_upto(pi.dim, max_degree):
            comps = [R.zero] * pi.dim
            comps[i] = R.term_new(monom, gaussian(1))
            image = schouten(pi, Multivector.vector_field(R, comps))
            columns.append({(I, m): c for I, value in image.components.items() for m, c in value.items()})
            unknowns.append((i, monom))
    rhs = {(I, m): c for I, value in B.components.items() for m, c in value.items()}
    solution = solve_linear(columns, rhs)
    if solution is None:
        debug_log('poisson', 'no d_pi primitive found', max_degree=max_degree)
        return None
    comps = [R.zero] * pi.dim
    for (i, monom), c in zip(unknowns, solution):
        if c:
            comps[i] = comps[i] + R.term_new(monom, c)
    return Multivector.vector_field(R, comps)


# ----------------------------------------------------------------------
# Formal Poisson structures
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FormalPoisson:
    """pi_lambda = pi + lambda*pi_1 + ... as a series of bivectors"""

    series: TruncatedSeries

    @classmethod
    def from_terms(cls, terms: Sequence[Multivector], order: Optional[int] = None) -> 'FormalPoisson':
        order = len(terms) - 1 if order is None else order
        R = terms[0].ring
        padded = list(terms[:order + 1]) + [Multivector.zero(R, 2)] * (order + 1 - len(terms))
        return cls(TruncatedSeries(padded))

    @property
    def order(self) -> int:
        return self.series.order

    @property
    def ring(self) -> PolyRing:
        return self.series[0].ring

    def term(self, r: int) -> Multivector:
        return self.series[r]

    def __eq__(self, other) -> bool:
        return isinstance(other, FormalPoisson) and self.series == other.series

    __hash__ = None

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        return self.series.format(lambda m: m.format(names))


@dataclass
class PoissonDefectReport:
    """Defects of [pi_lambda, pi_lambda] per lambda order"""

    defects: Dict[int, Multivector]
    first_order_defect: Optional[Multivector]

    @property
    def integrable(self) -> bool:
        return not self.defects

    @property
    def first_order_closed(self) -> bool:
        return not self.first_order_defect


def check_formal_poisson(pl: FormalPoisson) -> PoissonDefectReport:
    defects = {}
    for k in range(pl.order + 1):
        total = Multivector.zero(pl.ring, 3)
        for a in range(k + 1):
            total = total + schouten(pl.term(a), pl.term(k - a))
        if total:
            defects[k] = total
    first = schouten(pl.term(0), pl.term(1)) if pl.order >= 1 else Multivector.zero(pl.ring, 3)
    debug_log('poisson', 'formal Poisson check', orders=sorted(defects), d_pi_pi1_zero=not first)
    return PoissonDefectReport(defects=defects, first_order_defect=first if first else None)


def gauge_formal_poisson(T: EquivalenceTransform, pl: FormalPoisson) -> FormalPoisson:
    """pi'(df, dg) = T^-1 pi_lambda(dTf, dTg) for T = exp(sum lambda^r L_{X_r})

    This is a right action: gauge(T2, gauge(T1, pl)) = gauge(T1 o T2, pl).

    Raises:
        NotADerivationError: if T is not generated by vector fields
    """
    derivation_generators(T)
    if T.order != pl.order:
        raise OrderMismatchError(f"transform of order {T.order} and formal Poisson of order {pl.order}")
    R = pl.ring
    N = pl.order
    inverse = invert_transform(T)
    forms = [[OneForm.exact(c) for c in T.apply(x)] for x in R.gens]
    new_terms = [dict() for _ in range(N + 1)]
    for a in range(R.ngens):
        for b in range(a + 1, R.ngens):
            values = []
            for k in range(N + 1):
                value = R.zero
                for r in range(k + 1):
                    for s in range(k - r + 1):
                        value += pl.term(r)(forms[a][s], forms[b][k - r - s])
                values.append(value)
            for k, value in enumerate(inverse.apply(TruncatedSeries(values))):
                new_terms[k][(a, b)] = value
    return FormalPoisson(TruncatedSeries(Multivector(R, 2, comps) for comps in new_terms))


# ----------------------------------------------------------------------
# Literal syntax
# ----------------------------------------------------------------------

def _split_terms(text: str) -> List[Tuple[str, int, bool]]:
    """Split at top-level + and -, keeping (term, start, negated)"""
    pieces = []
    depth = 0
    start = 0
    negated = False
    for pos, char in enumerate(text):
        if char == '(':
            depth += 1
        elif char == ')':
            depth -= 1
        elif depth == 0 and char in '+-':
            if not pieces and not text[start:pos].strip():
                negated = (char == '-') != negated
                start = pos + 1
                continue
            pieces.append((text[start:pos], start, negated))
            negated = char == '-'
            start = pos + 1
    pieces.append((text[start:], start, negated))
    return pieces


def _split_factors(text: str) -> List[Tuple[str, int]]:
    pieces = []
    depth = 0
    start = 0
    for pos, char in enumerate(text):
        if char == '(':
            depth += 1
        elif char == ')':
            depth -= 1
        elif depth == 0 and char == '*':
            pieces.append((text[start:pos], start))
            start = pos + 1
    pieces.append((text[start:], start))
    return pieces


def parse_multivector(text: str, R: PolyRing, names: Optional[Sequence[str]] = None,
                      offset: int = 0) -> Multivector:
    """Parse 'z * dx^dy + x * dy^dz + y * dz^dx' or '(1/2)*dx1^dx2'

    Each term is a product of polynomial factors and one wedge of
    coordinate directions d<name>. All terms must have the same degree.
    """
    names = list(names or variable_names(R.ngens))
    lookup = {f"d{n}": i for i, n in enumerate(names)}
    lookup.update({f"d{n}": i for i, n in enumerate(variable_names(R.ngens))})
    wedge_re = re.compile(r"^\s*(d[A-Za-z_][A-Za-z_0-9]*(?:\s*\^\s*d[A-Za-z_][A-Za-z_0-9]*)*)\s*$")
    degree = None
    comps: Dict[Indices, PolyFun] = {}
    if not text.strip():
        raise LiteralSyntaxError("empty multivector literal", offset + 1)
    for term, start, negated in _split_terms(text):
        if not term.strip():
            raise LiteralSyntaxError("missing term", offset + start + 1)
        coeff_factors = []
        indices = None
        for factor, fstart in _split_factors(term):
            match = wedge_re.match(factor)
            if match:
                if indices is not None:
                    raise LiteralSyntaxError("two wedge factors in one term", offset + start + fstart + 1)
                indices = []
                for direction in re.split(r"\s*\^\s*", match.group(1).strip()):
                    if direction not in lookup:
                        raise LiteralSyntaxError(f"unknown direction {direction!r}", offset + start + fstart + 1)
                    indices.append(lookup[direction])
            else:
                coeff_factors.append((factor, fstart))
        if indices is None:
            raise LiteralSyntaxError("term has no wedge of directions", offset + start + 1)
        if degree is None:
            degree = len(indices)
        elif degree != len(indices):
            raise LiteralSyntaxError("terms of different degree", offset + start + 1)
        coeff = R.one
        for factor, fstart in coeff_factors:
            coeff = coeff * parse_poly(factor, R, names, offset + start + fstart)
        if negated:
            coeff = -coeff
        sign, key = _sort_with_sign(indices)
        if sign == 0:
            continue
        comps[key] = comps.get(key, R.zero) + (coeff if sign > 0 else -coeff)
    return Multivector(R, degree, comps)
