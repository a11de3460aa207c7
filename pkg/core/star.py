"""Star products as truncated series of bidifferential operators

A star product of order N is f * g = sum_{r=0..N} lambda^r C_r(f, g) with
C_0 the pointwise product. Every C_r is a BidiffOp

    C(f, g) = sum_{(a, b)} c_ab * (d^a f) * (d^b g)

Associativity is decided on the operator level: the defect
(f*g)*h - f*(g*h) is expanded into a tridifferential operator and compared
with the zero operator, so no sampling is involved.

Usage:
    from core.star import moyal, star_mul, assoc_defect

    star = moyal(pi, 4)
    assert not assoc_defect(star)
    star_mul(star, x, y)   # x*y + lambda*(1/2)
"""

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import sympy
from sympy.polys.rings import PolyRing

from core.coeffring import (
    MultiIndex, PolyFun, add_index, derive, format_poly, gaussian, index_binomial,
    index_factorial, index_multinomial, index_order, is_constant, monomials_upto,
    random_poly, scalar_from_sympy, scalar_to_sympy, solve_linear, sub_index,
    sub_indices, unit_index, variable_names, zero_index,
)
from core.debug_logger import debug_log, debug_timer_end, debug_timer_start
from core.errors import (
    AnsatzUnsolvableError, DegenerateBivectorError, DimensionMismatchError,
    FirstOrderMismatchError, NormalizationError, NotABivectorError, NotConstantError,
    NotPoissonError, OperatorRecoveryError, OrderMismatchError,
)
from core.poisson import FormalPoisson, Multivector, TwoForm, is_poisson
from core.series import DiffOp, EquivalenceTransform, TruncatedSeries, invert_transform

Pair = Tuple[MultiIndex, MultiIndex]
Triple = Tuple[MultiIndex, MultiIndex, MultiIndex]
SeriesLike = Union[PolyFun, TruncatedSeries]

# Highest order for which kontsevich2 builds operators
KONTSEVICH_MAX_ORDER = 2


@lru_cache(maxsize=None)
def _splits2(alpha: MultiIndex) -> Tuple[Tuple[MultiIndex, MultiIndex, int], ...]:
    """All (beta, alpha - beta, binomial) with beta <= alpha"""
    return tuple((beta, sub_index(alpha, beta), index_binomial(alpha, beta)) for beta in sub_indices(alpha))


@lru_cache(maxsize=None)
def _splits3(alpha: MultiIndex) -> Tuple[Tuple[MultiIndex, MultiIndex, MultiIndex, int], ...]:
    """All (d1, d2, d3, multinomial) with d1 + d2 + d3 = alpha"""
    out = []
    for d1 in sub_indices(alpha):
        rest = sub_index(alpha, d1)
        for d2 in sub_indices(rest):
            d3 = sub_index(rest, d2)
            out.append((d1, d2, d3, index_multinomial([d1, d2, d3])))
    return tuple(out)


def _expand_after(alpha: MultiIndex, op: DiffOp) -> Dict[MultiIndex, PolyFun]:
    """d^alpha o op as {multi-index: coefficient}"""
    out: Dict[MultiIndex, PolyFun] = {}
    for beta, c in op.terms.items():
        for gamma, rest, weight in _splits2(alpha):
            dc = derive(c, gamma)
            if not dc:
                continue
            key = add_index(rest, beta)
            out[key] = out.get(key, op.ring.zero) + dc * weight
    return out


class BidiffOp:
    """Bidifferential operator (f, g) -> sum c_ab * d^a f * d^b g"""

    __slots__ = ('ring', 'terms')

    def __init__(self, R: PolyRing, terms: Optional[Dict[Pair, PolyFun]] = None):
        self.ring = R
        self.terms: Dict[Pair, PolyFun] = {}
        for (a, b), c in (terms or {}).items():
            if c:
                self.terms[(tuple(a), tuple(b))] = c

    @property
    def dim(self) -> int:
        return self.ring.ngens

    @classmethod
    def zero(cls, R: PolyRing) -> 'BidiffOp':
        return cls(R)

    @classmethod
    def pointwise(cls, R: PolyRing) -> 'BidiffOp':
        zero = zero_index(R.ngens)
        return cls(R, {(zero, zero): R.one})

    @classmethod
    def from_terms(cls, R: PolyRing, triples: Sequence[Tuple[PolyFun, MultiIndex, MultiIndex]]) -> 'BidiffOp':
        """Sum of (coefficient, left index, right index) triples"""
        terms: Dict[Pair, PolyFun] = {}
        for coeff, a, b in triples:
            if len(a) != R.ngens or len(b) != R.ngens:
                raise DimensionMismatchError(f"multi-indices {a}, {b} on a {R.ngens}-chart")
            key = (tuple(a), tuple(b))
            terms[key] = terms.get(key, R.zero) + coeff
        return cls(R, terms)

    @classmethod
    def from_bivector(cls, pi: Multivector) -> 'BidiffOp':
        """(f, g) -> pi(df, dg) = sum_{i,j} pi^ij d_i f d_j g"""
        n = pi.dim
        terms = {}
        for (i, j), c in pi.components.items():
            terms[(unit_index(n, i), unit_index(n, j))] = c
            terms[(unit_index(n, j), unit_index(n, i))] = -c
        return cls(pi.ring, terms)

    def __call__(self, f: PolyFun, g: PolyFun) -> PolyFun:
        result = self.ring.zero
        cache_f: Dict[MultiIndex, PolyFun] = {}
        cache_g: Dict[MultiIndex, PolyFun] = {}
        for (a, b), c in self.terms.items():
            if a not in cache_f:
                cache_f[a] = derive(f, a)
            if not cache_f[a]:
                continue
            if b not in cache_g:
                cache_g[b] = derive(g, b)
            if cache_g[b]:
                result += c * cache_f[a] * cache_g[b]
        return result

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, BidiffOp) and self.dim == other.dim and self.terms == other.terms

    __hash__ = None

    def _check_dim(self, other: 'BidiffOp'):
        if self.dim != other.dim:
            raise DimensionMismatchError(f"operators on charts of dimension {self.dim} and {other.dim}")

    def __add__(self, other: 'BidiffOp') -> 'BidiffOp':
        self._check_dim(other)
        terms = dict(self.terms)
        for key, c in other.terms.items():
            terms[key] = terms.get(key, self.ring.zero) + c
        return BidiffOp(self.ring, terms)

    def __neg__(self) -> 'BidiffOp':
        return BidiffOp(self.ring, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: 'BidiffOp') -> 'BidiffOp':
        return self + (-other)

    def scale(self, factor) -> 'BidiffOp':
        if isinstance(factor, (int, Fraction, str)):
            factor = gaussian(factor)
        return BidiffOp(self.ring, {k: c * factor for k, c in self.terms.items()})

    def swap(self) -> 'BidiffOp':
        """(f, g) -> C(g, f)"""
        return BidiffOp(self.ring, {(b, a): c for (a, b), c in self.terms.items()})

    def skew(self) -> 'BidiffOp':
        """(f, g) -> C(f, g) - C(g, f)"""
        return self - self.swap()

    def symmetric_part(self) -> 'BidiffOp':
        return (self + self.swap()).scale(Fraction(1, 2))

    def is_constant(self) -> bool:
        return all(is_constant(c) for c in self.terms.values())

    def max_order(self) -> int:
        return max((max(index_order(a), index_order(b)) for a, b in self.terms), default=-1)

    def to_bivector(self) -> Multivector:
        """Bivector of the skew part, (df, dg) -> C(f, g) - C(g, f)

        Raises:
            NotABivectorError: if the skew part is not a biderivation
        """
        n = self.dim
        comps = {}
        for (a, b), c in self.skew().terms.items():
            if index_order(a) != 1 or index_order(b) != 1:
                raise NotABivectorError(f"skew part has a term of order ({index_order(a)}, {index_order(b)})")
            i, j = a.index(1), b.index(1)
            if i < j:
                comps[(i, j)] = c
        return Multivector(self.ring, 2, comps)

    def precompose(self, A: DiffOp, B: DiffOp) -> 'BidiffOp':
        """(f, g) -> C(A f, B g)"""
        left_cache: Dict[MultiIndex, Dict[MultiIndex, PolyFun]] = {}
        right_cache: Dict[MultiIndex, Dict[MultiIndex, PolyFun]] = {}
        terms: Dict[Pair, PolyFun] = {}
        for (a, b), c in self.terms.items():
            if a not in left_cache:
                left_cache[a] = _expand_after(a, A)
            if b not in right_cache:
                right_cache[b] = _expand_after(b, B)
            for a2, ca in left_cache[a].items():
                for b2, cb in right_cache[b].items():
                    key = (a2, b2)
                    terms[key] = terms.get(key, self.ring.zero) + c * ca * cb
        return BidiffOp(self.ring, terms)

    def postcompose(self, D: DiffOp) -> 'BidiffOp':
        """(f, g) -> D(C(f, g))"""
        terms: Dict[Pair, PolyFun] = {}
        for delta, d in D.terms.items():
            for d1, d2, d3, weight in _splits3(delta):
                for (a, b), c in self.terms.items():
                    dc = derive(c, d1)
                    if not dc:
                        continue
                    key = (add_index(a, d2), add_index(b, d3))
                    terms[key] = terms.get(key, self.ring.zero) + d * dc * weight
        return BidiffOp(self.ring, terms)

    def symbol_mul(self, other: 'BidiffOp') -> 'BidiffOp':
        """Product of constant-coefficient operators, (a, b)(a', b') = (a + a', b + b')"""
        if not (self.is_constant() and other.is_constant()):
            raise NotConstantError("symbol product needs constant coefficients")
        terms: Dict[Pair, PolyFun] = {}
        for (a, b), c in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                key = (add_index(a, a2), add_index(b, b2))
                terms[key] = terms.get(key, self.ring.zero) + c * c2
        return BidiffOp(self.ring, terms)

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        if not self.terms:
            return '0'
        names = names or variable_names(self.dim)

        def derivs(alpha):
            parts = [f"d{n}^{k}" if k > 1 else f"d{n}" for n, k in zip(names, alpha) if k]
            return '*'.join(parts) or '1'

        order = sorted(self.terms, key=lambda ab: (index_order(ab[0]) + index_order(ab[1]), ab))
        return ' + '.join(f"({format_poly(self.terms[k], names)})*[{derivs(k[0])} | {derivs(k[1])}]"
                          for k in order)

    def __repr__(self) -> str:
        return f"BidiffOp({self.format()})"


class TriDiffOp:
    """Tridifferential operator (f, g, h) -> sum c * d^a f * d^b g * d^c h"""

    __slots__ = ('ring', 'terms')

    def __init__(self, R: PolyRing, terms: Optional[Dict[Triple, PolyFun]] = None):
        self.ring = R
        self.terms = {k: c for k, c in (terms or {}).items() if c}

    def __call__(self, f: PolyFun, g: PolyFun, h: PolyFun) -> PolyFun:
        result = self.ring.zero
        for (a, b, c), coeff in self.terms.items():
            result += coeff * derive(f, a) * derive(g, b) * derive(h, c)
        return result

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, TriDiffOp) and self.terms == other.terms

    __hash__ = None

    def __add__(self, other: 'TriDiffOp') -> 'TriDiffOp':
        terms = dict(self.terms)
        for key, c in other.terms.items():
            terms[key] = terms.get(key, self.ring.zero) + c
        return TriDiffOp(self.ring, terms)

    def __neg__(self) -> 'TriDiffOp':
        return TriDiffOp(self.ring, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: 'TriDiffOp') -> 'TriDiffOp':
        return self + (-other)

    def equations(self) -> Dict[tuple, object]:
        """One linear equation per (derivative triple, monomial) pair"""
        return {(key, monom): c for key, value in self.terms.items() for monom, c in value.items()}

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        if not self.terms:
            return '0'
        names = names or variable_names(self.ring.ngens)
        parts = []
        for key in sorted(self.terms):
            slots = ' | '.join('*'.join(f"d{n}^{k}" if k > 1 else f"d{n}" for n, k in zip(names, alpha) if k) or '1'
                               for alpha in key)
            parts.append(f"({format_poly(self.terms[key], names)})*[{slots}]")
        return ' + '.join(parts)


@lru_cache(maxsize=None)
def _assoc_splits(alpha: MultiIndex, constant_inner: bool):
    """Splits of alpha; a constant inner coefficient only takes d1 = 0"""
    if constant_inner:
        zero = zero_index(len(alpha))
        return tuple((zero, d2, d3, weight) for d2, d3, weight in _splits2(alpha))
    return _splits3(alpha)


def _assoc_pair(A: BidiffOp, B: BidiffOp) -> TriDiffOp:
    """(f, g, h) -> A(B(f, g), h) - A(f, B(g, h))"""
    R = A.ring
    terms: Dict[Triple, PolyFun] = {}
    for (a2, b2), cb in B.terms.items():
        constant_inner = is_constant(cb)
        for (a, b), ca in A.terms.items():
            for d1, d2, d3, weight in _assoc_splits(a, constant_inner):
                dc = derive(cb, d1)
                if dc:
                    key = (add_index(a2, d2), add_index(b2, d3), b)
                    terms[key] = terms.get(key, R.zero) + ca * dc * weight
            for d1, d2, d3, weight in _assoc_splits(b, constant_inner):
                dc = derive(cb, d1)
                if dc:
                    key = (a, add_index(a2, d2), add_index(b2, d3))
                    terms[key] = terms.get(key, R.zero) - ca * dc * weight
    return TriDiffOp(R, terms)


# ----------------------------------------------------------------------
# Star products
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StarProduct:
    """f * g = sum_r lambda^r C_r(f, g) mod lambda^(N+1)"""

    ring: PolyRing
    ops: Tuple[BidiffOp, ...]
    claimed_pi: Optional[Multivector] = None
    label: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'ops', tuple(self.ops))
        if not self.ops:
            raise OrderMismatchError("a star product needs at least C_0")

    @property
    def order(self) -> int:
        return len(self.ops) - 1

    @property
    def dim(self) -> int:
        return self.ring.ngens

    def op(self, r: int) -> BidiffOp:
        return self.ops[r]

    def __eq__(self, other) -> bool:
        return isinstance(other, StarProduct) and self.ops == other.ops

    __hash__ = None

    def truncate(self, order: int) -> 'StarProduct':
        if order > self.order:
            raise OrderMismatchError(f"cannot extend a star product of order {self.order} to {order}")
        return StarProduct(self.ring, self.ops[:order + 1], self.claimed_pi, self.label)

    def __call__(self, F: SeriesLike, G: SeriesLike) -> TruncatedSeries:
        return star_mul(self, F, G)

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        lines = []
        for r, op in enumerate(self.ops):
            lines.append(f"C{r} = {op.format(names)}")
        return '\n'.join(lines)


def as_series(F: SeriesLike, order: int, R: PolyRing) -> TruncatedSeries:
    if isinstance(F, TruncatedSeries):
        if F.order != order:
            raise OrderMismatchError(f"series of order {F.order}, expected {order}")
        return F
    if F.ring.ngens != R.ngens:
        raise DimensionMismatchError(f"function on a {F.ring.ngens}-chart, expected {R.ngens}")
    return TruncatedSeries.constant(F, order, R.zero)


def star_mul(s: StarProduct, F: SeriesLike, G: SeriesLike) -> TruncatedSeries:
    """(F * G)_k = sum_{r+i+j=k} C_r(F_i, G_j), extended lambda-linearly"""
    F = as_series(F, s.order, s.ring)
    G = as_series(G, s.order, s.ring)
    coeffs = []
    for k in range(s.order + 1):
        total = s.ring.zero
        for r in range(k + 1):
            op = s.ops[r]
            if not op:
                continue
            for i in range(k - r + 1):
                if F[i] and G[k - r - i]:
                    total += op(F[i], G[k - r - i])
        coeffs.append(total)
    return TruncatedSeries(coeffs)


def assoc_defect(s: StarProduct) -> Dict[int, TriDiffOp]:
    """Nonzero tridifferential defects of (f*g)*h - f*(g*h), keyed by lambda order"""
    start = debug_timer_start('performance', 'assoc_defect')
    defects = {}
    for k in range(s.order + 1):
        total = TriDiffOp(s.ring)
        for r in range(k + 1):
            if s.ops[r] and s.ops[k - r]:
                total = total + _assoc_pair(s.ops[r], s.ops[k - r])
        if total:
            defects[k] = total
    debug_log('star', 'associativity defect', label=s.label, order=s.order, defect_orders=sorted(defects))
    debug_timer_end('performance', 'assoc_defect', start)
    return defects


def unit_defect(s: StarProduct) -> List[int]:
    """Orders r >= 1 at which C_r(1, .) or C_r(., 1) is nonzero"""
    zero = zero_index(s.dim)
    bad = []
    for r, op in enumerate(s.ops[1:], start=1):
        if any(a == zero or b == zero for a, b in op.terms):
            bad.append(r)
    if s.ops[0] != BidiffOp.pointwise(s.ring):
        bad.insert(0, 0)
    return bad


def star_commutator_check(s: StarProduct, pi: Optional[Multivector] = None) -> List[Tuple[int, int]]:
    """Coordinate pairs violating x_i * x_j - x_j * x_i = lambda pi(dx_i, dx_j) mod lambda^2"""
    pi = pi if pi is not None else s.claimed_pi
    if pi is None:
        pi = bracket_of(s)
    R = s.ring
    failures = []
    for i in range(s.dim):
        for j in range(i + 1, s.dim):
            xi, xj = R.gens[i], R.gens[j]
            if s.ops[0](xi, xj) != s.ops[0](xj, xi):
                failures.append((i, j))
                continue
            if s.order >= 1 and s.ops[1](xi, xj) - s.ops[1](xj, xi) != pi.component((i, j)):
                failures.append((i, j))
    return failures


# ----------------------------------------------------------------------
# Constructions
# ----------------------------------------------------------------------

def moyal(pi: Union[Multivector, FormalPoisson], order: int, label: str = 'moyal') -> StarProduct:
    """Moyal product exp((lambda/2) P) with P = sum pi^ij d_i (x) d_j

    A FormalPoisson pi_0 + lambda pi_1 + ... with constant terms is fed
    in lambda-linearly: P becomes sum_k lambda^k P_k.

    Raises:
        NotConstantError: if some bivector has non-constant coefficients
    """
    terms = [pi.term(k) for k in range(min(pi.order, order) + 1)] if isinstance(pi, FormalPoisson) else [pi]
    for term in terms:
        if term.degree != 2:
            raise NotABivectorError(f"Moyal needs a bivector, got a {term.degree}-vector")
        if not term.is_constant():
            raise NotConstantError(f"Moyal needs constant coefficients, got {term.format()}")
    R = terms[0].ring
    half = Fraction(1, 2)
    # lambda * (1/2) * sum_k lambda^k P_k, as a series indexed by lambda order
    generator = [BidiffOp.zero(R)] * (order + 1)
    for k, term in enumerate(terms):
        if k + 1 <= order:
            generator[k + 1] = BidiffOp.from_bivector(term).scale(half)
    power = [BidiffOp.pointwise(R)] + [BidiffOp.zero(R)] * order
    total = list(power)
    for m in range(1, order + 1):
        new_power = [BidiffOp.zero(R)] * (order + 1)
        for k in range(order + 1):
            for r in range(1, k + 1):
                if generator[r] and power[k - r]:
                    new_power[k] = new_power[k] + power[k - r].symbol_mul(generator[r])
        power = new_power
        weight = Fraction(1, factorial(m))
        total = [t + p.scale(weight) for t, p in zip(total, power)]
    debug_log('star', 'Moyal product built', dim=R.ngens, order=order, formal_terms=len(terms))
    return StarProduct(R, total, terms[0], label)


def _kontsevich_shapes(pi: Multivector) -> List[BidiffOp]:
    """pi^ij pi^kl d_i d_k (x) d_j d_l, pi^kl d_l pi^ij d_i d_k (x) d_j and pi^kl d_l pi^ij d_i (x) d_j d_k"""
    n = pi.dim
    R = pi.ring
    P = pi.matrix()
    e = lambda i: unit_index(n, i)
    shapes = [dict(), dict(), dict()]

    def acc(shape, key, value):
        if value:
            shape[key] = shape.get(key, R.zero) + value

    for i in range(n):
        for j in range(n):
            if not P[i][j]:
                continue
            for k in range(n):
                for l in range(n):
                    acc(shapes[0], (add_index(e(i), e(k)), add_index(e(j), e(l))), P[i][j] * P[k][l])
                    if P[k][l]:
                        dp = derive(P[i][j], e(l))
                        acc(shapes[1], (add_index(e(i), e(k)), e(j)), P[k][l] * dp)
                        acc(shapes[2], (e(i), add_index(e(j), e(k))), P[k][l] * dp)
    return [BidiffOp(R, shape) for shape in shapes]


def kontsevich2(pi: Multivector, order: int = 2, label: str = 'kontsevich2') -> StarProduct:
    """Order-2 star product for a polynomial Poisson bivector

    C_1 = (1/2) pi(d., d.) and C_2 is the combination of the three
    second-order shapes that makes the lambda^2 associativity defect vanish.

    Raises:
        NotPoissonError: if [pi, pi] != 0
        AnsatzUnsolvableError: if no combination of the shapes works
    """
    if order > KONTSEVICH_MAX_ORDER:
        raise OrderMismatchError(f"kontsevich2 builds operators up to order {KONTSEVICH_MAX_ORDER}, got {order}")
    if not is_poisson(pi):
        raise NotPoissonError(f"[pi, pi] != 0 for pi = {pi.format()}")
    R = pi.ring
    c0 = BidiffOp.pointwise(R)
    c1 = BidiffOp.from_bivector(pi).scale(Fraction(1, 2))
    ops = [c0, c1][:order + 1]
    if order == 2:
        shapes = _kontsevich_shapes(pi)
        inhomogeneous = _assoc_pair(c1, c1)
        columns = [(_assoc_pair(c0, shape) + _assoc_pair(shape, c0)).equations() for shape in shapes]
        rhs = {k: -v for k, v in inhomogeneous.equations().items()}
        weights = solve_linear(columns, rhs, real_unknowns=True)
        if weights is None:
            raise AnsatzUnsolvableError(f"no second-order operator found for pi = {pi.format()}")
        c2 = BidiffOp.zero(R)
        for weight, shape in zip(weights, shapes):
            if weight:
                c2 = c2 + shape.scale(weight)
        debug_log('star', 'kontsevich2 weights solved', weights=[str(w) for w in weights])
        ops.append(c2)
    return StarProduct(R, ops, pi, label)


def bracket_of(s: StarProduct) -> Multivector:
    """Bivector (df, dg) -> C_1(f, g) - C_1(g, f)

    Raises:
        NotABivectorError: if the skew part of C_1 is not a biderivation
    """
    if s.order < 1:
        return Multivector.zero(s.ring, 2)
    return s.ops[1].to_bivector()


def apply_equivalence(T: EquivalenceTransform, s: StarProduct) -> StarProduct:
    """f *' g = T^-1(T f * T g)

    This is a right action: apply_equivalence(T2, apply_equivalence(T1, s))
    equals apply_equivalence(T1 o T2, s).
    """
    if T.order != s.order:
        raise OrderMismatchError(f"transform of order {T.order} and star product of order {s.order}")
    if T.dim != s.dim:
        raise DimensionMismatchError(f"transform on a {T.dim}-chart and star product on a {s.dim}-chart")
    N = s.order
    parts = T.components()
    inverse = invert_transform(T).components()
    inner = []
    for m in range(N + 1):
        total = BidiffOp.zero(s.ring)
        for r in range(m + 1):
            if not s.ops[r]:
                continue
            for p in range(m - r + 1):
                q = m - r - p
                if parts[p] and parts[q]:
                    total = total + s.ops[r].precompose(parts[p], parts[q])
        inner.append(total)
    ops = []
    for k in range(N + 1):
        total = BidiffOp.zero(s.ring)
        for u in range(k + 1):
            if inverse[u] and inner[k - u]:
                total = total + inner[k - u].postcompose(inverse[u])
        ops.append(total)
    debug_log('star', 'equivalence applied', order=N, identity=T.is_identity())
    return StarProduct(s.ring, ops, s.claimed_pi, s.label)


def normalize_first_order(s: StarProduct) -> Tuple[StarProduct, EquivalenceTransform]:
    """Equivalence id + lambda E removing the symmetric part of C_1

    E(f)g + fE(g) - E(fg) cancels the symmetric part b: e_0 = -b_00 and
    e_(a+b) = b_ab / binomial(a+b, a) for a, b != 0.

    Raises:
        NormalizationError: if the symmetric part has a one-sided term or
            inconsistent coefficients
    """
    R = s.ring
    if s.order < 1:
        return s, EquivalenceTransform.identity(R, s.order)
    symmetric = s.ops[1].symmetric_part()
    if not symmetric:
        return s, EquivalenceTransform.identity(R, s.order)
    zero = zero_index(s.dim)
    coeffs: Dict[MultiIndex, PolyFun] = {}
    for (a, b), c in symmetric.terms.items():
        if a == zero and b == zero:
            value, gamma = -c, zero
        elif a == zero or b == zero:
            raise NormalizationError("C_1 has a one-sided symmetric term; normalize the unit first")
        else:
            gamma = add_index(a, b)
            value = c * gaussian(Fraction(1, index_binomial(gamma, a)))
        if gamma in coeffs and coeffs[gamma] != value:
            raise NormalizationError(f"inconsistent symmetric coefficients at derivative {gamma}")
        coeffs[gamma] = value
    E = DiffOp(R, coeffs)
    T = EquivalenceTransform(R, (E,) + (DiffOp.zero(R),) * (s.order - 1))
    normalized = apply_equivalence(T, s)
    if normalized.ops[1].symmetric_part():
        raise NormalizationError("symmetric part of C_1 survived normalization")
    debug_log('star', 'first order normalized', label=s.label, generator=E.format())
    return normalized, T


def normalize_unit(s: StarProduct, unit: TruncatedSeries) -> Tuple[StarProduct, EquivalenceTransform]:
    """Bring a product with unit u to unit 1 through T f = u f (pointwise)

    T^-1(T1 * Tg) = T^-1(u * ug) = g because u is the unit of s.
    """
    R = s.ring
    unit = as_series(unit, s.order, R)
    if unit[0] != R.one:
        raise NormalizationError(f"unit must start with 1, got {format_poly(unit[0])}")
    T = EquivalenceTransform(R, [DiffOp.multiplication(c) for c in unit.coeffs[1:]])
    if T.is_identity():
        return s, T
    return apply_equivalence(T, s), T


def tau(s: StarProduct, s2: StarProduct) -> Multivector:
    """Bivector (df, dg) -> (C_2 - C_2')(f, g) - (C_2 - C_2')(g, f)

    Raises:
        FirstOrderMismatchError: if C_1 != C_1'
    """
    if s.dim != s2.dim:
        raise DimensionMismatchError(f"star products on charts of dimension {s.dim} and {s2.dim}")
    if s.order < 2 or s2.order < 2:
        raise OrderMismatchError("tau needs star products of order >= 2")
    if s.ops[1] != s2.ops[1]:
        raise FirstOrderMismatchError("star products differ at first order")
    return (s.ops[2] - s2.ops[2]).to_bivector()


def _constant_matrix(pi: Multivector) -> sympy.Matrix:
    if not pi.is_constant():
        raise NotConstantError(f"expected a constant bivector, got {pi.format()}")
    zero = zero_index(pi.dim)
    return sympy.Matrix(pi.dim, pi.dim,
                        lambda i, j: scalar_to_sympy(pi.component((i, j)).get(zero, pi.ring.domain.zero)))


def tau_tilde(s: StarProduct, s2: StarProduct, pi: Multivector) -> TwoForm:
    """Two-form with tau~(X_f, X_g) = tau(df, dg), i.e. Pi^-T tau Pi^-1

    Raises:
        DegenerateBivectorError: if pi is not invertible
    """
    t = tau(s, s2)
    matrix = _constant_matrix(pi)
    if matrix.det() == 0:
        raise DegenerateBivectorError(f"pi = {pi.format()} is degenerate")
    inv = matrix.inv()
    R = pi.ring
    inv_entries = [[R.ground_new(scalar_from_sympy(inv[i, j])) for j in range(pi.dim)] for i in range(pi.dim)]
    T = t.matrix()
    comps = {}
    for a in range(pi.dim):
        for b in range(a + 1, pi.dim):
            value = R.zero
            for i in range(pi.dim):
                if not inv_entries[i][a]:
                    continue
                for j in range(pi.dim):
                    if T[i][j] and inv_entries[j][b]:
                        value += inv_entries[i][a] * T[i][j] * inv_entries[j][b]
            comps[(a, b)] = value
    return TwoForm(R, comps)


def recover_bidifferential(product: Callable[[PolyFun, PolyFun], TruncatedSeries], R: PolyRing,
                           order: int, max_derivative: int, rng: Optional[random.Random] = None,
                           samples: int = 3) -> List[BidiffOp]:
    """Operators C_0..C_N of a product known only by evaluation

    Probes x^a (x) x^b for |a|, |b| <= max_derivative in increasing total
    degree; the coefficient of d^a (x) d^b is the residual divided by a! b!.
    The result is re-checked on random inputs of one degree higher.

    Raises:
        OperatorRecoveryError: if a random check disagrees
    """
    rng = rng or random.Random(0)
    monomials = monomials_upto(R.ngens, max_derivative)
    pairs = sorted(((a, b) for a in monomials for b in monomials),
                   key=lambda ab: (index_order(ab[0]) + index_order(ab[1]), ab))
    terms: List[Dict[Pair, PolyFun]] = [dict() for _ in range(order + 1)]
    for a, b in pairs:
        value = product(R.term_new(a, gaussian(1)), R.term_new(b, gaussian(1)))
        weight = gaussian(Fraction(1, index_factorial(a) * index_factorial(b)))
        for k in range(order + 1):
            residual = value[k]
            for (alpha, beta), c in terms[k].items():
                if all(x <= y for x, y in zip(alpha, a)) and all(x <= y for x, y in zip(beta, b)):
                    fa = _falling_monomial(R, a, alpha)
                    fb = _falling_monomial(R, b, beta)
                    residual -= c * fa * fb
            if residual:
                terms[k][(a, b)] = residual * weight
    ops = [BidiffOp(R, t) for t in terms]
    for _ in range(samples):
        f = random_poly(R, rng, max_derivative + 1)
        g = random_poly(R, rng, max_derivative + 1)
        expected = product(f, g)
        for k, op in enumerate(ops):
            if op(f, g) != expected[k]:
                raise OperatorRecoveryError(f"recovered C_{k} disagrees with the product on random inputs")
    debug_log('star', 'bidifferential operators recovered', order=order, terms=[len(t) for t in terms])
    return ops


def _falling_monomial(R: PolyRing, a: MultiIndex, alpha: MultiIndex) -> PolyFun:
    """d^alpha x^a"""
    return derive(R.term_new(a, gaussian(1)), alpha)


def format_product(value: TruncatedSeries, names: Optional[Sequence[str]] = None) -> str:
    return value.format(lambda p: format_poly(p, names))
