"""Matrices over a deformed function algebra

MatPoly is a rectangular matrix of polynomial functions; a MatSeries is a
TruncatedSeries of MatPoly. The star product acts on matrices entrywise
with matrix multiplication of the coefficients:

    (M * N)_ij = sum_k M_ik * N_kj

On top of that this module lifts an idempotent P0 to qP = P0 + O(lambda)
with qP * qP = qP, and builds the maps

    J(s)  = qP * s            on sections s = P0 s
    I(L)  = qP * L * qP       on corner elements L = P0 L P0

with the induced corner product L *' S = I^-1(I(L) * I(S)).
"""

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, log2
from threading import Lock
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from sympy.polys.rings import PolyRing

from core.coeffring import (
    PolyFun, format_poly, gaussian, is_constant, random_poly,
)
from core.debug_logger import debug_log, debug_timer_end, debug_timer_start
from core.errors import (
    DimensionMismatchError, LiftingError, NotIdempotentError, NotInCornerError,
    NotInImageError, OrderMismatchError, RankError,
)
from core.poisson import Multivector, poisson_bracket
from core.series import TruncatedSeries
from core.star import StarProduct, bracket_of, recover_bidifferential

MatLike = Union['MatPoly', TruncatedSeries]


class MatPoly:
    """rows x cols matrix of polynomial functions"""

    __slots__ = ('ring', 'entries')

    def __init__(self, R: PolyRing, entries: Sequence[Sequence[PolyFun]]):
        self.ring = R
        self.entries = tuple(tuple(row) for row in entries)
        if not self.entries or not self.entries[0]:
            raise DimensionMismatchError("a matrix needs at least one entry")
        width = len(self.entries[0])
        if any(len(row) != width for row in self.entries):
            raise DimensionMismatchError("ragged matrix rows")

    @classmethod
    def zero(cls, R: PolyRing, rows: int, cols: Optional[int] = None) -> 'MatPoly':
        cols = rows if cols is None else cols
        return cls(R, [[R.zero] * cols for _ in range(rows)])

    @classmethod
    def identity(cls, R: PolyRing, n: int) -> 'MatPoly':
        return cls(R, [[R.one if i == j else R.zero for j in range(n)] for i in range(n)])

    @classmethod
    def scalar(cls, f: PolyFun) -> 'MatPoly':
        """1 x 1 matrix [f]"""
        return cls(f.ring, [[f]])

    @classmethod
    def column(cls, R: PolyRing, values: Sequence[PolyFun]) -> 'MatPoly':
        return cls(R, [[v] for v in values])

    @classmethod
    def basis_column(cls, R: PolyRing, n: int, i: int) -> 'MatPoly':
        return cls.column(R, [R.one if k == i else R.zero for k in range(n)])

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.entries), len(self.entries[0])

    @property
    def n(self) -> int:
        return len(self.entries)

    def entry(self, i: int, j: int) -> PolyFun:
        return self.entries[i][j]

    def col(self, j: int) -> List[PolyFun]:
        return [row[j] for row in self.entries]

    def _check_shape(self, other: 'MatPoly'):
        if self.shape != other.shape:
            raise DimensionMismatchError(f"matrices of shape {self.shape} and {other.shape}")

    def __add__(self, other: 'MatPoly') -> 'MatPoly':
        self._check_shape(other)
        return MatPoly(self.ring, [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)])

    def __sub__(self, other: 'MatPoly') -> 'MatPoly':
        self._check_shape(other)
        return MatPoly(self.ring, [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)])

    def __neg__(self) -> 'MatPoly':
        return self.map(lambda a: -a)

    def __matmul__(self, other: 'MatPoly') -> 'MatPoly':
        rows, inner = self.shape
        inner2, cols = other.shape
        if inner != inner2:
            raise DimensionMismatchError(f"cannot multiply {self.shape} by {other.shape}")
        out = []
        for i in range(rows):
            row = []
            for j in range(cols):
                value = self.ring.zero
                for k in range(inner):
                    if self.entries[i][k] and other.entries[k][j]:
                        value += self.entries[i][k] * other.entries[k][j]
                row.append(value)
            out.append(row)
        return MatPoly(self.ring, out)

    def scale(self, factor) -> 'MatPoly':
        """Multiply every entry by a scalar or a function"""
        if isinstance(factor, (int, Fraction, str)):
            factor = gaussian(factor)
        return self.map(lambda a: a * factor)

    def map(self, fn: Callable[[PolyFun], PolyFun]) -> 'MatPoly':
        return MatPoly(self.ring, [[fn(a) for a in row] for row in self.entries])

    def trace(self) -> PolyFun:
        value = self.ring.zero
        for i in range(min(self.shape)):
            value += self.entries[i][i]
        return value

    def __eq__(self, other) -> bool:
        return isinstance(other, MatPoly) and self.entries == other.entries

    __hash__ = None

    def __bool__(self) -> bool:
        return any(a for row in self.entries for a in row)

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        return '[' + ', '.join('[' + ', '.join(format_poly(a, names) for a in row) + ']'
                               for row in self.entries) + ']'

    def __repr__(self) -> str:
        return f"MatPoly({self.format()})"


def as_mat_series(M: MatLike, order: int) -> TruncatedSeries:
    if isinstance(M, TruncatedSeries):
        if M.order != order:
            raise OrderMismatchError(f"matrix series of order {M.order}, expected {order}")
        return M
    rows, cols = M.shape
    return TruncatedSeries.constant(M, order, MatPoly.zero(M.ring, rows, cols))


def _matrix_op(op, A: MatPoly, B: MatPoly) -> MatPoly:
    """Apply one bidifferential operator with matrix multiplication"""
    rows, inner = A.shape
    inner2, cols = B.shape
    if inner != inner2:
        raise DimensionMismatchError(f"cannot multiply {A.shape} by {B.shape}")
    R = A.ring
    out = [[R.zero] * cols for _ in range(rows)]
    for a in range(rows):
        for c in range(inner):
            if not A.entries[a][c]:
                continue
            for b in range(cols):
                if B.entries[c][b]:
                    out[a][b] += op(A.entries[a][c], B.entries[c][b])
    return MatPoly(R, out)


def matrix_star(s: StarProduct, M: MatLike, N: MatLike) -> TruncatedSeries:
    """(M * N)_k = sum_{r+i+j=k} C_r(M_i, N_j) with matrix multiplication"""
    M = as_mat_series(M, s.order)
    N = as_mat_series(N, s.order)
    rows, _ = M[0].shape
    _, cols = N[0].shape
    coeffs = []
    for k in range(s.order + 1):
        total = MatPoly.zero(s.ring, rows, cols)
        for r in range(k + 1):
            if not s.ops[r]:
                continue
            for i in range(k - r + 1):
                if M[i] and N[k - r - i]:
                    total = total + _matrix_op(s.ops[r], M[i], N[k - r - i])
        coeffs.append(total)
    return TruncatedSeries(coeffs)


def first_order_commutator(s: StarProduct, A: MatPoly, B: MatPoly) -> MatPoly:
    """lambda^1 coefficient of A*B - B*A, that is C_1(A, B) - C_1(B, A)

    For C_1 = (1/2) pi this is the antisymmetrized matrix Poisson bracket.
    """
    if s.order < 1:
        raise OrderMismatchError("the first order commutator needs order >= 1")
    return _matrix_op(s.ops[1], A, B) - _matrix_op(s.ops[1], B, A)


def scale_series(F: TruncatedSeries, factor) -> TruncatedSeries:
    return F.map(lambda m: m.scale(factor))


def function_times_matrix(F: TruncatedSeries, M: MatPoly) -> TruncatedSeries:
    """Series of functions times a fixed matrix, F_k M"""
    return F.map(lambda f: M.scale(f))


def is_idempotent(P0: MatPoly) -> bool:
    return P0 @ P0 == P0


def is_full(P0: MatPoly) -> bool:
    """Fullness via a nonzero constant trace (pointwise rank >= 1 everywhere)"""
    t = P0.trace()
    return bool(t) and is_constant(t)


def projection_rank(P0: MatPoly) -> Optional[int]:
    """Constant trace as an integer rank, or None if the trace is not a constant"""
    t = P0.trace()
    if not t:
        return 0
    if not is_constant(t):
        return None
    value = list(t.values())[0]
    if value.y or value.x.denominator != 1:
        return None
    return int(value.x.numerator)


# ----------------------------------------------------------------------
# Idempotent lifting
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LiftedIdempotent:
    """Idempotent qP = P0 + O(lambda) with qP * qP = qP mod lambda^(N+1)"""

    P0: MatPoly
    qP: TruncatedSeries
    star: StarProduct

    @property
    def order(self) -> int:
        return self.qP.order

    @property
    def n(self) -> int:
        return self.P0.n

    @property
    def ring(self) -> PolyRing:
        return self.P0.ring

    def defect(self) -> TruncatedSeries:
        return matrix_star(self.star, self.qP, self.qP) - self.qP

    def is_idempotent(self) -> bool:
        return self.defect().is_zero()

    def is_full(self) -> bool:
        return is_full(self.qP[0])


def _check_projection(P0: MatPoly, s: StarProduct):
    rows, cols = P0.shape
    if rows != cols:
        raise DimensionMismatchError(f"projection must be square, got {P0.shape}")
    if P0.ring.ngens != s.dim:
        raise DimensionMismatchError(f"projection on a {P0.ring.ngens}-chart, star product on a {s.dim}-chart")
    if not is_idempotent(P0):
        raise NotIdempotentError(f"P0 * P0 != P0 for P0 = {P0.format()}")


def lift_idempotent(P0: MatPoly, s: StarProduct) -> LiftedIdempotent:
    """Newton iteration E <- 3 E*E - 2 E*E*E starting from P0

    Each step doubles the lambda order of the idempotency defect, so
    ceil(log2(N+1)) steps reach lambda^(N+1).

    Raises:
        NotIdempotentError: if P0 * P0 != P0
        LiftingError: if a defect survives the iteration
    """
    _check_projection(P0, s)
    start = debug_timer_start('performance', 'lift_idempotent')
    E = as_mat_series(P0, s.order)
    steps = ceil(log2(s.order + 1)) if s.order > 0 else 0
    for step in range(steps):
        E2 = matrix_star(s, E, E)
        E3 = matrix_star(s, E2, E)
        E = scale_series(E2, 3) - scale_series(E3, 2)
        debug_log('lift', 'Newton step', step=step + 1)
    lifted = LiftedIdempotent(P0, E, s)
    defect = lifted.defect()
    if not defect.is_zero():
        raise LiftingError(f"idempotency defect at order {defect.lowest_order()} after {steps} Newton steps")
    debug_log('lift', 'idempotent lifted', order=s.order, corrections=[k for k in range(1, s.order + 1) if E[k]])
    debug_timer_end('performance', 'lift_idempotent', start)
    return lifted


def lift_idempotent_stepwise(P0: MatPoly, s: StarProduct) -> LiftedIdempotent:
    """Order-by-order lift P_k = (1 - 2 P0) D_k

    D_k is the lambda^k coefficient of P*P - P with P known below order k;
    it commutes with P0, which makes P_k solve P0 P_k + P_k P0 - P_k = -D_k.

    Raises:
        NotIdempotentError: if P0 * P0 != P0
        LiftingError: if some D_k does not commute with P0
    """
    _check_projection(P0, s)
    n = P0.n
    R = P0.ring
    zero = MatPoly.zero(R, n)
    one_minus = MatPoly.identity(R, n) - P0.scale(2)
    coeffs = [P0] + [zero] * s.order
    for k in range(1, s.order + 1):
        P = TruncatedSeries(coeffs)
        D = (matrix_star(s, P, P) - P)[k]
        if P0 @ D != D @ P0:
            raise LiftingError(f"defect at order {k} does not commute with P0")
        coeffs[k] = one_minus @ D
    lifted = LiftedIdempotent(P0, TruncatedSeries(coeffs), s)
    if not lifted.is_idempotent():
        raise LiftingError("stepwise lift is not idempotent")
    debug_log('lift', 'stepwise lift finished', order=s.order)
    return lifted


# ----------------------------------------------------------------------
# The J and I maps
# ----------------------------------------------------------------------

def _check_section(L: LiftedIdempotent, s0: MatPoly):
    if s0.shape != (L.n, 1):
        raise DimensionMismatchError(f"section must be a column of length {L.n}, got shape {s0.shape}")
    if L.P0 @ s0 != s0:
        raise NotInImageError(f"P0 s != s for s = {s0.format()}")


def _check_corner(L: LiftedIdempotent, L0: MatPoly):
    if L0.shape != (L.n, L.n):
        raise DimensionMismatchError(f"corner element must be {L.n} x {L.n}, got {L0.shape}")
    if L.P0 @ L0 @ L.P0 != L0:
        raise NotInCornerError(f"P0 L P0 != L for L = {L0.format()}")


def j_map(L: LiftedIdempotent, s0: MatLike) -> TruncatedSeries:
    """J(s) = qP * s for a section or a series of sections

    Raises:
        NotInImageError: if some coefficient is not in the image of P0
    """
    S = as_mat_series(s0, L.order)
    for coeff in S:
        _check_section(L, coeff)
    return matrix_star(L.star, L.qP, S)


def j_inverse(L: LiftedIdempotent, X: TruncatedSeries) -> TruncatedSeries:
    """Sections s with J(s) = X, solved order by order: s_k = P0 (X_k - known_k)"""
    R = L.ring
    zero = MatPoly.zero(R, L.n, 1)
    coeffs = [zero] * (L.order + 1)
    for k in range(L.order + 1):
        known = matrix_star(L.star, L.qP, TruncatedSeries(coeffs))[k]
        coeffs[k] = L.P0 @ (X[k] - known)
    return TruncatedSeries(coeffs)


def i_map(L: LiftedIdempotent, L0: MatLike) -> TruncatedSeries:
    """I(L) = qP * L * qP for a corner element or a series of them

    Raises:
        NotInCornerError: if some coefficient is not in P0 M P0
    """
    S = as_mat_series(L0, L.order)
    for coeff in S:
        _check_corner(L, coeff)
    return matrix_star(L.star, matrix_star(L.star, L.qP, S), L.qP)


def i_inverse(L: LiftedIdempotent, Y: TruncatedSeries) -> TruncatedSeries:
    """Corner series with I(S) = Y, solved order by order: S_k = P0 (Y_k - known_k) P0"""
    R = L.ring
    zero = MatPoly.zero(R, L.n)
    coeffs = [zero] * (L.order + 1)
    for k in range(L.order + 1):
        partial = TruncatedSeries(coeffs)
        known = matrix_star(L.star, matrix_star(L.star, L.qP, partial), L.qP)[k]
        coeffs[k] = L.P0 @ (Y[k] - known) @ L.P0
    return TruncatedSeries(coeffs)


# ----------------------------------------------------------------------
# Corner and center products
# ----------------------------------------------------------------------

@dataclass(eq=False)
class CornerStar:
    """L *' S = I^-1(I(L) * I(S)) on the corner P0 M_n P0"""

    lifted: LiftedIdempotent
    _images: Dict[tuple, TruncatedSeries] = field(default_factory=dict, repr=False)
    _lock: Lock = field(default_factory=Lock, repr=False)

    @property
    def order(self) -> int:
        return self.lifted.order

    @property
    def star(self) -> StarProduct:
        return self.lifted.star

    def image(self, A: MatLike) -> TruncatedSeries:
        """I(A), cached for plain corner matrices"""
        if isinstance(A, TruncatedSeries):
            return i_map(self.lifted, A)
        key = tuple(tuple(sorted(a.items())) for row in A.entries for a in row)
        with self._lock:
            cached = self._images.get(key)
        if cached is None:
            cached = i_map(self.lifted, A)
            with self._lock:
                self._images[key] = cached
        return cached

    def __call__(self, A: MatLike, B: MatLike) -> TruncatedSeries:
        return i_inverse(self.lifted, matrix_star(self.star, self.image(A), self.image(B)))

    def term(self, r: int, A: MatPoly, B: MatPoly) -> MatPoly:
        """B_r(A, B)"""
        return self(A, B)[r]

    def bracket(self, A: MatPoly, B: MatPoly) -> MatPoly:
        """{A, B}' = B_1(A, B) - B_1(B, A)"""
        if self.order < 1:
            raise OrderMismatchError("the corner bracket needs order >= 1")
        return self.term(1, A, B) - self.term(1, B, A)

    def unit(self) -> TruncatedSeries:
        return corner_unit(self.lifted)


def induced_star(L: LiftedIdempotent, s: Optional[StarProduct] = None) -> CornerStar:
    """Corner product induced by I; s defaults to the product L was lifted with"""
    if s is not None and s is not L.star:
        L = LiftedIdempotent(L.P0, L.qP, s)
    debug_log('corner', 'corner product induced', n=L.n, order=L.order)
    return CornerStar(L)


def corner_unit(L: LiftedIdempotent) -> TruncatedSeries:
    """I^-1(qP), the unit of the corner product"""
    return i_inverse(L, L.qP)


def psi(L: LiftedIdempotent, f: PolyFun) -> MatPoly:
    """f -> f P0"""
    return L.P0.scale(f)


def center_star(L: LiftedIdempotent, s: Optional[StarProduct] = None,
                rng: Optional[random.Random] = None) -> Tuple[StarProduct, TruncatedSeries]:
    """Product on functions transported from the corner of a rank-1 projection

    For rank 1 every corner element is (tr Z) P0, so
    f *' g = tr I^-1(I(f P0) * I(g P0)). The operators are recovered by
    probing; the unit of the result tr I^-1(qP) is returned alongside.

    Raises:
        RankError: if trace(P0) != 1
    """
    if projection_rank(L.P0) != 1:
        raise RankError(f"center product needs a rank-1 projection, trace = {format_poly(L.P0.trace())}")
    corner = induced_star(L, s)
    start = debug_timer_start('performance', 'center_star')

    def product(f: PolyFun, g: PolyFun) -> TruncatedSeries:
        return corner(psi(corner.lifted, f), psi(corner.lifted, g)).map(lambda Z: Z.trace())

    ops = recover_bidifferential(product, L.ring, corner.order, corner.order, rng)
    unit = corner_unit(corner.lifted).map(lambda Z: Z.trace())
    base = corner.star
    result = StarProduct(L.ring, ops, base.claimed_pi, f"center({base.label})")
    debug_log('corner', 'center product recovered', order=corner.order,
              unit_is_one=not any(unit.coeffs[1:]))
    debug_timer_end('performance', 'center_star', start)
    return result, unit


# ----------------------------------------------------------------------
# Fibred Poisson brackets
# ----------------------------------------------------------------------

def matrix_bracket(pi: Multivector, A: MatPoly, B: MatPoly) -> MatPoly:
    """{A, B}_ij = sum_k {A_ik, B_kj}"""
    rows, inner = A.shape
    _, cols = B.shape
    R = A.ring
    out = []
    for i in range(rows):
        row = []
        for j in range(cols):
            value = R.zero
            for k in range(inner):
                if A.entries[i][k] and B.entries[k][j]:
                    value += poisson_bracket(pi, A.entries[i][k], B.entries[k][j])
            row.append(value)
        out.append(row)
    return MatPoly(R, out)


def random_corner_element(L: LiftedIdempotent, rng: random.Random, degree: int) -> MatPoly:
    R = L.ring
    M = MatPoly(R, [[random_poly(R, rng, degree) for _ in range(L.n)] for _ in range(L.n)])
    return L.P0 @ M @ L.P0


def random_section(L: LiftedIdempotent, rng: random.Random, degree: int) -> MatPoly:
    R = L.ring
    return L.P0 @ MatPoly.column(R, [random_poly(R, rng, degree) for _ in range(L.n)])


@dataclass
class FibredReport:
    """Outcome of the fibred bracket checks"""

    checked: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, message: str):
        self.failures.append(message)


def fibred_bracket_check(corner: CornerStar, rng: random.Random, samples: int = 20,
                         degree: int = 2) -> FibredReport:
    """{L, S}' = P0 (C_1(L, S) - C_1(S, L)) P0 on random corner pairs"""
    L = corner.lifted
    report = FibredReport()
    for index in range(samples):
        A = random_corner_element(L, rng, degree)
        B = random_corner_element(L, rng, degree)
        expected = L.P0 @ first_order_commutator(corner.star, A, B) @ L.P0
        if corner.bracket(A, B) != expected:
            report.fail(f"pair {index}: {{L,S}}' != P0{{L,S}}P0 for L = {A.format()}")
        report.checked += 1
    debug_log('corner', 'fibred bracket checked', samples=samples, failures=len(report.failures))
    return report


def psi_morphism_check(corner: CornerStar, rng: random.Random, samples: int = 20,
                       degree: int = 2, pi: Optional[Multivector] = None) -> FibredReport:
    """{f P0, g P0}' = {f, g} P0 on random function pairs"""
    L = corner.lifted
    pi = pi if pi is not None else bracket_of(corner.star)
    report = FibredReport()
    for index in range(samples):
        f = random_poly(L.ring, rng, degree)
        g = random_poly(L.ring, rng, degree)
        if corner.bracket(psi(L, f), psi(L, g)) != psi(L, poisson_bracket(pi, f, g)):
            report.fail(f"pair {index}: Psi is not a Poisson morphism at f = {format_poly(f)}")
        report.checked += 1
    return report


def fibred_leibniz_check(corner: CornerStar, rng: random.Random, samples: int = 5,
                         degree: int = 2) -> FibredReport:
    """Leibniz identities of the fibred bracket for central Z = f P0

    {Z, B1 B2}' = {Z, B1}' B2 + B1 {Z, B2}' always; for rank 1 also
    {Z1 Z2, B}' = Z1 {Z2, B}' + Z2 {Z1, B}' and {B, P0}' = 0.
    """
    L = corner.lifted
    report = FibredReport()
    rank_one = projection_rank(L.P0) == 1
    for index in range(samples):
        Z1 = psi(L, random_poly(L.ring, rng, degree))
        Z2 = psi(L, random_poly(L.ring, rng, degree))
        B1 = random_corner_element(L, rng, degree)
        B2 = random_corner_element(L, rng, degree)
        lhs = corner.bracket(Z1, B1 @ B2)
        rhs = corner.bracket(Z1, B1) @ B2 + B1 @ corner.bracket(Z1, B2)
        if lhs != rhs:
            report.fail(f"sample {index}: {{Z, B1 B2}}' Leibniz rule fails")
        if rank_one:
            lhs = corner.bracket(Z1 @ Z2, B1)
            rhs = Z1 @ corner.bracket(Z2, B1) + Z2 @ corner.bracket(Z1, B1)
            if lhs != rhs:
                report.fail(f"sample {index}: {{Z1 Z2, B}}' Leibniz rule fails")
        if rank_one and corner.bracket(B1, L.P0):
            report.fail(f"sample {index}: {{B, P0}}' != 0")
        report.checked += 1
    return report
