"""Characteristic class bookkeeping in a finite cohomology model

Second cohomology is modelled as Q^b with the integral lattice Z^b; the
map pi_* into Poisson cohomology is a rational b x b matrix and the
symmetry group of the lattice is generated by a list of unimodular
matrices. Classes are written q u + r with q, r in Q^b and u a formal
symbol for 2 pi / i m that is never evaluated:

    (1/2, 3)u + (0, 1)

Line bundles act through their Chern vector c1 in Z^b:

    symplectic         a -> a + u c1
    Poisson            a -> a - u pi_* c1
    zero-Poisson       a -> a - u pi_* c1 on strata m >= 1, [0] fixed
"""

import math
import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar

import sympy
from sympy import ZZ
from sympy.matrices.normalforms import smith_normal_decomp

from core.coeffring import constant_term, fraction_parts, is_constant
from core.debug_logger import debug_log
from core.errors import (
    ClassMismatchError, DimensionMismatchError, LatticeError, LiteralSyntaxError,
    NotConstantError, OrderMismatchError,
)
from core.poisson import Multivector

Vector = Tuple[Fraction, ...]
RatMatrix = Tuple[Vector, ...]
OrbitPoint = TypeVar("OrbitPoint")

MODES = ('symplectic', 'poisson')
U = 'u'


def as_vector(values: Iterable) -> Vector:
    return tuple(Fraction(v) for v in values)


def _zero(b: int) -> Vector:
    return (Fraction(0),) * b


def _format_vector(v: Vector) -> str:
    return '(' + ', '.join(str(x) for x in v) + ')'


def _is_integral(v: Vector) -> bool:
    return all(x.denominator == 1 for x in v)


def _mat_vec(M: Sequence[Sequence], v: Vector) -> Vector:
    return tuple(sum((Fraction(a) * x for a, x in zip(row, v)), Fraction(0)) for row in M)


def _to_sympy(M: Sequence[Sequence]) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(Fraction(a).numerator, Fraction(a).denominator) for a in row]
                         for row in M])


@dataclass(frozen=True)
class TwistClass:
    """q u + r, rational-linear in the formal unit u"""

    u_part: Vector
    rational: Vector

    def __post_init__(self):
        if len(self.u_part) != len(self.rational):
            raise DimensionMismatchError(f"u part of length {len(self.u_part)}, "
                                         f"rational part of length {len(self.rational)}")

    @classmethod
    def zero(cls, b: int) -> 'TwistClass':
        return cls(_zero(b), _zero(b))

    @classmethod
    def from_u(cls, values: Iterable) -> 'TwistClass':
        v = as_vector(values)
        return cls(v, _zero(len(v)))

    @classmethod
    def from_rational(cls, values: Iterable) -> 'TwistClass':
        v = as_vector(values)
        return cls(_zero(len(v)), v)

    @property
    def b(self) -> int:
        return len(self.u_part)

    def _check(self, other: 'TwistClass'):
        if self.b != other.b:
            raise DimensionMismatchError(f"classes in models with b = {self.b} and b = {other.b}")

    def __add__(self, other: 'TwistClass') -> 'TwistClass':
        self._check(other)
        return TwistClass(tuple(a + c for a, c in zip(self.u_part, other.u_part)),
                          tuple(a + c for a, c in zip(self.rational, other.rational)))

    def __neg__(self) -> 'TwistClass':
        return TwistClass(tuple(-a for a in self.u_part), tuple(-a for a in self.rational))

    def __sub__(self, other: 'TwistClass') -> 'TwistClass':
        return self + (-other)

    def scale(self, factor) -> 'TwistClass':
        q = Fraction(factor)
        return TwistClass(tuple(q * a for a in self.u_part), tuple(q * a for a in self.rational))

    def transform(self, M: Sequence[Sequence]) -> 'TwistClass':
        """Apply a matrix to both parts"""
        return TwistClass(_mat_vec(M, self.u_part), _mat_vec(M, self.rational))

    def is_zero(self) -> bool:
        return not any(self.u_part) and not any(self.rational)

    def format(self) -> str:
        parts = []
        if any(self.u_part):
            parts.append(_format_vector(self.u_part) + U)
        if any(self.rational):
            parts.append(_format_vector(self.rational))
        return ' + '.join(parts) if parts else '0'

    def __str__(self) -> str:
        return self.format()


_TERM_RE = re.compile(r"\s*(?P<sign>[+-])?\s*(?:\((?P<vec>[^()]*)\)|(?P<num>\d+(?:/\d+)?))\s*(?P<u>u)?\s*")


def parse_twist_class(text: str, b: Optional[int] = None, offset: int = 0) -> TwistClass:
    """Parse `(1/2, 3)u + (0, 1)`, `-2u`, `0`; bare numbers need b = 1

    Raises:
        LiteralSyntaxError: with the column of the offending character
    """
    pos = 0
    u_part: Optional[List[Fraction]] = None
    rational: Optional[List[Fraction]] = None
    first = True
    if not text.strip():
        raise LiteralSyntaxError("empty class literal", offset + 1)
    if text.strip() == '0' and b is not None:
        return TwistClass.zero(b)
    while pos < len(text):
        m = _TERM_RE.match(text, pos)
        if not m or m.end() == pos or (not first and m.group('sign') is None):
            raise LiteralSyntaxError(f"unexpected {text[pos:pos + 1]!r} in class literal",
                                     offset + pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1)
        try:
            if m.group('vec') is not None:
                entries = [Fraction(e.strip()) for e in m.group('vec').split(',')]
            else:
                entries = [Fraction(m.group('num'))]
        except (ValueError, ZeroDivisionError):
            raise LiteralSyntaxError("bad rational entry in class literal", offset + m.start() + 1)
        if m.group('sign') == '-':
            entries = [-e for e in entries]
        width = b if b is not None else len(entries)
        if len(entries) != width:
            raise LiteralSyntaxError(f"class vector of length {len(entries)}, expected {width}",
                                     offset + m.start() + 1)
        b = width
        target = u_part if m.group('u') else rational
        if target is None:
            target = [Fraction(0)] * b
        target = [x + e for x, e in zip(target, entries)]
        if m.group('u'):
            u_part = target
        else:
            rational = target
        pos = m.end()
        first = False
    return TwistClass(tuple(u_part or _zero(b)), tuple(rational or _zero(b)))


@dataclass(frozen=True)
class CohomModel:
    """H^2 model: dimension b, lattice Z^b, pi_* and the lattice automorphisms"""

    b: int
    pi_star: Tuple[Vector, ...]
    autos: Tuple[RatMatrix, ...] = ()
    base_extendable: bool = True

    def __post_init__(self):
        if self.b < 0:
            raise DimensionMismatchError(f"negative b = {self.b}")
        if len(self.pi_star) != self.b or any(len(row) != self.b for row in self.pi_star):
            raise DimensionMismatchError(f"pi_star must be {self.b} x {self.b}")
        for g in self.autos:
            if len(g) != self.b or any(len(row) != self.b for row in g):
                raise DimensionMismatchError(f"automorphism must be {self.b} x {self.b}")
            if any(Fraction(a).denominator != 1 for row in g for a in row):
                raise LatticeError(f"automorphism {g} is not integral")
            if abs(_to_sympy(g).det()) != 1:
                raise LatticeError(f"automorphism {g} is not unimodular")

    @classmethod
    def create(cls, b: int, pi_star: Optional[Sequence[Sequence]] = None,
               autos: Sequence[Sequence[Sequence]] = (), base_extendable: bool = True) -> 'CohomModel':
        """Model with pi_star defaulting to the identity (the symplectic case)"""
        if pi_star is None:
            pi_star = [[1 if i == j else 0 for j in range(b)] for i in range(b)]
        return cls(b, tuple(as_vector(row) for row in pi_star),
                   tuple(tuple(as_vector(row) for row in g) for g in autos),
                   base_extendable)

    def generators(self) -> List[RatMatrix]:
        """Automorphisms and their inverses"""
        gens = []
        for g in self.autos:
            inverse = _to_sympy(g).inv()
            gens.append(g)
            gens.append(tuple(tuple(Fraction(int(inverse[i, j])) for j in range(self.b)) for i in range(self.b)))
        return gens

    def check_lattice(self, c1: Sequence) -> Vector:
        """c1 as a vector of the lattice

        Raises:
            DimensionMismatchError: if len(c1) != b
            LatticeError: if c1 has a non-integral entry
        """
        v = as_vector(c1)
        if len(v) != self.b:
            raise DimensionMismatchError(f"Chern vector of length {len(v)} in a model with b = {self.b}")
        if not _is_integral(v):
            raise LatticeError(f"{_format_vector(v)} is not in the lattice")
        return v

    def check_class(self, alpha: TwistClass):
        if alpha.b != self.b:
            raise DimensionMismatchError(f"class with b = {alpha.b} in a model with b = {self.b}")


@dataclass(frozen=True)
class CharClassSeries:
    """sum_r c_r lambda^r with class coefficients"""

    coeffs: Tuple[TwistClass, ...]
    mode: str = 'symplectic'

    def __post_init__(self):
        if not self.coeffs:
            raise OrderMismatchError("class series needs at least one coefficient")
        if self.mode not in MODES:
            raise ClassMismatchError(f"unknown class mode {self.mode!r}")
        b = self.coeffs[0].b
        if any(c.b != b for c in self.coeffs):
            raise DimensionMismatchError("class coefficients of different lengths")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def b(self) -> int:
        return self.coeffs[0].b

    def __getitem__(self, r: int) -> TwistClass:
        return self.coeffs[r]

    def format(self) -> str:
        parts = []
        for r, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            body = c.format()
            if r == 0:
                parts.append(body)
            else:
                power = 'λ' if r == 1 else f"λ^{r}"
                parts.append(f"{power}[{body}]")
        return ' + '.join(parts) if parts else '0'


def semiclassical_S(c: CharClassSeries) -> TwistClass:
    """lambda^1 coefficient

    Raises:
        OrderMismatchError: for a series of order 0
    """
    if c.order < 1:
        raise OrderMismatchError("the semiclassical limit needs order >= 1")
    return c[1]


def relative_class(c: CharClassSeries, c2: CharClassSeries) -> CharClassSeries:
    """c - c2, defined when both share mode, order and leading class

    Raises:
        ClassMismatchError: if modes or leading classes differ
        OrderMismatchError: if the orders differ
    """
    if c.mode != c2.mode:
        raise ClassMismatchError(f"cannot compare a {c.mode} class with a {c2.mode} class")
    if c.order != c2.order:
        raise OrderMismatchError(f"class series of order {c.order} and {c2.order}")
    if c[0] != c2[0]:
        raise ClassMismatchError(f"leading classes differ: {c[0]} != {c2[0]}")
    return CharClassSeries(tuple(a - b for a, b in zip(c.coeffs, c2.coeffs)), c.mode)


def first_order_relative_class(c: CharClassSeries, c2: CharClassSeries) -> TwistClass:
    """t0 = S(c - c2), the input of orbit_equivalent"""
    return semiclassical_S(relative_class(c, c2))


def phi_hat_symplectic(m: CohomModel, alpha: TwistClass, c1: Sequence) -> TwistClass:
    """alpha + u c1"""
    m.check_class(alpha)
    return alpha + TwistClass.from_u(m.check_lattice(c1))


def phi_hat_poisson(m: CohomModel, alpha: TwistClass, c1: Sequence) -> TwistClass:
    """alpha - u pi_* c1"""
    m.check_class(alpha)
    return alpha - TwistClass.from_u(_mat_vec(m.pi_star, m.check_lattice(c1)))


def phi_hat_zero_stratum(m: CohomModel, alpha: TwistClass, c1: Sequence, stratum: int) -> TwistClass:
    """Action on the stratum m of the zero-Poisson decomposition; stratum 0 is [0]

    Raises:
        ClassMismatchError: on a negative stratum or a nonzero class in stratum 0
    """
    m.check_class(alpha)
    v = m.check_lattice(c1)
    if stratum < 0:
        raise ClassMismatchError(f"negative stratum {stratum}")
    if stratum == 0:
        if not alpha.is_zero():
            raise ClassMismatchError(f"stratum 0 holds only the zero class, got {alpha}")
        return alpha
    return alpha - TwistClass.from_u(_mat_vec(m.pi_star, v))


def is_faithful(m: CohomModel, mode: str) -> bool:
    """Whether distinct Chern vectors act differently"""
    if mode == 'symplectic':
        return True
    if mode not in MODES:
        raise ClassMismatchError(f"unknown class mode {mode!r}")
    return m.b == 0 or _to_sympy(m.pi_star).rank() == m.b


def _orbit(start: OrbitPoint, act: Callable[[RatMatrix, OrbitPoint], OrbitPoint],
           gens: Sequence[RatMatrix], max_elements: int) -> List[OrbitPoint]:
    """Breadth-first orbit under the group generated by gens, cut at max_elements"""
    seen = {start}
    orbit = [start]
    queue = deque([start])
    while queue and len(orbit) < max_elements:
        point = queue.popleft()
        for g in gens:
            image = act(g, point)
            if image not in seen:
                seen.add(image)
                orbit.append(image)
                queue.append(image)
    if queue:
        debug_log('classes', 'orbit enumeration truncated', size=len(orbit), limit=max_elements)
    return orbit


def lattice_orbit(m: CohomModel, v: Vector, max_elements: int = 1000) -> List[Vector]:
    return _orbit(v, _mat_vec, m.generators(), max_elements)


def orbit_equivalent(m: CohomModel, t0: TwistClass, max_elements: int = 1000) -> bool:
    """Whether some automorphism moves t0 / u into the lattice

    A class with a rational part never qualifies.
    """
    m.check_class(t0)
    if any(t0.rational):
        return False
    for w in lattice_orbit(m, t0.u_part, max_elements):
        if _is_integral(w):
            debug_log('classes', 'orbit meets the lattice', t0=t0.format(), image=_format_vector(w))
            return True
    return False


def classes_related(m: CohomModel, c: TwistClass, c2: TwistClass, max_elements: int = 1000) -> bool:
    """Whether c - g c2 lies in u Z^b for some g in the automorphism group"""
    m.check_class(c)
    m.check_class(c2)
    for image in _orbit(c2, lambda g, a: a.transform(g), m.generators(), max_elements):
        difference = c - image
        if not any(difference.rational) and _is_integral(difference.u_part):
            return True
    return False


def integral_solution_exists(A: Sequence[Sequence], w: Vector) -> bool:
    """Whether A c = w has a solution c in Z^b, read off the Smith normal form"""
    if not any(a for row in A for a in row):
        return not any(w)
    denominator = math.lcm(*(Fraction(a).denominator for a in list(w) + [x for row in A for x in row]))
    M = _to_sympy([[Fraction(a) * denominator for a in row] for row in A])
    rhs = tuple(Fraction(x) * denominator for x in w)
    diagonal, s, _ = smith_normal_decomp(M, domain=ZZ)
    target = _mat_vec([[int(s[i, j]) for j in range(s.cols)] for i in range(s.rows)], rhs)
    for i, value in enumerate(target):
        d = int(diagonal[i, i]) if i < min(diagonal.shape) else 0
        if (d == 0 and value != 0) or (d != 0 and value % d != 0):
            return False
    return True


def poisson_def_extension_check(m: CohomModel, alpha: TwistClass) -> bool:
    """Whether pi_1 + alpha inherits extendability: alpha in u pi_*(Z^b)

    Raises:
        ClassMismatchError: if the model has no extendable base class
    """
    m.check_class(alpha)
    if not m.base_extendable:
        raise ClassMismatchError("model has no extendable base class")
    if any(alpha.rational):
        return False
    return integral_solution_exists(m.pi_star, alpha.u_part)


def constant_class_vector(B: Multivector) -> Vector:
    """Components B^ij, i < j, of a constant real bivector as a class vector"""
    if B.degree != 2:
        raise ClassMismatchError(f"expected a bivector, got degree {B.degree}")
    d = B.dim
    values = []
    for i in range(d):
        for j in range(i + 1, d):
            c = B.component((i, j))
            if not is_constant(c):
                raise NotConstantError(f"component ({i + 1}, {j + 1}) is not constant")
            re_part, im_part = fraction_parts(constant_term(c))
            if im_part:
                raise ClassMismatchError(f"component ({i + 1}, {j + 1}) is not real")
            values.append(re_part)
    return tuple(values)
