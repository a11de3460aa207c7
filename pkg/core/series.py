"""Truncated power series in the deformation parameter

TruncatedSeries holds the coefficients c_0..c_N of c_0 + lambda*c_1 + ...
over any coefficient algebra with + and - (polynomials, matrices,
multivectors). DiffOp and EquivalenceTransform model the formal series
T = id + sum_r lambda^r T_r of differential operators used to compare
star products.
"""

import operator
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import factorial
from typing import Any, Callable, List, Mapping, Optional, Sequence, Tuple, Union

from sympy.polys.rings import PolyRing

from core.coeffring import (
    MultiIndex, PolyFun, add_index, derive, format_poly, gaussian,
    index_binomial, index_order, sub_index, sub_indices, unit_index, variable_names,
    zero_index,
)
from core.errors import DimensionMismatchError, NotADerivationError, OrderMismatchError

LAMBDA = 'λ'


@dataclass(frozen=True)
class TruncatedSeries:
    """Formal series c_0 + lambda*c_1 + ... + lambda^N*c_N, exact mod lambda^(N+1)"""

    coeffs: Tuple[Any, ...]

    def __post_init__(self):
        object.__setattr__(self, 'coeffs', tuple(self.coeffs))
        if not self.coeffs:
            raise OrderMismatchError("a truncated series needs at least the order-0 coefficient")

    @classmethod
    def constant(cls, value, order: int, zero=None) -> 'TruncatedSeries':
        """value + 0*lambda + ... at the given order"""
        zero = value - value if zero is None else zero
        return cls((value,) + (zero,) * order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, r: int):
        return self.coeffs[r]

    def __iter__(self):
        return iter(self.coeffs)

    def _check_order(self, other: 'TruncatedSeries'):
        if self.order != other.order:
            raise OrderMismatchError(f"series of order {self.order} and {other.order}")

    def __add__(self, other: 'TruncatedSeries') -> 'TruncatedSeries':
        self._check_order(other)
        return TruncatedSeries(a + b for a, b in zip(self.coeffs, other.coeffs))

    def __sub__(self, other: 'TruncatedSeries') -> 'TruncatedSeries':
        self._check_order(other)
        return TruncatedSeries(a - b for a, b in zip(self.coeffs, other.coeffs))

    def __neg__(self) -> 'TruncatedSeries':
        return TruncatedSeries(-c for c in self.coeffs)

    def map(self, fn: Callable[[Any], Any]) -> 'TruncatedSeries':
        return TruncatedSeries(fn(c) for c in self.coeffs)

    def truncate(self, order: int) -> 'TruncatedSeries':
        if order > self.order:
            raise OrderMismatchError(f"cannot extend a series of order {self.order} to {order}")
        return TruncatedSeries(self.coeffs[:order + 1])

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def lowest_order(self) -> Optional[int]:
        """Index of the first nonzero coefficient, None for the zero series"""
        for r, c in enumerate(self.coeffs):
            if c:
                return r
        return None

    def format(self, fmt: Callable[[Any], str] = str) -> str:
        """Render as 'c0 + λ*(c1) + λ^2*(c2)', dropping zero higher terms"""
        parts = [fmt(self.coeffs[0])]
        for r, c in enumerate(self.coeffs[1:], start=1):
            if not c:
                continue
            power = LAMBDA if r == 1 else f"{LAMBDA}^{r}"
            parts.append(f"{power}*({fmt(c)})")
        return ' + '.join(parts)

    def __str__(self) -> str:
        return self.format()


def series_mul(a: TruncatedSeries, b: TruncatedSeries,
               mul: Callable[[Any, Any], Any] = operator.mul) -> TruncatedSeries:
    """Cauchy product truncated at the common order

    Args:
        a, b: Series of equal order
        mul: Bilinear product of coefficients (default: ``*``)
    """
    a._check_order(b)
    coeffs = []
    for k in range(a.order + 1):
        coeffs.append(reduce(operator.add, (mul(a[i], b[k - i]) for i in range(k + 1))))
    return TruncatedSeries(coeffs)


class DiffOp:
    """Linear differential operator f -> sum_alpha c_alpha * d^alpha f"""

    __slots__ = ('ring', 'terms')

    def __init__(self, R: PolyRing, terms: Optional[Mapping[MultiIndex, PolyFun]] = None):
        self.ring = R
        self.terms = {tuple(alpha): c for alpha, c in (terms or {}).items() if c}

    @property
    def dim(self) -> int:
        return self.ring.ngens

    @classmethod
    def zero(cls, R: PolyRing) -> 'DiffOp':
        return cls(R)

    @classmethod
    def identity(cls, R: PolyRing) -> 'DiffOp':
        return cls(R, {zero_index(R.ngens): R.one})

    @classmethod
    def multiplication(cls, f: PolyFun) -> 'DiffOp':
        return cls(f.ring, {zero_index(f.ring.ngens): f})

    @classmethod
    def from_vector_field(cls, R: PolyRing, components: Sequence[PolyFun]) -> 'DiffOp':
        """Derivation sum_i X^i d_i"""
        if len(components) != R.ngens:
            raise DimensionMismatchError(f"vector field has {len(components)} components on a {R.ngens}-chart")
        return cls(R, {unit_index(R.ngens, i): c for i, c in enumerate(components)})

    def __call__(self, f: PolyFun) -> PolyFun:
        result = self.ring.zero
        for alpha, c in self.terms.items():
            result += c * derive(f, alpha)
        return result

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, DiffOp) and self.dim == other.dim and self.terms == other.terms

    __hash__ = None

    def _check_dim(self, other: 'DiffOp'):
        if self.dim != other.dim:
            raise DimensionMismatchError(f"operators on charts of dimension {self.dim} and {other.dim}")

    def __add__(self, other: 'DiffOp') -> 'DiffOp':
        self._check_dim(other)
        terms = dict(self.terms)
        for alpha, c in other.terms.items():
            terms[alpha] = terms.get(alpha, self.ring.zero) + c
        return DiffOp(self.ring, terms)

    def __neg__(self) -> 'DiffOp':
        return DiffOp(self.ring, {alpha: -c for alpha, c in self.terms.items()})

    def __sub__(self, other: 'DiffOp') -> 'DiffOp':
        return self + (-other)

    def scale(self, factor) -> 'DiffOp':
        """Multiply every coefficient by a scalar or a polynomial"""
        if isinstance(factor, (int, Fraction, str)):
            factor = gaussian(factor)
        return DiffOp(self.ring, {alpha: c * factor for alpha, c in self.terms.items()})

    def compose(self, other: 'DiffOp') -> 'DiffOp':
        """self o other, expanded with the Leibniz rule"""
        self._check_dim(other)
        terms = {}
        for alpha, a in self.terms.items():
            for gamma in sub_indices(alpha):
                rest = sub_index(alpha, gamma)
                weight = index_binomial(alpha, gamma)
                for beta, b in other.terms.items():
                    db = derive(b, gamma)
                    if not db:
                        continue
                    key = add_index(rest, beta)
                    terms[key] = terms.get(key, self.ring.zero) + a * db * weight
        return DiffOp(self.ring, terms)

    __matmul__ = compose

    def order(self) -> int:
        """Highest derivative order, -1 for the zero operator"""
        return max((index_order(alpha) for alpha in self.terms), default=-1)

    def vector_field(self) -> Optional[List[PolyFun]]:
        """Components X^i if this operator is a derivation, else None"""
        if any(index_order(alpha) != 1 for alpha in self.terms):
            return None
        return [self.terms.get(unit_index(self.dim, i), self.ring.zero) for i in range(self.dim)]

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        if not self.terms:
            return '0'
        names = names or variable_names(self.dim)
        parts = []
        for alpha in sorted(self.terms, key=lambda a: (index_order(a), a)):
            derivs = '*'.join(f"d{n}^{k}" if k > 1 else f"d{n}" for n, k in zip(names, alpha) if k)
            coeff = f"({format_poly(self.terms[alpha], names)})"
            parts.append(f"{coeff}*{derivs}" if derivs else coeff)
        return ' + '.join(parts)

    def __repr__(self) -> str:
        return f"DiffOp({self.format()})"


# ----------------------------------------------------------------------
# Equivalence transformations
# ----------------------------------------------------------------------

def _compose_op_series(a: Sequence[DiffOp], b: Sequence[DiffOp]) -> List[DiffOp]:
    """Cauchy composition of operator series of equal length"""
    R = a[0].ring
    out = []
    for k in range(len(a)):
        total = DiffOp.zero(R)
        for r in range(k + 1):
            if a[r] and b[k - r]:
                total = total + a[r].compose(b[k - r])
        out.append(total)
    return out


@dataclass(frozen=True, eq=False)
class EquivalenceTransform:
    """T = id + sum_{r=1..N} lambda^r T_r acting on polynomial functions"""

    ring: PolyRing
    maps: Tuple[DiffOp, ...]

    def __post_init__(self):
        object.__setattr__(self, 'maps', tuple(self.maps))

    @classmethod
    def identity(cls, R: PolyRing, order: int) -> 'EquivalenceTransform':
        return cls(R, (DiffOp.zero(R),) * order)

    @property
    def order(self) -> int:
        return len(self.maps)

    @property
    def dim(self) -> int:
        return self.ring.ngens

    def component(self, r: int) -> DiffOp:
        return DiffOp.identity(self.ring) if r == 0 else self.maps[r - 1]

    def components(self) -> List[DiffOp]:
        return [self.component(r) for r in range(self.order + 1)]

    def __eq__(self, other) -> bool:
        return (isinstance(other, EquivalenceTransform) and self.dim == other.dim
                and self.maps == other.maps)

    __hash__ = None

    def is_identity(self) -> bool:
        return not any(self.maps)

    def truncate(self, order: int) -> 'EquivalenceTransform':
        if order > self.order:
            raise OrderMismatchError(f"cannot extend a transform of order {self.order} to {order}")
        return EquivalenceTransform(self.ring, self.maps[:order])

    def apply(self, F: Union[PolyFun, TruncatedSeries]) -> TruncatedSeries:
        """(T F)_k = sum_r T_r F_{k-r}"""
        if not isinstance(F, TruncatedSeries):
            F = TruncatedSeries.constant(F, self.order, self.ring.zero)
        if F.order != self.order:
            raise OrderMismatchError(f"transform of order {self.order} applied to a series of order {F.order}")
        coeffs = []
        for k in range(self.order + 1):
            total = self.ring.zero
            for r in range(k + 1):
                if r == 0:
                    total += F[k]
                elif self.maps[r - 1]:
                    total += self.maps[r - 1](F[k - r])
            coeffs.append(total)
        return TruncatedSeries(coeffs)

    def __call__(self, F):
        return self.apply(F)

    def compose(self, other: 'EquivalenceTransform') -> 'EquivalenceTransform':
        """self o other mod lambda^(N+1)"""
        if self.order != other.order:
            raise OrderMismatchError(f"transforms of order {self.order} and {other.order}")
        product = _compose_op_series(self.components(), other.components())
        return EquivalenceTransform(self.ring, product[1:])

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        parts = ['id']
        for r, op in enumerate(self.maps, start=1):
            if op:
                power = LAMBDA if r == 1 else f"{LAMBDA}^{r}"
                parts.append(f"{power}*({op.format(names)})")
        return ' + '.join(parts)


def invert_transform(T: EquivalenceTransform) -> EquivalenceTransform:
    """Inverse mod lambda^(N+1): U_k = -sum_{r=1..k} T_r o U_{k-r}"""
    R = T.ring
    inverse = [DiffOp.identity(R)]
    for k in range(1, T.order + 1):
        total = DiffOp.zero(R)
        for r in range(1, k + 1):
            if T.maps[r - 1] and inverse[k - r]:
                total = total + T.maps[r - 1].compose(inverse[k - r])
        inverse.append(-total)
    return EquivalenceTransform(R, inverse[1:])


def compose_transforms(T: EquivalenceTransform, S: EquivalenceTransform) -> EquivalenceTransform:
    return T.compose(S)


def transform_exp(R: PolyRing, generators: Sequence[DiffOp]) -> EquivalenceTransform:
    """exp(sum_r lambda^r D_r) for D_1..D_N"""
    order = len(generators)
    series = [DiffOp.zero(R)] + list(generators)
    power = [DiffOp.identity(R)] + [DiffOp.zero(R)] * order
    total = list(power)
    for m in range(1, order + 1):
        power = _compose_op_series(power, series)
        weight = Fraction(1, factorial(m))
        total = [t + p.scale(weight) for t, p in zip(total, power)]
    return EquivalenceTransform(R, total[1:])


def transform_log(T: EquivalenceTransform) -> List[DiffOp]:
    """Generators D_1..D_N with exp(sum lambda^r D_r) = T"""
    R = T.ring
    excess = [DiffOp.zero(R)] + list(T.maps)
    power = [DiffOp.identity(R)] + [DiffOp.zero(R)] * T.order
    total = [DiffOp.zero(R)] * (T.order + 1)
    for m in range(1, T.order + 1):
        power = _compose_op_series(power, excess)
        weight = Fraction((-1) ** (m + 1), m)
        total = [t + p.scale(weight) for t, p in zip(total, power)]
    return total[1:]


def derivation_generators(T: EquivalenceTransform) -> List[List[PolyFun]]:
    """Vector fields X_1..X_N with T = exp(sum lambda^r L_{X_r})

    Raises:
        NotADerivationError: if some generator is not a vector field
    """
    fields = []
    for r, gen in enumerate(transform_log(T), start=1):
        field = gen.vector_field()
        if field is None:
            raise NotADerivationError(f"generator at order {r} is not a derivation: {gen.format()}")
        fields.append(field)
    return fields


def lie_transform(R: PolyRing, fields: Sequence[Sequence[PolyFun]]) -> EquivalenceTransform:
    """exp(sum_r lambda^r L_{X_r}) from vector field components"""
    return transform_exp(R, [DiffOp.from_vector_field(R, X) for X in fields])
