"""Polynomial functions on an affine chart

Functions are sympy sparse polynomials over the Gaussian rationals QQ_I in
graded lexicographic order. The chart of dimension d always uses the ring
generators x1..xd; scenario files may alias them (x, y, z) through the
``names`` argument of the literal parser and printer.

Usage:
    from core.coeffring import function_ring, parse_poly, partial

    R = function_ring(2)
    p = parse_poly('3/2*x1^2*x2 + (0,1)*x1', R)
    partial(p, 1)   # 3*x1*x2 + I
"""

import itertools
import random
import re
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Dict, Hashable, Iterator, List, Optional, Sequence, Tuple, Union

import sympy
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, PolyRing, ring

from core.errors import DimensionMismatchError, LiteralSyntaxError, VariableIndexError

PolyFun = PolyElement
GaussianRational = type(QQ_I.one)
MultiIndex = Tuple[int, ...]
Scalar = Union[int, Fraction, str, tuple, GaussianRational]


def variable_names(dim: int) -> Tuple[str, ...]:
    """Canonical generator names x1..xd"""
    return tuple(f"x{i}" for i in range(1, dim + 1))


@lru_cache(maxsize=None)
def function_ring(dim: int) -> PolyRing:
    """Polynomial ring QQ_I[x1..xd] with grlex order

    Rings are cached, so two calls with the same dimension return the
    same ring and their elements can be mixed freely.
    """
    if dim < 1:
        raise DimensionMismatchError(f"chart dimension must be positive, got {dim}")
    return ring(variable_names(dim), QQ_I, grlex)[0]


def dim_of(p: PolyFun) -> int:
    return p.ring.ngens


# ----------------------------------------------------------------------
# Scalars
# ----------------------------------------------------------------------

def _rational(value):
    if QQ.of_type(value):
        return value
    if isinstance(value, str):
        value = Fraction(value.strip())
    else:
        value = Fraction(value)
    return QQ(value.numerator, value.denominator)


def gaussian(re_part: Scalar = 0, im_part: Scalar = 0) -> GaussianRational:
    """Build an exact Gaussian rational re + im*i

    Accepts ints, Fractions, strings like '3/2', a (re, im) tuple or an
    existing QQ_I element.
    """
    if isinstance(re_part, GaussianRational):
        return re_part + gaussian(im_part) * QQ_I(0, 1)
    if isinstance(re_part, tuple):
        return gaussian(*re_part)
    return QQ_I(_rational(re_part), _rational(im_part))


def fraction_parts(c: GaussianRational) -> Tuple[Fraction, Fraction]:
    """Real and imaginary parts as Fractions"""
    return (Fraction(int(c.x.numerator), int(c.x.denominator)),
            Fraction(int(c.y.numerator), int(c.y.denominator)))


def scalar_to_sympy(c: GaussianRational) -> sympy.Expr:
    return QQ_I.to_sympy(c)


def scalar_from_sympy(expr) -> GaussianRational:
    expr = sympy.nsimplify(expr)
    re_part, im_part = sympy.re(expr), sympy.im(expr)
    return QQ_I(QQ.from_sympy(sympy.Rational(re_part)), QQ.from_sympy(sympy.Rational(im_part)))


def format_scalar(c: GaussianRational) -> str:
    """'3/2' for real values, '(a,b)' for a + b*i"""
    re_part, im_part = fraction_parts(c)
    if im_part == 0:
        return str(re_part)
    return f"({re_part},{im_part})"


# ----------------------------------------------------------------------
# Multi-indices
# ----------------------------------------------------------------------

def zero_index(dim: int) -> MultiIndex:
    return (0,) * dim


def unit_index(dim: int, i: int) -> MultiIndex:
    """Multi-index of the first derivative along x_i (0-based i)"""
    return tuple(1 if k == i else 0 for k in range(dim))


def add_index(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def sub_index(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x - y for x, y in zip(a, b))


def index_order(a: MultiIndex) -> int:
    return sum(a)


def sub_indices(a: MultiIndex) -> Iterator[MultiIndex]:
    """All multi-indices b <= a componentwise"""
    return itertools.product(*(range(k + 1) for k in a))


def index_binomial(a: MultiIndex, b: MultiIndex) -> int:
    result = 1
    for x, y in zip(a, b):
        result *= comb(x, y)
    return result


def index_factorial(a: MultiIndex) -> int:
    result = 1
    for x in a:
        result *= factorial(x)
    return result


def index_multinomial(parts: Sequence[MultiIndex]) -> int:
    """Product over coordinates of (sum of parts)! / prod(part!)"""
    total = parts[0]
    for part in parts[1:]:
        total = add_index(total, part)
    result = index_factorial(total)
    for part in parts:
        result //= index_factorial(part)
    return result


def monomials_upto(dim: int, degree: int) -> List[MultiIndex]:
    """Exponent tuples of total degree <= degree, graded then lex"""
    result = [m for m in itertools.product(range(degree + 1), repeat=dim) if sum(m) <= degree]
    return sorted(result, key=lambda m: (sum(m), tuple(-k for k in m)))


# ----------------------------------------------------------------------
# Ring operations
# ----------------------------------------------------------------------

def _check_same_chart(p: PolyFun, q: PolyFun):
    if p.ring.ngens != q.ring.ngens:
        raise DimensionMismatchError(
            f"polynomials live on charts of dimension {p.ring.ngens} and {q.ring.ngens}")


def poly_add(p: PolyFun, q: PolyFun) -> PolyFun:
    _check_same_chart(p, q)
    return p + q


def poly_mul(p: PolyFun, q: PolyFun) -> PolyFun:
    _check_same_chart(p, q)
    return p * q


def constant(R: PolyRing, value: Scalar) -> PolyFun:
    return R.ground_new(gaussian(value))


def is_constant(p: PolyFun) -> bool:
    zero = zero_index(p.ring.ngens)
    return all(monom == zero for monom in p.keys())


def constant_term(p: PolyFun) -> GaussianRational:
    return p.get(zero_index(p.ring.ngens), QQ_I.zero)


def derive(p: PolyFun, alpha: MultiIndex) -> PolyFun:
    """Apply the derivative d^alpha to p"""
    if not any(alpha):
        return p
    terms = {}
    for monom, coeff in p.items():
        if any(m < a for m, a in zip(monom, alpha)):
            continue
        factor = 1
        for m, a in zip(monom, alpha):
            for j in range(a):
                factor *= m - j
        terms[sub_index(monom, alpha)] = coeff * factor
    return p.ring.from_dict(terms)


def partial(p: PolyFun, i: int) -> PolyFun:
    """Partial derivative along x_i, with i counted from 1"""
    dim = p.ring.ngens
    if not 1 <= i <= dim:
        raise VariableIndexError(f"variable index {i} outside 1..{dim}")
    return derive(p, unit_index(dim, i - 1))


def gradient(p: PolyFun) -> List[PolyFun]:
    return [derive(p, unit_index(p.ring.ngens, i)) for i in range(p.ring.ngens)]


def random_poly(R: PolyRing, rng: random.Random, degree: int, terms: int = 3) -> PolyFun:
    """Seeded random polynomial with small rational coefficients"""
    monomials = monomials_upto(R.ngens, degree)
    chosen = rng.sample(monomials, min(terms, len(monomials)))
    coeffs = {}
    for monom in chosen:
        coeffs[monom] = gaussian(Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 1, 2])))
    return R.from_dict(coeffs)


# ----------------------------------------------------------------------
# Exact linear algebra
# ----------------------------------------------------------------------

def _sympy_rational(q) -> sympy.Rational:
    return sympy.Rational(int(q.numerator), int(q.denominator))


def solve_linear(columns: Sequence[Dict[Hashable, GaussianRational]],
                 rhs: Dict[Hashable, GaussianRational],
                 real_unknowns: bool = False) -> Optional[List[GaussianRational]]:
    """Solve sum_j u_j * columns[j] = rhs exactly

    Each column maps an equation key to its coefficient. The system is
    split into real and imaginary rows and solved over QQ with sympy.
    Free parameters are set to zero. Returns None if inconsistent.
    """
    keys = sorted(set().union(rhs, *columns), key=repr)
    n = len(columns)
    if not keys:
        return [QQ_I.zero] * n
    rows, values = [], []
    for key in keys:
        re_row, im_row = [], []
        for col in columns:
            c = col.get(key, QQ_I.zero)
            re_row.append(_sympy_rational(c.x))
            im_row.append(_sympy_rational(c.y))
            if not real_unknowns:
                re_row.append(-_sympy_rational(c.y))
                im_row.append(_sympy_rational(c.x))
        target = rhs.get(key, QQ_I.zero)
        rows.extend([re_row, im_row])
        values.extend([_sympy_rational(target.x), _sympy_rational(target.y)])
    A = sympy.Matrix(rows)
    b = sympy.Matrix(values)
    try:
        solution, params = A.gauss_jordan_solve(b)
    except ValueError:
        return None
    if params.shape[0]:
        solution = solution.subs({p: 0 for p in params})
    flat = [QQ.from_sympy(sympy.Rational(v)) for v in solution]
    if real_unknowns:
        return [QQ_I(v, 0) for v in flat]
    return [QQ_I(flat[2 * j], flat[2 * j + 1]) for j in range(n)]


# ----------------------------------------------------------------------
# Literal syntax
# ----------------------------------------------------------------------

_TOKEN_RE = re.compile(r"(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S)")


def _tokenize(text: str, offset: int) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if match.group(1):
            tokens.append(('num', match.group(1), match.start(1) + offset + 1))
        elif match.group(2):
            tokens.append(('name', match.group(2), match.start(2) + offset + 1))
        elif match.group(3):
            char = match.group(3)
            if char not in '+-*/^(),':
                raise LiteralSyntaxError(f"unexpected character {char!r}", match.start(3) + offset + 1)
            tokens.append(('op', char, match.start(3) + offset + 1))
        pos = match.end()
    tokens.append(('end', '', len(text) + offset + 1))
    return tokens


class _PolyParser:
    """Recursive descent over + - * / ^ with (a,b) Gaussian literals"""

    def __init__(self, text: str, R: PolyRing, names: Optional[Sequence[str]], offset: int):
        self.R = R
        self.tokens = _tokenize(text, offset)
        self.pos = 0
        self.variables = {name: gen for name, gen in zip(variable_names(R.ngens), R.gens)}
        if names:
            self.variables.update({name: gen for name, gen in zip(names, R.gens)})

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, value: str):
        kind, text, col = self.take()
        if text != value or kind != 'op':
            raise LiteralSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", col)

    def parse(self) -> PolyFun:
        if self.peek()[0] == 'end':
            raise LiteralSyntaxError("empty polynomial literal", self.peek()[2])
        result = self.expr()
        kind, text, col = self.peek()
        if kind != 'end':
            raise LiteralSyntaxError(f"unexpected {text!r}", col)
        return result

    def expr(self) -> PolyFun:
        result = self.term()
        while self.peek()[1] in ('+', '-') and self.peek()[0] == 'op':
            op = self.take()[1]
            rhs = self.term()
            result = result + rhs if op == '+' else result - rhs
        return result

    def term(self) -> PolyFun:
        result = self.unary()
        while self.peek()[1] in ('*', '/') and self.peek()[0] == 'op':
            op, col = self.take()[1:]
            rhs = self.unary()
            if op == '*':
                result = result * rhs
            else:
                if not is_constant(rhs) or not rhs:
                    raise LiteralSyntaxError("division by a non-constant or zero", col)
                result = result * (QQ_I.one / constant_term(rhs))
        return result

    def unary(self) -> PolyFun:
        kind, text, _ = self.peek()
        if kind == 'op' and text in ('+', '-'):
            self.take()
            value = self.unary()
            return -value if text == '-' else value
        return self.power()

    def power(self) -> PolyFun:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == 'op' and text == '^':
            self.take()
            kind, exp_text, col = self.take()
            if kind != 'num':
                raise LiteralSyntaxError("exponent must be a non-negative integer", col)
            return base ** int(exp_text)
        return base

    def atom(self) -> PolyFun:
        kind, text, col = self.take()
        if kind == 'num':
            return self.R.ground_new(gaussian(int(text)))
        if kind == 'name':
            if text not in self.variables:
                raise LiteralSyntaxError(f"unknown variable {text!r}", col)
            return self.variables[text]
        if kind == 'op' and text == '(':
            first = self.expr()
            if self.peek()[1] == ',' and self.peek()[0] == 'op':
                _, _, comma_col = self.take()
                second = self.expr()
                self.expect(')')
                if not (is_constant(first) and is_constant(second)):
                    raise LiteralSyntaxError("Gaussian literal (a,b) needs constant parts", comma_col)
                return first + second * QQ_I(0, 1)
            self.expect(')')
            return first
        raise LiteralSyntaxError(f"unexpected {text or 'end of input'!r}", col)


def parse_poly(text: str, R: PolyRing, names: Optional[Sequence[str]] = None,
               offset: int = 0) -> PolyFun:
    """Parse a literal such as '3/2*x1^2*x2 + (0,1)*x3'

    Args:
        text: Literal text
        R: Target ring
        names: Optional aliases for x1..xd (e.g. ['x', 'y'])
        offset: Column offset of ``text`` inside a longer line

    Raises:
        LiteralSyntaxError: with the 1-based column of the offending token
    """
    return _PolyParser(text, R, names, offset).parse()


def _format_monomial(monom: MultiIndex, names: Sequence[str]) -> str:
    factors = []
    for name, exp in zip(names, monom):
        if exp == 1:
            factors.append(name)
        elif exp > 1:
            factors.append(f"{name}^{exp}")
    return '*'.join(factors)


def format_poly(p: PolyFun, names: Optional[Sequence[str]] = None) -> str:
    """Render p in the literal syntax, highest grlex term first"""
    if not p:
        return '0'
    names = names or variable_names(p.ring.ngens)
    pieces = []
    for monom, coeff in sorted(p.items(), key=lambda t: grlex(t[0]), reverse=True):
        mono = _format_monomial(monom, names)
        scalar = format_scalar(coeff)
        if not mono:
            piece = scalar
        elif scalar == '1':
            piece = mono
        elif scalar == '-1':
            piece = '-' + mono
        else:
            piece = f"{scalar}*{mono}"
        pieces.append(piece)
    out = pieces[0]
    for piece in pieces[1:]:
        out += f" - {piece[1:]}" if piece.startswith('-') else f" + {piece}"
    return out
