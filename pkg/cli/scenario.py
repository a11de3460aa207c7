"""Scenario files: line-oriented `key = value` descriptions of a run

    # flagship: trivial line bundle on the plane
    scenario = flagship
    vars = x, y
    order = 2
    pi = dx^dy
    star = moyal
    P0 = [[x, x], [1 - x, 1 - x]]
    checks = assoc, lift, fibred_bracket, connection, curvature_theorem

    model {
      b = 1
      pi_star = [[1]]
      autos = [[-1]]
    }
    orbit t0 = (1/2)u

See SCENARIO_FORMAT.md for the full grammar.
"""

import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

from sympy.polys.rings import PolyRing

from cli.checks import CHECKS
from core.classes import CohomModel, TwistClass, parse_twist_class
from core.coeffring import PolyFun, function_ring, parse_poly, variable_names
from core.debug_logger import debug_log
from core.errors import LiteralSyntaxError, ScenarioError, WorkbenchError
from core.matdef import MatPoly, is_idempotent
from core.poisson import Multivector, is_poisson, parse_multivector
from core.star import KONTSEVICH_MAX_ORDER, BidiffOp, StarProduct, kontsevich2, moyal

STAR_KINDS = ('moyal', 'kontsevich2', 'explicit')

_KEY_RE = re.compile(r"^(orbit\s+t0|[A-Za-z_][A-Za-z_0-9]*)\s*$")
_OP_TERM_RE = re.compile(r"^(?P<coef>.*?)@\s*\((?P<a>[\d,\s]*)\)\s*\((?P<b>[\d,\s]*)\)\s*$")
_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z_0-9]*$")

SCENARIO_KEYS = ('scenario', 'vars', 'dim', 'order', 'pi', 'pi1', 'rho', 'star', 'P0', 'gauge', 'checks')
MODEL_KEYS = ('b', 'lattice', 'pi_star', 'autos', 'extendable')


@dataclass(frozen=True)
class Located:
    """A raw value with its position in the file"""

    text: str
    line: int
    column: int  # 1-based column of text[0]


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    dim: int
    names: Tuple[str, ...]
    order: int
    pi: Optional[Multivector] = None
    pi1: Optional[Multivector] = None
    rho: Optional[Multivector] = None
    star_kind: str = 'moyal'
    explicit_ops: Tuple[BidiffOp, ...] = ()
    P0: Optional[MatPoly] = None
    gauge: Optional[Tuple[PolyFun, ...]] = None
    model: Optional[CohomModel] = None
    orbit_queries: Tuple[Tuple[str, TwistClass], ...] = ()
    checks: Optional[Tuple[str, ...]] = None

    @property
    def ring(self) -> Optional[PolyRing]:
        return function_ring(self.dim) if self.dim else None

    def build_star(self) -> StarProduct:
        """The scenario's star product at its truncation order

        Raises:
            ScenarioError: if the scenario has no bivector
        """
        if self.pi is None:
            raise ScenarioError(f"scenario {self.name!r} has no pi")
        if self.star_kind == 'moyal':
            return moyal(self.pi, self.order)
        if self.star_kind == 'kontsevich2':
            return kontsevich2(self.pi, self.order)
        R = self.ring
        ops = [BidiffOp.pointwise(R)] + list(self.explicit_ops[:self.order])
        ops += [BidiffOp.zero(R)] * (self.order + 1 - len(ops))
        return StarProduct(R, ops, self.pi, 'explicit')

    def with_order(self, order: int, max_order: int) -> 'Scenario':
        """Copy at another truncation order, revalidated"""
        _check_order(order, self.star_kind, max_order, Located(str(order), 0, 0))
        return replace(self, order=order)


# ----------------------------------------------------------------------
# Literal helpers
# ----------------------------------------------------------------------

def _error(message: str, where: Located, column: Optional[int] = None) -> ScenarioError:
    return ScenarioError(message, where.line, column if column is not None else where.column)


def _split_top(text: str, separator: str = ',') -> List[Tuple[str, int]]:
    """Split at separators outside brackets and parentheses; pieces keep their start offset"""
    pieces = []
    depth = 0
    start = 0
    for i, char in enumerate(text):
        if char in '([{':
            depth += 1
        elif char in ')]}':
            depth -= 1
        elif char == separator and depth == 0:
            pieces.append((text[start:i], start))
            start = i + 1
    pieces.append((text[start:], start))
    return pieces


def _strip_located(text: str, offset: int) -> Tuple[str, int]:
    stripped = text.lstrip()
    return stripped.rstrip(), offset + len(text) - len(stripped)


def _bracketed(text: str, offset: int, where: Located) -> Tuple[str, int]:
    body, offset = _strip_located(text, offset)
    if not (body.startswith('[') and body.endswith(']')):
        raise _error("expected a bracketed list", where, where.column + offset)
    return body[1:-1], offset + 1


def _parse_matrix(where: Located, entry: Callable[[str, int], object]) -> List[List[object]]:
    """[[a, b], [c, d]]; entry(text, column_offset) parses one entry"""
    inner, offset = _bracketed(where.text, 0, where)
    rows = []
    for row_text, row_start in _split_top(inner):
        row_inner, row_offset = _bracketed(row_text, offset + row_start, where)
        row = []
        for cell, cell_start in _split_top(row_inner):
            cell_text, cell_offset = _strip_located(cell, row_offset + cell_start)
            if not cell_text:
                raise _error("empty matrix entry", where, where.column + cell_offset)
            row.append(entry(cell_text, cell_offset))
        rows.append(row)
    if any(len(row) != len(rows[0]) for row in rows):
        raise _error("matrix rows of different lengths", where)
    return rows


def _rational(text: str, where: Located, column: int) -> Fraction:
    try:
        return Fraction(text.replace(' ', ''))
    except (ValueError, ZeroDivisionError):
        raise _error(f"expected a rational number, got {text!r}", where, column)


def _literal(where: Located, parse: Callable[[str, int], object]):
    """Run a literal parser and move its column into the file"""
    try:
        return parse(where.text, where.column - 1)
    except LiteralSyntaxError as e:
        raise ScenarioError(e.reason, where.line, e.column)


def _parse_bivector(where: Located, R: PolyRing, names: Sequence[str]) -> Multivector:
    pi = _literal(where, lambda text, offset: parse_multivector(text, R, names, offset))
    if pi.degree != 2:
        raise _error(f"expected a bivector, got a {pi.degree}-vector", where)
    return pi


def _multi_index(text: str, R: PolyRing, where: Located, column: int) -> Tuple[int, ...]:
    try:
        index = tuple(int(v) for v in text.strip().lstrip('(').rstrip(')').split(','))
    except ValueError:
        raise _error("bad multi-index", where, column)
    if len(index) != R.ngens or any(v < 0 for v in index):
        raise _error(f"multi-indices must have {R.ngens} non-negative entries", where, column)
    return index


def _parse_operator(where: Located, R: PolyRing, names: Sequence[str]) -> BidiffOp:
    """Sum of coefficient @ (left)(right) terms, in either spelling

        C1 = 1/2 @ (1,0)(0,1) ; -1/2 @ (0,1)(1,0)
        C1 = [(1/2, (1,0), (0,1)), (-1/2, (0,1), (1,0))]
    """
    if where.text.startswith('['):
        return _parse_operator_list(where, R, names)
    triples = []
    for term, start in _split_top(where.text, ';'):
        match = _OP_TERM_RE.match(term)
        if not match:
            raise _error("expected `coefficient @ (left)(right)`", where, where.column + start)
        coef_text, coef_offset = _strip_located(match.group('coef'), start)
        coef = _literal(Located(coef_text, where.line, where.column + coef_offset),
                        lambda text, offset: parse_poly(text, R, names, offset))
        a = _multi_index(match.group('a'), R, where, where.column + start)
        b = _multi_index(match.group('b'), R, where, where.column + start)
        triples.append((coef, a, b))
    return BidiffOp.from_terms(R, triples)


def _parse_operator_list(where: Located, R: PolyRing, names: Sequence[str]) -> BidiffOp:
    inner, offset = _bracketed(where.text, 0, where)
    triples = []
    for item, start in _split_top(inner):
        text, item_offset = _strip_located(item, offset + start)
        column = where.column + item_offset
        if not (text.startswith('(') and text.endswith(')')):
            raise _error("expected `(coefficient, (left), (right))`", where, column)
        parts = _split_top(text[1:-1])
        if len(parts) != 3:
            raise _error("expected `(coefficient, (left), (right))`", where, column)
        coef_text, coef_offset = _strip_located(parts[0][0], item_offset + 1)
        coef = _literal(Located(coef_text, where.line, where.column + coef_offset),
                        lambda t, o: parse_poly(t, R, names, o))
        triples.append((coef, _multi_index(parts[1][0], R, where, column),
                        _multi_index(parts[2][0], R, where, column)))
    return BidiffOp.from_terms(R, triples)


def _check_order(order: int, star_kind: str, max_order: int, where: Located):
    if order < 0 or order > max_order:
        raise _error(f"order must lie in 0..{max_order}, got {order}", where)
    if star_kind == 'kontsevich2' and order > KONTSEVICH_MAX_ORDER:
        raise _error(f"kontsevich2 is built up to order {KONTSEVICH_MAX_ORDER}", where)


# ----------------------------------------------------------------------
# Lines and blocks
# ----------------------------------------------------------------------

def _split_assignment(text: str, line: int, column: int) -> Tuple[str, Located]:
    if '=' not in text:
        raise ScenarioError("expected `key = value`", line, column)
    key_text, value = text.split('=', 1)
    if not _KEY_RE.match(key_text.strip()):
        raise ScenarioError(f"bad key {key_text.strip()!r}", line, column)
    key = re.sub(r"\s+", ' ', key_text.strip())
    value_text, value_offset = _strip_located(value, len(key_text) + 1)
    if not value_text:
        raise ScenarioError(f"missing value for {key!r}", line, column + len(key_text) + 1)
    return key, Located(value_text, line, column + value_offset)


def _read_entries(text: str) -> Tuple[List[Tuple[str, Located]], List[Tuple[str, Located]]]:
    """Top-level entries and model entries, in file order"""
    entries: List[Tuple[str, Located]] = []
    model: List[Tuple[str, Located]] = []
    in_model: Optional[int] = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].rstrip()
        body, offset = _strip_located(line, 0)
        if not body:
            continue
        column = offset + 1
        if in_model is None and re.match(r"^model\s*\{", body):
            in_model = number
            brace = line.index('{')
            body, offset = _strip_located(line[brace + 1:], brace + 1)
            column = offset + 1
            if not body:
                continue
        if in_model is not None:
            closing = body.endswith('}')
            if closing:
                body = body[:-1].rstrip()
            for piece, start in _split_top(body):
                piece_text, piece_offset = _strip_located(piece, start)
                if piece_text:
                    model.append(_split_assignment(piece_text, number, column + piece_offset))
            if closing:
                in_model = None
            continue
        entries.append(_split_assignment(body, number, column))
    if in_model is not None:
        raise ScenarioError("model block is not closed", in_model, 1)
    return entries, model


def _parse_model(entries: List[Tuple[str, Located]]) -> CohomModel:
    values = {}
    for key, where in entries:
        if key not in MODEL_KEYS:
            raise _error(f"unknown model key {key!r}", where)
        values[key] = where
    if 'b' not in values:
        raise ScenarioError("model needs b", entries[0][1].line if entries else 0, 1)
    where_b = values['b']
    try:
        b = int(where_b.text)
    except ValueError:
        raise _error("b must be an integer", where_b)
    if 'lattice' in values and values['lattice'].text != 'Z':
        raise _error("only the lattice Z is supported", values['lattice'])
    pi_star = None
    if 'pi_star' in values:
        where = values['pi_star']
        pi_star = _parse_matrix(where, lambda text, offset: _rational(text, where, where.column + offset))
    autos = []
    if 'autos' in values:
        where = values['autos']
        for piece, start in _split_top(where.text, ';'):
            piece_text, piece_offset = _strip_located(piece, start)
            sub = Located(piece_text, where.line, where.column + piece_offset)
            autos.append(_parse_matrix(sub, lambda text, offset: _rational(text, sub, sub.column + offset)))
    extendable = True
    if 'extendable' in values:
        flag = values['extendable'].text.lower()
        if flag not in ('true', 'false'):
            raise _error("extendable must be true or false", values['extendable'])
        extendable = flag == 'true'
    try:
        return CohomModel.create(b, pi_star, autos, extendable)
    except WorkbenchError as e:
        raise _error(str(e), where_b)


def parse_scenario(text: str, default_order: int = 2, max_order: int = 4,
                   default_name: str = 'scenario') -> Scenario:
    """Parse and validate a scenario

    Raises:
        ScenarioError: with the line and column of the offending value
    """
    entries, model_entries = _read_entries(text)
    values = {}
    orbit_entries = []
    for key, where in entries:
        if key == 'orbit t0':
            orbit_entries.append(where)
            continue
        if key not in SCENARIO_KEYS and not re.match(r"^C[1-9]\d*$", key):
            raise _error(f"unknown key {key!r}", where)
        if key in values:
            raise _error(f"duplicate key {key!r}", where)
        values[key] = where

    name = values['scenario'].text if 'scenario' in values else default_name
    names: Tuple[str, ...] = ()
    dim = 0
    if 'vars' in values:
        where = values['vars']
        names = tuple(n.strip() for n in where.text.split(','))
        if not all(_IDENT_RE.match(n) for n in names) or len(set(names)) != len(names):
            raise _error("vars must be distinct identifiers", where)
        dim = len(names)
    if 'dim' in values:
        where = values['dim']
        try:
            declared = int(where.text)
        except ValueError:
            raise _error("dim must be an integer", where)
        if declared < 1:
            raise _error("dim must be positive", where)
        if names and declared != len(names):
            raise _error(f"dim = {declared} but {len(names)} vars", where)
        dim = declared
    if not names and dim:
        names = variable_names(dim)

    star_kind = 'moyal'
    if 'star' in values:
        star_kind = values['star'].text
        if star_kind not in STAR_KINDS:
            raise _error(f"unknown star product {star_kind!r}", values['star'])
    order = default_order
    if 'order' in values:
        try:
            order = int(values['order'].text)
        except ValueError:
            raise _error("order must be an integer", values['order'])
    _check_order(order, star_kind, max_order, values.get('order', Located('', 0, 0)))

    needs_chart = [k for k in ('pi', 'pi1', 'rho', 'P0', 'gauge') if k in values]
    if needs_chart and not dim:
        raise _error("vars or dim must be given", values[needs_chart[0]])
    R = function_ring(dim) if dim else None

    def bivector(key):
        return _parse_bivector(values[key], R, names) if key in values else None

    pi, pi1, rho = bivector('pi'), bivector('pi1'), bivector('rho')
    if pi is not None:
        if star_kind == 'kontsevich2' and not is_poisson(pi):
            raise _error("pi is not Poisson: [pi, pi] != 0", values['pi'])
        if star_kind == 'moyal' and not pi.is_constant():
            raise _error("moyal needs a constant pi", values['pi'])

    explicit_ops = []
    for r in range(1, order + 1):
        key = f"C{r}"
        if key in values:
            if star_kind != 'explicit':
                raise _error(f"{key} is only allowed with star = explicit", values[key])
            explicit_ops.append(_parse_operator(values[key], R, names))
        else:
            explicit_ops.append(BidiffOp.zero(R) if R is not None else None)
    extra = [k for k in values if re.match(r"^C\d+$", k) and int(k[1:]) > order]
    if extra:
        raise _error(f"{extra[0]} exceeds order {order}", values[extra[0]])

    P0 = None
    if 'P0' in values:
        where = values['P0']
        rows = _parse_matrix(where, lambda text, offset: _literal(
            Located(text, where.line, where.column + offset),
            lambda t, o: parse_poly(t, R, names, o)))
        P0 = MatPoly(R, rows)
        if P0.shape[0] != P0.shape[1]:
            raise _error(f"P0 must be square, got {P0.shape[0]} x {P0.shape[1]}", where)
        if not is_idempotent(P0):
            raise _error("P0 is not idempotent: P0 P0 != P0", where)

    gauge = None
    if 'gauge' in values:
        where = values['gauge']
        inner, offset = _bracketed(where.text, 0, where)
        comps = []
        for cell, start in _split_top(inner):
            cell_text, cell_offset = _strip_located(cell, offset + start)
            comps.append(_literal(Located(cell_text, where.line, where.column + cell_offset),
                                  lambda t, o: parse_poly(t, R, names, o)))
        if len(comps) != dim:
            raise _error(f"gauge field needs {dim} components", where)
        gauge = tuple(comps)

    checks: Optional[Tuple[str, ...]] = None
    if 'checks' in values:
        where = values['checks']
        text, offset = where.text, 0
        if text.startswith('['):
            text, offset = _bracketed(text, 0, where)
        found = []
        for piece, start in _split_top(text) if text.strip() else ():
            check, check_offset = _strip_located(piece, offset + start)
            if check not in CHECKS:
                raise _error(f"unknown check {check!r}", where, where.column + check_offset)
            found.append(check)
        checks = tuple(found)

    model = _parse_model(model_entries) if model_entries else None
    queries = []
    for where in orbit_entries:
        if model is None:
            raise _error("orbit query without a model", where)
        queries.append((where.text, _literal(where, lambda t, o: parse_twist_class(t, model.b, o))))

    scenario = Scenario(
        name=name, dim=dim, names=names, order=order, pi=pi, pi1=pi1, rho=rho,
        star_kind=star_kind,
        explicit_ops=tuple(op for op in explicit_ops if op is not None),
        P0=P0, gauge=gauge, model=model, orbit_queries=tuple(queries), checks=checks,
    )
    debug_log('scenario', 'Scenario parsed', name=name, dim=dim, order=order, star=star_kind,
              checks=list(checks) if checks is not None else "all", has_model=model is not None)
    return scenario
