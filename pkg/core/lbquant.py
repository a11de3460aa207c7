"""Bimodule quantization of a line bundle given by a rank-1 projection

Sections are columns s with P0 s = s. With the lifted idempotent qP the
two actions are

    s . f  = J^-1(J(s) * f)            right action of the base product
    f .' s = J^-1(I(f P0) * J(s))      left action of the center product

The center product is brought to unit 1 and to the same first order term
as the base product by an equivalence T', and the left action is twisted
accordingly, f ." s = (T'f) .' s. The semiclassical limit of the bimodule
is the contravariant connection

    R(s, f) = [lambda^1](s . f) - [lambda^1](f ." s)

whose curvature is compared with tau(base, center).
"""

import random
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Union

from sympy.polys.rings import PolyRing

from core.coeffring import PolyFun, format_poly, random_poly
from core.debug_logger import debug_log, debug_timer_end, debug_timer_start
from core.errors import (
    CurvatureNotScalarError, OrderMismatchError, RankError,
)
from core.matdef import (
    LiftedIdempotent, MatPoly, center_star, function_times_matrix, i_map, j_inverse, j_map,
    lift_idempotent, matrix_bracket, matrix_star, projection_rank, random_section,
)
from core.poisson import Multivector, OneForm, d_pi, is_poisson, koszul, poisson_bracket
from core.series import EquivalenceTransform, TruncatedSeries
from core.star import (
    StarProduct, as_series, bracket_of, normalize_first_order, normalize_unit, star_mul, tau,
)

# tau(f, g) s = CURVATURE_SIGN * Theta_R(df, dg) s
# The lambda^2 terms of the three module relations give
# tau(f, g) s = R(R(s, f), g) - R(R(s, g), f) - R(s, {f, g}) = -Theta_R(df, dg) s.
# On the trivial bundle (n = 1, P0 = 1, R(s, f) = {s, f}) the right side reduces to the
# Jacobi identity, and both sides vanish.
CURVATURE_SIGN = -1

SectionLike = Union[MatPoly, TruncatedSeries]
FunctionLike = Union[PolyFun, TruncatedSeries]


def _check_rank_one(P0: MatPoly):
    if projection_rank(P0) != 1:
        raise RankError(f"line bundle needs a rank-1 projection, trace = {format_poly(P0.trace())}")


@dataclass(frozen=True, eq=False)
class QuantizedLineBundle:
    """Sections of a rank-1 projection with the two deformed module actions"""

    lifted: LiftedIdempotent
    base_star: StarProduct
    base_transform: EquivalenceTransform
    center_star: StarProduct
    center_transform: EquivalenceTransform
    raw_center: StarProduct
    unit: TruncatedSeries

    @property
    def order(self) -> int:
        return self.lifted.order

    @property
    def ring(self) -> PolyRing:
        return self.lifted.ring

    @property
    def P0(self) -> MatPoly:
        return self.lifted.P0

    def sections(self) -> List[MatPoly]:
        """Spanning set P0 e_i"""
        return [self.P0 @ MatPoly.basis_column(self.ring, self.lifted.n, i) for i in range(self.lifted.n)]

    def right_action(self, s: SectionLike, f: FunctionLike) -> TruncatedSeries:
        """s . f = J^-1(J(s) * S f), S the normalizing transform of the base product"""
        F = self.base_transform.apply(as_series(f, self.order, self.ring))
        product = matrix_star(self.lifted.star, j_map(self.lifted, s), F.map(MatPoly.scalar))
        return j_inverse(self.lifted, product)

    def left_action(self, f: FunctionLike, s: SectionLike) -> TruncatedSeries:
        """f ." s = J^-1(I(T'f P0) * J(s))"""
        F = self.center_transform.apply(as_series(f, self.order, self.ring))
        image = i_map(self.lifted, function_times_matrix(F, self.P0))
        return j_inverse(self.lifted, matrix_star(self.lifted.star, image, j_map(self.lifted, s)))

    def truncate(self, order: int) -> 'QuantizedLineBundle':
        if order > self.order:
            raise OrderMismatchError(f"cannot extend a bundle of order {self.order} to {order}")
        lifted = LiftedIdempotent(self.lifted.P0, self.lifted.qP.truncate(order), self.lifted.star.truncate(order))
        return QuantizedLineBundle(
            lifted=lifted,
            base_star=self.base_star.truncate(order),
            base_transform=self.base_transform.truncate(order),
            center_star=self.center_star.truncate(order),
            center_transform=self.center_transform.truncate(order),
            raw_center=self.raw_center.truncate(order),
            unit=self.unit.truncate(order),
        )


def quantize_line_bundle(L: LiftedIdempotent, s: Optional[StarProduct] = None,
                         rng: Optional[random.Random] = None) -> QuantizedLineBundle:
    """Build both actions and the normalized center product

    Raises:
        RankError: if trace(P0) != 1
    """
    _check_rank_one(L.P0)
    if s is not None and s is not L.star:
        L = LiftedIdempotent(L.P0, L.qP, s)
    start = debug_timer_start('performance', 'quantize_line_bundle')
    base, base_transform = normalize_first_order(L.star)
    raw_center, unit = center_star(L, rng=rng)
    unit_normalized, unit_transform = normalize_unit(raw_center, unit)
    center, first_order_transform = normalize_first_order(unit_normalized)
    bundle = QuantizedLineBundle(
        lifted=L,
        base_star=base,
        base_transform=base_transform,
        center_star=center,
        center_transform=unit_transform.compose(first_order_transform),
        raw_center=raw_center,
        unit=unit,
    )
    debug_log('bundle', 'line bundle quantized', order=L.order,
              unit=unit.format(format_poly), twisted=not bundle.center_transform.is_identity())
    debug_timer_end('performance', 'quantize_line_bundle', start)
    return bundle


# ----------------------------------------------------------------------
# Contravariant connections
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ContravariantConnection:
    """D(s, f) = D_{df} s, evaluated lazily from its defining data"""

    P0: MatPoly
    pi: Multivector
    evaluate: Callable[[MatPoly, PolyFun], MatPoly]
    label: str = ''

    def __call__(self, s: MatPoly, f: PolyFun) -> MatPoly:
        return self.evaluate(s, f)

    def along(self, alpha: OneForm, s: MatPoly) -> MatPoly:
        """D_alpha s = sum_k alpha_k D(s, x_k)"""
        R = self.P0.ring
        total = MatPoly.zero(R, self.P0.n, 1)
        for k, a in enumerate(alpha.components):
            if a:
                total = total + self.evaluate(s, R.gens[k]).scale(a)
        return total


def adapted_connection(P0: MatPoly, pi: Multivector) -> ContravariantConnection:
    """D(s, f) = P0 {s, f}, the connection P0 d along Hamiltonian fields

    Raises:
        RankError: if trace(P0) != 1
    """
    _check_rank_one(P0)

    def evaluate(s: MatPoly, f: PolyFun) -> MatPoly:
        return P0 @ matrix_bracket(pi, s, MatPoly.scalar(f))

    return ContravariantConnection(P0, pi, evaluate, 'adapted')


def extract_connection(Q: QuantizedLineBundle) -> ContravariantConnection:
    """R(s, f) = R_1(s, f) - R_1'(f, s) from the first order of both actions"""
    if Q.order < 1:
        raise OrderMismatchError("the connection needs a bundle of order >= 1")
    first = Q.truncate(1)

    def evaluate(s: MatPoly, f: PolyFun) -> MatPoly:
        return first.right_action(s, f)[1] - first.left_action(f, s)[1]

    return ContravariantConnection(Q.P0, bracket_of(Q.base_star), evaluate, 'extracted')


def curvature(D: ContravariantConnection, alpha: OneForm, beta: OneForm, s: MatPoly) -> MatPoly:
    """Theta(alpha, beta) s = D_a D_b s - D_b D_a s + D_[a,b] s with the Koszul bracket"""
    return (D.along(alpha, D.along(beta, s))
            - D.along(beta, D.along(alpha, s))
            + D.along(koszul(D.pi, alpha, beta), s))


@dataclass
class ConnectionReport:
    checked: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def connection_axioms_check(D: ContravariantConnection, rng: random.Random, samples: int = 5,
                            degree: int = 3) -> ConnectionReport:
    """Both Leibniz rules and P0 D = D on the section spanning set"""
    R = D.P0.ring
    n = D.P0.n
    sections = [D.P0 @ MatPoly.basis_column(R, n, i) for i in range(n)]
    report = ConnectionReport()
    for index in range(samples):
        f = random_poly(R, rng, degree)
        g = random_poly(R, rng, degree)
        for k, s in enumerate(sections):
            Dsf, Dsg = D(s, f), D(s, g)
            if D(s, f * g) != Dsf.scale(g) + Dsg.scale(f):
                report.failures.append(f"sample {index}, section {k}: D(s, fg) != D(s,f)g + D(s,g)f")
            if D(s.scale(f), g) != Dsg.scale(f) + s.scale(poisson_bracket(D.pi, f, g)):
                report.failures.append(f"sample {index}, section {k}: D(sf, g) != D(s,g)f + s{{f,g}}")
            if D.P0 @ Dsf != Dsf:
                report.failures.append(f"sample {index}, section {k}: D(s, f) is not a section")
            report.checked += 1
    debug_log('connection', 'axioms checked', label=D.label, checked=report.checked, failures=len(report.failures))
    return report


def connections_agree(D1: ContravariantConnection, D2: ContravariantConnection, rng: random.Random,
                      samples: int = 5, degree: int = 3) -> List[str]:
    """Differences between two connections on the spanning set and random functions"""
    R = D1.P0.ring
    n = D1.P0.n
    sections = [D1.P0 @ MatPoly.basis_column(R, n, i) for i in range(n)]
    functions = list(R.gens) + [random_poly(R, rng, degree) for _ in range(samples)]
    differences = []
    for k, s in enumerate(sections):
        for f in functions:
            if D1(s, f) != D2(s, f):
                differences.append(f"section {k}, f = {format_poly(f)}: "
                                   f"{D1(s, f).format()} != {D2(s, f).format()}")
    return differences


@dataclass
class CurvatureReport:
    """tau(f, g) s against CURVATURE_SIGN * Theta_R(df, dg) s on coordinate pairs"""

    tau: Multivector
    tau_closed: bool
    checked: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.tau_closed and not self.failures


def curvature_theorem_check(Q: QuantizedLineBundle) -> CurvatureReport:
    start = debug_timer_start('performance', 'curvature_theorem_check')
    pi = bracket_of(Q.base_star)
    t = tau(Q.base_star, Q.center_star)
    closed = not d_pi(pi, t) if is_poisson(pi) else False
    D = extract_connection(Q)
    R = Q.ring
    report = CurvatureReport(tau=t, tau_closed=closed)
    for i in range(R.ngens):
        for j in range(i + 1, R.ngens):
            dxi, dxj = OneForm.coordinate(R, i), OneForm.coordinate(R, j)
            for k, s in enumerate(Q.sections()):
                lhs = s.scale(t.component((i, j)))
                rhs = curvature(D, dxi, dxj, s).scale(CURVATURE_SIGN)
                if lhs != rhs:
                    report.failures.append(f"(x{i + 1}, x{j + 1}), section {k}: tau s = {lhs.format()}, "
                                           f"sign*Theta s = {rhs.format()}")
                report.checked += 1
    debug_log('connection', 'curvature theorem checked', checked=report.checked,
              failures=len(report.failures), tau=t.format())
    debug_timer_end('performance', 'curvature_theorem_check', start)
    return report


def poisson_chern_representative(D: ContravariantConnection, pi: Optional[Multivector] = None) -> Multivector:
    """Bivector theta with Theta_D(dx_i, dx_j) s = theta^ij s

    Raises:
        CurvatureNotScalarError: if the curvature is not a multiple of P0
    """
    pi = pi if pi is not None else D.pi
    R = D.P0.ring
    n = D.P0.n
    sections = [D.P0 @ MatPoly.basis_column(R, n, k) for k in range(n)]
    comps = {}
    for i in range(R.ngens):
        for j in range(i + 1, R.ngens):
            dxi, dxj = OneForm.coordinate(R, i), OneForm.coordinate(R, j)
            columns = [curvature(D, dxi, dxj, s).col(0) for s in sections]
            M = MatPoly(R, [[columns[k][row] for k in range(n)] for row in range(n)])
            theta = M.trace()
            if M != D.P0.scale(theta):
                raise CurvatureNotScalarError(f"curvature on (x{i + 1}, x{j + 1}) is not a multiple of P0")
            comps[(i, j)] = theta
    return Multivector(R, 2, comps)


# ----------------------------------------------------------------------
# Bimodule relations
# ----------------------------------------------------------------------

@dataclass
class BimoduleReport:
    checked: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def bimodule_relations_check(Q: QuantizedLineBundle, rng: random.Random, samples: int = 2,
                             degree: int = 2) -> BimoduleReport:
    """(f*"g) ." s = f ." (g ." s), s . (f*g) = (s . f) . g, (f ." s) . g = f ." (s . g)"""
    report = BimoduleReport()
    R = Q.ring
    for index in range(samples):
        f = random_poly(R, rng, degree)
        g = random_poly(R, rng, degree)
        s = random_section(Q.lifted, rng, degree)
        if Q.left_action(star_mul(Q.center_star, f, g), s) != Q.left_action(f, Q.left_action(g, s)):
            report.failures.append(f"sample {index}: left module relation fails")
        if Q.right_action(s, star_mul(Q.base_star, f, g)) != Q.right_action(Q.right_action(s, f), g):
            report.failures.append(f"sample {index}: right module relation fails")
        if Q.right_action(Q.left_action(f, s), g) != Q.left_action(f, Q.right_action(s, g)):
            report.failures.append(f"sample {index}: bimodule compatibility fails")
        if Q.left_action(R.one, s) != Q.right_action(s, R.one):
            report.failures.append(f"sample {index}: 1 does not act as the identity")
        report.checked += 1
    debug_log('bundle', 'bimodule relations checked', samples=samples, failures=len(report.failures))
    return report


def trivial_bundle_check(s: StarProduct, rng: Optional[random.Random] = None) -> List[int]:
    """Orders at which the center product of P0 = [1] differs from s"""
    R = s.ring
    lifted = lift_idempotent(MatPoly.identity(R, 1), s)
    center, _ = center_star(lifted, rng=rng)
    return [r for r in range(s.order + 1) if center.ops[r] != s.ops[r]]
