"""Named verification checks run against a scenario

Each check takes the shared CheckContext and a seeded random generator
and returns a CheckOutcome. Checks that need scenario input the file does
not provide raise SkipCheck.
"""

import functools
import itertools
import random
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional

from core.classes import (
    CharClassSeries, TwistClass, as_vector, constant_class_vector, first_order_relative_class, is_faithful,
    orbit_equivalent, phi_hat_poisson, phi_hat_symplectic, phi_hat_zero_stratum,
)
from core.coeffring import format_poly, random_poly
from core.debug_logger import debug_log
from core.errors import DegenerateBivectorError
from core.lbquant import (
    CURVATURE_SIGN, QuantizedLineBundle, adapted_connection, bimodule_relations_check,
    connection_axioms_check, connections_agree, curvature_theorem_check, extract_connection,
    poisson_chern_representative, quantize_line_bundle, trivial_bundle_check,
)
from core.matdef import (
    CornerStar, LiftedIdempotent, as_mat_series, fibred_bracket_check, fibred_leibniz_check,
    induced_star, lift_idempotent, lift_idempotent_stepwise, projection_rank, psi_morphism_check,
    random_corner_element,
)
from core.poisson import (
    JACOBIATOR_CONSTANT, FormalPoisson, Multivector, OneForm, check_formal_poisson, d_pi,
    find_dpi_primitive, gauge_formal_poisson, is_poisson, koszul, pi_sharp, pi_star_two_form,
    poisson_jacobiator, random_multivector, random_one_form, schouten,
)
from core.series import lie_transform
from core.star import (
    StarProduct, apply_equivalence, assoc_defect, bracket_of, moyal,
    star_commutator_check, tau, tau_tilde, unit_defect,
)


# Chern vectors of the classes sweep have entries in [-bound, bound]
CLASS_SWEEP_BOUND = 3


class SkipCheck(Exception):
    """The scenario does not provide what a check needs"""


@dataclass
class CheckOutcome:
    passed: bool
    detail: str = ''


@dataclass
class CheckSettings:
    random_samples: int = 20
    identity_samples: int = 50
    max_degree: int = 2
    connection_degree: int = 3

    @classmethod
    def from_preferences(cls, prefs) -> 'CheckSettings':
        return cls(
            random_samples=prefs.get('checks', 'random_samples', cls.random_samples),
            identity_samples=prefs.get('checks', 'identity_samples', cls.identity_samples),
            max_degree=prefs.get('checks', 'max_degree', cls.max_degree),
            connection_degree=prefs.get('checks', 'connection_degree', cls.connection_degree),
        )


class CheckContext:
    """Scenario plus lazily built shared artifacts, safe to use from worker threads"""

    def __init__(self, scenario, settings: Optional[CheckSettings] = None, seed: int = 0):
        self.scenario = scenario
        self.settings = settings or CheckSettings()
        self.seed = seed
        self._lock = threading.RLock()
        self._artifacts: Dict[str, object] = {}

    def _cached(self, key: str, build: Callable[[], object]):
        with self._lock:
            if key not in self._artifacts:
                debug_log('checks', 'Building shared artifact', artifact=key, scenario=self.scenario.name)
                self._artifacts[key] = build()
            return self._artifacts[key]

    @property
    def ring(self):
        if self.scenario.ring is None:
            raise SkipCheck("scenario has no chart")
        return self.scenario.ring

    def pi(self) -> Multivector:
        if self.scenario.pi is None:
            raise SkipCheck("scenario has no pi")
        return self.scenario.pi

    def poisson_pi(self) -> Multivector:
        pi = self.pi()
        if not self._cached('is_poisson', lambda: is_poisson(pi)):
            raise SkipCheck("pi is not Poisson")
        return pi

    def star(self) -> StarProduct:
        self.pi()
        return self._cached('star', self.scenario.build_star)

    def lifted(self) -> LiftedIdempotent:
        if self.scenario.P0 is None:
            raise SkipCheck("scenario has no P0")
        return self._cached('lifted', lambda: lift_idempotent(self.scenario.P0, self.star()))

    def corner(self) -> CornerStar:
        return self._cached('corner', lambda: induced_star(self.lifted()))

    def bundle(self) -> QuantizedLineBundle:
        rank = projection_rank(self.scenario.P0) if self.scenario.P0 is not None else None
        if self.scenario.P0 is not None and rank != 1:
            raise SkipCheck(f"P0 has rank {rank}, the line bundle checks need rank 1")
        return self._cached('bundle', lambda: quantize_line_bundle(self.lifted(), rng=random.Random(self.seed)))

    def gauge_field(self, rng: random.Random) -> List:
        if self.scenario.gauge is not None:
            return list(self.scenario.gauge)
        return [random_poly(self.ring, rng, self.settings.max_degree) for _ in range(self.ring.ngens)]

    def fmt(self, p) -> str:
        return format_poly(p, self.scenario.names)


@dataclass(frozen=True)
class CheckSpec:
    name: str
    description: str
    run: Callable[[CheckContext, random.Random], CheckOutcome]


CHECKS: Dict[str, CheckSpec] = {}


def register(name: str, description: str):
    def decorate(fn):
        CHECKS[name] = CheckSpec(name, description, fn)
        return fn
    return decorate


def _first(failures: List[str], checked: int) -> str:
    return f"{len(failures)}/{checked} failed; first: {failures[0]}"


# ----------------------------------------------------------------------
# Star products and Poisson structures
# ----------------------------------------------------------------------

@register('assoc', "associativity defect of the star product vanishes mod lambda^(N+1)")
def check_assoc(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    s = ctx.star()
    defect = assoc_defect(s)
    if defect:
        order = min(defect)
        return CheckOutcome(False, f"defect at lambda^{order}: {defect[order].format(ctx.scenario.names)}")
    return CheckOutcome(True, f"{s.label} associative mod lambda^{s.order + 1}")


@register('unit', "1 is a two-sided unit of the star product")
def check_unit(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    failing = unit_defect(ctx.star())
    if failing:
        return CheckOutcome(False, f"1 is not a unit at orders {failing}")
    return CheckOutcome(True, "1 is a unit")


@register('commutator', "[x_i, x_j]_* = lambda pi^ij on coordinate pairs")
def check_commutator(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    failing = star_commutator_check(ctx.star(), ctx.pi())
    if failing:
        i, j = failing[0]
        return CheckOutcome(False, f"{len(failing)} coordinate pairs fail; first (x{i + 1}, x{j + 1})")
    return CheckOutcome(True, "coordinate commutators match pi")


@register('bracket', "skew part of C_1 recovers pi")
def check_bracket(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    recovered = bracket_of(ctx.star())
    if recovered != ctx.pi():
        return CheckOutcome(False, f"C_1 gives {recovered.format(ctx.scenario.names)}")
    return CheckOutcome(True, f"bracket {recovered.format(ctx.scenario.names)}")


@register('poisson_identities', "graded Jacobi, d_pi^2 = 0, Koszul Jacobi and pi-sharp on random inputs")
def check_poisson_identities(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    pi = ctx.pi()
    R = ctx.ring
    degree = ctx.settings.max_degree
    poisson = is_poisson(pi)
    trivector = schouten(pi, pi).scale(JACOBIATOR_CONSTANT)
    failures = []
    samples = ctx.settings.identity_samples
    for index in range(samples):
        p, q = rng.randint(1, min(2, R.ngens)), rng.randint(1, min(2, R.ngens))
        P = random_multivector(R, rng, p, degree)
        Q = random_multivector(R, rng, q, degree)
        S = random_multivector(R, rng, 1, degree)
        lhs = schouten(P, schouten(Q, S))
        rhs = (schouten(schouten(P, Q), S).scale((-1) ** (p - 1))
               + schouten(Q, schouten(P, S)).scale((-1) ** ((p - 1) * (q - 1))))
        if lhs != rhs:
            failures.append(f"sample {index}: graded Jacobi")
        f, g, h = (random_poly(R, rng, degree) for _ in range(3))
        if poisson_jacobiator(pi, f, g, h) != trivector(OneForm.exact(f), OneForm.exact(g), OneForm.exact(h)):
            failures.append(f"sample {index}: Jacobiator")
        if not poisson:
            continue
        if d_pi(pi, d_pi(pi, P)):
            failures.append(f"sample {index}: d_pi^2 != 0")
        a, b, c = (random_one_form(R, rng, degree) for _ in range(3))
        cyclic = koszul(pi, a, koszul(pi, b, c)) + koszul(pi, b, koszul(pi, c, a)) + koszul(pi, c, koszul(pi, a, b))
        if cyclic:
            failures.append(f"sample {index}: Koszul Jacobi")
        if pi_sharp(pi, koszul(pi, a, b)) != -schouten(pi_sharp(pi, a), pi_sharp(pi, b)):
            failures.append(f"sample {index}: -pi_sharp is not a homomorphism")
        if d_pi(pi, pi_star_two_form(pi, a.d())):
            failures.append(f"sample {index}: pi_* of a closed form is not d_pi-closed")
    if failures:
        return CheckOutcome(False, _first(failures, samples))
    scope = "all identities" if poisson else "Jacobi and Jacobiator only, pi is not Poisson"
    return CheckOutcome(True, f"{samples} samples, {scope}")


@register('formal_poisson', "pi + lambda pi1 is formally Poisson to first order")
def check_formal_poisson_structure(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    pi = ctx.pi()
    if ctx.scenario.pi1 is None:
        raise SkipCheck("scenario has no pi1")
    report = check_formal_poisson(FormalPoisson.from_terms([pi, ctx.scenario.pi1]))
    if not report.first_order_closed:
        return CheckOutcome(False, f"d_pi pi1 = {report.first_order_defect.format(ctx.scenario.names)}")
    detail = "d_pi pi1 = 0"
    if not report.integrable:
        detail += f"; [pi_lambda, pi_lambda] != 0 at orders {sorted(report.defects)}"
    return CheckOutcome(True, detail)


@register('gauge', "gauge by exp(lambda L_X) shifts pi1 by -d_pi X")
def check_gauge(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    pi = ctx.poisson_pi()
    R = ctx.ring
    X = ctx.gauge_field(rng)
    pi1 = ctx.scenario.pi1 or Multivector.zero(R, 2)
    gauged = gauge_formal_poisson(lie_transform(R, [X]), FormalPoisson.from_terms([pi, pi1]))
    expected = pi1 - d_pi(pi, Multivector.vector_field(R, X))
    if gauged.term(0) != pi:
        return CheckOutcome(False, "gauge changed the leading bivector")
    if gauged.term(1) != expected:
        return CheckOutcome(False, f"pi1' = {gauged.term(1).format(ctx.scenario.names)}, "
                                   f"expected {expected.format(ctx.scenario.names)}")
    return CheckOutcome(True, f"X = [{', '.join(ctx.fmt(c) for c in X)}]")


@register('tau_gauge', "tau of a gauge-equivalent pair is -d_pi X and has a d_pi primitive")
def check_tau_gauge(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    pi = ctx.poisson_pi()
    s = ctx.star()
    if s.order < 2:
        raise SkipCheck("tau needs order >= 2")
    R = ctx.ring
    X = ctx.gauge_field(rng)
    T = lie_transform(R, [X] + [[R.zero] * R.ngens] * (s.order - 1))
    value = tau(apply_equivalence(T, s), s)
    expected = -d_pi(pi, Multivector.vector_field(R, X))
    if value != expected:
        return CheckOutcome(False, f"tau = {value.format(ctx.scenario.names)}, "
                                   f"expected {expected.format(ctx.scenario.names)}")
    degree = max((sum(m) for c in X for m in c.monoms()), default=0)
    if value and find_dpi_primitive(pi, value, degree) is None:
        return CheckOutcome(False, "no vector field primitive found for tau")
    return CheckOutcome(True, f"tau = {value.format(ctx.scenario.names)}")


@register('tau_moyal_pair', "tau(moyal(pi), moyal(pi + lambda rho)) = -rho, matching the class difference")
def check_tau_moyal_pair(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    pi = ctx.pi()
    rho = ctx.scenario.rho
    if rho is None:
        raise SkipCheck("scenario has no rho")
    if not pi.is_constant() or not rho.is_constant():
        raise SkipCheck("Moyal pair needs constant pi and rho")
    order = max(ctx.scenario.order, 2)
    base = moyal(pi, order)
    shifted = moyal(FormalPoisson.from_terms([pi, rho], order), order)
    value = tau(base, shifted)
    if value != -rho:
        return CheckOutcome(False, f"tau = {value.format(ctx.scenario.names)}")
    pi_class = TwistClass.from_rational(constant_class_vector(pi))
    b = pi_class.b
    c = CharClassSeries((pi_class, TwistClass.zero(b)), 'poisson')
    c2 = CharClassSeries((pi_class, TwistClass.from_rational(constant_class_vector(rho))), 'poisson')
    if first_order_relative_class(c, c2).rational != constant_class_vector(value):
        return CheckOutcome(False, "class difference disagrees with tau")
    detail = f"tau = {value.format(ctx.scenario.names)}"
    try:
        two_form = tau_tilde(base, shifted, pi)
        if not two_form.is_closed():
            return CheckOutcome(False, "symplectic form of tau is not closed")
        detail += f", form {two_form.format(ctx.scenario.names)}"
    except DegenerateBivectorError:
        pass
    return CheckOutcome(True, detail)


# ----------------------------------------------------------------------
# Matrices, corners and line bundles
# ----------------------------------------------------------------------

@register('lift', "Newton and order-by-order lifts of P0 are idempotent and full")
def check_lift(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    lifted = ctx.lifted()
    stepwise = lift_idempotent_stepwise(lifted.P0, lifted.star)
    if not lifted.is_idempotent() or not stepwise.is_idempotent():
        return CheckOutcome(False, "lifted idempotent has a defect")
    if not lifted.is_full():
        return CheckOutcome(False, "trace of P0 is not a positive constant")
    corrections = [k for k in range(1, lifted.order + 1) if lifted.qP[k]]
    return CheckOutcome(True, f"qP idempotent mod lambda^{lifted.order + 1}, corrections at {corrections}")


@register('corner', "the corner unit is a two-sided unit of the corner product")
def check_corner(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    corner = ctx.corner()
    unit = corner.unit()
    for index in range(3):
        A = random_corner_element(corner.lifted, rng, ctx.settings.max_degree)
        expected = as_mat_series(A, corner.order)
        if corner(unit, A) != expected or corner(A, unit) != expected:
            return CheckOutcome(False, f"sample {index}: unit fails on {A.format(ctx.scenario.names)}")
    one = not any(unit.coeffs[1:]) and unit[0] == corner.lifted.P0
    return CheckOutcome(True, "unit is P0" if one else "unit has lambda corrections")


@register('fibred_bracket', "corner bracket, Psi morphism and fibred Leibniz identities")
def check_fibred_bracket(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    corner = ctx.corner()
    samples, degree = ctx.settings.random_samples, ctx.settings.max_degree
    for label, report in (('bracket', fibred_bracket_check(corner, rng, samples, degree)),
                          ('Psi', psi_morphism_check(corner, rng, samples, degree, ctx.pi())),
                          ('Leibniz', fibred_leibniz_check(corner, rng, degree=degree))):
        if not report.ok:
            return CheckOutcome(False, f"{label}: {_first(report.failures, report.checked)}")
    return CheckOutcome(True, f"{samples} corner pairs and {samples} function pairs")


@register('center', "center product of a rank-1 P0 is associative with bracket pi")
def check_center(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    bundle = ctx.bundle()
    defect = assoc_defect(bundle.raw_center)
    if defect:
        return CheckOutcome(False, f"center product not associative at lambda^{min(defect)}")
    if bundle.order >= 1 and bracket_of(bundle.center_star) != ctx.pi():
        return CheckOutcome(False, "center bracket differs from pi")
    trivial = trivial_bundle_check(ctx.star(), rng)
    if trivial:
        return CheckOutcome(False, f"trivial bundle changes the product at orders {trivial}")
    return CheckOutcome(True, f"unit {bundle.unit.format(ctx.fmt)}")


@register('bimodule', "module relations of the quantized line bundle")
def check_bimodule(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    report = bimodule_relations_check(ctx.bundle(), rng, degree=ctx.settings.max_degree)
    if not report.ok:
        return CheckOutcome(False, _first(report.failures, report.checked))
    return CheckOutcome(True, f"{report.checked} samples")


@register('connection', "extracted connection satisfies both Leibniz rules")
def check_connection(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    bundle = ctx.bundle()
    if bundle.order < 1:
        raise SkipCheck("the connection needs order >= 1")
    D = extract_connection(bundle)
    report = connection_axioms_check(D, rng, degree=ctx.settings.connection_degree)
    if not report.ok:
        return CheckOutcome(False, _first(report.failures, report.checked))
    differences = connections_agree(D, adapted_connection(bundle.P0, ctx.pi()), rng)
    agreement = "equals P0{s, f}" if not differences else f"differs from P0{{s, f}} in {len(differences)} places"
    return CheckOutcome(True, f"{report.checked} samples, {agreement}")


@register('adapted', "extracted connection equals P0{s, f}")
def check_adapted(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    bundle = ctx.bundle()
    if bundle.order < 1:
        raise SkipCheck("the connection needs order >= 1")
    differences = connections_agree(extract_connection(bundle), adapted_connection(bundle.P0, ctx.pi()), rng,
                                    degree=ctx.settings.connection_degree)
    if differences:
        return CheckOutcome(False, f"{len(differences)} differences; first: {differences[0]}")
    return CheckOutcome(True, "R(s, f) = P0{s, f}")


@register('curvature_theorem', "tau(f, g) s = -Theta_R(df, dg) s on coordinate pairs")
def check_curvature_theorem(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    bundle = ctx.bundle()
    if bundle.order < 2:
        raise SkipCheck("tau needs order >= 2")
    report = curvature_theorem_check(bundle)
    if not report.tau_closed:
        return CheckOutcome(False, f"tau = {report.tau.format(ctx.scenario.names)} is not d_pi-closed")
    if not report.ok:
        return CheckOutcome(False, _first(report.failures, report.checked))
    chern = poisson_chern_representative(extract_connection(bundle))
    if chern.scale(CURVATURE_SIGN) != report.tau:
        return CheckOutcome(False, f"curvature scalar {chern.format(ctx.scenario.names)} does not match tau")
    return CheckOutcome(True, f"tau = {report.tau.format(ctx.scenario.names)}, {report.checked} sections")


# ----------------------------------------------------------------------
# Characteristic classes
# ----------------------------------------------------------------------

@register('classes', "class actions are lattice actions on |c1| <= 3; answers the orbit queries")
def check_classes(ctx: CheckContext, rng: random.Random) -> CheckOutcome:
    m = ctx.scenario.model
    if m is None:
        raise SkipCheck("scenario has no model")
    b = m.b
    alpha = TwistClass(as_vector(_small(rng) for _ in range(b)), as_vector(_small(rng) for _ in range(b)))
    zero = TwistClass.zero(b)
    box = list(itertools.product(range(-CLASS_SWEEP_BOUND, CLASS_SWEEP_BOUND + 1), repeat=b))
    # Full pair sweep up to b = 2, basis directions beyond
    partners = box if b <= 2 else [tuple(s if i == j else 0 for j in range(b))
                                   for i in range(b) for s in (1, -1)]
    actions = (
        ('symplectic', phi_hat_symplectic),
        ('Poisson', phi_hat_poisson),
        ('zero-Poisson', functools.partial(phi_hat_zero_stratum, stratum=1)),
    )
    failures = [f"zero class moved on stratum 0 by c1 = {c1}"
                for c1 in box if phi_hat_zero_stratum(m, zero, c1, 0) != zero]
    for label, act in actions:
        if act(m, alpha, [0] * b) != alpha:
            failures.append(f"{label}: c1 = 0 is not the identity")
        images = {c: act(m, alpha, c) for c in box}
        for c1 in box:
            for c2 in partners:
                both = tuple(x + y for x, y in zip(c1, c2))
                if act(m, images[c1], c2) != act(m, alpha, both):
                    failures.append(f"{label}: c1 = {c1}, c2 = {c2} do not compose additively")
    halves = [Fraction(k, 2) for k in range(-2 * CLASS_SWEEP_BOUND, 2 * CLASS_SWEEP_BOUND + 1)]
    points = list(itertools.product(halves, repeat=b))
    for v in points:
        t0 = TwistClass.from_u(v)
        integral = all(x.denominator == 1 for x in v)
        if orbit_equivalent(m, t0) != integral:
            failures.append(f"orbit test {'rejects' if integral else 'accepts'} {t0.format()}")
    debug_log('classes', 'action sweep finished', pairs=len(box) * len(partners), orbit_points=len(points),
              failures=len(failures))
    if failures:
        return CheckOutcome(False, failures[0])
    answers = [f"{text}: {'equivalent' if orbit_equivalent(m, t0) else 'not equivalent'}"
               for text, t0 in ctx.scenario.orbit_queries]
    faithful = 'faithful' if is_faithful(m, 'poisson') else 'not faithful'
    return CheckOutcome(True, '; '.join([f"b = {b}, Poisson action {faithful}"] + answers))


def _small(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-3, 3), rng.choice([1, 2, 3]))
