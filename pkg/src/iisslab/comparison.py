"""Comparison-function algebra: classes PD/K/K-infinity/L/KL, sampled class
verification, numerical inversion, and the gain transformations used to move
between dissipative and implicative stability certificates.

Functions are plain scalar evaluators tagged with a declared class; membership
is checked by sampling, never proved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ComparisonFunction",
    "KLFunction",
    "IissGainTriple",
    "ImplicativePair",
    "ClassCheckReport",
    "ClassViolation",
    "WeakTriangleReport",
    "EvaluationError",
    "InversionRangeError",
    "GainConstructionError",
    "check_class",
    "check_kl",
    "invert",
    "weak_triangle_check",
    "implicative_to_dissipative",
    "dissipative_to_implicative",
    "assemble_bilinear_iiss_gains",
]

#: factor by which the tail of a function is probed beyond its domain hint
TAIL_FACTOR = 1.0e6


class EvaluationError(ValueError):
    """Evaluator returned a non-finite value."""


class InversionRangeError(ValueError):
    """Requested value lies outside the sampled range of the function."""


class GainConstructionError(ValueError):
    """A constructed gain failed its class verification or tail condition."""


def _checked(fn: Callable[[float], float], r: float) -> float:
    try:
        val = float(fn(r))
    except OverflowError:
        # mathematically finite but beyond float range; class checks treat
        # +inf correctly (passes unboundedness, fails decay-to-zero)
        return math.inf
    if math.isnan(val):
        raise EvaluationError(f"evaluation failure at argument {r!r}: got {val!r}")
    return val


@dataclass(frozen=True)
class ComparisonFunction:
    """A scalar gain function on the nonnegative reals with a declared class.

    declared_class is one of "PD", "K", "Kinf", "L".  domain_hint bounds the
    region used for sampling checks and seeds inversion brackets.
    """

    evaluator: Callable[[float], float]
    declared_class: str
    domain_hint: float = 10.0
    name: str = ""

    def __post_init__(self):
        if self.declared_class not in ("PD", "K", "Kinf", "L"):
            raise ValueError(f"unknown comparison class {self.declared_class!r}")
        if not self.domain_hint > 0:
            raise ValueError("domain_hint must be positive")

    def __call__(self, r: float) -> float:
        return _checked(self.evaluator, r)

    # -- common constructions ------------------------------------------------

    @staticmethod
    def identity(domain_hint: float = 10.0) -> "ComparisonFunction":
        return ComparisonFunction(lambda r: r, "Kinf", domain_hint, "id")

    @staticmethod
    def linear(slope: float, domain_hint: float = 10.0) -> "ComparisonFunction":
        if slope <= 0:
            raise ValueError("slope must be positive")
        return ComparisonFunction(lambda r: slope * r, "Kinf", domain_hint, f"{slope}*r")

    @staticmethod
    def power(exponent: float, coeff: float = 1.0, domain_hint: float = 10.0) -> "ComparisonFunction":
        if exponent <= 0 or coeff <= 0:
            raise ValueError("exponent and coeff must be positive")
        return ComparisonFunction(
            lambda r: coeff * r**exponent, "Kinf", domain_hint, f"{coeff}*r^{exponent}"
        )

    @staticmethod
    def log1p(domain_hint: float = 10.0) -> "ComparisonFunction":
        return ComparisonFunction(lambda r: math.log1p(r), "Kinf", domain_hint, "ln(1+r)")

    def scaled(self, factor: float) -> "ComparisonFunction":
        """Pointwise multiple; positive factors preserve the class."""
        if factor <= 0:
            raise ValueError("factor must be positive")
        return ComparisonFunction(
            lambda r: factor * self(r), self.declared_class, self.domain_hint,
            f"{factor}*({self.name or 'f'})",
        )


@dataclass(frozen=True)
class KLFunction:
    """Two-argument bound beta(s, t): class K in s, decaying to zero in t."""

    evaluator: Callable[[float, float], float]
    domain_hint: float = 10.0
    structure: str = ""
    name: str = ""

    def __call__(self, s: float, t: float) -> float:
        try:
            val = float(self.evaluator(s, t))
        except OverflowError:
            return math.inf
        if math.isnan(val):
            raise EvaluationError(f"evaluation failure at arguments ({s!r}, {t!r})")
        return val


@dataclass(frozen=True)
class IissGainTriple:
    """The three gains of an integral input-to-state estimate
    ||x(t)|| <= beta(||x0||, t) + theta(int_0^t mu(||u(s)||) ds)."""

    beta: KLFunction
    theta: ComparisonFunction
    mu: ComparisonFunction


@dataclass(frozen=True)
class ImplicativePair:
    """Gain pair (gamma, eta) of an implicative certificate:
    ||x|| >= gamma(||u||)  =>  Vdot <= -eta(||x||)."""

    gamma: ComparisonFunction
    eta: ComparisonFunction
    case: int = 1  # 1: margin/unbounded tail, 2: equal finite tails


@dataclass(frozen=True)
class ClassViolation:
    axiom: str
    argument: float
    value: float
    detail: str = ""


@dataclass
class ClassCheckReport:
    declared_class: str
    passed: bool
    violations: list[ClassViolation] = field(default_factory=list)
    samples: int = 0

    def first_violation(self) -> Optional[ClassViolation]:
        return self.violations[0] if self.violations else None


def _sample_grid(domain_hint: float, grid_size: int) -> np.ndarray:
    return np.linspace(0.0, domain_hint, grid_size)


def check_class(f: ComparisonFunction, grid_size: int = 1000) -> ClassCheckReport:
    """Verify the declared class axioms of f on a sampled grid.

    Returns a report with one entry per violated axiom, carrying the first
    violating sample.  Zero at the origin is required exactly (1e-12) for
    PD/K/Kinf; strict monotonicity is checked sample-to-sample; unboundedness
    and limits are probed at domain_hint * 1e6.
    """
    if grid_size < 16:
        raise ValueError("grid_size must be at least 16")
    grid = _sample_grid(f.domain_hint, grid_size)
    vals = np.array([f(r) for r in grid])
    report = ClassCheckReport(f.declared_class, True, samples=grid_size)

    def fail(axiom, argument, value, detail=""):
        report.passed = False
        report.violations.append(ClassViolation(axiom, float(argument), float(value), detail))

    cls = f.declared_class
    if cls in ("PD", "K", "Kinf"):
        if abs(vals[0]) > 1e-12:
            fail("zero_at_origin", 0.0, vals[0], "f(0) must vanish")
        pos = vals[1:] > 0
        if not pos.all():
            i = 1 + int(np.argmin(pos))
            fail("positive", grid[i], vals[i], "f(r) must be positive for r > 0")
    if cls in ("K", "Kinf"):
        inc = np.diff(vals) > 0
        if not inc.all():
            i = int(np.argmin(inc))
            fail("strictly_increasing", grid[i + 1], vals[i + 1],
                 f"f({grid[i]:.6g}) = {vals[i]:.6g} not exceeded")
    if cls == "Kinf":
        witness_arg = f.domain_hint * TAIL_FACTOR
        witness = f(witness_arg)
        threshold = max(2.0 * vals[-1], vals[-1] + 1.0)
        if not witness > threshold:
            fail("unbounded", witness_arg, witness,
                 f"tail value must exceed {threshold:.6g}")
    if cls == "L":
        dec = np.diff(vals[1:]) < 0
        if not dec.all():
            i = 1 + int(np.argmin(dec))
            fail("strictly_decreasing", grid[i + 1], vals[i + 1],
                 f"f({grid[i]:.6g}) = {vals[i]:.6g} not undercut")
        tail = f(f.domain_hint * TAIL_FACTOR)
        if not tail <= 1e-6 * (1.0 + abs(vals[1])):
            fail("limit_zero", f.domain_hint * TAIL_FACTOR, tail,
                 "tail must decay toward zero")
    return report


def check_kl(beta: KLFunction, grid_size: int = 64) -> ClassCheckReport:
    """Sampled KL verification: class K in the first argument for fixed t,
    decreasing to zero in the second argument for fixed s > 0."""
    report = ClassCheckReport("KL", True, samples=grid_size)
    s_grid = _sample_grid(beta.domain_hint, grid_size)
    t_probes = [0.0, 0.5, 2.0, 10.0]

    def fail(axiom, argument, value, detail=""):
        report.passed = False
        report.violations.append(ClassViolation(axiom, float(argument), float(value), detail))

    for t in t_probes:
        vals = np.array([beta(s, t) for s in s_grid])
        if abs(vals[0]) > 1e-12:
            fail("zero_at_origin", t, vals[0], f"beta(0, {t}) must vanish")
        if not (np.diff(vals) > 0).all():
            i = int(np.argmin(np.diff(vals) > 0))
            fail("strictly_increasing_in_s", s_grid[i + 1], vals[i + 1], f"at t={t}")
    t_grid = np.linspace(0.0, 10.0, grid_size)
    for s in [beta.domain_hint * x for x in (0.1, 0.5, 1.0)]:
        vals = np.array([beta(s, t) for t in t_grid])
        if not (np.diff(vals) < 0).all():
            i = int(np.argmin(np.diff(vals) < 0))
            fail("decreasing_in_t", t_grid[i + 1], vals[i + 1], f"at s={s}")
        tail = beta(s, 1e6)
        if not tail <= 1e-6 * (1.0 + vals[0]):
            fail("limit_zero_in_t", s, tail)
    return report


def invert(f: ComparisonFunction, y: float, rel_tol: float = 1e-10,
           max_doublings: int = 200) -> float:
    """Solve f(x) = y for a strictly increasing f by bracketed bisection.

    The bracket starts at [0, domain_hint] and is doubled until it contains y;
    the result satisfies |f(x) - y| <= rel_tol * (1 + y).
    """
    if y < 0:
        raise ValueError("can only invert at nonnegative values")
    if y == 0.0:
        return 0.0
    lo, hi = 0.0, f.domain_hint
    f_hi = f(hi)
    doublings = 0
    while f_hi < y:
        hi *= 2.0
        doublings += 1
        if doublings > max_doublings:
            raise InversionRangeError(
                f"range exceeded: f({hi:.6g}) = {f_hi:.6g} < {y:.6g} "
                f"after {max_doublings} bracket doublings")
        f_hi = f(hi)
    tol = rel_tol * (1.0 + y)
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-13 * (1.0 + mid):
            break
        if f(mid) < y:
            lo = mid
        else:
            hi = mid
    if abs(f(mid) - y) > tol:
        raise InversionRangeError(
            f"bisection stalled: |f({mid:.6g}) - {y:.6g}| > {tol:.3g}")
    return mid


@dataclass
class WeakTriangleReport:
    samples: int
    violations: int
    max_slack: float
    worst_pair: tuple[float, float]

    @property
    def passed(self) -> bool:
        return self.violations == 0


def weak_triangle_check(f: ComparisonFunction, samples: int = 1000,
                        rng: Optional[np.random.Generator] = None) -> WeakTriangleReport:
    """Check f^{-1}(a+b) <= f^{-1}(2a) + f^{-1}(2b) on random pairs.

    Every class-Kinf function satisfies this; the report records the maximum
    slack (left minus right, negative when satisfied) and its witness pair.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    hi = f(f.domain_hint)
    max_slack = -math.inf
    worst = (0.0, 0.0)
    violations = 0
    for _ in range(samples):
        a, b = rng.uniform(1e-9, hi, size=2)
        lhs = invert(f, a + b)
        rhs = invert(f, 2 * a) + invert(f, 2 * b)
        slack = lhs - rhs
        if slack > max_slack:
            max_slack, worst = slack, (float(a), float(b))
        if slack > 1e-8 * (1.0 + rhs):
            violations += 1
    return WeakTriangleReport(samples, violations, max_slack, worst)


def implicative_to_dissipative(eta: ComparisonFunction, gamma: ComparisonFunction,
                               w_hat: ComparisonFunction, p: ComparisonFunction,
                               q: ComparisonFunction) -> ComparisonFunction:
    """Build the supply term sigma(r) = 2*w_hat(gamma(r))*gamma(r)
    + p(gamma(r)) + q(r) turning an implicative certificate (gamma, eta) into
    a dissipative one with decay eta.

    The construction is verified class Kinf by sampling and rejected otherwise.
    """
    hint = max(gamma.domain_hint, q.domain_hint)

    def sigma_eval(r: float) -> float:
        g = gamma(r)
        return 2.0 * w_hat(g) * g + p(g) + q(r)

    sigma = ComparisonFunction(sigma_eval, "Kinf", hint, "sigma[impl->diss]")
    report = check_class(sigma)
    if not report.passed:
        witness = report.first_violation()
        raise GainConstructionError(
            f"construction not Kinf: {witness.axiom} violated at "
            f"r = {witness.argument:.6g} (value {witness.value:.6g})")
    return sigma


def _is_sampled_increasing(f: ComparisonFunction, grid_size: int = 512) -> bool:
    grid = _sample_grid(f.domain_hint * 2.0, grid_size)
    vals = np.array([f(r) for r in grid])
    return bool((np.diff(vals) > 0).all())


def _k_minorant(alpha: ComparisonFunction) -> ComparisonFunction:
    """Nondecreasing minorant of a positive-definite alpha.

    For alpha already increasing on samples the minorant is alpha itself.
    Otherwise: suffix minimum over [s, grid end] on a sampling grid extended
    geometrically into the tail, then a running maximum from zero.
    """
    if _is_sampled_increasing(alpha):
        return ComparisonFunction(alpha.evaluator, "K", alpha.domain_hint,
                                  f"minorant({alpha.name or 'alpha'})")
    lin = np.linspace(0.0, 2.0 * alpha.domain_hint, 2048)
    geo = np.geomspace(2.0 * alpha.domain_hint, alpha.domain_hint * TAIL_FACTOR, 256)
    grid = np.unique(np.concatenate([lin, geo]))
    vals = np.array([alpha(r) for r in grid])
    suffix_min = np.minimum.accumulate(vals[::-1])[::-1]
    minor = np.maximum.accumulate(suffix_min)

    def eval_minorant(r: float) -> float:
        return float(np.interp(r, grid, minor))

    return ComparisonFunction(eval_minorant, "K", alpha.domain_hint,
                              f"minorant({alpha.name or 'alpha'})")


def _tail_value(f: ComparisonFunction) -> float:
    return f(f.domain_hint * TAIL_FACTOR)


def dissipative_to_implicative(alpha: ComparisonFunction, sigma: ComparisonFunction,
                               K_margin: float = 2.0) -> ImplicativePair:
    """Convert a dissipative pair (alpha, sigma) into an implicative pair
    (gamma, eta).

    Requires the sampled tail condition: alpha unbounded, or its tail at least
    the tail of sigma.  With a strict tail margin, gamma = minorant(alpha)^{-1}
    o (K_margin * sigma) and eta = (1 - 1/K_margin) * minorant(alpha), both
    class K.  With equal finite tails the inflation id + omega with
    omega(v) = (S - v) v / S (S the sampled sigma tail) is used instead and
    eta is only positive definite.
    """
    if not K_margin > 1.0:
        raise ValueError("K_margin must exceed 1")
    alpha_hat = _k_minorant(alpha)
    a_tail = _tail_value(alpha_hat)
    s_tail = _tail_value(sigma)
    hint = max(alpha.domain_hint, sigma.domain_hint)

    alpha_unbounded = a_tail > max(2.0 * alpha_hat(alpha.domain_hint),
                                   alpha_hat(alpha.domain_hint) + 1.0)
    if a_tail < s_tail * (1.0 - 1e-9):
        raise GainConstructionError(
            f"not an ISS pair: sampled decay tail {a_tail:.6g} falls below "
            f"supply tail {s_tail:.6g}")

    if alpha_unbounded or a_tail >= K_margin * s_tail:
        gamma = ComparisonFunction(
            lambda r: invert(alpha_hat, K_margin * sigma(r)), "K", hint,
            "gamma[case1]")
        eta = alpha_hat.scaled(1.0 - 1.0 / K_margin)
        eta = ComparisonFunction(eta.evaluator, "K", hint, "eta[case1]")
        return ImplicativePair(gamma, eta, case=1)

    if a_tail < K_margin * s_tail and a_tail > s_tail * (1.0 + 1e-9):
        raise GainConstructionError(
            f"not an ISS pair for K_margin={K_margin}: sampled tail ratio "
            f"{a_tail / s_tail:.6g} is below the requested margin")

    # equal finite tails: inflate sigma by id + omega instead of a margin
    S = s_tail
    a_cap = a_tail * (1.0 - 1e-13)

    def id_plus_omega(v: float) -> float:
        if v >= S:
            return v
        return v * (2.0 - v / S)

    def id_plus_omega_inv(y: float) -> float:
        if y >= S:
            return y
        return S * (1.0 - math.sqrt(max(0.0, 1.0 - y / S)))

    def gamma_eval(r: float) -> float:
        target = min(id_plus_omega(sigma(r)), a_cap)
        return invert(alpha_hat, target)

    def eta_eval(s: float) -> float:
        a = alpha_hat(s)
        return a - id_plus_omega_inv(a)

    gamma = ComparisonFunction(gamma_eval, "K", hint, "gamma[case2]")
    eta = ComparisonFunction(eta_eval, "PD", hint, "eta[case2]")
    return ImplicativePair(gamma, eta, case=2)


def assemble_bilinear_iiss_gains(M: float, lam: float, norm_b: float,
                                 k_bilinear: float, xi: ComparisonFunction,
                                 domain_hint: float = 10.0) -> IissGainTriple:
    """Closed-form iISS gain triple for an exponentially stable bilinear
    system with semigroup bound M e^{-lam t}, input-operator norm norm_b and
    bilinearity bound k_bilinear * ||x|| * xi(||u||):

        beta(s, t) = (1 + M e^{-lam t} s)^2 - 1
        theta(s)   = e^{2 s} - 1
        mu(s)      = M norm_b s + M k_bilinear xi(s)

    mu majorizes the logarithm of the additive-input term (ln(1+x) <= x) so a
    single class-K integrand covers both input contributions.  All three
    functions are class-verified before returning.
    """
    if M < 1.0 or lam <= 0 or norm_b < 0 or k_bilinear < 0:
        raise ValueError("require M >= 1, lam > 0, norm_b >= 0, k_bilinear >= 0")

    def beta_eval(s: float, t: float) -> float:
        a = M * math.exp(-lam * t) * s
        return a * (a + 2.0)  # (1 + a)^2 - 1 without cancellation for tiny a

    beta = KLFunction(beta_eval, domain_hint,
                      structure="squared-exponential", name="beta[bilinear]")
    theta = ComparisonFunction(lambda s: math.expm1(2.0 * s), "Kinf",
                               domain_hint, "theta[bilinear]")
    mu = ComparisonFunction(
        lambda s: M * norm_b * s + M * k_bilinear * xi(s), "K",
        max(domain_hint, xi.domain_hint), "mu[bilinear]")

    for f, label in ((theta, "theta"), (mu, "mu")):
        rep = check_class(f)
        if not rep.passed:
            witness = rep.first_violation()
            raise GainConstructionError(
                f"gain assembly bug: {label} failed {witness.axiom} at "
                f"r = {witness.argument:.6g}")
    rep = check_kl(beta)
    if not rep.passed:
        witness = rep.first_violation()
        raise GainConstructionError(
            f"gain assembly bug: beta failed {witness.axiom} at "
            f"argument {witness.argument:.6g}")
    return IissGainTriple(beta, theta, mu)
