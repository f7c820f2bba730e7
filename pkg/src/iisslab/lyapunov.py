"""Lyapunov certificates and dissipation-inequality certification.

solve_lyapunov produces the positive solution P of A^T P + P A = -I together
with its coercivity constant and norm; the certifiers compare forward
finite-difference Lie derivatives of a candidate function against claimed
decay/supply bounds along simulated trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .comparison import ComparisonFunction
from .discretization import Grid1D, norm
from .semigroup import TrajectoryRecord, integrate_mild

__all__ = [
    "LyapunovCertificate",
    "DissipationRecord",
    "DissipationReport",
    "NotHurwitzError",
    "solve_lyapunov",
    "eval_V",
    "eval_W",
    "quadratic_evaluator",
    "log_quadratic_evaluator",
    "squared_norm_evaluator",
    "log_squared_norm_evaluator",
    "lie_derivative_fd",
    "default_margin_tolerance",
    "dissipation_rhs_bilinear",
    "pick_eps",
    "certify_dissipation",
    "certify_implicative",
    "merge_reports",
]

GENERAL_SOLVE_LIMIT = 200


class NotHurwitzError(ValueError):
    """No positive Lyapunov solution: an eigenvalue has nonnegative real part."""


@dataclass(frozen=True)
class LyapunovCertificate:
    """Positive solution P of the operator Lyapunov equation with its
    coercivity constant k = lambda_min(P), norm ||P|| = lambda_max(P) and the
    achieved equation residual.

    The h-weighted inner product rescales both sides of the equation by the
    same factor on a uniform grid, so P solves the plain matrix equation.
    """

    P: np.ndarray
    k: float
    normP: float
    residual: float
    grid: Optional[Grid1D] = None

    @property
    def n(self) -> int:
        return self.P.shape[0]


def _hurwitz_check(A: np.ndarray) -> None:
    reals = np.linalg.eigvals(A).real
    top = float(np.max(reals))
    if top >= 0:
        raise NotHurwitzError(
            f"no positive solution: eigenvalue with real part {top:.6g} >= 0; "
            "exponential stability of the semigroup is required")


def solve_lyapunov(A: np.ndarray, grid: Optional[Grid1D] = None) -> LyapunovCertificate:
    """Solve A^T P + P A = -I for symmetric positive definite P.

    Symmetric negative-definite A admits the closed form P = -A^{-1}/2,
    evaluated spectrally.  Other (small) matrices go through the vectorized
    n^2 linear system.  The result is symmetrized and its residual verified.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = np.diag(A)
    n = A.shape[0]
    symmetric = np.linalg.norm(A - A.T) <= 1e-12 * max(np.linalg.norm(A), 1.0)
    if symmetric:
        w, Q = np.linalg.eigh(A)
        if w[-1] >= 0:
            raise NotHurwitzError(
                f"no positive solution: eigenvalue {w[-1]:.6g} >= 0; "
                "exponential stability of the semigroup is required")
        P = (Q * (-0.5 / w)) @ Q.T
    else:
        if n > GENERAL_SOLVE_LIMIT:
            raise ValueError(
                f"general Lyapunov solve capped at n <= {GENERAL_SOLVE_LIMIT}")
        _hurwitz_check(A)
        ident = np.eye(n)
        # vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P)
        Kmat = np.kron(ident, A.T) + np.kron(A.T, ident)
        P = np.linalg.solve(Kmat, -ident.reshape(-1)).reshape(n, n)
    P = 0.5 * (P + P.T)
    residual = np.linalg.norm(A.T @ P + P @ A + np.eye(n))
    eigP = np.linalg.eigvalsh(P)
    if eigP[0] <= 0:
        raise NotHurwitzError(
            f"no positive solution: computed P has eigenvalue {eigP[0]:.6g}")
    return LyapunovCertificate(P=P, k=float(eigP[0]), normP=float(eigP[-1]),
                               residual=float(residual), grid=grid)


def eval_V(cert: LyapunovCertificate, x: np.ndarray, h: float = 1.0) -> float:
    """Quadratic form V(x) = <P x, x>_h = h * x^T P x, with an opportunistic
    sandwich check k ||x||^2 <= V <= ||P|| ||x||^2."""
    x = np.asarray(x, dtype=float)
    V = h * float(x @ (cert.P @ x))
    nx2 = h * float(x @ x)
    slack = 1e-8 * (1.0 + V)
    if V < cert.k * nx2 - slack or V > cert.normP * nx2 + slack:
        raise AssertionError(
            f"sandwich violated: k||x||^2={cert.k * nx2:.6g}, V={V:.6g}, "
            f"||P|| ||x||^2={cert.normP * nx2:.6g}")
    return V


def eval_W(cert: LyapunovCertificate, x: np.ndarray, h: float = 1.0) -> float:
    """Logarithmic form W(x) = ln(1 + <P x, x>_h)."""
    return math.log1p(eval_V(cert, x, h))


def quadratic_evaluator(cert: LyapunovCertificate, h: float = 1.0) -> Callable[[np.ndarray], float]:
    return lambda x: eval_V(cert, x, h)


def log_quadratic_evaluator(cert: LyapunovCertificate, h: float = 1.0) -> Callable[[np.ndarray], float]:
    return lambda x: eval_W(cert, x, h)


def squared_norm_evaluator(grid: Grid1D, tag: str = "L2") -> Callable[[np.ndarray], float]:
    """V(x) = ||x||^2 in the tagged norm."""
    h = grid.h
    return lambda x: norm(x, tag, h) ** 2


def log_squared_norm_evaluator(grid: Grid1D, tag: str = "L2") -> Callable[[np.ndarray], float]:
    """V(x) = ln(1 + ||x||^2) in the tagged norm."""
    h = grid.h
    return lambda x: math.log1p(norm(x, tag, h) ** 2)


def lie_derivative_fd(V: Callable[[np.ndarray], float], traj: TrajectoryRecord,
                      index: int, refine: bool = False):
    """Forward-difference Lie derivative (V(x_{k+1}) - V(x_k)) / dt at a
    recorded step.

    With refine=True the step is rerun from x_k at dt/2 and the pair
    (estimate, half-step estimate) is returned; their difference gauges the
    first-order truncation error.
    """
    states = traj.require_states()
    if not 0 <= index < traj.steps:
        raise IndexError(f"step index {index} outside trajectory")
    dt = traj.dt
    fd = (V(states[index + 1]) - V(states[index])) / dt
    if not refine:
        return fd
    if traj.input_signal is None:
        raise ValueError("refinement needs the trajectory's input signal")
    t0 = traj.times[index]
    u0 = traj.inputs[index] if traj.inputs is not None else traj.input_signal(t0)
    half = integrate_mild(traj.system, states[index], lambda t: u0, dt / 2, dt / 2)
    fd_half = (V(half.states[-1]) - V(states[index])) / (dt / 2)
    return fd, fd_half


def default_margin_tolerance(dt: float, rhs: float) -> float:
    """Acceptance slack (10 dt + 1e-8) (1 + |rhs|) for forward-difference
    certification; shrinks linearly with the step size."""
    return (10.0 * dt + 1e-8) * (1.0 + abs(rhs))


def pick_eps(normP: float, norm_b: float) -> float:
    """Midpoint of the admissible Young-inequality weight range
    (0, 1/(||P|| ||B||)); an inputless operator imposes no constraint."""
    if norm_b == 0.0:
        return 1.0
    return 0.5 / (normP * norm_b)


def dissipation_rhs_bilinear(cert: LyapunovCertificate, k_bilinear: float,
                             xi: ComparisonFunction, norm_b: float, eps: float,
                             x_norm: float, u_norm: float) -> float:
    """Decay/supply bound on the Lie derivative of W = ln(1 + <Px, x>) for a
    bilinear system:

        -(1 - eps ||P|| ||B||) ||x||^2 / (1 + ||P|| ||x||^2)
        + (2 K ||P|| / k) xi(||u||) + (||P|| ||B|| / eps) ||u||^2
    """
    if norm_b > 0 and not 0.0 < eps < 1.0 / (cert.normP * norm_b):
        raise ValueError(
            f"eps must lie in (0, {1.0 / (cert.normP * norm_b):.6g})")
    if norm_b == 0.0 and eps <= 0.0:
        raise ValueError("eps must be positive")
    decay = -(1.0 - eps * cert.normP * norm_b) * x_norm**2 / (1.0 + cert.normP * x_norm**2)
    supply = (2.0 * k_bilinear * cert.normP / cert.k) * xi(u_norm)
    if norm_b > 0:
        supply += (cert.normP * norm_b / eps) * u_norm**2
    return decay + supply


@dataclass(frozen=True)
class DissipationRecord:
    t: float
    x_norm: float
    u_norm: float
    vdot: float
    rhs: float
    margin: float
    tol: float


@dataclass
class DissipationReport:
    """Per-step comparison of an estimated Lie derivative against a claimed
    bound; verdict is pass when every margin clears its tolerance."""

    verdict: bool
    worst_margin: float
    n_steps: int
    n_violations: int
    records: list[DissipationRecord] = field(default_factory=list)
    witness: Optional[DissipationRecord] = None
    checked_steps: int = 0
    meta: dict = field(default_factory=dict)


def _input_norm_series(traj: TrajectoryRecord, input_tag: Optional[str]) -> np.ndarray:
    if input_tag is None or input_tag == traj.system.input_norm:
        return traj.input_norms
    if traj.inputs is None:
        raise ValueError(
            f"re-measuring inputs in {input_tag} needs stored input fields")
    h = traj.system.grid.h
    return np.array([norm(u, input_tag, h) for u in traj.inputs])


def _certify(trajectories: Sequence[TrajectoryRecord],
             V: Callable[[np.ndarray], float],
             rhs_fn: Callable[[float, float], float],
             gamma: Optional[ComparisonFunction],
             tol_fn: Callable[[float, float], float],
             record_every: int, input_tag: Optional[str], meta: dict) -> DissipationReport:
    worst = math.inf
    witness = None
    records: list[DissipationRecord] = []
    n_checked = 0
    n_steps = 0
    n_viol = 0
    for traj in trajectories:
        states = traj.require_states()
        dt = traj.dt
        v_vals = np.array([V(s) for s in states])
        vdot = np.diff(v_vals) / dt
        xn = traj.state_norms[:-1]
        un = _input_norm_series(traj, input_tag)[:-1]
        n_steps += traj.steps
        if gamma is not None:
            keep = xn >= np.array([gamma(u) for u in un])
            if not keep.any():
                continue
        else:
            keep = np.ones(traj.steps, dtype=bool)
        idx = np.flatnonzero(keep)
        rhs = np.array([rhs_fn(xn[k], un[k]) for k in idx])
        tol = np.array([tol_fn(dt, r) for r in rhs])
        margin = rhs - vdot[idx]
        n_checked += len(idx)
        n_viol += int(np.sum(margin < -tol))

        def record_at(j: int) -> DissipationRecord:
            k = idx[j]
            return DissipationRecord(traj.times[k], float(xn[k]), float(un[k]),
                                     float(vdot[k]), float(rhs[j]),
                                     float(margin[j]), float(tol[j]))

        j_worst = int(np.argmin(margin))
        if margin[j_worst] < worst:
            worst = float(margin[j_worst])
            witness = record_at(j_worst)
        if record_every:
            sampled = set(range(0, len(idx), record_every)) | {j_worst}
            records.extend(record_at(j) for j in sorted(sampled))
    return DissipationReport(
        verdict=n_viol == 0, worst_margin=float(worst), n_steps=n_steps,
        n_violations=n_viol, records=records, witness=witness,
        checked_steps=n_checked, meta=meta)


def certify_dissipation(V: Callable[[np.ndarray], float],
                        alpha: ComparisonFunction, sigma: ComparisonFunction,
                        trajectories: Sequence[TrajectoryRecord],
                        tol_fn: Callable[[float, float], float] = default_margin_tolerance,
                        record_every: int = 50,
                        input_tag: Optional[str] = None) -> DissipationReport:
    """Check Vdot <= -alpha(||x||) + sigma(||u||) at every recorded step.

    Failures are a verdict, not an error; the report carries the worst margin
    and its witness step.  input_tag re-measures inputs in a different norm
    than the one the trajectory was recorded under.
    """
    return _certify(
        trajectories, V, lambda x, u: -alpha(x) + sigma(u), None, tol_fn,
        record_every, input_tag,
        {"form": "dissipative", "alpha": alpha.name, "sigma": sigma.name})


def certify_implicative(V: Callable[[np.ndarray], float],
                        eta: ComparisonFunction, gamma: ComparisonFunction,
                        trajectories: Sequence[TrajectoryRecord],
                        tol_fn: Callable[[float, float], float] = default_margin_tolerance,
                        record_every: int = 50,
                        input_tag: Optional[str] = None) -> DissipationReport:
    """Check the gain-conditioned decay ||x|| >= gamma(||u||) =>
    Vdot <= -eta(||x||), evaluated only where the antecedent holds."""
    return _certify(
        trajectories, V, lambda x, u: -eta(x), gamma, tol_fn, record_every,
        input_tag, {"form": "implicative", "eta": eta.name, "gamma": gamma.name})


def merge_reports(reports: Sequence[DissipationReport],
                  meta: Optional[dict] = None) -> DissipationReport:
    """Combine per-trajectory reports into one verdict (used when
    trajectories are certified one at a time to bound memory)."""
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to merge")
    witness = None
    worst = math.inf
    records: list[DissipationRecord] = []
    for rep in reports:
        records.extend(rep.records)
        if rep.witness is not None and rep.worst_margin < worst:
            worst, witness = rep.worst_margin, rep.witness
    return DissipationReport(
        verdict=all(r.verdict for r in reports), worst_margin=worst,
        n_steps=sum(r.n_steps for r in reports),
        n_violations=sum(r.n_violations for r in reports),
        records=records, witness=witness,
        checked_steps=sum(r.checked_steps for r in reports),
        meta=meta or (reports[0].meta if reports else {}))
