"""Finite-difference discretization of the model systems on an interval
(0, L): uniform interior-node grid, Dirichlet Laplacian, h-weighted Lp and
sup norms, tangent-weighted input operator and the two bilinear couplings.

Boundary conditions are enforced by matrix structure; nodes stay strictly
inside the interval, so singular endpoint weights are never evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .comparison import ComparisonFunction

__all__ = [
    "Grid1D",
    "GridFunction",
    "BilinearMap",
    "EvolutionSystem",
    "build_dirichlet_laplacian",
    "laplacian_eigenvalues",
    "norm",
    "build_tan_input_operator",
    "build_hat_input",
    "build_saturated_bilinearity",
    "build_multiplicative_bilinearity",
    "tan_half_power_integral",
    "check_bilinear_bound",
    "operator_norm",
]

NORM_TAGS = ("L2", "L4", "sup")


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of n interior nodes on (0, L) with spacing h = L/(n+1)."""

    n: int
    L: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one interior node")
        if not self.L > 0:
            raise ValueError("interval length must be positive")

    @property
    def h(self) -> float:
        return self.L / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(1, self.n + 1)


@dataclass(frozen=True)
class GridFunction:
    """A spatial field sampled at the interior nodes of a grid."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", vals)

    def norm(self, tag: str) -> float:
        return norm(self, tag)


def norm(x: "GridFunction | np.ndarray", tag: str, h: Optional[float] = None) -> float:
    """h-weighted Lp norm (midpoint quadrature) or node-wise sup norm."""
    if isinstance(x, GridFunction):
        vals, h = x.values, x.grid.h
    else:
        vals = np.asarray(x, dtype=float)
        if h is None:
            raise ValueError("raw arrays need an explicit spacing h")
    if tag == "L2":
        return math.sqrt(h * float(vals @ vals))
    if tag == "L4":
        v2 = vals * vals
        return (h * float(v2 @ v2)) ** 0.25
    if tag == "sup":
        return float(np.max(np.abs(vals))) if vals.size else 0.0
    raise ValueError(f"unknown norm tag {tag!r}; expected one of {NORM_TAGS}")


@dataclass(frozen=True)
class BilinearMap:
    """State-input coupling C(x, u) with its growth certificate
    ||C(x, u)|| <= bound_const * ||x|| * xi(||u||) under the given input norm."""

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    bound_const: float
    xi: ComparisonFunction
    input_norm: str = "sup"
    name: str = ""


@dataclass(frozen=True)
class EvolutionSystem:
    """Semilinear evolution system dx/dt = A x + B u + C(x, u) on a grid.

    A is either a dense (n, n) generator or a 1-D array of diagonal entries
    (uncoupled node dynamics).  B is a diagonal multiplication operator given
    by its entries, or None.  C is a BilinearMap or None.
    """

    grid: Grid1D
    A: np.ndarray
    B: Optional[np.ndarray] = None
    C: Optional[BilinearMap] = None
    state_norm: str = "L2"
    input_norm: str = "sup"
    name: str = ""

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        n = self.grid.n
        if A.shape not in ((n, n), (n,)):
            raise ValueError(f"generator shape {A.shape} incompatible with n={n}")
        object.__setattr__(self, "A", A)
        if self.B is not None:
            B = np.asarray(self.B, dtype=float)
            if B.shape != (n,):
                raise ValueError("input operator must be diagonal entries of length n")
            object.__setattr__(self, "B", B)
        for tag in (self.state_norm, self.input_norm):
            if tag not in NORM_TAGS:
                raise ValueError(f"unknown norm tag {tag!r}")

    @property
    def diagonal(self) -> bool:
        return self.A.ndim == 1

    def rhs_forcing(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Non-semigroup part B u + C(x, u) of the vector field."""
        g = np.zeros_like(x)
        if self.B is not None:
            g += self.B * u
        if self.C is not None:
            g += self.C.fn(x, u)
        return g

    def with_input_operator(self, B: np.ndarray, input_norm: Optional[str] = None) -> "EvolutionSystem":
        return replace(self, B=np.asarray(B, dtype=float),
                       input_norm=input_norm or self.input_norm)

    def with_bilinearity(self, C: BilinearMap) -> "EvolutionSystem":
        return replace(self, C=C, input_norm=C.input_norm)


def laplacian_eigenvalues(n: int, L: float, c: float = 0.0,
                          diffusivity: float = 1.0) -> np.ndarray:
    """Exact eigenvalues c - (4 d / h^2) sin^2(k pi h / (2 L)) of the
    discrete Dirichlet Laplacian, k = 1..n, ascending magnitude last."""
    h = L / (n + 1)
    k = np.arange(1, n + 1)
    return c - (4.0 * diffusivity / h**2) * np.sin(k * np.pi * h / (2.0 * L)) ** 2


def build_dirichlet_laplacian(n: int, L: float, c: float = 0.0,
                              diffusivity: float = 1.0) -> EvolutionSystem:
    """Second-difference Dirichlet Laplacian plus c*I on n interior nodes:
    A = diffusivity * tridiag(1, -2, 1) / h^2 + c * I.

    Returns a system skeleton (generator only); attach input operators and
    couplings via the with_* helpers.
    """
    if n < 3:
        raise ValueError("need n >= 3 interior nodes")
    if not (L > 0 and diffusivity > 0):
        raise ValueError("L and diffusivity must be positive")
    grid = Grid1D(n, L)
    h = grid.h
    A = np.zeros((n, n))
    off = diffusivity / h**2
    idx = np.arange(n)
    A[idx, idx] = -2.0 * off + c
    A[idx[:-1], idx[:-1] + 1] = off
    A[idx[:-1] + 1, idx[:-1]] = off
    return EvolutionSystem(grid, A, name=f"laplacian(n={n}, L={L}, c={c}, d={diffusivity})")


def build_tan_input_operator(grid: Grid1D) -> np.ndarray:
    """Diagonal input operator with entries (tan l_i)^(1/8) on (0, pi/2).

    The weight is singular at pi/2; interior nodes keep it finite, and a grid
    touching the endpoint is rejected.
    """
    if abs(grid.L - math.pi / 2) > 1e-9:
        raise ValueError("tangent input operator is defined on (0, pi/2)")
    nodes = grid.nodes
    if nodes[-1] >= math.pi / 2:
        raise ValueError("singular endpoint: node at or beyond pi/2")
    return np.tan(nodes) ** 0.125


def build_hat_input(grid: Grid1D, b: float, c: float) -> GridFunction:
    """Worst-case input profile: constant b left of arctan(c^8), then
    b c (tan l)^(-1/8).  Its sup norm is b while the weighted image peaks
    at b*c.

    Node-wise sup norms match the continuum values only where the grid
    resolves the profile: the plateau needs a node below arctan(c^8) (any
    grid once c >= 1) and the weighted peak needs one above it.
    """
    if not (b > 0 and c > 0):
        raise ValueError("b and c must be positive")
    nodes = grid.nodes
    breakpoint_l = math.atan(c**8)
    vals = np.where(nodes < breakpoint_l, b, b * c * np.tan(nodes) ** -0.125)
    return GridFunction(grid, vals)


def build_saturated_bilinearity(grid: Grid1D) -> BilinearMap:
    """Pointwise coupling x u / (1 + |l - 1| x^2).

    The denominator never falls below one, so ||C(x,u)|| <= ||x|| * ||u||_sup
    in any monotone state norm (bound constant 1, gain the identity).
    """
    weight = np.abs(grid.nodes - 1.0)

    def fn(x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return x * u / (1.0 + weight * x * x)

    return BilinearMap(fn, 1.0, ComparisonFunction.identity(), "sup", "saturated")


def build_multiplicative_bilinearity(grid: Grid1D) -> BilinearMap:
    """Plain pointwise product x u; a constant input level c shifts the
    generator spectrum by c."""

    def fn(x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return x * u

    return BilinearMap(fn, 1.0, ComparisonFunction.identity(), "sup", "multiplicative")


def tan_half_power_integral() -> float:
    """Adaptive quadrature of int_0^{pi/2} sqrt(tan l) dl with the endpoint
    singularity removed by l = pi/2 - s^2 (analytic value pi / sqrt(2))."""
    split = 1.0

    def regular(l: float) -> float:
        return math.sqrt(math.tan(l))

    def near_endpoint(s: float) -> float:
        # l = pi/2 - s^2, dl = -2 s ds; sqrt(tan l) = sqrt(cos(s^2)/sin(s^2))
        ss = s * s
        return 2.0 * s * math.sqrt(math.cos(ss) / math.sin(ss))

    left, _ = quad(regular, 0.0, split, limit=200)
    right, _ = quad(near_endpoint, 0.0, math.sqrt(math.pi / 2 - split), limit=200)
    return left + right


def check_bilinear_bound(grid: Grid1D, bm: BilinearMap, state_norm: str = "L2",
                         samples: int = 1000, amplitude: float = 5.0,
                         rng: Optional[np.random.Generator] = None) -> float:
    """Spot-check ||C(x,u)|| <= bound_const * ||x|| * xi(||u||) on random
    fields; returns the worst ratio of left to right side (<= 1 when the
    certificate holds)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    worst = 0.0
    for _ in range(samples):
        x = rng.uniform(-amplitude, amplitude, grid.n)
        u = rng.uniform(-amplitude, amplitude, grid.n)
        lhs = norm(bm.fn(x, u), state_norm, grid.h)
        rhs = bm.bound_const * norm(x, state_norm, grid.h) * bm.xi(norm(u, bm.input_norm, grid.h))
        if rhs > 0:
            worst = max(worst, lhs / rhs)
        elif lhs > 0:
            return math.inf
    return worst


def operator_norm(B: np.ndarray, input_norm: str, state_norm: str) -> float:
    """Operator norm of a diagonal input operator between the supported
    norm pairs (L2 -> L2 and sup -> sup both reduce to max |entry|)."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 1:
        raise ValueError("only diagonal input operators are supported")
    if (input_norm, state_norm) in (("L2", "L2"), ("sup", "sup")):
        return float(np.max(np.abs(B)))
    raise ValueError(f"no norm formula for {input_norm} -> {state_norm}")
