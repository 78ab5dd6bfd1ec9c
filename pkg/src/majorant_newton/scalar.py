"""Scalar majorant calculus.

A majorant is a scalar function ``f`` on ``[0, R)`` with ``f(0) = 0``,
``f'(0) = -1`` and ``f'`` strictly increasing. Everything the local theory
needs (the radii, the scalar Newton map and the majorizing sequence) is
computed here from ``f`` and ``f'`` alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

ScalarFn = Callable[[float], float]

SCAN_POINTS = 4096
SCAN_CAP = 1e8
ROOT_ATOL = 1e-12
MAX_BISECTIONS = 200
HYPOTHESIS_SAMPLES = 512
OPTIMALITY_TOL = 1e-8


class MajorantError(ValueError):
    """The model violates a majorant condition or is used outside its domain."""


@dataclass(frozen=True)
class MajorantModel:
    """Scalar majorant ``f`` with its derivative.

    Attributes:
        f: Majorant function on ``[0, R)``.
        fprime: Derivative of ``f``.
        R: Right end of the domain, may be ``math.inf``.
        p: Rate exponent for which h3 is claimed, or None.
        lin_error: Optional closed form of ``t f'(t) - f(t)``. When given it
            replaces the cancellation-prone difference in the scalar Newton
            map, which keeps the tail of the majorizing sequence accurate.
        name: Label used in reports.
    """

    f: ScalarFn
    fprime: ScalarFn
    R: float = math.inf
    p: Optional[float] = None
    lin_error: Optional[ScalarFn] = None
    name: str = "majorant"

    def __post_init__(self):
        if not self.R > 0:
            raise MajorantError(f"domain bound R must be positive, got {self.R}")
        if self.p is not None and not 0.0 <= self.p <= 1.0:
            raise MajorantError(f"rate exponent p must lie in [0, 1], got {self.p}")

    def with_p(self, p: Optional[float]) -> "MajorantModel":
        return MajorantModel(self.f, self.fprime, self.R, p, self.lin_error, self.name)

    def gap(self, t: float) -> float:
        """Linearization error ``e_f(t, 0) = t f'(t) - f(t)`` (nonnegative)."""
        if self.lin_error is not None:
            return float(self.lin_error(t))
        return t * self.fprime(t) - self.f(t)


@dataclass
class RadiiReport:
    kappa: float
    nu: float
    rho: float
    sigma: float
    r: float
    rho_is_optimal: bool
    unbounded: bool = False
    rho_noncontiguous: bool = False
    tolerances: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "nu": self.nu,
            "rho": self.rho,
            "sigma": self.sigma,
            "r": self.r,
            "rho_is_optimal": self.rho_is_optimal,
            "unbounded": self.unbounded,
            "rho_noncontiguous": self.rho_noncontiguous,
            "tolerances": dict(self.tolerances),
        }


@dataclass
class ScalarTrace:
    """Majorizing sequence ``t_0, t_1, ...`` with its rate ratios."""

    t: list
    ratio_linear: list
    ratio_order: Optional[list] = None
    p: Optional[float] = None


def newton_scalar_map(model: MajorantModel, t: float) -> float:
    """Scalar Newton map ``n_f(t) = t - f(t)/f'(t)``.

    Nonpositive on ``[0, nu)`` for a valid model.

    Raises:
        MajorantError: if ``t`` is negative or ``f'(t) >= 0`` (``t`` is not
            below nu).
    """
    if t < 0:
        raise MajorantError(f"scalar Newton map needs t >= 0, got {t}")
    d = model.fprime(t)
    if not d < 0:
        raise MajorantError(f"f'({t}) = {d} is not negative; t lies outside (0, nu)")
    if model.lin_error is not None:
        return model.gap(t) / d
    return t - model.f(t) / d


def rho_function(model: MajorantModel, t: float) -> float:
    """``[f(t)/f'(t) - t]/t``, i.e. ``|n_f(t)|/t``; rho is where it reaches 1."""
    return -newton_scalar_map(model, t) / t


def _finite_upper(model: MajorantModel, bound: float) -> tuple[float, bool]:
    upper = min(model.R, bound)
    if math.isinf(upper):
        return SCAN_CAP, True
    return upper, False


def _scan_grid(upper: float, n: int = SCAN_POINTS) -> np.ndarray:
    # uniform points plus a log-spaced family so that small radii are resolved
    uniform = upper * np.arange(1, n) / n
    logs = upper * np.logspace(-12, 0, n, endpoint=False)
    return np.unique(np.concatenate([uniform, logs]))


def _bisect(pred: Callable[[float], bool], lo: float, hi: float,
            atol: float = ROOT_ATOL, max_steps: int = MAX_BISECTIONS) -> float:
    # pred(lo) holds, pred(hi) fails; returns the boundary
    for _ in range(max_steps):
        if hi - lo <= atol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _first_failure(pred: Callable[[float], bool], grid: np.ndarray):
    """Index of the first grid point where ``pred`` fails, or None."""
    for i, t in enumerate(grid):
        if not pred(float(t)):
            return i
    return None


def _sup_of_initial_interval(pred, upper: float, atol: float) -> tuple[float, Optional[int], np.ndarray]:
    grid = _scan_grid(upper)
    i = _first_failure(pred, grid)
    if i is None:
        return upper, None, grid
    lo = 0.0 if i == 0 else float(grid[i - 1])
    return _bisect(pred, lo, float(grid[i]), atol), i, grid


def compute_nu(model: MajorantModel, atol: float = ROOT_ATOL) -> float:
    """Supremum of ``{t in [0, R): f'(t) < 0}``.

    The zero of ``f'`` is located by grid bracketing and bisection; when
    ``f'`` stays negative the result is ``R`` (or the scan cap if ``R`` is
    infinite).
    """
    d0 = model.fprime(0.0)
    if not d0 < 0:
        raise MajorantError(f"f'(0) = {d0}; h1 requires f'(0) = -1")
    upper, _ = _finite_upper(model, math.inf)
    nu, _, _ = _sup_of_initial_interval(lambda t: model.fprime(t) < 0, upper, atol)
    return nu


def compute_rho(model: MajorantModel, nu: float, atol: float = ROOT_ATOL,
                report_gaps: bool = False):
    """First crossing of ``|n_f(t)|/t = 1`` in ``(0, nu)``, or ``nu``.

    With ``report_gaps=True`` also returns whether the scan saw the ratio
    fall back below 1 after the first crossing.

    Raises:
        MajorantError: if the ratio is not finite at a scan point.
    """
    def below_one(t):
        h = rho_function(model, t)
        if not math.isfinite(h):
            raise MajorantError(f"non-finite rho ratio {h} at t={t}")
        return h < 1.0

    grid_top = nu * (1 - 1e-12) if math.isfinite(nu) else SCAN_CAP
    rho, i, grid = _sup_of_initial_interval(below_one, grid_top, atol)
    if i is None:
        rho = nu
    gaps = False
    if i is not None and report_gaps:
        gaps = any(below_one(float(t)) for t in grid[i + 1:])
    return (rho, gaps) if report_gaps else rho


def compute_sigma(model: MajorantModel, kappa: float, atol: float = ROOT_ATOL) -> float:
    """Supremum of ``{t in (0, kappa): f(t) < 0}``."""
    upper, _ = _finite_upper(model, kappa)
    sigma, _, _ = _sup_of_initial_interval(lambda t: model.f(t) < 0, upper, atol)
    return min(sigma, kappa)


def compute_radii(model: MajorantModel, kappa: float, atol: float = ROOT_ATOL) -> RadiiReport:
    """All convergence radii of ``model`` on a ball of radius ``kappa``."""
    if not kappa > 0:
        raise MajorantError(f"kappa must be positive, got {kappa}")
    verify_h1(model)
    nu = compute_nu(model, atol)
    rho, gaps = compute_rho(model, nu, atol, report_gaps=True)
    sigma = compute_sigma(model, kappa, atol)
    unbounded = math.isinf(model.R) and nu >= SCAN_CAP
    optimal = False
    if rho < nu and rho < kappa:
        optimal = abs(rho_function(model, rho) - 1.0) <= OPTIMALITY_TOL
    return RadiiReport(
        kappa=kappa, nu=nu, rho=rho, sigma=sigma, r=min(kappa, rho),
        rho_is_optimal=optimal, unbounded=unbounded, rho_noncontiguous=gaps,
        tolerances={"root_atol": atol, "scan_points": SCAN_POINTS,
                    "max_bisections": MAX_BISECTIONS, "scan_cap": SCAN_CAP,
                    "optimality_tol": OPTIMALITY_TOL},
    )


def verify_h1(model: MajorantModel, tol: float = 1e-14) -> None:
    """Raise unless ``f(0) = 0`` and ``f'(0) = -1``."""
    f0, d0 = model.f(0.0), model.fprime(0.0)
    if abs(f0) > tol or abs(d0 + 1.0) > tol:
        raise MajorantError(f"h1 violated: f(0)={f0}, f'(0)={d0}")


def _log_samples(upper: float, n: int) -> np.ndarray:
    return upper * np.logspace(-8, 0, n, endpoint=False)


def verify_h2(model: MajorantModel, upper: Optional[float] = None,
              samples: int = HYPOTHESIS_SAMPLES) -> bool:
    """Sampled strict monotonicity of ``f'``. A tie counts as a failure."""
    if upper is None:
        upper, _ = _finite_upper(model, math.inf)
    ts = np.concatenate([[0.0], _log_samples(upper, samples)])
    vals = np.array([model.fprime(float(t)) for t in ts])
    return bool(np.all(np.diff(vals) > 0))


def h3_values(model: MajorantModel, p: float, ts) -> np.ndarray:
    return np.array([-newton_scalar_map(model, float(t)) / float(t) ** (p + 1) for t in ts])


def verify_h3(model: MajorantModel, p: float, nu: Optional[float] = None,
              samples: int = HYPOTHESIS_SAMPLES) -> bool:
    """Sampled strict monotonicity of ``[f(t)/f'(t) - t]/t^(p+1)`` on (0, nu)."""
    if nu is None:
        nu = compute_nu(model)
    ts = _log_samples(nu * (1 - 1e-9), samples)
    return bool(np.all(np.diff(h3_values(model, p, ts)) > 0))


def scalar_sequence(model: MajorantModel, t0: float, max_iters: int = 100,
                    atol: float = 1e-14, radius: Optional[float] = None) -> ScalarTrace:
    """Majorizing sequence ``t_{k+1} = |n_f(t_k)|``.

    Iterates until ``t_k < atol`` or ``max_iters`` steps. ``radius`` is the
    convergence radius r; when omitted, rho of the model is used.

    Raises:
        MajorantError: if ``t0`` or any later nonterminal entry leaves
            ``(0, radius)``.
    """
    if radius is None:
        radius = compute_rho(model, compute_nu(model))
    if not 0 < t0 < radius:
        raise MajorantError(f"t0={t0} is not in (0, {radius})")
    ts = [float(t0)]
    for _ in range(max_iters):
        t = ts[-1]
        if t < atol:
            break
        nxt = abs(newton_scalar_map(model, t))
        if nxt >= t or nxt >= radius:
            raise MajorantError(f"majorizing sequence failed to decrease at t={t}: next {nxt}")
        ts.append(nxt)
    lin = [b / a for a, b in zip(ts, ts[1:])]
    order = None
    if model.p is not None:
        q = model.p + 1
        order = [b / a ** q for a, b in zip(ts, ts[1:])]
    return ScalarTrace(t=ts, ratio_linear=lin, ratio_order=order, p=model.p)


def order_ratios(t, q: float) -> list:
    """``t_{k+1}/t_k^q`` over consecutive positive entries."""
    return [b / a ** q for a, b in zip(t, t[1:]) if a > 0 and b > 0]


def a_priori_bound(t0: float, t1: float, p: float, k: int) -> float:
    """Bound ``t0 (t1/t0)^{[(p+1)^k - 1]/p}``; geometric ``t0 (t1/t0)^k`` at p=0."""
    if not 0 < t1 < t0:
        raise MajorantError(f"need 0 < t1 < t0, got t0={t0}, t1={t1}")
    if k < 0:
        raise MajorantError("k must be nonnegative")
    q = t1 / t0
    if p == 0:
        return t0 * q ** k
    # expm1/log1p keep the exponent exact for small p
    exponent = math.expm1(k * math.log1p(p)) / p
    return t0 * q ** exponent
