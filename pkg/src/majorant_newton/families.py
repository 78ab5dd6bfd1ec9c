"""Built-in majorant families: Hoelder, Lipschitz, generalized Lipschitz, examples."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .scalar import (
    MajorantError,
    MajorantModel,
    RadiiReport,
    compute_nu,
    verify_h3,
)

CONDITION_H_SAMPLES = 512


@dataclass(frozen=True)
class HolderParams:
    K: float
    p: float

    def __post_init__(self):
        if not self.K > 0:
            raise MajorantError(f"Hoelder constant K must be positive, got {self.K}")
        if not 0 < self.p <= 1:
            raise MajorantError(f"Hoelder exponent p must lie in (0, 1], got {self.p}")


def holder_model(params: HolderParams) -> MajorantModel:
    """``f(t) = K t^(p+1)/(p+1) - t``, satisfying h1-h3 with exponent p."""
    K, p = params.K, params.p
    return MajorantModel(
        f=lambda t: K * t ** (p + 1) / (p + 1) - t,
        fprime=lambda t: K * t ** p - 1.0,
        p=p,
        lin_error=lambda t: K * p * t ** (p + 1) / (p + 1),
        name=f"holder(K={K:g}, p={p:g})",
    )


def holder_radii(params: HolderParams, kappa: float) -> RadiiReport:
    """Closed-form radii of the Hoelder majorant."""
    if not kappa > 0:
        raise MajorantError(f"kappa must be positive, got {kappa}")
    K, p = params.K, params.p
    nu = (1.0 / K) ** (1.0 / p)
    rho = ((p + 1) / ((2 * p + 1) * K)) ** (1.0 / p)
    sigma = min(kappa, ((p + 1) / K) ** (1.0 / p))
    return RadiiReport(kappa=kappa, nu=nu, rho=rho, sigma=sigma, r=min(kappa, rho),
                       rho_is_optimal=rho < kappa, tolerances={"closed_form": True})


def lipschitz_radius(L_op: float, inv_norm: float) -> float:
    """Convergence radius ``2/(3 L ||F'(x*)^-1||)`` under a Lipschitz derivative."""
    if not (L_op > 0 and inv_norm > 0):
        raise MajorantError("Lipschitz constant and inverse norm must be positive")
    return 2.0 / (3.0 * L_op * inv_norm)


def lipschitz_model(L_op: float, inv_norm: float = 1.0) -> MajorantModel:
    """Hoelder majorant with p = 1 and ``K = L ||F'(x*)^-1||``."""
    return holder_model(HolderParams(K=L_op * inv_norm, p=1.0))


class LipschitzDensity:
    """Positive density L on ``(0, R)`` given as polynomial pieces.

    Each piece is ``(start, end, coeffs)`` with
    ``L(u) = sum(c_j * u**j)`` on ``[start, end)`` and degree at most 3.
    Pieces must be contiguous, start at 0 and have increasing breakpoints.
    Integrals ``int_0^t L(u) du`` and ``int_0^t L(u) u du`` are evaluated
    in closed form.
    """

    def __init__(self, segments: Sequence, quadrature_error: float = 0.0):
        segs = []
        for seg in segments:
            a, b, coeffs = float(seg[0]), float(seg[1]), [float(c) for c in seg[2]]
            if not coeffs or len(coeffs) > 4:
                raise MajorantError("each piece needs 1 to 4 coefficients (degree <= 3)")
            segs.append((a, b, np.array(coeffs)))
        if not segs:
            raise MajorantError("density needs at least one piece")
        if segs[0][0] != 0.0:
            raise MajorantError("first piece must start at 0")
        for (a, b, _), nxt in zip(segs, segs[1:] + [None]):
            if not b > a:
                raise MajorantError(f"breakpoints must increase, got [{a}, {b})")
            if nxt is not None and nxt[0] != b:
                raise MajorantError(f"pieces are not contiguous at {b}")
        self.segments = segs
        self.R = segs[-1][1]
        self.quadrature_error = quadrature_error
        # cumulative integrals at each piece start
        self._c1 = [0.0]
        self._c2 = [0.0]
        for a, b, c in segs[:-1]:
            self._c1.append(self._c1[-1] + _poly_int(c, a, b, 0))
            self._c2.append(self._c2[-1] + _poly_int(c, a, b, 1))
        self._starts = np.array([s[0] for s in segs])
        self._check_positive()

    @classmethod
    def constant(cls, K: float, R: float = math.inf) -> "LipschitzDensity":
        return cls([(0.0, R, [K])])

    @classmethod
    def tabulated(cls, u: Sequence[float], values: Sequence[float]) -> "LipschitzDensity":
        """Piecewise-linear density through samples ``(u_i, L_i)``, ``u_0 = 0``.

        Its first integral coincides with the composite trapezoid rule on the
        samples. ``quadrature_error`` holds a Richardson estimate of that
        rule's error against the underlying density.
        """
        u = np.asarray(u, dtype=float)
        v = np.asarray(values, dtype=float)
        if u.ndim != 1 or u.size < 2 or u.size != v.size:
            raise MajorantError("tabulated density needs at least 2 matching samples")
        if u[0] != 0.0 or np.any(np.diff(u) <= 0):
            raise MajorantError("abscissae must start at 0 and strictly increase")
        segs = []
        for a, b, la, lb in zip(u[:-1], u[1:], v[:-1], v[1:]):
            slope = (lb - la) / (b - a)
            segs.append((a, b, [la - slope * a, slope]))
        fine = np.trapezoid(v, u)
        coarse = np.trapezoid(v[::2], u[::2]) if u.size >= 3 and (u.size - 1) % 2 == 0 else fine
        return cls(segs, quadrature_error=abs(fine - coarse) / 3.0)

    def _check_positive(self):
        for a, b, c in self.segments:
            hi = b if math.isfinite(b) else a + 1e3
            vals = np.polyval(c[::-1], np.linspace(a, hi, 65))
            # a zero at an isolated breakpoint (e.g. L(u) = 2u at 0) is allowed
            if np.any(vals[1:-1] <= 0) or vals[0] < 0 or vals[-1] < 0:
                raise MajorantError(f"density is not positive on [{a}, {b})")

    def _locate(self, t: float) -> int:
        if t < 0 or t > self.R:
            raise MajorantError(f"t={t} outside density domain [0, {self.R}]")
        return max(int(np.searchsorted(self._starts, t, side="right")) - 1, 0)

    def __call__(self, u: float) -> float:
        c = self.segments[self._locate(u)][2]
        return float(np.polyval(c[::-1], u))

    def integral(self, t: float) -> float:
        """``int_0^t L(u) du``."""
        i = self._locate(t)
        a, _, c = self.segments[i]
        return self._c1[i] + _poly_int(c, a, t, 0)

    def moment(self, t: float) -> float:
        """``int_0^t L(u) u du``."""
        i = self._locate(t)
        a, _, c = self.segments[i]
        return self._c2[i] + _poly_int(c, a, t, 1)

    def to_json(self) -> list:
        return [{"breakpoint_start": a, "breakpoint_end": b, "coefficients": list(map(float, c))}
                for a, b, c in self.segments]


def _poly_int(c: np.ndarray, a: float, b: float, shift: int) -> float:
    # int_a^b sum c_j u^(j+shift) du
    total = 0.0
    for j, cj in enumerate(c):
        n = j + shift + 1
        total += cj * (b ** n - a ** n) / n
    return total


def load_density(path: str) -> LipschitzDensity:
    """Read a density file: JSON list of pieces or a two-column ``u,L`` CSV."""
    if str(path).endswith(".csv"):
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        try:
            data = [(float(a), float(b)) for a, b in rows]
        except ValueError:
            data = [(float(a), float(b)) for a, b in rows[1:]]
        u, v = zip(*data)
        return LipschitzDensity.tabulated(u, v)
    with open(path) as fh:
        return density_from_json(json.load(fh))


def density_from_json(pieces: list) -> LipschitzDensity:
    return LipschitzDensity(
        [(p["breakpoint_start"], p["breakpoint_end"], p["coefficients"]) for p in pieces])


def check_condition_h(L: LipschitzDensity, p: float, nu: float,
                      samples: int = CONDITION_H_SAMPLES) -> bool:
    """Sampled check that ``t^(1-p) L(t)`` is nondecreasing on (0, nu)."""
    if not 0 <= p <= 1:
        raise MajorantError(f"p must lie in [0, 1], got {p}")
    top = min(nu, L.R) * (1 - 1e-12)
    ts = top * np.logspace(-8, 0, samples)
    vals = np.array([t ** (1 - p) * L(float(t)) for t in ts])
    return bool(np.all(np.diff(vals) >= -4 * np.finfo(float).eps * np.abs(vals[:-1])))


def generalized_model(L: LipschitzDensity, p: Optional[float] = None) -> MajorantModel:
    """``f(t) = int_0^t L(u)(t-u) du - t`` and ``f'(t) = int_0^t L(u) du - 1``.

    When ``p`` is given the model carries it as rate exponent, provided the
    condition on ``t^(1-p) L(t)`` passes; otherwise MajorantError is raised.
    """
    model = MajorantModel(
        f=lambda t: t * L.integral(t) - L.moment(t) - t,
        fprime=lambda t: L.integral(t) - 1.0,
        R=L.R,
        lin_error=L.moment,
        name="generalized",
    )
    if p is not None:
        if not check_condition_h(L, p, compute_nu(model)):
            raise MajorantError(f"t^(1-p) L(t) is not nondecreasing for p={p}")
        model = model.with_p(p)
    return model


def generalized_q(L: LipschitzDensity, t0: float) -> float:
    """Contraction factor ``int_0^t0 L u du / [t0 (1 - int_0^t0 L du)]``."""
    return L.moment(t0) / (t0 * (1.0 - L.integral(t0)))


def _expq_gap(t: float) -> float:
    # t f'(t) - f(t) = t^2 + [1 - (1+t) e^-t]; series avoids cancellation near 0
    if t < 0.1:
        term, s, n = t * t / 2.0, 0.0, 2
        while abs(term) > 1e-18 * abs(s) or n == 2:
            s += (n - 1) * term
            n += 1
            term *= -t / n
        return t * t + s
    return t * t + 1.0 - (1.0 + t) * math.exp(-t)


def power_model(p: float) -> MajorantModel:
    """``f(t) = t^(1+p) - t``, the Hoelder majorant with ``K = 1 + p``."""
    if not 0 < p <= 1:
        raise MajorantError(f"power family needs p in (0, 1], got {p}")
    return MajorantModel(
        f=lambda t: t ** (1 + p) - t,
        fprime=lambda t: (1 + p) * t ** p - 1.0,
        p=p,
        lin_error=lambda t: p * t ** (1 + p),
        name=f"power(p={p:g})",
    )


def exp_quadratic_model(p: Optional[float] = 1.0) -> MajorantModel:
    """``f(t) = e^-t + t^2 - 1``.

    ``p`` is a candidate exponent; it is kept only if sampled h3 passes.
    """
    model = MajorantModel(
        f=lambda t: math.expm1(-t) + t * t,
        fprime=lambda t: 2.0 * t - math.exp(-t),
        lin_error=_expq_gap,
        name="exp_quadratic",
    )
    if p is not None and verify_h3(model, p):
        model = model.with_p(p)
    return model


def example_models(name: str, p: Optional[float] = None) -> MajorantModel:
    if name == "power":
        if p is None:
            raise MajorantError("power example needs p")
        return power_model(p)
    if name == "power_5_3":
        return power_model(2.0 / 3.0)
    if name == "exp_quadratic":
        return exp_quadratic_model(1.0 if p is None else p)
    raise MajorantError(f"unknown example majorant {name!r}")

