"""Runtime checks of the majorant bounds against actual Newton runs.

Each check compares a left-hand side measured on ``F`` with the right-hand
side predicted by the majorant, allowing an additive slack of
``1e-10 (1 + |rhs|)`` for roundoff. Hypothesis checks are sampled, so a
passing result means "no sampled violation", not a proof.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as LA

from .scalar import (
    MajorantError,
    MajorantModel,
    RadiiReport,
    ScalarTrace,
    compute_radii,
    newton_scalar_map,
    scalar_sequence,
)
from .solver import NewtonTrace, Problem, newton_solve, operator_norm

SLACK_REL = 1e-10
EQUALITY_TOL = 1e-12
TAIL_THRESHOLD = 0.1
DEFAULT_SEED = 20090513


class CertificationError(ValueError):
    """A check was asked to run outside its precondition."""


def slack(rhs: float) -> float:
    return SLACK_REL * (1.0 + abs(rhs))


@dataclass
class Violation:
    check: str
    where: object
    lhs: float
    rhs: float


@dataclass
class CheckResult:
    """Outcome of one family of comparisons ``lhs <= rhs``.

    ``worst_margin`` is the smallest ``rhs - lhs`` seen, ``max_gap`` the
    largest ``|rhs - lhs|`` (used for equality cases).
    """

    check: str
    ok: bool = True
    worst_margin: float = math.inf
    max_gap: float = 0.0
    count: int = 0
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok

    def compare(self, where, lhs: float, rhs: float) -> None:
        margin = rhs - lhs
        self.count += 1
        self.worst_margin = min(self.worst_margin, margin)
        self.max_gap = max(self.max_gap, abs(margin))
        if not margin >= -slack(rhs):
            self.ok = False
            self.violations.append(Violation(self.check, where, float(lhs), float(rhs)))

    def fail(self, where, lhs: float, rhs: float) -> None:
        self.ok = False
        self.violations.append(Violation(self.check, where, float(lhs), float(rhs)))


def _inv_times(problem: Problem, A: np.ndarray) -> np.ndarray:
    J0 = problem.jacobian(problem.x_star)
    return LA.solve(J0, A)


def _need_root(problem: Problem):
    if problem.x_star is None:
        raise CertificationError(f"{problem.name}: certification needs a known root")


def _directions(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]] * ((count + 1) // 2))[:count]
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    rand = rng.standard_normal((max(count - len(axes), 0), dim))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    return np.vstack([axes, rand])[:max(count, 1)]


def check_majorant_hypothesis(problem: Problem, model: MajorantModel, samples: int = 64,
                              taus: Optional[Sequence[float]] = None,
                              seed: int = DEFAULT_SEED) -> CheckResult:
    """Sample ``||F'(x*)^-1 [F'(x) - F'(x* + tau(x - x*))]|| <= f'(s) - f'(tau s)``.

    ``s = ||x - x*||`` is drawn from ``(0, kappa)``, log-spaced and uniform,
    and ``tau`` runs over an 11-point grid on [0, 1] unless given.
    """
    _need_root(problem)
    rng = np.random.default_rng(seed)
    taus = np.linspace(0.0, 1.0, 11) if taus is None else np.asarray(taus, dtype=float)
    top = min(problem.kappa, model.R)
    if math.isinf(top):
        raise CertificationError("hypothesis sampling needs a finite kappa or R")
    n_log = samples // 2
    radii = np.concatenate([top * np.logspace(-6, 0, n_log, endpoint=False),
                            top * rng.uniform(0.0, 1.0, samples - n_log)])
    radii = radii[radii > 0]
    dirs = _directions(problem.dim, samples, rng)
    J0 = problem.jacobian(problem.x_star)
    res = CheckResult("hypothesis")
    for i, s in enumerate(radii):
        d = dirs[i % len(dirs)]
        x = problem.x_star + s * d
        Jx = problem.jacobian(x)
        for tau in taus:
            Jt = problem.jacobian(problem.x_star + tau * (x - problem.x_star))
            lhs = operator_norm(LA.solve(J0, Jx - Jt))
            rhs = model.fprime(float(s)) - model.fprime(float(tau * s))
            res.compare({"radius": float(s), "tau": float(tau)}, lhs, rhs)
    return res


def _errors(trace: NewtonTrace) -> list:
    if trace.error_norms is None:
        raise CertificationError("trace has no error norms; the root is unknown")
    return trace.error_norms


def check_invertibility_bound(problem: Problem, model: MajorantModel, trace: NewtonTrace,
                              nu: Optional[float] = None) -> CheckResult:
    """``||F'(x_k)^-1 F'(x*)|| <= 1/|f'(||x_k - x*||)|`` along a trace."""
    _need_root(problem)
    if nu is None:
        nu = compute_radii(model, problem.kappa).nu
    limit = min(problem.kappa, nu)
    J0 = problem.jacobian(problem.x_star)
    res = CheckResult("invertibility")
    for k, (x, e) in enumerate(zip(trace.iterates, _errors(trace))):
        if e >= limit:
            raise CertificationError(f"iterate {k} at distance {e} is outside min(kappa, nu)={limit}")
        lhs = operator_norm(LA.solve(problem.jacobian(x), J0))
        rhs = 1.0 / abs(model.fprime(e))
        res.compare(k, lhs, rhs)
    return res


def check_linearization_bound(problem: Problem, model: MajorantModel,
                              trace: NewtonTrace) -> CheckResult:
    """``||F'(x*)^-1 E_F(x_k, x*)|| <= e_f(||x_k - x*||, 0)`` along a trace.

    ``E_F(x, y) = F(y) - F(x) - F'(x)(y - x)`` and
    ``e_f(t, 0) = f(0) - f(t) + t f'(t)``.
    """
    _need_root(problem)
    xs = problem.x_star
    Fs = problem.residual(xs)
    res = CheckResult("linearization")
    for k, (x, e) in enumerate(zip(trace.iterates, _errors(trace))):
        if e >= problem.kappa:
            raise CertificationError(f"iterate {k} lies outside the domain ball")
        E = Fs - problem.residual(x) - problem.jacobian(x) @ (xs - x)
        lhs = float(np.linalg.norm(_inv_times(problem, E)))
        res.compare(k, lhs, model.gap(e))
    return res


def check_envelope(trace: NewtonTrace, scalar: ScalarTrace) -> CheckResult:
    """``||x_k - x*|| <= t_k`` on the common prefix of both traces."""
    res = CheckResult("envelope")
    for k, (e, t) in enumerate(zip(_errors(trace), scalar.t)):
        res.compare(k, e, t)
    return res


def check_contraction(trace: NewtonTrace, model: MajorantModel) -> CheckResult:
    """``||x_{k+1} - x*|| <= |n_f(||x_k - x*||)|`` for each step."""
    errs = _errors(trace)
    res = CheckResult("contraction")
    for k in range(len(errs) - 1):
        try:
            rhs = abs(newton_scalar_map(model, errs[k]))
        except MajorantError:
            res.fail(k, errs[k + 1], math.nan)
            continue
        res.compare(k, errs[k + 1], rhs)
    return res


@dataclass
class RateReport:
    """Rate diagnostics of one Newton run.

    ``tail_ratio`` is the last ``||x_{k+1} - x*|| / ||x_k - x*||``; the
    limit-zero claim is operationalized as ``tail_ratio < 0.1``.
    """

    tail_ratio: float
    linear_ratios: list
    superlinear_ok: bool
    tail_monotone: bool
    order: Optional[CheckResult] = None
    order_ratios_decreasing: Optional[bool] = None

    @property
    def ok(self) -> bool:
        ok = self.superlinear_ok
        if self.order is not None:
            ok = ok and self.order.ok and bool(self.order_ratios_decreasing)
        return ok


def check_rates(trace: NewtonTrace, scalar: Optional[ScalarTrace] = None,
                p: Optional[float] = None, min_steps: int = 3,
                threshold: float = TAIL_THRESHOLD) -> RateReport:
    """Superlinear tail and, with ``p``, the order ``p + 1`` bound

    ``||x_{k+1} - x*|| <= (t_{k+1}/t_k^(p+1)) ||x_k - x*||^(p+1)``.

    Raises:
        CertificationError: with fewer than ``min_steps`` steps taken from a
            nonzero error.
    """
    errs = _errors(trace)
    lin = [b / a for a, b in zip(errs, errs[1:]) if a > 0]
    if len(lin) < min_steps:
        raise CertificationError(f"need at least {min_steps} steps for rate diagnostics, got {len(lin)}")
    tail = lin[-3:]
    rep = RateReport(
        tail_ratio=lin[-1],
        linear_ratios=lin,
        superlinear_ok=lin[-1] < threshold,
        tail_monotone=all(b < a for a, b in zip(tail, tail[1:])),
    )
    if p is not None:
        if scalar is None:
            raise CertificationError("order check needs the majorizing sequence")
        q = p + 1
        order = CheckResult("order")
        ts = scalar.t
        for k in range(min(len(errs), len(ts)) - 1):
            if ts[k] <= 0 or ts[k + 1] <= 0:
                break
            order.compare(k, errs[k + 1], ts[k + 1] / ts[k] ** q * errs[k] ** q)
        ratios = [b / a ** q for a, b in zip(ts, ts[1:]) if a > 0 and b > 0]
        rep.order = order
        rep.order_ratios_decreasing = all(b < a for a, b in zip(ratios, ratios[1:]))
    return rep


def check_uniqueness(problem: Problem, model: MajorantModel, sigma: float, probes: int = 20,
                     seed: int = DEFAULT_SEED, max_iters: int = 100) -> CheckResult:
    """Look for a second zero of ``F`` inside the open ball ``B(x*, sigma)``.

    Newton runs start from random points of the ball; a converged limit
    strictly inside the ball but away from ``x*`` is a violation, as is a
    sampled point ``y != x*`` with ``||F(y)|| <= 1e-12``. Limits on the
    sphere of radius sigma are outside the open ball and are not flagged.
    """
    _need_root(problem)
    rng = np.random.default_rng(seed)
    xs = problem.x_star
    res = CheckResult("uniqueness")
    inner = sigma * (1 - 1e-8)
    for i in range(probes):
        d = rng.standard_normal(problem.dim)
        d /= np.linalg.norm(d)
        s = sigma * rng.uniform(0.0, 1.0)
        y = xs + s * d
        ry = float(np.linalg.norm(problem.residual(y)))
        if s > 0 and ry <= 1e-12:
            res.fail({"probe": i, "kind": "residual", "radius": s}, 1e-12, ry)
        if s >= problem.kappa:
            continue
        tr = newton_solve(problem, y, max_iters=max_iters)
        res.count += 1
        if tr.converged:
            dist = float(np.linalg.norm(tr.iterates[-1] - xs))
            if 1e-8 < dist < inner:
                res.fail({"probe": i, "kind": "limit", "start_radius": s}, dist, 1e-8)
    return res


@dataclass
class CertificationReport:
    hypothesis_ok: bool
    hypothesis_margin: float
    envelope_ok: bool
    invertibility_ok: bool
    taylor_ok: bool
    contraction_ok: bool
    order_ok: Optional[bool]
    superlinear_tail: float
    violations: list
    radii: dict
    uniqueness_ok: Optional[bool] = None
    margins: dict = field(default_factory=dict)
    runs: int = 0
    note: str = ("hypothesis checks are sampled: ok means no sampled violation; "
                 "superlinear limit operationalized as tail ratio < 0.1")

    @property
    def ok(self) -> bool:
        flags = [self.hypothesis_ok, self.envelope_ok, self.invertibility_ok,
                 self.taylor_ok, self.contraction_ok]
        if self.order_ok is not None:
            flags.append(self.order_ok)
        if self.uniqueness_ok is not None:
            flags.append(self.uniqueness_ok)
        return all(flags)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), default=_jsonable, **kw)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o)}")


def certify(problem: Problem, model: MajorantModel, starts, samples: int = 64,
            probes: int = 20, seed: int = DEFAULT_SEED, max_iters: int = 100,
            step_atol: float = 1e-15, residual_atol: float = 1e-15,
            radii: Optional[RadiiReport] = None) -> CertificationReport:
    """Run every check for ``problem`` against ``model`` from each start in ``starts``.

    Starts must lie in ``B(x*, r)``. A check that cannot run because an
    iterate leaves the region where the bound is defined is reported as a
    violation.
    """
    _need_root(problem)
    starts = [np.asarray(x0, dtype=float).reshape(problem.dim) for x0 in starts]
    if radii is None:
        radii = compute_radii(model, problem.kappa)
    hyp = check_majorant_hypothesis(problem, model, samples=samples, seed=seed)
    totals = {name: CheckResult(name) for name in
              ("envelope", "invertibility", "linearization", "contraction", "order")}
    tails = []
    for j, x0 in enumerate(starts):
        t0 = float(np.linalg.norm(x0 - problem.x_star))
        if t0 >= radii.r:
            raise CertificationError(f"start {j} at distance {t0} is not inside r={radii.r}")
        trace = newton_solve(problem, x0, max_iters=max_iters, step_atol=step_atol,
                             residual_atol=residual_atol)
        parts = [check_contraction(trace, model)]
        for fn, name in ((check_invertibility_bound, "invertibility"),
                         (check_linearization_bound, "linearization")):
            try:
                parts.append(fn(problem, model, trace) if name == "linearization"
                             else fn(problem, model, trace, radii.nu))
            except CertificationError as exc:
                bad = CheckResult(name)
                bad.fail({"run": j, "error": str(exc)}, math.nan, math.nan)
                parts.append(bad)
        if t0 > 0:
            scalar = scalar_sequence(model, t0, max_iters=max_iters, radius=radii.r)
            parts.append(check_envelope(trace, scalar))
            try:
                rates = check_rates(trace, scalar, model.p)
                tails.append(rates.tail_ratio)
                if rates.order is not None:
                    parts.append(rates.order)
                    if not rates.order_ratios_decreasing:
                        rates.order.fail({"run": j, "kind": "ratios_not_decreasing"}, math.nan, math.nan)
            except CertificationError:
                pass
        for part in parts:
            _merge(totals[part.check], part, j)
    uniq = None
    if probes:
        uniq = check_uniqueness(problem, model, radii.sigma, probes=probes, seed=seed)
    violations = list(hyp.violations)
    for part in list(totals.values()) + ([uniq] if uniq is not None else []):
        violations.extend(part.violations)
    has_order = model.p is not None and totals["order"].count > 0
    return CertificationReport(
        hypothesis_ok=hyp.ok,
        hypothesis_margin=hyp.worst_margin,
        envelope_ok=totals["envelope"].ok,
        invertibility_ok=totals["invertibility"].ok,
        taylor_ok=totals["linearization"].ok,
        contraction_ok=totals["contraction"].ok,
        order_ok=totals["order"].ok if has_order else None,
        superlinear_tail=max(tails) if tails else math.nan,
        violations=[asdict(v) for v in violations],
        radii=radii.as_dict(),
        uniqueness_ok=None if uniq is None else uniq.ok,
        margins={name: {"worst_margin": c.worst_margin, "max_gap": c.max_gap, "count": c.count}
                 for name, c in [("hypothesis", hyp)] + list(totals.items())},
        runs=len(starts),
    )


def _merge(total: CheckResult, part: CheckResult, run: int) -> None:
    total.ok = total.ok and part.ok
    total.count += part.count
    total.worst_margin = min(total.worst_margin, part.worst_margin)
    total.max_gap = max(total.max_gap, part.max_gap)
    for v in part.violations:
        total.violations.append(Violation(v.check, {"run": run, "at": v.where}, v.lhs, v.rhs))
