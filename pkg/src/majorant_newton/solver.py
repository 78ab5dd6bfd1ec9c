"""Newton's method on R^n with dense LU solves and full iteration traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as LA

from .scalar import MajorantError, MajorantModel, compute_radii

PIVOT_RTOL = 1e-14
DIRECT_NORM_MAX_DIM = 64


@dataclass
class Problem:
    """Nonlinear map ``F`` on a ball of radius ``kappa``.

    The ball is centred at ``x_star`` when the root is known, otherwise at
    the starting point of each solve. Without ``J`` a central-difference
    Jacobian is used.
    """

    dim: int
    F: Callable[[np.ndarray], np.ndarray]
    J: Optional[Callable[[np.ndarray], np.ndarray]] = None
    x_star: Optional[np.ndarray] = None
    kappa: float = math.inf
    name: str = "problem"

    def __post_init__(self):
        if self.x_star is not None:
            self.x_star = np.asarray(self.x_star, dtype=float).reshape(self.dim)
            res = np.linalg.norm(self.residual(self.x_star))
            if res > 1e-12 * (1 + np.linalg.norm(self.x_star)):
                raise ValueError(f"{self.name}: ||F(x_star)|| = {res:g} is not zero")
            if _singular(self.jacobian(self.x_star)):
                raise ValueError(f"{self.name}: F'(x_star) is singular")

    def residual(self, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.F(np.asarray(x, dtype=float)), dtype=float))

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.J is not None:
            return np.atleast_2d(np.asarray(self.J(x), dtype=float))
        return fd_jacobian(self.residual, x)


def fd_jacobian(F, x: np.ndarray) -> np.ndarray:
    """Central differences with step ``sqrt(eps) (1 + |x_i|)``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    cols = []
    for i in range(n):
        h = math.sqrt(np.finfo(float).eps) * (1.0 + abs(x[i]))
        e = np.zeros(n)
        e[i] = h
        cols.append((F(x + e) - F(x - e)) / (2 * h))
    return np.column_stack(cols)


@dataclass
class NewtonTrace:
    iterates: list
    residual_norms: list
    step_norms: list = field(default_factory=list)
    error_norms: Optional[list] = None
    status: str = "max_iters"

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1


def _singular(J: np.ndarray) -> bool:
    if not np.all(np.isfinite(J)):
        return True
    scale = np.linalg.norm(J, np.inf)
    if scale == 0:
        return True
    lu, _ = LA.lu_factor(J, check_finite=False)
    return bool(np.min(np.abs(np.diag(lu))) < PIVOT_RTOL * scale)


def newton_solve(problem: Problem, x0, max_iters: int = 100, step_atol: float = 1e-15,
                 residual_atol: float = 1e-15) -> NewtonTrace:
    """Pure Newton iteration ``x_{k+1} = x_k - F'(x_k)^{-1} F(x_k)``.

    Stops when ``||F(x_k)|| <= residual_atol``, when the last step is at most
    ``step_atol`` or after ``max_iters`` steps. No damping is applied.

    Raises:
        ValueError: if ``x0`` has the wrong shape or lies outside the domain
            ball.
    """
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.size != problem.dim:
        raise ValueError(f"x0 has dimension {x.size}, problem expects {problem.dim}")
    center = problem.x_star if problem.x_star is not None else x.copy()
    if np.linalg.norm(x - center) >= problem.kappa:
        raise ValueError("x0 lies outside the domain ball")

    def err(v):
        return float(np.linalg.norm(v - problem.x_star))

    Fx = problem.residual(x)
    trace = NewtonTrace(iterates=[x.copy()], residual_norms=[float(np.linalg.norm(Fx))],
                        error_norms=[err(x)] if problem.x_star is not None else None)
    for _ in range(max_iters + 1):
        if not np.all(np.isfinite(Fx)):
            trace.status = "nonfinite"
            return trace
        if trace.residual_norms[-1] <= residual_atol:
            trace.status = "converged"
            return trace
        if trace.step_norms and trace.step_norms[-1] <= step_atol:
            trace.status = "converged"
            return trace
        if len(trace.iterates) > max_iters:
            break
        J = problem.jacobian(x)
        if _singular(J):
            trace.status = "singular_jacobian"
            return trace
        step = LA.lu_solve(LA.lu_factor(J, check_finite=False), Fx, check_finite=False)
        x = x - step
        if not np.all(np.isfinite(x)):
            trace.status = "nonfinite"
            return trace
        if np.linalg.norm(x - center) >= problem.kappa:
            trace.status = "left_domain"
            return trace
        Fx = problem.residual(x)
        trace.iterates.append(x.copy())
        trace.residual_norms.append(float(np.linalg.norm(Fx)))
        trace.step_norms.append(float(np.linalg.norm(step)))
        if trace.error_norms is not None:
            trace.error_norms.append(err(x))
    trace.status = "max_iters"
    return trace


def operator_norm(M, tol: float = 1e-10, max_steps: int = 10_000) -> float:
    """Spectral norm; power iteration on ``M^T M`` above 64 dimensions."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if max(M.shape) <= DIRECT_NORM_MAX_DIM:
        return float(np.linalg.norm(M, 2))
    rng = np.random.default_rng(0)
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_steps):
        w = M.T @ (M @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        new = math.sqrt(nw)
        if abs(new - est) <= tol * max(new, 1.0):
            return float(new)
        est = new
    raise ArithmeticError("power iteration did not converge")


def banach_inverse_bound(B) -> float:
    """Bound ``1/(1 - ||B - I||)`` on ``||B^-1||``, valid when ``||B - I|| < 1``."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d = operator_norm(B - np.eye(B.shape[0]))
    if d >= 1:
        raise ValueError(f"||B - I|| = {d:g} >= 1; perturbation bound does not apply")
    return 1.0 / (1.0 - d)


def worst_case_instance(model: MajorantModel, kappa: float = math.inf) -> Problem:
    """Odd extension ``F(x) = sign(x) f(|x|)`` of the majorant.

    From ``|x0| = rho`` Newton's method on this map alternates between
    ``rho`` and ``-rho``, so no larger radius can be certified.

    Raises:
        MajorantError: if rho is not a strict crossing of ``|n_f(t)|/t = 1``.
    """
    radii = compute_radii(model, math.inf)
    if not radii.rho_is_optimal:
        raise MajorantError(f"{model.name}: rho={radii.rho} is not a crossing of |n_f(t)|/t = 1")

    return odd_extension(model.f, model.fprime, f"worst_case[{model.name}]", kappa)


def odd_extension(f, fprime, name: str, kappa: float = math.inf) -> Problem:
    """1-D problem ``F(x) = sign(x) f(|x|)`` with ``F'(x) = f'(|x|)`` and root 0."""
    def F(x):
        s = float(x[0])
        return np.array([math.copysign(1.0, s) * f(abs(s)) if s != 0 else 0.0])

    def J(x):
        return np.array([[fprime(abs(float(x[0])))]])

    return Problem(dim=1, F=F, J=J, x_star=np.zeros(1), kappa=kappa, name=name)
