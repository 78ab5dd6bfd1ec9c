"""Registry of test problems, each paired with a majorant it satisfies."""

from __future__ import annotations

import math

import numpy as np

from .families import (
    LipschitzDensity,
    exp_quadratic_model,
    generalized_model,
    lipschitz_model,
    power_model,
)
from .scalar import MajorantModel
from .solver import Problem, odd_extension

DEFAULT_KAPPA = 10.0

# ||F'(0)^-1 (F'(x) - F'(y))|| <= sqrt(2) ||x - y|| for poly2d, tight along the axes
POLY2D_K = math.sqrt(2.0)


def exp_quadratic_1d(kappa: float = DEFAULT_KAPPA) -> Problem:
    """``F(x) = e^-x + x^2 - 1`` for ``x >= 0``, extended as an odd function."""
    m = exp_quadratic_model(None)
    return odd_extension(m.f, m.fprime, "exp_quadratic_1d", kappa)


def power_5_3_1d(kappa: float = DEFAULT_KAPPA) -> Problem:
    """``g(x) = x^(5/3) - x`` with the real cube root (odd on R)."""
    m = power_model(2.0 / 3.0)
    return odd_extension(m.f, m.fprime, "power_5_3_1d", kappa)


def poly2d(kappa: float = DEFAULT_KAPPA) -> Problem:
    """``F(x, y) = (x + y + x^2, x - y + y^2)`` with root at the origin."""
    def F(v):
        x, y = v
        return np.array([x + y + x * x, x - y + y * y])

    def J(v):
        x, y = v
        return np.array([[1 + 2 * x, 1.0], [1.0, -1 + 2 * y]])

    return Problem(dim=2, F=F, J=J, x_star=np.zeros(2), kappa=kappa, name="poly2d")


def cubic2d(kappa: float = DEFAULT_KAPPA) -> Problem:
    """``F_i(x) = x_i^3/3 - x_i``; satisfies the integral condition with ``L(u) = 2u``."""
    def F(v):
        return v ** 3 / 3.0 - v

    def J(v):
        return np.diag(v * v - 1.0)

    return Problem(dim=2, F=F, J=J, x_star=np.zeros(2), kappa=kappa, name="cubic2d")


PROBLEMS = {
    "exp_quadratic_1d": exp_quadratic_1d,
    "power_5_3_1d": power_5_3_1d,
    "poly2d": poly2d,
    "cubic2d": cubic2d,
}


def matched_majorant(name: str) -> MajorantModel:
    """Majorant known to satisfy the derivative condition for registry problem ``name``."""
    if name == "exp_quadratic_1d":
        return exp_quadratic_model(1.0)
    if name == "power_5_3_1d":
        return power_model(2.0 / 3.0)
    if name == "poly2d":
        return lipschitz_model(POLY2D_K)
    if name == "cubic2d":
        return generalized_model(LipschitzDensity([(0.0, math.inf, [0.0, 2.0])]), p=1.0)
    raise KeyError(f"unknown problem {name!r}")


def get_problem(name: str, kappa: float = DEFAULT_KAPPA) -> Problem:
    try:
        return PROBLEMS[name](kappa)
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {sorted(PROBLEMS)}") from None
