import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from majorant_newton.families import HolderParams, exp_quadratic_model, holder_model, power_model
from majorant_newton.scalar import (
    MajorantError,
    MajorantModel,
    a_priori_bound,
    compute_nu,
    compute_radii,
    compute_rho,
    compute_sigma,
    newton_scalar_map,
    order_ratios,
    scalar_sequence,
    verify_h2,
    verify_h3,
)

# brentq roots of the defining equations, frozen at xtol=1e-15
EXP_NU = 0.35173371124919584      # e^-t = 2t
EXP_RHO = 0.23137907779021896     # e^-t (1 + 2t) - 3t^2 - 1 = 0
EXP_SIGMA = 0.7145563847430098    # e^-t + t^2 - 1 = 0


def linear_model(R=5.0):
    return MajorantModel(f=lambda t: -t, fprime=lambda t: -1.0, R=R, name="linear")


@pytest.fixture
def hold11():
    return holder_model(HolderParams(K=1.0, p=1.0))


def test_newton_map_holder(hold11):
    assert newton_scalar_map(hold11, 0.5) == pytest.approx(-0.25, abs=1e-15)


def test_newton_map_power_5_3_closed_form():
    t = 0.1
    expected = 2 * t ** (5 / 3) / (5 * t ** (2 / 3) - 3)
    assert newton_scalar_map(power_model(2 / 3), t) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(-0.02241, abs=1e-5)


def test_newton_map_ratio_vanishes_at_zero(hold11):
    ratios = [abs(newton_scalar_map(hold11, 2.0 ** -j)) / 2.0 ** -j for j in range(1, 41)]
    assert ratios[-1] < 1e-11
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_newton_map_outside_nu(hold11):
    with pytest.raises(MajorantError):
        newton_scalar_map(hold11, 1.0)
    with pytest.raises(MajorantError):
        newton_scalar_map(hold11, -0.1)


def test_newton_map_without_closed_gap_matches(hold11):
    plain = MajorantModel(f=hold11.f, fprime=hold11.fprime)
    for t in (0.1, 0.3, 0.6, 0.9):
        assert newton_scalar_map(plain, t) == pytest.approx(newton_scalar_map(hold11, t), rel=1e-13)


def test_nu_examples(hold11):
    assert compute_nu(hold11) == pytest.approx(1.0, abs=1e-12)
    assert compute_nu(exp_quadratic_model()) == pytest.approx(EXP_NU, abs=1e-12)
    assert compute_nu(linear_model()) == 5.0


def test_nu_rejects_h1_violation():
    bad = MajorantModel(f=lambda t: t, fprime=lambda t: 1.0)
    with pytest.raises(MajorantError):
        compute_nu(bad)


def test_rho_examples(hold11):
    assert compute_rho(hold11, 1.0) == pytest.approx(2 / 3, abs=1e-12)
    exp = exp_quadratic_model()
    assert compute_rho(exp, compute_nu(exp)) == pytest.approx(EXP_RHO, abs=1e-12)
    assert compute_rho(linear_model(), 5.0) == 5.0


def test_rho_oracle_is_independent():
    # re-derive the frozen value from its defining equation
    root = brentq(lambda t: math.exp(-t) * (1 + 2 * t) - 3 * t * t - 1, 0.01, EXP_NU, xtol=1e-15)
    assert root == pytest.approx(EXP_RHO, abs=1e-14)


def test_sigma_examples(hold11):
    assert compute_sigma(hold11, 10.0) == pytest.approx(2.0, abs=1e-12)
    assert compute_sigma(hold11, 1.5) == 1.5
    assert compute_sigma(exp_quadratic_model(), 10.0) == pytest.approx(EXP_SIGMA, abs=1e-12)
    assert compute_sigma(linear_model(), 3.0) == 3.0


def test_radii_holder(hold11):
    rep = compute_radii(hold11, 10.0)
    assert rep.nu == pytest.approx(1.0, abs=1e-12)
    assert rep.rho == pytest.approx(2 / 3, abs=1e-12)
    assert rep.sigma == pytest.approx(2.0, abs=1e-12)
    assert rep.r == rep.rho
    assert rep.rho_is_optimal


def test_radii_kappa_smaller_than_rho(hold11):
    rep = compute_radii(hold11, 0.5)
    assert rep.r == 0.5
    assert not rep.rho_is_optimal


def test_radii_exp_quadratic():
    rep = compute_radii(exp_quadratic_model(), 10.0)
    assert (rep.nu, rep.rho, rep.sigma, rep.r) == pytest.approx((EXP_NU, EXP_RHO, EXP_SIGMA, EXP_RHO), abs=1e-12)


def test_radii_unbounded_flag():
    rep = compute_radii(MajorantModel(f=lambda t: -t, fprime=lambda t: -1.0), 3.0)
    assert rep.unbounded
    assert rep.r == 3.0
    assert not rep.rho_is_optimal


@pytest.mark.parametrize("model", [
    holder_model(HolderParams(1.0, 1.0)),
    holder_model(HolderParams(2.0, 0.5)),
    power_model(2 / 3),
    exp_quadratic_model(),
], ids=lambda m: m.name)
def test_radii_fine_grid_scan(model):
    rep = compute_radii(model, 10.0)
    n = 10 ** 6
    t = rep.nu * np.arange(1, n) / n
    fp = np.array([model.fprime(v) for v in t[::100]])
    assert np.all(fp < 0)
    ts = rep.rho * np.arange(1, n, 50) / n
    assert max(abs(newton_scalar_map(model, v)) / v for v in ts) < 1
    ts = rep.sigma * np.arange(1, n, 50) / n
    assert all(model.f(v) < 0 for v in ts)
    assert 0 < rep.rho <= rep.nu and rep.sigma <= rep.kappa


def test_noncontiguous_rho_uses_first_crossing():
    # |n_f(t)|/t = h(t) rises above 1 on (0.3, 0.5) and falls back below afterwards
    def h(t):
        return 0.5 + 0.7 * math.exp(-((t - 0.4) / 0.05) ** 2) - 0.1 * t

    # only the gap enters |n_f(t)|/t, so prescribe it directly
    model = MajorantModel(
        f=lambda t: -t,
        fprime=lambda t: -1.0,
        lin_error=lambda t: h(t) * t,
        R=1.0,
    )
    rho, gaps = compute_rho(model, 1.0, report_gaps=True)
    assert brentq(lambda t: h(t) - 1, 0.2, 0.4) == pytest.approx(rho, abs=1e-11)
    assert gaps


def test_verify_hypotheses():
    assert verify_h2(holder_model(HolderParams(1.0, 0.5)))
    assert verify_h3(power_model(2 / 3), 2 / 3)
    assert verify_h3(holder_model(HolderParams(3.0, 0.25)), 0.25)
    assert not verify_h2(MajorantModel(f=lambda t: -t, fprime=lambda t: -1.0, R=1.0))


def test_scalar_sequence_holder(hold11):
    tr = scalar_sequence(hold11, 0.5)
    assert tr.t[0] == 0.5
    assert tr.t[1] == pytest.approx(0.25, rel=1e-15)
    assert tr.t[2] == pytest.approx(0.0625 / 1.5, rel=1e-14)
    # closed-form ratio t_{k+1}/t_k^2 = 1/(2(1 - t_k)) decreasing toward 1/2
    for k, ratio in enumerate(tr.ratio_order):
        assert ratio == pytest.approx(1 / (2 * (1 - tr.t[k])), rel=1e-13)
    assert all(b < a for a, b in zip(tr.ratio_order, tr.ratio_order[1:]))


def test_scalar_sequence_power_5_3():
    tr = scalar_sequence(power_model(2 / 3), 0.1)
    assert tr.t[1] == pytest.approx(0.022409549872393103, rel=1e-14)
    assert tr.ratio_order[-1] == pytest.approx(2 / 3, abs=1e-3)
    assert all(b < a for a, b in zip(tr.t, tr.t[1:]))
    quad = order_ratios(tr.t, 2.0)
    assert all(b > a for a, b in zip(quad, quad[1:]))


def test_scalar_sequence_rejects_outside(hold11):
    with pytest.raises(MajorantError):
        scalar_sequence(hold11, 0.7)
    with pytest.raises(MajorantError):
        scalar_sequence(hold11, 0.0)


def test_scalar_sequence_without_p_has_no_order(hold11):
    tr = scalar_sequence(hold11.with_p(None), 0.3)
    assert tr.ratio_order is None
    assert tr.ratio_linear[-1] < 0.1


def test_a_priori_examples():
    assert a_priori_bound(1.0, 0.5, 0.0, 3) == pytest.approx(0.125)
    assert a_priori_bound(0.5, 0.25, 1.0, 2) == pytest.approx(0.0625)
    assert a_priori_bound(0.5, 0.25, 1.0, 0) == 0.5
    with pytest.raises(MajorantError):
        a_priori_bound(0.5, 0.5, 1.0, 1)


@settings(max_examples=60, deadline=None)
@given(K=st.floats(0.2, 5.0), p=st.floats(0.05, 1.0), frac=st.floats(1e-4, 0.9999))
def test_newton_map_negative_and_contracting(K, p, frac):
    model = holder_model(HolderParams(K, p))
    nu = (1 / K) ** (1 / p)
    rho = ((p + 1) / ((2 * p + 1) * K)) ** (1 / p)
    assert newton_scalar_map(model, frac * nu) < 0
    t = frac * rho
    assert abs(newton_scalar_map(model, t)) < t


@settings(max_examples=40, deadline=None)
@given(K=st.floats(0.2, 5.0), p=st.floats(0.05, 1.0), frac=st.floats(0.01, 0.99))
def test_sequence_below_a_priori_bound(K, p, frac):
    model = holder_model(HolderParams(K, p))
    rho = ((p + 1) / ((2 * p + 1) * K)) ** (1 / p)
    tr = scalar_sequence(model, frac * rho, radius=rho)
    # tiny radii can start below the stopping tolerance
    assume(len(tr.t) > 1)
    assert all(b < a for a, b in zip(tr.t, tr.t[1:]))
    assert all(b < a for a, b in zip(tr.ratio_order, tr.ratio_order[1:]))
    t0, t1 = tr.t[0], tr.t[1]
    for k, t in enumerate(tr.t):
        assert t <= a_priori_bound(t0, t1, p, k) * (1 + 1e-12)
