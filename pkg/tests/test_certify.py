import json
import math

import numpy as np
import pytest

from majorant_newton.certify import (
    CertificationError,
    check_contraction,
    check_envelope,
    check_invertibility_bound,
    check_linearization_bound,
    check_majorant_hypothesis,
    check_rates,
    check_uniqueness,
    certify,
    slack,
)
from majorant_newton.families import HolderParams, holder_model, lipschitz_model, power_model
from majorant_newton.problems import PROBLEMS, POLY2D_K, get_problem, matched_majorant
from majorant_newton.scalar import compute_radii, order_ratios, scalar_sequence
from majorant_newton.solver import newton_solve, worst_case_instance


def run(name, frac=0.5):
    prob, model = get_problem(name), matched_majorant(name)
    r = compute_radii(model, prob.kappa).r
    d = np.ones(prob.dim) / math.sqrt(prob.dim)
    return prob, model, newton_solve(prob, prob.x_star + frac * r * d), r


def test_slack():
    assert slack(0.0) == pytest.approx(1e-10)
    assert slack(-3.0) == pytest.approx(4e-10)


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_hypothesis_holds_on_registry(name):
    res = check_majorant_hypothesis(get_problem(name), matched_majorant(name), samples=32)
    assert res.ok, res.violations[:3]
    assert res.count == 32 * 11


def test_hypothesis_self_majorant_is_tight():
    res = check_majorant_hypothesis(get_problem("power_5_3_1d"), power_model(2 / 3), samples=16)
    assert res.ok and abs(res.worst_margin) <= 1e-12


def test_hypothesis_catches_halved_constant():
    res = check_majorant_hypothesis(get_problem("poly2d"), lipschitz_model(POLY2D_K / 2), samples=16)
    assert not res.ok
    assert res.violations[0].check == "hypothesis"


def test_hypothesis_needs_finite_domain():
    prob = get_problem("poly2d", kappa=math.inf)
    with pytest.raises(CertificationError):
        check_majorant_hypothesis(prob, lipschitz_model(POLY2D_K))


def test_invertibility_exp_quadratic_example():
    prob = get_problem("exp_quadratic_1d")
    model = matched_majorant("exp_quadratic_1d")
    assert prob.jacobian([0.1])[0, 0] == pytest.approx(-0.7048374180359596, rel=1e-14)
    tr = newton_solve(prob, [0.1])
    res = check_invertibility_bound(prob, model, tr)
    assert res.ok and abs(res.worst_margin) <= 1e-12


def test_invertibility_outside_nu_raises():
    prob = get_problem("exp_quadratic_1d")
    model = matched_majorant("exp_quadratic_1d")
    tr = newton_solve(prob, [0.5], max_iters=0)
    with pytest.raises(CertificationError):
        check_invertibility_bound(prob, model, tr)


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_trace_checks_on_registry(name):
    prob, model, tr, r = run(name, 0.8)
    scalar = scalar_sequence(model, tr.error_norms[0], radius=r)
    for res in (check_invertibility_bound(prob, model, tr),
                check_linearization_bound(prob, model, tr),
                check_contraction(tr, model),
                check_envelope(tr, scalar)):
        assert res.ok, (res.check, res.violations[:3])


@pytest.mark.parametrize("name", ["power_5_3_1d", "exp_quadratic_1d"])
def test_self_majorant_equality(name):
    prob, model, tr, r = run(name, 0.7)
    scalar = scalar_sequence(model, tr.error_norms[0], radius=r)
    for res in (check_envelope(tr, scalar), check_contraction(tr, model),
                check_linearization_bound(prob, model, tr), check_invertibility_bound(prob, model, tr)):
        assert res.ok and res.max_gap <= 1e-12, (res.check, res.max_gap)


def test_envelope_needs_root():
    prob = get_problem("poly2d")
    tr = newton_solve(prob, [0.1, 0.1])
    tr.error_norms = None
    with pytest.raises(CertificationError):
        check_envelope(tr, scalar_sequence(lipschitz_model(POLY2D_K), 0.1))


def test_rates_power_5_3():
    prob, model, tr, r = run("power_5_3_1d")
    tr = newton_solve(prob, [0.1])
    scalar = scalar_sequence(model, 0.1, radius=r)
    rep = check_rates(tr, scalar, model.p)
    assert rep.ok and rep.superlinear_ok and rep.tail_ratio < 0.1
    assert rep.order.ok and rep.order_ratios_decreasing
    ratios = order_ratios(scalar.t, 5 / 3)
    assert ratios[-1] == pytest.approx(2 / 3, abs=1e-3)


def test_quadratic_failure_witness():
    scalar = scalar_sequence(power_model(2 / 3), 0.1)
    quad = order_ratios(scalar.t, 2.0)
    assert all(b > a for a, b in zip(quad, quad[1:]))
    assert quad[-1] > 100 * quad[0]


def test_rates_holder_closed_form():
    model = holder_model(HolderParams(1.0, 1.0))
    prob = worst_case_instance(model)
    tr = newton_solve(prob, [0.5])
    scalar = scalar_sequence(model, 0.5)
    rep = check_rates(tr, scalar, 1.0)
    assert rep.ok
    for k, ratio in enumerate(order_ratios(scalar.t, 2.0)):
        assert ratio == pytest.approx(1 / (2 * (1 - scalar.t[k])), rel=1e-12)


def test_rates_need_enough_steps():
    prob = get_problem("poly2d")
    tr = newton_solve(prob, [1e-9, 0.0])
    with pytest.raises(CertificationError):
        check_rates(tr)


def test_uniqueness_power_5_3():
    prob = get_problem("power_5_3_1d")
    sigma = compute_radii(power_model(2 / 3), prob.kappa).sigma
    assert sigma == pytest.approx(1.0, abs=1e-12)
    res = check_uniqueness(prob, power_model(2 / 3), sigma, probes=30)
    assert res.ok and res.count == 30


def test_uniqueness_holder_worst_case():
    model = holder_model(HolderParams(1.0, 1.0))
    prob = worst_case_instance(model, kappa=10.0)
    sigma = compute_radii(model, 10.0).sigma
    assert sigma == pytest.approx(2.0, abs=1e-12)
    assert check_uniqueness(prob, model, sigma, probes=30).ok


def test_uniqueness_flags_second_root():
    # F(x) = x(x - 0.5) has a second root inside a claimed radius of 1
    from majorant_newton.solver import Problem
    prob = Problem(dim=1, F=lambda x: x * (x - 0.5), J=lambda x: np.array([[2 * x[0] - 0.5]]),
                   x_star=[0.0], kappa=10.0)
    res = check_uniqueness(prob, holder_model(HolderParams(1.0, 1.0)), 1.0, probes=40)
    assert not res.ok


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_certify_registry(name):
    prob, model = get_problem(name), matched_majorant(name)
    r = compute_radii(model, prob.kappa).r
    rng = np.random.default_rng(1)
    starts = []
    for _ in range(5):
        d = rng.standard_normal(prob.dim)
        starts.append(prob.x_star + rng.uniform(0.05, 0.95) * r * d / np.linalg.norm(d))
    rep = certify(prob, model, starts, samples=16, probes=5)
    assert rep.ok, rep.violations[:3]
    assert rep.runs == 5 and rep.superlinear_tail < 0.1


def test_certify_negative_control():
    prob = get_problem("poly2d")
    model = lipschitz_model(POLY2D_K / 2)
    r = compute_radii(model, prob.kappa).r
    rep = certify(prob, model, [np.array([0.3 * r, 0.0])], samples=16, probes=0)
    assert not rep.ok and not rep.hypothesis_ok
    assert any(v["check"] == "hypothesis" for v in rep.violations)


def test_certify_rejects_start_outside_r():
    prob = get_problem("poly2d")
    with pytest.raises(CertificationError):
        certify(prob, lipschitz_model(POLY2D_K), [np.array([1.0, 0.0])], probes=0)


def test_report_serializes():
    prob, model = get_problem("cubic2d"), matched_majorant("cubic2d")
    rep = certify(prob, model, [np.array([0.2, 0.1])], samples=8, probes=2)
    d = json.loads(rep.to_json())
    assert d["ok"] is True
    assert set(d["margins"]) >= {"hypothesis", "envelope", "contraction"}
    assert d["radii"]["rho"] == pytest.approx(math.sqrt(3 / 5), abs=1e-12)
    assert "sampled" in d["note"]
