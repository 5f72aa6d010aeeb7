import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from unitfree import expr as E
from unitfree.contact import build_contact
from unitfree.dynamics import (IntegratorConfig, Trajectory, additivity_demo, conservation_diagnostics,
                               conservation_residuals, hamilton_flow, integrate, newtonian_energy,
                               vector_field_function)
from unitfree.errors import ChartMismatch, NonPositiveDefinite, NonSymmetricMetric, StepFailure, TooFewSamples
from unitfree.expr import Chart, parse
from unitfree.jacobi import LichnerowiczStructure, evaluate_at, hamiltonian_vector_field
from unitfree.product import build_product

CS = build_contact(Chart("Q", ("q",)))
L = CS.structure
OSC = parse("(q^2 + p^2)/2")


@pytest.fixture(scope="module")
def harmonic():
    return hamilton_flow(L, OSC, (1.0, 0.0, 0.0), IntegratorConfig("rk4", 1e-3, 2 * math.pi))


def test_contact_right_hand_side():
    h = parse("p^2/2 - cos(q) + 0.3*z*q")
    f = vector_field_function(L, h)
    q, p, z = 0.4, -0.8, 1.2
    hv = p * p / 2 - math.cos(q) + 0.3 * z * q
    hq, hp, hz = math.sin(q) + 0.3 * z, p, 0.3 * q
    assert np.allclose(f(0.0, np.array([q, p, z])), [hp, -hq - p * hz, p * hp - hv], atol=1e-15)


def test_harmonic_oscillator_closed_form(harmonic):
    t = harmonic.times
    assert np.max(np.abs(harmonic.column("q") - np.cos(t))) <= 1e-6
    assert np.max(np.abs(harmonic.column("p") + np.sin(t))) <= 1e-6
    assert np.max(np.abs(harmonic.column("z") + np.sin(2 * t) / 4)) <= 1e-6
    end = harmonic.final
    assert abs(end["q"] - 1) <= 1e-6 and abs(end["p"]) <= 1e-6 and abs(end["z"]) <= 1e-6
    assert np.max(np.abs(harmonic.h_values - 0.5)) <= 1e-6


def test_trajectory_is_frozen(harmonic):
    with pytest.raises(ValueError):
        harmonic.states[0, 0] = 3.0
    assert len(harmonic.times) == len(harmonic.states) == len(harmonic.h_values) == len(harmonic.residuals)
    assert np.all(np.diff(harmonic.times) > 0)
    assert harmonic.times[-1] == pytest.approx(2 * math.pi, abs=1e-15)


def test_trajectory_rejects_non_increasing_times():
    chart = L.chart
    with pytest.raises(ValueError):
        Trajectory(chart, np.array([0.0, 0.0]), np.zeros((2, 3)), np.zeros(2), np.zeros(2))


def test_long_run_conserves_z_free_energy():
    traj = hamilton_flow(L, OSC, (1.0, 0.0, 0.0), IntegratorConfig("rk4", 1e-3, 10.0))
    assert np.max(np.abs(traj.h_values - 0.5)) <= 1e-6
    assert conservation_diagnostics(L, OSC, traj) <= 1e-6


@pytest.mark.parametrize("method", ["rk4", "rk45"])
def test_damped_energy_decays_exponentially(method):
    h = parse("(q^2 + p^2)/2 + 0.5*z")
    traj = hamilton_flow(L, h, (1.0, 0.0, 0.0), IntegratorConfig(method, 1e-3, 10.0))
    exact = 0.5 * np.exp(-0.5 * traj.times)
    assert np.max(np.abs(traj.h_values - exact)) <= 1e-5


def test_damped_flow_is_newton_with_friction():
    h = newtonian_energy(CS, [["1"]], "q^2/2", kappa=0.5)
    X = hamiltonian_vector_field(L, h)
    pts = L.chart.sample(20, seed=1)
    got = evaluate_at([X.components[1]], L.chart, pts)[:, 0]
    want = np.array([-p["q"] - 0.5 * p["p"] for p in pts])
    assert np.allclose(got, want, atol=1e-14)


def test_constant_hamiltonian_has_zero_residual():
    traj = hamilton_flow(L, parse("2"), (0.2, 0.1, 0.0), IntegratorConfig("rk4", 1e-2, 1.0))
    assert np.max(traj.residuals) <= 1e-8
    assert traj.final["z"] == pytest.approx(-2.0, abs=1e-12)


def test_z_free_energy_reproduces_ordinary_hamilton_flow():
    h = parse("p^2/2 + q^4/4")
    plane = LichnerowiczStructure(Chart("P", ("q", "p")), {("q", "p"): -1})
    cfg = IntegratorConfig("rk4", 1e-3, 3.0)
    a = hamilton_flow(L, h, (0.7, 0.2, 0.0), cfg)
    b = hamilton_flow(plane, h, (0.7, 0.2), cfg)
    assert np.max(np.abs(a.states[:, :2] - b.states)) <= 1e-12


def test_pendulum_against_scipy_reference():
    h = newtonian_energy(CS, [["1"]], "-cos(q)")
    traj = hamilton_flow(L, h, (1.0, 0.0, 0.0), IntegratorConfig("rk4", 1e-3, 10.0))
    ref = solve_ivp(lambda t, y: [y[1], -math.sin(y[0])], (0, 10), [1.0, 0.0], method="DOP853",
                    t_eval=traj.times, rtol=1e-12, atol=1e-12)
    assert np.max(np.abs(traj.column("q") - ref.y[0])) <= 1e-5


def test_rk4_is_fourth_order():
    errs = []
    for dt in (2e-3, 1e-3):
        end = hamilton_flow(L, OSC, (1.0, 0.0, 0.0), IntegratorConfig("rk4", dt, 2 * math.pi)).final
        errs.append(math.hypot(end["q"] - 1, end["p"]))
    assert 12 <= errs[0] / errs[1] <= 20


def test_time_reversal_returns_to_start():
    f = vector_field_function(L, parse("p^2/2 - cos(q) + 0.2*z"))
    cfg = IntegratorConfig("rk4", 1e-3, 1.0)
    x0 = np.array([0.3, -0.4, 0.1])
    _, fwd = integrate(f, x0, cfg)
    _, back = integrate(lambda t, y: -f(t, y), fwd[-1], cfg)
    assert np.max(np.abs(back[-1] - x0)) <= 1e-6


def test_rk45_meets_tolerance_with_fewer_steps():
    cfg = IntegratorConfig("rk45", 1e-2, 2 * math.pi, abs_tol=1e-10, rel_tol=1e-10)
    traj = hamilton_flow(L, OSC, (1.0, 0.0, 0.0), cfg)
    assert len(traj) < 2000
    end = traj.final
    assert abs(end["q"] - 1) <= 1e-7 and abs(end["p"]) <= 1e-7


def test_step_cap_raises():
    with pytest.raises(StepFailure):
        hamilton_flow(L, OSC, (1.0, 0.0, 0.0), IntegratorConfig("rk45", 1e-2, 10.0, max_steps=5))
    with pytest.raises(StepFailure):
        hamilton_flow(L, OSC, (1.0, 0.0, 0.0), IntegratorConfig("rk4", 1e-3, 10.0, max_steps=5))


@pytest.mark.parametrize("kwargs", [dict(dt=0), dict(t_end=-1), dict(abs_tol=0), dict(method="euler")])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        IntegratorConfig(**kwargs)


def test_initial_state_must_match_chart():
    with pytest.raises(ChartMismatch):
        hamilton_flow(L, OSC, (1.0, 0.0), IntegratorConfig("rk4", 1e-2, 0.1))


def test_too_few_samples():
    with pytest.raises(TooFewSamples):
        conservation_residuals(L, OSC, np.array([0.0, 1.0]), np.zeros((2, 3)))


def test_newtonian_energy_validation():
    assert newtonian_energy(CS, [["1"]], "q^2/2") == parse("p*p/2 + q^2/2")
    cs2 = build_contact(Chart("Q", ("q1", "q2")))
    with pytest.raises(NonSymmetricMetric):
        newtonian_energy(cs2, [["1", "q1"], ["0", "1"]], "0")
    with pytest.raises(NonPositiveDefinite):
        newtonian_energy(cs2, [["1", "0"], ["0", "q1"]], "0")


def test_additivity_on_two_oscillators():
    ps = build_product(L, L, validate=False)
    rep = additivity_demo(ps, OSC, OSC)
    assert rep.passed, rep.summary()
    assert rep.residuals["decoupling"] <= 1e-9
    assert rep.residuals["H,H"] == 0.0
    solo = additivity_demo(ps, OSC, "0")
    assert solo.extra["H"] == E.to_string(ps.rename_left(OSC))
