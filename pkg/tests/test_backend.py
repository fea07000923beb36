import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from quadbench.backend.optimizer import (OptimizerConfig, _pad_halfspaces, _Problem, check_dynamic_feasibility,
                                         optimize_trajectory)
from quadbench.backend.trajectory import BoundaryState, Trajectory, jerk_energy, min_jerk_fit
from quadbench.corridor import Corridor, Polytope
from quadbench.errors import ConfigError, ContractError
from quadbench.world import QuadrotorSpec


def test_single_segment_matches_closed_form_quintic():
    L, T = 7.5, 4.0
    tr = min_jerk_fit([[0, 0, 0], [L, 0, 0]], [T])
    t = np.linspace(0, T, 101)
    assert np.allclose(tr.eval(t)[:, 0], oracles.quintic_rest_to_rest(L, t / T), atol=1e-9)
    assert tr.jerk_energy() == pytest.approx(720 * L**2 / T**5, rel=1e-9)


@settings(max_examples=30)
@given(st.lists(st.floats(0.2, 3.0), min_size=1, max_size=4), st.floats(0.3, 3.0), st.integers(0, 10**6))
def test_time_dilation_scales_jerk_energy(durs, k, seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(-5, 5, (len(durs) + 1, 3))
    a = min_jerk_fit(w, durs)
    b = min_jerk_fit(w, np.asarray(durs) * k)
    assert b.jerk_energy() == pytest.approx(a.jerk_energy() / k**5, rel=1e-6)
    assert np.allclose(a.time_scaled(k).coeffs, b.coeffs, rtol=1e-6, atol=1e-9)


@settings(max_examples=30)
@given(st.integers(0, 10**6))
def test_translation_invariance_and_continuity(seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(-5, 5, (4, 3))
    T = rng.uniform(0.5, 2, 3)
    shift = rng.uniform(-10, 10, 3)
    a, b = min_jerk_fit(w, T), min_jerk_fit(w + shift, T)
    t = np.linspace(0, a.duration, 50)
    assert np.allclose(b.eval(t), a.eval(t) + shift, atol=1e-8)
    for d in (1, 2, 3):
        assert np.allclose(b.eval(t, d), a.eval(t, d), atol=1e-8)
    assert a.knot_jumps(4)[:5].max() < 1e-6
    assert np.allclose(a.eval(a.knots), w, atol=1e-9)


def test_boundary_states_are_honored():
    s = BoundaryState((0, 0, 0), (1, 0, 0), (0, 0.5, 0))
    e = BoundaryState((4, 1, 0), (0, 1, 0))
    tr = min_jerk_fit([[0, 0, 0], [2, 0, 0], [4, 1, 0]], [1.5, 1.5], s, e)
    for d in range(3):
        assert np.allclose(tr.eval([0.0], d)[0], s.array()[d])
        assert np.allclose(tr.eval([tr.duration], d)[0], e.array()[d])


def test_jerk_energy_matches_quadrature():
    c = np.random.default_rng(0).normal(size=(6, 3))
    T = 1.7
    t = np.linspace(0, T, 20001)
    k = np.arange(3, 6)
    jerk = (np.array([6, 24, 60])[:, None] * t ** (k - 3)[:, None]).T @ c[3:]
    assert jerk_energy(c, T) == pytest.approx(np.trapezoid((jerk**2).sum(1), t), rel=1e-6)


def _l_corridor():
    return Corridor([Polytope.from_box([0, 0, 0], [6, 2, 2]), Polytope.from_box([4, 0, 0], [6, 8, 2])],
                    [[5, 1, 1]])


def test_analytic_gradient_matches_finite_differences():
    cor = _l_corridor()
    N, b = _pad_halfspaces(cor)
    s0 = np.zeros((3, 3)); s0[0] = [1, 1, 1]
    s1 = np.zeros((3, 3)); s1[0] = [5, 7, 1]
    prob = _Problem(N, b, s0, s1, QuadrotorSpec(), OptimizerConfig(), 1e4)
    x = np.concatenate([[4.0, 1.5, 1.2], np.log([1.2, 1.4])])
    f, g = prob.value_and_grad(x)
    f2, g2 = prob.fd_value_and_grad(x)
    assert f == pytest.approx(f2)
    assert np.allclose(g, g2, rtol=1e-4, atol=1e-4 * max(1.0, np.abs(g).max()))


def test_optimizer_respects_corridor_and_limits():
    quad = QuadrotorSpec()
    cor = _l_corridor()
    tr = optimize_trajectory(cor, [1, 1, 1], [5, 7, 1], quad)
    rep = check_dynamic_feasibility(tr, quad, 0.01, corridor=cor)
    assert rep.ok
    assert rep.max_velocity <= quad.v_max + 1e-9 and rep.max_acceleration <= quad.a_max + 1e-9
    assert np.allclose(tr.eval([0.0])[0], [1, 1, 1]) and np.allclose(tr.eval([tr.duration])[0], [5, 7, 1])
    merit = tr.info["merit"]
    assert all(b <= a for a, b in zip(merit, merit[1:]))


def test_optimizer_contracts():
    with pytest.raises(ContractError):
        optimize_trajectory(_l_corridor(), [9, 9, 9], [5, 7, 1])
    with pytest.raises(ConfigError):
        OptimizerConfig(samples_per_segment=2)


def test_trajectory_json_and_csv_roundtrip(tmp_path):
    tr = min_jerk_fit([[0, 0, 0], [1, 2, 0], [3, 2, 1]], [1.0, 2.0])
    back = Trajectory.from_dict(json.loads(json.dumps(tr.to_dict())))
    assert np.array_equal(back.coeffs, tr.coeffs) and np.array_equal(back.durations, tr.durations)
    path = tmp_path / "t.csv"
    tr.write_csv(path, dt=0.1)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (31, 13)
    assert np.allclose(data[:, 1:4], tr.eval(data[:, 0]), atol=1e-6)


def test_trajectory_contract():
    with pytest.raises(ContractError):
        Trajectory([1.0, 0.0], np.zeros((2, 6, 3)))
    with pytest.raises(ContractError):
        Trajectory([1.0], np.zeros((2, 6, 3)))
