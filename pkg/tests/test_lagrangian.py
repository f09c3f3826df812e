import math

import numpy as np
import pytest

from vkt.errors import HistoryGap, NonPositiveDensity, VacuumOnPath
from vkt.grid import get_grid
from vkt.lagrangian import FrameHistory, SpectralSampler, log_density_residual, theta, trace_path
from vkt.model import Params, State

TAU = 2 * np.pi


def test_theta_values():
    p = Params(mu=1.0, beta=4.0)
    assert theta(1.0, p) == 0.0
    assert theta(math.e, p) == pytest.approx(2 + (math.e**4 - 1) / 4, rel=1e-14)
    assert theta(math.e, p) == pytest.approx(15.39953, abs=1e-5)  # listed value is truncated
    r = np.linspace(0.01, 3, 200)
    assert np.all(np.diff(theta(r, p)) > 0)
    with pytest.raises(NonPositiveDensity):
        theta(np.array([1.0, 0.0]), p)


def test_sampler_exact_off_grid():
    n = 16
    g = get_grid(n)
    f = np.sin(TAU * 3 * g.x1) * np.cos(TAU * 2 * g.x2) + 0.5 * np.cos(TAU * (g.x1 - 5 * g.x2))
    s = SpectralSampler(n)
    pts = np.random.default_rng(0).random((20, 2))
    ref = (np.sin(TAU * 3 * pts[:, 0]) * np.cos(TAU * 2 * pts[:, 1])
           + 0.5 * np.cos(TAU * (pts[:, 0] - 5 * pts[:, 1])))
    np.testing.assert_allclose(s(s.coefficients(f), pts), ref, atol=1e-13)


def test_sampler_reproduces_grid_values(rng):
    n = 16
    f = rng.standard_normal((n, n))
    s = SpectralSampler(n)
    g = get_grid(n)
    pts = np.stack([g.x1.ravel(), g.x2.ravel()], axis=1)
    np.testing.assert_allclose(s(s.coefficients(f), pts), f.ravel(), atol=1e-12)


def frames_from_velocity(u, times):
    return [(t, u) for t in times]


def test_trace_zero_velocity():
    u = np.zeros((2, 16, 16))
    taus, X = trace_path(frames_from_velocity(u, [0.0, 0.5, 1.0]), 1.0, [0.3, 0.7])
    assert taus.tolist() == [0.0, 0.5, 1.0]
    np.testing.assert_allclose(X[:, 0], [[0.3, 0.7]] * 3, atol=0)


def test_trace_constant_velocity():
    c = np.array([0.4, -0.25])
    u = np.broadcast_to(c[:, None, None], (2, 16, 16)).copy()
    taus, X = trace_path(frames_from_velocity(u, np.linspace(0, 2, 9)), 2.0, [0.1, 0.2])
    ref = (np.array([0.1, 0.2]) + np.outer(taus - 2.0, c)) % 1.0
    np.testing.assert_allclose(X[:, 0], ref, atol=1e-12)


def test_trace_steady_shear_closed_form():
    n = 32
    g = get_grid(n)
    u = np.stack([np.zeros((n, n)), np.sin(TAU * g.x1)])
    x = np.array([0.23, 0.61])
    taus, X = trace_path(frames_from_velocity(u, np.linspace(0, 1, 41)), 1.0, x)
    ref2 = (x[1] + np.sin(TAU * x[0]) * (taus - 1.0)) % 1.0
    np.testing.assert_allclose(X[:, 0, 0], x[0], atol=1e-12)
    np.testing.assert_allclose(X[:, 0, 1], ref2, atol=1e-8)


def test_trace_history_gap():
    u = np.zeros((2, 8, 8))
    with pytest.raises(HistoryGap):
        trace_path(frames_from_velocity(u, [0.0, 0.5]), 1.0, [0.5, 0.5])
    with pytest.raises(HistoryGap):
        trace_path(frames_from_velocity(u, [0.1, 1.0]), 1.0, [0.5, 0.5])
    with pytest.raises(HistoryGap):
        FrameHistory(frames_from_velocity(u, [0.0, 0.0]))
    with pytest.raises(HistoryGap):
        FrameHistory([])


def uniform_states(times, n=16, rho=1.3):
    return [State(t, np.full((n, n), rho), np.zeros((2, n, n))) for t in times]


def test_log_density_residual_equilibrium():
    p = Params()
    hist = FrameHistory(uniform_states(np.linspace(0, 0.2, 5)), p)
    res = log_density_residual(hist, 0.2, [0.4, 0.4], p)
    assert abs(res) < 1e-14
    assert log_density_residual(hist, 0.0, [0.4, 0.4], p) == 0.0


def test_log_density_residual_detects_vacuum():
    p = Params()
    g = get_grid(16)
    rho = np.where(g.x1 < 0.5, 1.0, 0.0)
    frames = [State(t, rho, np.zeros((2, 16, 16))) for t in (0.0, 0.1)]
    with pytest.raises(VacuumOnPath):
        log_density_residual(FrameHistory(frames, p), 0.1, [0.75, 0.5], p)


def test_log_density_residual_vector_points():
    p = Params()
    hist = FrameHistory(uniform_states(np.linspace(0, 0.1, 3)), p)
    pts = np.array([[0.1, 0.1], [0.5, 0.9], [0.8, 0.3]])
    det = log_density_residual(hist, 0.1, pts, p, detail=True)
    assert det["residual"].shape == (3,)
    assert np.abs(det["residual"]).max() < 1e-14
