import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vkt import grid
from vkt.grid import get_grid, lp_norm, mean

from conftest import band_limited, direct_dft


def test_constant_has_only_mean_mode():
    f = np.full((16, 16), 3.5)
    s = grid.transform(f)
    assert s[0, 0] == pytest.approx(3.5, abs=1e-14)
    s[0, 0] = 0
    assert np.abs(s).max() < 1e-14


def test_cosine_has_two_half_coefficients():
    g = get_grid(16)
    s = grid.transform(np.cos(2 * np.pi * g.x1))
    k1, k2 = grid.wavenumbers(16)
    hit = (np.abs(k1) == 1) & (k2 == 0)
    np.testing.assert_allclose(s[hit], 0.5, atol=1e-14)
    assert np.abs(s[~hit]).max() < 1e-14


def test_transform_matches_direct_summation(rng):
    f = rng.standard_normal((32, 32))
    ref = direct_dft(f)
    assert np.abs(grid.transform(f) - ref).max() < 1e-13
    assert np.abs(grid.inverse(ref) - f).max() < 1e-12


def test_parseval(rng):
    f = rng.standard_normal((64, 64))
    s = grid.transform(f)
    l2 = lp_norm(f, 2) ** 2
    assert abs(l2 - np.sum(np.abs(s) ** 2)) <= 1e-12 * l2
    g = get_grid(64)
    assert abs(g.spectral_sq_mean(g.rfft(f)) - l2) <= 1e-12 * l2


def test_hermitian_symmetry(rng):
    n = 16
    s = grid.transform(rng.standard_normal((n, n)))
    idx = (-np.arange(n)) % n
    assert np.abs(s[np.ix_(idx, idx)] - np.conj(s)).max() < 1e-12


def test_gradient_of_sine():
    g = get_grid(32)
    d = grid.grad(np.sin(2 * np.pi * g.x1))
    np.testing.assert_allclose(d[0], 2 * np.pi * np.cos(2 * np.pi * g.x1), atol=1e-12)
    np.testing.assert_allclose(d[1], 0, atol=1e-12)


def test_gradient_of_constant_and_means(rng):
    assert np.abs(grid.grad(np.full((8, 8), 2.0))).max() == 0
    d = grid.grad(rng.standard_normal((32, 32)))
    assert abs(mean(d[0])) < 1e-15 and abs(mean(d[1])) < 1e-15


def test_div_curl_of_rotation():
    g = get_grid(32)
    v = np.stack([-np.sin(2 * np.pi * g.x2), np.sin(2 * np.pi * g.x1)])
    curl = 2 * np.pi * (np.cos(2 * np.pi * g.x1) + np.cos(2 * np.pi * g.x2))
    np.testing.assert_allclose(grid.curl(v), curl, atol=1e-12)
    np.testing.assert_allclose(grid.div(v), 0, atol=1e-12)


def test_curl_grad_vanishes_and_constants(rng):
    f = rng.standard_normal((32, 32))
    # roundoff scale is that of the second derivatives
    scale = np.abs(grid.laplacian(f)).max()
    assert np.abs(grid.curl(grid.grad(f))).max() < 1e-14 * scale
    c = np.ones((2, 16, 16))
    assert np.abs(grid.div(c)).max() == 0 and np.abs(grid.curl(c)).max() == 0


def test_laplacian_eigenfunction():
    g = get_grid(32)
    f = np.cos(2 * np.pi * g.x1)
    np.testing.assert_allclose(grid.laplacian(f), -4 * np.pi**2 * f, atol=1e-11)
    assert np.abs(grid.laplacian(np.full((16, 16), 4.0))).max() == 0


def test_laplacian_is_div_grad_on_band_limited(rng):
    f = band_limited(64, 20, rng)
    assert np.abs(grid.laplacian(f) - grid.div(grid.grad(f))).max() <= 1e-12 * np.abs(grid.laplacian(f)).max()


def test_derivatives_exact_below_nyquist():
    # mixed mode, derivative by hand
    g = get_grid(32)
    a = 2 * np.pi * 7
    b = 2 * np.pi * 11
    f = np.sin(a * g.x1) * np.cos(b * g.x2)
    d = grid.grad(f)
    assert np.abs(d[0] - a * np.cos(a * g.x1) * np.cos(b * g.x2)).max() < 1e-11
    assert np.abs(d[1] + b * np.sin(a * g.x1) * np.sin(b * g.x2)).max() < 1e-11


def test_lp_norm_values():
    g = get_grid(16)
    assert lp_norm(np.full((16, 16), -2.0), 3) == pytest.approx(2.0)
    s = np.sin(2 * np.pi * g.x1)
    assert lp_norm(s, 2) == pytest.approx(1 / math.sqrt(2), abs=1e-14)
    assert lp_norm(s, math.inf) == 1.0
    with pytest.raises(ValueError):
        lp_norm(s, 0.5)


def test_check_field_rejects_bad_shapes():
    with pytest.raises(ValueError):
        grid.check_field(np.zeros((7, 7)))
    with pytest.raises(ValueError):
        grid.check_field(np.zeros((6, 6)))
    with pytest.raises(ValueError):
        grid.check_field(np.zeros((8, 10)))
    bad = np.zeros((8, 8))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        grid.check_field(bad)


def test_workers_env(monkeypatch):
    monkeypatch.setenv("VKT_THREADS", "3")
    assert grid.workers() == 3
    monkeypatch.delenv("VKT_THREADS")
    assert grid.workers() >= 1


def test_results_independent_of_worker_count(monkeypatch, rng):
    f = rng.standard_normal((4, 64, 64))
    g = get_grid(64)
    monkeypatch.setenv("VKT_THREADS", "1")
    a = g.irfft(g.ik1 * g.rfft(f))
    monkeypatch.setenv("VKT_THREADS", "4")
    b = g.irfft(g.ik1 * g.rfft(f))
    assert np.array_equal(a, b)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1, 8), st.floats(1, 8))
def test_jensen_monotonicity(seed, p, dq):
    f = np.random.default_rng(seed).standard_normal((16, 16))
    assert lp_norm(f, p) <= lp_norm(f, p + dq) * (1 + 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-1e3, 1e3))
def test_round_trip_relative(seed, scale):
    f = scale * np.random.default_rng(seed).standard_normal((16, 16))
    err = np.abs(grid.inverse(grid.transform(f)) - f).max()
    assert err <= 1e-12 * max(np.abs(f).max(), 1e-300)
