import numpy as np
import pytest

from vkt.grid import get_grid


def direct_dft(f):
    """O(n^4) forward transform with the 1/n^2 normalization, FFT index order."""
    n = f.shape[0]
    k = np.fft.fftfreq(n, 1.0 / n)
    x = np.arange(n) / n
    e = np.exp(-2j * np.pi * np.outer(k, x))  # e[k, i]
    return e @ f @ e.T / n**2


def band_limited(n, kmax, rng):
    """Random real field with modes |k_i| <= kmax (nonzero mean allowed)."""
    g = get_grid(n)
    s = np.zeros((n, n // 2 + 1), dtype=complex)
    sel = (np.abs(g.k1) <= kmax) & (g.k2 <= kmax)
    s[sel] = rng.standard_normal(sel.sum()) + 1j * rng.standard_normal(sel.sum())
    return g.irfft(s)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
