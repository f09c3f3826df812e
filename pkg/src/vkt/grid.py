"""Periodic n x n grid on the unit torus with FFT-based differential operators.

Scalar fields are real arrays of shape ``(n, n)``; sample ``(i, j)`` sits at
``x = (i/n, j/n)``, so axis 0 is x1 and axis 1 is x2. Vector fields are arrays
of shape ``(2, n, n)``. Spectra use the ``norm="forward"`` convention: the
coefficient of wavenumber k is the grid average of ``f * exp(-2 pi i k.x)``.
"""
from __future__ import annotations

import math
import os
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi


def workers() -> int:
    """Worker count for FFTs, capped by the ``VKT_THREADS`` environment variable."""
    value = os.environ.get("VKT_THREADS")
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


def check_field(f: np.ndarray) -> int:
    """Validate a scalar field and return its resolution."""
    f = np.asarray(f)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ValueError(f"field must be square 2-D, got shape {f.shape}")
    n = f.shape[0]
    if n < 8 or n % 2:
        raise ValueError(f"grid size must be even and >= 8, got {n}")
    if not np.isfinite(f).all():
        raise ValueError("field contains non-finite samples")
    return n


class Grid:
    """Wavenumber tables and spectral operators for one resolution.

    Use :func:`get_grid` to obtain cached instances.
    """

    def __init__(self, n: int):
        if n < 8 or n % 2:
            raise ValueError(f"grid size must be even and >= 8, got {n}")
        self.n = n
        self.h = 1.0 / n
        k1 = sfft.fftfreq(n, 1.0 / n)
        k2 = sfft.rfftfreq(n, 1.0 / n)
        self.k1 = k1[:, None]
        self.k2 = k2[None, :]
        # first-derivative multipliers, Nyquist zeroed
        d1 = TWO_PI * k1
        d1[n // 2] = 0.0
        d2 = TWO_PI * k2
        d2[-1] = 0.0
        self.ik1 = (1j * d1)[:, None]
        self.ik2 = (1j * d2)[None, :]
        self.ksq = (TWO_PI**2) * (self.k1**2 + self.k2**2)
        inv = np.zeros_like(self.ksq)
        np.divide(1.0, self.ksq, out=inv, where=self.ksq > 0)
        self.inv_ksq = inv
        # weight of each rfft column in a full-spectrum sum
        w = np.full(k2.shape, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self.col_weight = w[None, :]
        kmax = n / 3.0
        self.dealias_mask = (np.abs(self.k1) < kmax) & (np.abs(self.k2) < kmax)
        x = np.arange(n) / n
        self.x1, self.x2 = np.meshgrid(x, x, indexing="ij")

    # transforms -------------------------------------------------------------
    def rfft(self, f):
        return sfft.rfft2(f, norm="forward", workers=workers())

    def irfft(self, s):
        return sfft.irfft2(s, s=(self.n, self.n), norm="forward", workers=workers())

    def transform(self, f):
        """Full complex spectrum of ``f`` in FFT index order."""
        return sfft.fft2(f, norm="forward", workers=workers())

    def inverse(self, s):
        """Real field from a full spectrum (imaginary roundoff discarded)."""
        return sfft.ifft2(s, norm="forward", workers=workers()).real

    # operators --------------------------------------------------------------
    def grad(self, f):
        fh = self.rfft(f)
        return np.stack([self.irfft(self.ik1 * fh), self.irfft(self.ik2 * fh)])

    def div(self, v):
        return self.irfft(self.ik1 * self.rfft(v[0]) + self.ik2 * self.rfft(v[1]))

    def curl(self, v):
        return self.irfft(self.ik1 * self.rfft(v[1]) - self.ik2 * self.rfft(v[0]))

    def laplacian(self, f):
        return self.irfft(-self.ksq * self.rfft(f))

    def spectral_sq_mean(self, sh):
        """Grid mean of ``f**2`` from the rfft coefficients of ``f`` (Parseval)."""
        return float(np.sum(self.col_weight * (sh.real**2 + sh.imag**2)))


@lru_cache(maxsize=None)
def get_grid(n: int) -> Grid:
    return Grid(n)


def grid_of(f) -> Grid:
    return get_grid(np.shape(f)[-1])


def transform(f):
    check_field(f)
    return grid_of(f).transform(f)


def inverse(s):
    return grid_of(s).inverse(s)


def wavenumbers(n: int):
    """Integer wavenumber grids ``(k1, k2)`` matching :func:`transform` layout."""
    k = sfft.fftfreq(n, 1.0 / n).astype(int)
    return np.meshgrid(k, k, indexing="ij")


def grad(f):
    return grid_of(f).grad(f)


def div(v):
    return grid_of(v).div(v)


def curl(v):
    return grid_of(v).curl(v)


def laplacian(f):
    return grid_of(f).laplacian(f)


def mean(f) -> float:
    """Grid average, i.e. the trapezoid integral over the unit torus.

    Uses exactly rounded summation so the result does not depend on
    evaluation order.
    """
    f = np.asarray(f, dtype=float)
    return math.fsum(f.ravel()) / f.size


def lp_norm(f, p) -> float:
    """L^p norm on the unit-measure torus; ``p`` may be ``math.inf``."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(np.asarray(f, dtype=float))
    top = float(a.max()) if a.size else 0.0
    if p == math.inf or top == 0.0:
        return top
    # scale by the max to keep large powers finite
    return top * float(np.mean((a / top) ** p)) ** (1.0 / p)


def vec_norm(v) -> np.ndarray:
    """Pointwise Euclidean length of a vector field."""
    return np.sqrt(v[0] ** 2 + v[1] ** 2)
