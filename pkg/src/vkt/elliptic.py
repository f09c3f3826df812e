"""Periodic elliptic solvers: Poisson problems and the variable-coefficient Lame problem."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NonPositiveDensity, NonZeroMean
from .grid import get_grid, grid_of, lp_norm, mean

log = logging.getLogger(__name__)

MEAN_RTOL = 1e-10


def _check_zero_mean(f, what="rhs"):
    m = mean(f)
    scale = lp_norm(f, 2)
    if abs(m) > MEAN_RTOL * scale:
        raise NonZeroMean(f"{what} has mean {m:.3e} (norm {scale:.3e}); "
                          "periodic problem is not solvable")


def poisson(rhs):
    """Mean-zero solution of ``laplacian(xi) = rhs`` on the torus."""
    _check_zero_mean(rhs)
    g = grid_of(rhs)
    return g.irfft(-g.inv_ksq * g.rfft(rhs))


def xi_field(rho, u):
    """Solve ``laplacian(xi) = div(rho u)`` with zero mean."""
    g = grid_of(rho)
    s = g.ik1 * g.rfft(rho * u[0]) + g.ik2 * g.rfft(rho * u[1])
    return g.irfft(-g.inv_ksq * s)


def eta_field(rho, u):
    """Solve ``laplacian(eta) = sum_ij d_i d_j (rho u_i u_j)`` with zero mean."""
    g = grid_of(rho)
    s11 = g.rfft(rho * u[0] * u[0])
    s12 = g.rfft(rho * u[0] * u[1])
    s22 = g.rfft(rho * u[1] * u[1])
    s = g.ik1 * g.ik1 * s11 + 2.0 * g.ik1 * g.ik2 * s12 + g.ik2 * g.ik2 * s22
    return g.irfft(-g.inv_ksq * s)


@dataclass(frozen=True)
class LameConfig:
    rtol: float = 1e-10
    max_iters: int = 500
    # constant lambda for the preconditioner; None -> mean(lambda(rho))
    precond_viscosity: float | None = None

    def __post_init__(self):
        if not 0.0 < self.rtol <= 1e-2:
            raise ValueError(f"rtol must lie in (0, 1e-2], got {self.rtol}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class LameResult:
    u: np.ndarray
    iterations: int
    residual: float


def lame_apply(u, coef, mu):
    """``mu lap u + grad(coef div u)`` with ``coef = mu + lambda(rho)``."""
    g = grid_of(u)
    a = g.rfft(u[0])
    b = g.rfft(u[1])
    divu = g.irfft(g.ik1 * a + g.ik2 * b)
    q = g.rfft(coef * divu)
    return np.stack([
        g.irfft(-mu * g.ksq * a + g.ik1 * q),
        g.irfft(-mu * g.ksq * b + g.ik2 * q),
    ])


def _constant_inverse(g, mu, c):
    """Per-mode inverse of ``-(mu lap + c grad div)`` with the mean mode dropped.

    For wavenumber k the symbol is ``mu |k|^2 I + c d d^T`` where ``d`` is the
    (Nyquist-zeroed) derivative vector; Sherman-Morrison gives the inverse.
    """
    d1 = g.ik1.imag
    d2 = g.ik2.imag
    dd = d1**2 + d2**2
    a = mu * g.ksq
    a_inv = np.zeros_like(a)
    np.divide(1.0, a, out=a_inv, where=a > 0)
    beta = c * a_inv / (1.0 + c * dd * a_inv)

    def apply(r):
        r1 = g.rfft(r[0])
        r2 = g.rfft(r[1])
        proj = d1 * r1 + d2 * r2
        return np.stack([
            g.irfft(a_inv * (r1 - beta * d1 * proj)),
            g.irfft(a_inv * (r2 - beta * d2 * proj)),
        ])

    return apply


def _dot(a, b):
    return float(np.vdot(a, b))


def lame_solve(rho, f, mean_u, params, cfg: LameConfig | None = None, *, info=False):
    """Solve ``mu lap u + grad((mu + rho**beta) div u) = f`` with ``mean(u) = mean_u``.

    The operator is symmetric negative semi-definite with constants in its
    kernel, so preconditioned conjugate gradients run on the zero-mean
    subspace; the preconditioner is the exact spectral inverse of the
    constant-coefficient operator with ``lambda`` replaced by its mean.

    Returns the velocity, or a :class:`LameResult` when ``info=True``.
    """
    cfg = cfg or LameConfig()
    rho = np.asarray(rho, dtype=float)
    if rho.min() <= 0.0:
        raise NonPositiveDensity(f"min density {rho.min():.3e} <= 0; "
                                 "Lame operator needs rho > 0")
    f = np.asarray(f, dtype=float)
    for i in (0, 1):
        _check_zero_mean(f[i], what=f"forcing component {i}")
    g = get_grid(rho.shape[0])
    mu = params.mu
    lam = rho**params.beta
    coef = mu + lam
    lam_bar = cfg.precond_viscosity if cfg.precond_viscosity is not None else mean(lam)
    precond = _constant_inverse(g, mu, mu + lam_bar)

    b = -(f - np.array([mean(f[0]), mean(f[1])])[:, None, None])
    bnorm = np.sqrt(_dot(b, b))
    mean_u = np.asarray(mean_u, dtype=float).reshape(2, 1, 1)
    if bnorm == 0.0:
        u = np.broadcast_to(mean_u, f.shape).copy()
        return LameResult(u, 0, 0.0) if info else u

    def A(v):
        return -lame_apply(v, coef, mu)

    x = precond(b)
    r = b - A(x)
    z = precond(r)
    p = z
    rz = _dot(r, z)
    res = np.sqrt(_dot(r, r)) / bnorm
    it = 0
    while res > cfg.rtol and it < cfg.max_iters:
        ap = A(p)
        alpha = rz / _dot(p, ap)
        x = x + alpha * p
        it += 1
        if it % 50 == 0:
            r = b - A(x)  # refresh against recursion drift
        else:
            r = r - alpha * ap
        res = np.sqrt(_dot(r, r)) / bnorm
        if res <= cfg.rtol:
            r_true = b - A(x)
            res = np.sqrt(_dot(r_true, r_true)) / bnorm
            if res <= cfg.rtol:
                break
            r = r_true
        z = precond(r)
        rz_new = _dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    if res > cfg.rtol:
        raise NoConvergence(it, res)
    log.debug("lame_solve converged in %d iterations, residual %.2e", it, res)
    # remove roundoff in the mean mode, then impose the prescribed mean
    x = x - np.array([mean(x[0]), mean(x[1])])[:, None, None] + mean_u
    return LameResult(x, it, res) if info else x
