"""Physical state, constitutive laws and derived fields of the Vaigant-Kazhikhov system.

The evolved unknowns are the conservative pair (rho, m = rho u). Velocity is
recovered through a :class:`VacuumPolicy` because it is undefined where the
density vanishes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUp
from .grid import get_grid, grid_of, mean

NEG_TOL = 1e-10


@dataclass(frozen=True)
class Params:
    mu: float = 1.0
    beta: float = 4.0
    gamma: float = 2.0
    A: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not self.gamma > 1:
            raise ValueError(f"gamma must be > 1, got {self.gamma}")
        if not self.A > 0:
            raise ValueError(f"A must be > 0, got {self.A}")
        if not self.beta > 1:
            raise ValueError(f"beta must be > 1, got {self.beta}")
        if self.beta <= 3:
            warnings.warn(f"beta={self.beta} <= 3 lies outside the well-posedness "
                          "hypothesis beta > 3", stacklevel=3)


@dataclass(frozen=True)
class VacuumPolicy:
    eps_div: float = 1e-8
    eps_vac: float = 1e-7

    def __post_init__(self):
        if not 0 < self.eps_div <= self.eps_vac:
            raise ValueError("need 0 < eps_div <= eps_vac")


@dataclass(frozen=True, eq=False)
class State:
    t: float
    rho: np.ndarray
    mom: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        mom = np.asarray(self.mom, dtype=float)
        if rho.ndim != 2 or mom.shape != (2,) + rho.shape:
            raise ValueError(f"inconsistent shapes rho {rho.shape}, mom {mom.shape}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "mom", mom)

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    def validate(self):
        if not (np.isfinite(self.rho).all() and np.isfinite(self.mom).all()):
            raise ValueError("state contains non-finite values")
        if self.rho.min() < -NEG_TOL:
            raise ValueError(f"density below -{NEG_TOL}: {self.rho.min():.3e}")
        if not mean(self.rho) > 0:
            raise ValueError("total mass must be positive")
        return self

    @classmethod
    def from_velocity(cls, t, rho, u):
        rho = np.asarray(rho, dtype=float)
        return cls(t, rho, rho * np.asarray(u, dtype=float))


def pressure(rho, params: Params):
    return params.A * np.maximum(rho, 0.0) ** params.gamma


def bulk_viscosity(rho, params: Params):
    return np.maximum(rho, 0.0) ** params.beta


def velocity(state: State, policy: VacuumPolicy = VacuumPolicy()):
    rho = state.rho
    u = state.mom / np.maximum(rho, policy.eps_div)
    return np.where(rho < policy.eps_vac, 0.0, u)


def effective_flux(state, params, policy=VacuumPolicy(), u=None):
    """``F = (2 mu + lambda(rho)) div u - P(rho)``."""
    u = velocity(state, policy) if u is None else u
    g = grid_of(state.rho)
    divu = g.div(u)
    return (2 * params.mu + bulk_viscosity(state.rho, params)) * divu - pressure(state.rho, params)


def vorticity(u):
    return grid_of(u).curl(u)


@dataclass
class HL:
    H: np.ndarray
    L: np.ndarray
    rhoH: np.ndarray
    rhoL: np.ndarray
    omega: np.ndarray
    F: np.ndarray


def _divide(num, rho, policy):
    q = num / np.maximum(rho, policy.eps_div)
    return np.where(rho < policy.eps_vac, 0.0, q)


def hl_fields(state, params, policy=VacuumPolicy(), u=None) -> HL:
    """H = (mu w_x1 + F_x2)/rho and L = (-mu w_x2 + F_x1)/rho.

    The density-weighted products ``rhoH``, ``rhoL`` are computed without
    division; H and L are zeroed inside the vacuum region.
    """
    g = grid_of(state.rho)
    u = velocity(state, policy) if u is None else u
    a = g.rfft(u[0])
    b = g.rfft(u[1])
    divu = g.irfft(g.ik1 * a + g.ik2 * b)
    wh = g.ik1 * b - g.ik2 * a
    F = (2 * params.mu + bulk_viscosity(state.rho, params)) * divu - pressure(state.rho, params)
    Fh = g.rfft(F)
    mu = params.mu
    rhoH = g.irfft(mu * g.ik1 * wh + g.ik2 * Fh)
    rhoL = g.irfft(-mu * g.ik2 * wh + g.ik1 * Fh)
    return HL(_divide(rhoH, state.rho, policy), _divide(rhoL, state.rho, policy),
              rhoH, rhoL, g.irfft(wh), F)


def advection(u, v):
    """``(u . grad) v`` for vector fields."""
    g = grid_of(u)
    out = np.empty_like(v)
    for i in (0, 1):
        d = g.grad(v[i])
        out[i] = u[0] * d[0] + u[1] * d[1]
    return out


def ut_field(state, params, policy=VacuumPolicy()):
    """Material-derivative form ``u_t = (L, H) - (u . grad) u``, zero in vacuum."""
    u = velocity(state, policy)
    hl = hl_fields(state, params, policy, u=u)
    ut = np.stack([hl.L, hl.H]) - advection(u, u)
    return np.where(state.rho < policy.eps_vac, 0.0, ut)


def rhs(state, params, policy=VacuumPolicy(), dealias=False, with_diss=False):
    """Semi-discrete right-hand side of the conservative system.

    Returns ``(drho, dmom)``; with ``with_diss=True`` also returns the
    dissipation ``mean(mu w^2 + (2 mu + lambda)(div u)^2)`` of the input state.
    """
    g = get_grid(state.n)
    rho, m = state.rho, state.mom
    mu = params.mu
    u = velocity(state, policy)
    # transforms are batched: one call per stage
    m1h, m2h, u1h, u2h = g.rfft(np.concatenate([m, u]))
    divu = g.irfft(g.ik1 * u1h + g.ik2 * u2h)
    lam = bulk_viscosity(rho, params)
    q = (mu + lam) * divu - pressure(rho, params)
    qh, t11, t12, t22 = g.rfft(np.stack([q, m[0] * u[0], m[0] * u[1], m[1] * u[1]]))
    out = np.empty((3,) + m1h.shape, dtype=complex)
    out[0] = -(g.ik1 * m1h + g.ik2 * m2h)
    out[1] = -(g.ik1 * t11 + g.ik2 * t12) + g.ik1 * qh - mu * g.ksq * u1h
    out[2] = -(g.ik1 * t12 + g.ik2 * t22) + g.ik2 * qh - mu * g.ksq * u2h
    if dealias:
        out *= g.dealias_mask
    res = g.irfft(out)
    drho, dmom = res[0], res[1:]
    if not np.isfinite(drho.sum() + dmom.sum()):
        raise BlowUp("non-finite right-hand side", t=state.t)
    if not with_diss:
        return drho, dmom
    wh = g.ik1 * u2h - g.ik2 * u1h
    diss = mu * g.spectral_sq_mean(wh) + float(np.mean((2 * mu + lam) * divu**2))
    return drho, dmom, diss
