"""Initial data: delta-regularization, the compatibility elliptic solve and presets."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elliptic import LameConfig, MEAN_RTOL, lame_apply, lame_solve
from .errors import MeanIncompatible, NonPositiveDensity, UnknownPreset
from .grid import get_grid, grid_of, lp_norm, mean
from .model import Params, State, pressure


def regularize(rho0, delta, params):
    """Lift density and pressure by ``delta``: ``(rho0 + delta, P(rho0) + delta)``."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    rho0 = np.asarray(rho0, dtype=float)
    return rho0 + delta, pressure(rho0, params) + delta


def compat_forcing(P0, rho0, g):
    """``grad(P0) + sqrt(rho0) g``."""
    gr = grid_of(P0)
    f = gr.grad(P0)
    if g is not None:
        f = f + np.sqrt(np.maximum(rho0, 0.0)) * g
    return f


def velocity_from_compat(rho0d, P0d, rho0, g, mean_u0, params, cfg=None, info=False):
    """Solve ``L_{rho0d} u = grad(P0d) + sqrt(rho0) g`` with ``mean(u) = mean_u0``."""
    rho0d = np.asarray(rho0d, dtype=float)
    if rho0d.min() <= 0:
        raise NonPositiveDensity("regularized density must be strictly positive")
    if g is not None:
        w = np.sqrt(np.maximum(rho0, 0.0)) * g
        for i in (0, 1):
            m = mean(w[i])
            if abs(m) > MEAN_RTOL * max(lp_norm(w[i], 2), 1.0):
                raise MeanIncompatible(f"mean(sqrt(rho0) g_{i + 1}) = {m:.3e} must vanish")
    f = compat_forcing(P0d, rho0, g)
    if g is not None:
        # remove the roundoff-level mean left after the check
        f = f - np.array([mean(f[0]), mean(f[1])])[:, None, None]
    return lame_solve(rho0d, f, mean_u0, params, cfg or LameConfig(), info=info)


def compat_residual(rho0, u0, P0, g, params, relative=False):
    """``|| L_{rho0} u0 - grad(P0) - sqrt(rho0) g ||_2``.

    With ``relative=True`` the norm is divided by ``|| grad(P0) + sqrt(rho0) g ||_2``.
    """
    rho0 = np.asarray(rho0, dtype=float)
    coef = params.mu + np.maximum(rho0, 0.0) ** params.beta
    f = compat_forcing(P0, rho0, g)
    r = lame_apply(np.asarray(u0, dtype=float), coef, params.mu) - f
    res = math.sqrt(lp_norm(r[0], 2) ** 2 + lp_norm(r[1], 2) ** 2)
    if relative:
        scale = math.sqrt(lp_norm(f[0], 2) ** 2 + lp_norm(f[1], 2) ** 2)
        return res / scale if scale > 0 else res
    return res


@dataclass
class Preset:
    name: str
    rho0: np.ndarray
    u0: np.ndarray | None = None
    g: np.ndarray | None = None
    mean_u0: tuple = (0.0, 0.0)


def _periodic_dist2(g, center, width=1.0):
    """Smooth periodic squared distance ``sum (sin(pi (x - c)) / pi)^2``."""
    d1 = np.sin(np.pi * (g.x1 - center[0])) / np.pi
    d2 = np.sin(np.pi * (g.x2 - center[1])) / np.pi
    return d1**2 + d2**2


def bump_profile(r2, radius, amplitude):
    """C^2 cutoff ``amplitude (1 - r^2/R^2)^3`` inside the disk, exactly 0 outside."""
    s = np.clip(1.0 - r2 / radius**2, 0.0, None)
    return amplitude * s**3


def bump_mass(radius, amplitude):
    """Closed-form integral of :func:`bump_profile` over the plane."""
    return amplitude * math.pi * radius**2 / 4.0


def sound_speed(rho, params):
    return math.sqrt(params.gamma * params.A * rho ** (params.gamma - 1))


def preset(name, n, params=Params(), **args) -> Preset:
    """Named initial configurations.

    uniform        rho = rho_bar, u = 0
    acoustic       rho = rho_bar (1 + a cos(2 pi k x1)), u1 = c a cos(2 pi k x1) + b sin(2 pi x2),
                   u2 = b sin(2 pi x1): a right-running linear sound wave plus a
                   divergence-free shear of amplitude b
    vacuum-bump    compactly supported C^2 bump of radius R centred at c, zero
                   outside; g = 0 (velocity comes from the compatibility solve)
    rotating-bump  rho = rho_bar + a exp(-d^2/s^2), velocity from the stream
                   function omega_0 s^2 exp(-d^2/s^2), d the periodic distance
    """
    g = get_grid(n)
    x1, x2 = g.x1, g.x2
    if name == "uniform":
        rho_bar = args.get("rho_bar", 1.0)
        return Preset(name, np.full((n, n), float(rho_bar)), u0=np.zeros((2, n, n)))
    if name == "acoustic":
        rho_bar = args.get("rho_bar", 1.0)
        a = args.get("amplitude", 0.05)
        b = args.get("shear", 0.02)
        k = args.get("mode", 1)
        c = sound_speed(rho_bar, params)
        wave = np.cos(2 * np.pi * k * x1)
        rho = rho_bar * (1.0 + a * wave)
        u = np.stack([c * a * wave + b * np.sin(2 * np.pi * x2), b * np.sin(2 * np.pi * x1)])
        return Preset(name, rho, u0=u)
    if name == "vacuum-bump":
        center = args.get("center", (0.5, 0.5))
        radius = args.get("radius", 0.35)
        amp = args.get("amplitude", 1.0)
        r2 = (x1 - center[0]) ** 2 + (x2 - center[1]) ** 2
        if radius >= 0.5:
            raise ValueError("bump radius must be < 0.5 to fit in the torus")
        rho = bump_profile(r2, radius, amp)
        return Preset(name, rho, g=np.zeros((2, n, n)))
    if name == "rotating-bump":
        rho_bar = args.get("rho_bar", 1.0)
        a = args.get("amplitude", 0.5)
        s = args.get("width", 0.15)
        w0 = args.get("omega", 1.0)
        center = args.get("center", (0.5, 0.5))
        d2 = _periodic_dist2(g, center)
        rho = rho_bar + a * np.exp(-d2 / s**2)
        psi = w0 * s**2 * np.exp(-d2 / s**2)
        dpsi = g.grad(psi)
        u = np.stack([dpsi[1], -dpsi[0]])
        return Preset(name, rho, u0=u)
    raise UnknownPreset(name)


PRESETS = ("uniform", "acoustic", "vacuum-bump", "rotating-bump")


def initial_state(name, n, params=Params(), delta=0.0, cfg=None, **args) -> State:
    """Build a :class:`State` from a preset.

    Presets that supply a velocity are lifted by ``delta`` (0 by default).
    Presets that supply ``g`` go through regularization and the compatibility
    solve, which needs ``delta > 0`` when the density has vacuum.
    """
    p = preset(name, n, params, **args)
    if p.u0 is not None:
        rho = p.rho0 + delta
        return State.from_velocity(0.0, rho, p.u0)
    rho_d, P_d = regularize(p.rho0, delta, params)
    u = velocity_from_compat(rho_d, P_d, p.rho0, p.g, p.mean_u0, params, cfg)
    return State.from_velocity(0.0, rho_d, u)
