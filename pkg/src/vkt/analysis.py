"""Run diagnostics: conserved quantities, energy balance, the functionals whose
a-priori bounds drive the well-posedness theory, and empirical checks of the
functional inequalities used there.

None of these checks asserts a value for an unknown constant; they report
quantities whose boundedness or stability can be watched.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .elliptic import MEAN_RTOL, xi_field
from .errors import ExponentOutOfRange, NonZeroMean
from .grid import get_grid, grid_of, lp_norm, mean, vec_norm
from .lagrangian import theta
from .model import (
    State,
    VacuumPolicy,
    advection,
    bulk_viscosity,
    hl_fields,
    pressure,
    ut_field,
    velocity,
)


def conserved(state: State):
    """Total mass and momentum (grid means of rho and m)."""
    return mean(state.rho), np.array([mean(state.mom[0]), mean(state.mom[1])])


def kinetic_density(state, policy=VacuumPolicy()):
    q = 0.5 * (state.mom[0] ** 2 + state.mom[1] ** 2) / np.maximum(state.rho, policy.eps_div)
    return np.where(state.rho < policy.eps_vac, 0.0, q)


def energy(state, params, policy=VacuumPolicy()) -> float:
    """``int (1/2 rho |u|^2 + A rho^gamma / (gamma - 1))``."""
    pot = pressure(state.rho, params) / (params.gamma - 1.0)
    return float(np.mean(kinetic_density(state, policy) + pot))


def dissipation(state, params, policy=VacuumPolicy(), u=None) -> float:
    """``int (mu w^2 + (2 mu + lambda(rho)) (div u)^2)``."""
    g = grid_of(state.rho)
    u = velocity(state, policy) if u is None else u
    a = g.rfft(u[0])
    b = g.rfft(u[1])
    w = g.irfft(g.ik1 * b - g.ik2 * a)
    d = g.irfft(g.ik1 * a + g.ik2 * b)
    lam = bulk_viscosity(state.rho, params)
    return float(np.mean(params.mu * w**2 + (2 * params.mu + lam) * d**2))


def energy_balance(rows, method="accumulated"):
    """Residual ``E(t) + int_0^t diss - E(0)`` for every diagnostics row.

    ``method="accumulated"`` uses the dissipation integral carried through the
    RK4 stages (``diss_int`` on each row), which converges at the integrator's
    order. ``method="trapezoid"`` integrates the row-sampled dissipation with
    the trapezoid rule and is only second order in the row spacing.
    """
    if not rows:
        raise ValueError("empty record")
    rows = getattr(rows, "rows", rows)
    e = np.array([r.energy for r in rows])
    if method == "accumulated":
        integral = np.array([r.diss_int for r in rows])
    elif method == "trapezoid":
        t = np.array([r.t for r in rows])
        d = np.array([r.diss for r in rows])
        integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (d[1:] + d[:-1]))])
    else:
        raise ValueError(f"unknown method {method!r}")
    return e + integral - e[0]


def z_functional(state, params, policy=VacuumPolicy(), hl=None) -> float:
    """``Z^2 = int (mu w^2 + F^2 / (2 mu + lambda(rho)))``."""
    hl = hl_fields(state, params, policy) if hl is None else hl
    visc = 2 * params.mu + bulk_viscosity(state.rho, params)
    return float(np.mean(params.mu * hl.omega**2 + hl.F**2 / visc))


def y_functional(state, params, policy=VacuumPolicy(), hl=None) -> float:
    """``Y^2 = int rho (H^2 + L^2)``, evaluated as ``((rho H)^2 + (rho L)^2) / rho``."""
    hl = hl_fields(state, params, policy) if hl is None else hl
    rho = state.rho
    q = (hl.rhoH**2 + hl.rhoL**2) / np.maximum(rho, policy.eps_div)
    return float(np.mean(np.where(rho < policy.eps_vac, 0.0, q)))


def psi_functional(H, L, rho, params) -> float:
    """``psi^2 = int mu (H_x1 - L_x2)^2 + (2 mu + lambda)(H_x2 + L_x1)^2``."""
    g = grid_of(H)
    Hh = g.rfft(H)
    Lh = g.rfft(L)
    rot = g.irfft(g.ik1 * Hh - g.ik2 * Lh)
    sym = g.irfft(g.ik2 * Hh + g.ik1 * Lh)
    visc = 2 * params.mu + bulk_viscosity(rho, params)
    return float(np.mean(params.mu * rot**2 + visc * sym**2))


def gradient_energy_split(H, L):
    """Both sides of ``int |grad H|^2 + |grad L|^2 = int (H_x1 - L_x2)^2 + (H_x2 + L_x1)^2``."""
    g = grid_of(H)
    dH = g.grad(H)
    dL = g.grad(L)
    lhs = float(np.mean(dH[0] ** 2 + dH[1] ** 2 + dL[0] ** 2 + dL[1] ** 2))
    rhs = float(np.mean((dH[0] - dL[1]) ** 2 + (dH[1] + dL[0]) ** 2))
    return lhs, rhs


def density_norm_scan(rho, params, ks):
    """Rows ``(k, ||rho||_k, ||rho||_k * k^(-2/(beta-1)))``."""
    out = []
    for k in ks:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        nk = lp_norm(rho, k)
        out.append((k, nk, nk * k ** (-2.0 / (params.beta - 1.0))))
    return out


def f_functional(state, params, m=4, policy=VacuumPolicy(), xi=None) -> float:
    """``f = (int rho [(xi + theta(rho))_+]^(2m))^(1/(2m))``.

    The integrand is set to zero where ``rho <= eps_vac``: theta tends to
    minus infinity at vacuum, so the positive part vanishes there.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    rho = state.rho
    if xi is None:
        xi = xi_field(rho, velocity(state, policy))
    live = rho > policy.eps_vac
    th = np.zeros_like(rho)
    th[live] = theta(rho[live], params)
    pos = np.where(live, np.maximum(xi + th, 0.0), 0.0)
    top = float(pos.max())
    if top == 0.0:
        return 0.0
    p = 2 * m
    return top * float(np.mean(np.maximum(rho, 0.0) * (pos / top) ** p)) ** (1.0 / p)


def rho_ut_norm(state, params, policy=VacuumPolicy(), ut=None) -> float:
    """``|| sqrt(rho) u_t ||_2`` with u_t from the material-derivative identity."""
    ut = ut_field(state, params, policy) if ut is None else ut
    return math.sqrt(float(np.mean(np.maximum(state.rho, 0.0) * (ut[0] ** 2 + ut[1] ** 2))))


def _omega_source(state, params, policy, source):
    """Right-hand side of the vorticity transport equation at ``state``."""
    g = grid_of(state.rho)
    if source == "hl":
        hl = hl_fields(state, params, policy)
        return g.irfft(g.ik1 * g.rfft(hl.H) - g.ik2 * g.rfft(hl.L))
    if source == "momentum":
        # curl of u_t + (u.grad)u with u_t = (m_t - u rho_t) / rho
        from .model import rhs
        u = velocity(state, policy)
        drho, dmom = rhs(state, params, policy)
        den = np.maximum(state.rho, policy.eps_div)
        acc = (dmom - u * drho) / den + advection(u, u)
        acc = np.where(state.rho < policy.eps_vac, 0.0, acc)
        return g.curl(acc)
    raise ValueError(f"unknown source {source!r}")


def vorticity_transport_residual(prev, nxt, params, policy=VacuumPolicy(), source="hl") -> float:
    """L2 norm of ``w_t + u.grad w + w div u - (H_x1 - L_x2)``.

    ``w_t`` is the centered difference of the two states; every spatial term
    is evaluated at their midpoint state.
    """
    dt = nxt.t - prev.t
    if not dt > 0:
        raise ValueError("next.t must exceed prev.t")
    g = grid_of(prev.rho)
    w0 = g.curl(velocity(prev, policy))
    w1 = g.curl(velocity(nxt, policy))
    mid = State(0.5 * (prev.t + nxt.t), 0.5 * (prev.rho + nxt.rho), 0.5 * (prev.mom + nxt.mom))
    u = velocity(mid, policy)
    w = g.curl(u)
    dw = g.grad(w)
    res = (w1 - w0) / dt + u[0] * dw[0] + u[1] * dw[1] + w * g.div(u)
    res = res - _omega_source(mid, params, policy, source)
    return lp_norm(res, 2)


# functional inequalities ----------------------------------------------------

def _grad_norm(h, p):
    return lp_norm(vec_norm(grid_of(h).grad(h)), p)


def _require(cond, msg):
    if not cond:
        raise ExponentOutOfRange(msg)


def gn_alpha(q, m, r):
    return (1.0 / r - 1.0 / q) / (1.0 / r - 1.0 / m + 0.5)


def inequality_check(kind, h, **exponents):
    """Evaluate one functional inequality on a discrete field.

    Returns ``(lhs, rhs_without_C, ratio)``; the ratio is an empirical lower
    bound for the inequality's constant and is reported as 0 when both sides
    vanish.

    kind="GN": ``||h||_q <= C ||grad h||_m^a ||h||_r^(1-a)`` (exponents q, m, r).
    kind="Poincare": ``||h||_(2m/(2-m)) <= C (2-m)^(-1/2) ||grad h||_m`` (m in [1, 2)).
    kind="L23": ``||h||_2m <= C (||h||_1 + m^(1/2) ||h||_(2(1-eps))^s ||grad h||_(2m/(m+eta))^(1-s))``
    (m >= 2, eta in (0, 1], eps in [0, 1/2]).
    """
    h = np.asarray(h, dtype=float)
    if kind in ("GN", "Poincare"):
        if abs(mean(h)) > MEAN_RTOL * max(lp_norm(h, 2), 1e-300) and lp_norm(h, 2) > 0:
            raise NonZeroMean(f"{kind} check needs a zero-mean field")
    if kind == "GN":
        q, m, r = exponents["q"], exponents["m"], exponents["r"]
        _require(m >= 1 and r >= 1 and q >= 1, "exponents must be >= 1")
        if m < 2:
            crit = 2 * m / (2 - m)
            lo, hi = sorted((r, crit))
            _require(lo <= q <= hi, f"q must lie between r={r} and 2m/(2-m)={crit}")
        else:
            _require(q >= r and q < math.inf, "q must lie in [r, inf) for m >= 2")
        a = gn_alpha(q, m, r)
        lhs = lp_norm(h, q)
        rhs = _grad_norm(h, m) ** a * lp_norm(h, r) ** (1 - a)
    elif kind == "Poincare":
        m = exponents["m"]
        _require(1 <= m < 2, "Poincare check needs 1 <= m < 2")
        lhs = lp_norm(h, 2 * m / (2 - m))
        rhs = (2 - m) ** -0.5 * _grad_norm(h, m)
    elif kind == "L23":
        m = exponents["m"]
        eta = exponents.get("eta", 1.0)
        eps = exponents.get("eps", 0.0)
        _require(m >= 2, "L23 check needs m >= 2")
        _require(0 < eta <= 1, "eta must lie in (0, 1]")
        _require(0 <= eps <= 0.5, "eps must lie in [0, 1/2]")
        s = (1 - eps) * (1 - eta) / (m - eta * (1 - eps))
        lhs = lp_norm(h, 2 * m)
        rhs = lp_norm(h, 1) + math.sqrt(m) * (
            lp_norm(h, 2 * (1 - eps)) ** s * _grad_norm(h, 2 * m / (m + eta)) ** (1 - s))
    else:
        raise ValueError(f"unknown inequality kind {kind!r}")
    ratio = lhs / rhs if rhs > 0 else 0.0
    return lhs, rhs, ratio


def random_zero_mean_field(n, kmax, rng):
    """Band-limited random field with Gaussian coefficients on |k_i| <= kmax."""
    g = get_grid(n)
    s = np.zeros((n, n // 2 + 1), dtype=complex)
    sel = (np.abs(g.k1) <= kmax) & (g.k2 <= kmax) & ((g.k1 != 0) | (g.k2 != 0))
    count = int(sel.sum())
    s[sel] = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    f = g.irfft(s)
    f -= mean(f)
    return f / lp_norm(f, 2)


# diagnostics rows -----------------------------------------------------------

@dataclass
class DiagRow:
    t: float
    mass: float
    mom: tuple
    energy: float
    diss: float
    diss_int: float
    energy_balance: float
    Z2: float
    Y2: float
    psi2: float
    rho_max: float
    rho_min: float
    f_m: float
    norm_ratios: dict = field(default_factory=dict)
    rho_ut_norm: float = 0.0

    def flat(self, m=None):
        """Ordered flat mapping used for CSV serialization."""
        d = asdict(self)
        out = {}
        for key in ("t", "mass"):
            out[key] = d[key]
        out["mom1"], out["mom2"] = d["mom"]
        for key in ("energy", "diss", "diss_int", "energy_balance", "Z2", "Y2", "psi2",
                    "rho_max", "rho_min"):
            out[key] = d[key]
        out["f_m" if m is None else f"f_m{m}"] = d["f_m"]
        for k, v in d["norm_ratios"].items():
            out[f"ratio_k{k}"] = v
        out["rho_ut_norm"] = d["rho_ut_norm"]
        return out


def diag_row(state, params, policy=VacuumPolicy(), *, diss_int=0.0, e0=None, f_m=4,
             norm_ks=(2, 4, 8, 16, 32, 64)) -> DiagRow:
    u = velocity(state, policy)
    hl = hl_fields(state, params, policy, u=u)
    mass, mom = conserved(state)
    e = energy(state, params, policy)
    e0 = e if e0 is None else e0
    ut = np.stack([hl.L, hl.H]) - advection(u, u)
    ut = np.where(state.rho < policy.eps_vac, 0.0, ut)
    return DiagRow(
        t=float(state.t),
        mass=mass,
        mom=(float(mom[0]), float(mom[1])),
        energy=e,
        diss=dissipation(state, params, policy, u=u),
        diss_int=float(diss_int),
        energy_balance=e + diss_int - e0,
        Z2=z_functional(state, params, policy, hl=hl),
        Y2=y_functional(state, params, policy, hl=hl),
        psi2=psi_functional(hl.H, hl.L, state.rho, params),
        rho_max=float(state.rho.max()),
        rho_min=float(state.rho.min()),
        f_m=f_functional(state, params, f_m, policy, xi=xi_field(state.rho, u)),
        norm_ratios={k: r for k, _, r in density_norm_scan(state.rho, params, norm_ks)},
        rho_ut_norm=rho_ut_norm(state, params, policy, ut=ut),
    )
