"""Explicit RK4 time integration of the conservative system and run orchestration."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .errors import BlowUp
from .model import Params, State, VacuumPolicy, rhs, velocity

log = logging.getLogger(__name__)

NEG_ABORT = 1e-6


@dataclass(frozen=True)
class RunConfig:
    n: int
    t_end: float
    dt: float | None = None
    cfl: float | None = None
    snapshot_every: int = 0
    diagnostics_every: int = 1
    dealias: bool = False
    policy: VacuumPolicy = VacuumPolicy()
    params: Params = Params()
    f_m: int = 4
    norm_ks: tuple = (2, 4, 8, 16, 32, 64)
    keep_history: bool = True

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if (self.dt is None) == (self.cfl is None):
            raise ValueError("set exactly one of dt and cfl")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.cfl is not None and not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.diagnostics_every < 1:
            raise ValueError("diagnostics_every must be >= 1")


def stable_dt(state: State, params: Params, cfl: float, policy=VacuumPolicy()) -> float:
    """``cfl * min(h / (max|u| + c_max), h^2 / (2 (2 mu + lambda_max)))``."""
    if not 0 < cfl <= 1:
        raise ValueError("cfl must lie in (0, 1]")
    h = 1.0 / state.n
    rho_max = max(float(state.rho.max()), 0.0)
    u = velocity(state, policy)
    umax = float(np.sqrt(u[0] ** 2 + u[1] ** 2).max())
    c_max = math.sqrt(params.gamma * params.A * rho_max ** (params.gamma - 1))
    lam_max = rho_max**params.beta
    adv = h / (umax + c_max) if umax + c_max > 0 else math.inf
    visc = h * h / (2.0 * (2.0 * params.mu + lam_max))
    return cfl * min(adv, visc)


def _check(state, step):
    rho = state.rho
    if not (np.isfinite(rho).all() and np.isfinite(state.mom).all()):
        raise BlowUp("non-finite state", step=step, t=state.t)
    lo, hi = float(rho.min()), float(rho.max())
    if lo < -NEG_ABORT * hi:
        raise BlowUp(f"density undershoot {lo:.3e} (max {hi:.3e})", step=step, t=state.t)


def rk4(state, dt, params, policy=VacuumPolicy(), dealias=False):
    """One classical RK4 step; also returns the step's dissipation integral.

    The dissipation is integrated with the same stage weights, so the
    energy-balance residual inherits the fourth-order accuracy of the scheme.
    """
    t, r0, m0 = state.t, state.rho, state.mom
    k1r, k1m, d1 = rhs(state, params, policy, dealias, with_diss=True)
    s = State(t + dt / 2, r0 + dt / 2 * k1r, m0 + dt / 2 * k1m)
    k2r, k2m, d2 = rhs(s, params, policy, dealias, with_diss=True)
    s = State(t + dt / 2, r0 + dt / 2 * k2r, m0 + dt / 2 * k2m)
    k3r, k3m, d3 = rhs(s, params, policy, dealias, with_diss=True)
    s = State(t + dt, r0 + dt * k3r, m0 + dt * k3m)
    k4r, k4m, d4 = rhs(s, params, policy, dealias, with_diss=True)
    rho = r0 + dt / 6 * (k1r + 2 * k2r + 2 * k3r + k4r)
    mom = m0 + dt / 6 * (k1m + 2 * k2m + 2 * k3m + k4m)
    return State(t + dt, rho, mom), dt / 6 * (d1 + 2 * d2 + 2 * d3 + d4)


def step(state, dt, params, policy=VacuumPolicy(), dealias=False, step_index=None):
    if dt > stable_dt(state, params, 1.0, policy) * (1 + 1e-12):
        raise ValueError(f"dt={dt:.3e} exceeds stable_dt(cfl=1)")
    try:
        new, _ = rk4(state, dt, params, policy, dealias)
    except BlowUp as exc:
        raise BlowUp(exc.reason, step=step_index, t=state.t) from None
    _check(new, step_index)
    return new


@dataclass
class RunRecord:
    config: RunConfig
    rows: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    history: list = field(default_factory=list)
    steps: int = 0
    final: State | None = None

    @property
    def params(self):
        return self.config.params

    @property
    def policy(self):
        return self.config.policy


def run(config: RunConfig, init: State, on_row=None, on_snapshot=None) -> RunRecord:
    """Integrate from ``init`` to ``config.t_end``.

    Diagnostics rows (and history frames) are emitted every
    ``diagnostics_every`` steps and at the final time; snapshots every
    ``snapshot_every`` steps (0 disables) plus initial and final states. On
    blow-up the raised :class:`BlowUp` carries ``record`` and ``last_state``.
    """
    init.validate()
    if init.n != config.n:
        raise ValueError(f"init has n={init.n}, config n={config.n}")
    params, policy = config.params, config.policy
    record = RunRecord(config)
    e0 = analysis.energy(init, params, policy)
    diss_int = 0.0

    def emit_row(s):
        row = analysis.diag_row(s, params, policy, diss_int=diss_int, e0=e0,
                                f_m=config.f_m, norm_ks=config.norm_ks)
        record.rows.append(row)
        if config.keep_history:
            record.history.append(s)
        if on_row:
            on_row(row)

    def emit_snapshot(s, k):
        record.snapshots.append(s)
        if on_snapshot:
            on_snapshot(s, k)

    state = init
    record.final = init
    emit_row(state)
    emit_snapshot(state, 0)
    k = 0
    t_end = config.t_end
    tol = 1e-12 * max(1.0, t_end)
    while state.t < t_end - tol:
        dt = config.dt if config.dt is not None else config.cfl * stable_dt(state, params, 1.0, policy)
        last = state.t + dt >= t_end - tol
        if last:
            dt = t_end - state.t
        try:
            new, dd = rk4(state, dt, params, policy, config.dealias)
            _check(new, k + 1)
        except BlowUp as exc:
            err = BlowUp(exc.reason, step=k + 1, t=state.t)
            err.record = record
            err.last_state = state
            raise err from None
        if last:
            new = State(t_end, new.rho, new.mom)
        state = new
        record.final = state
        diss_int += dd
        k += 1
        if k % config.diagnostics_every == 0 or last:
            emit_row(state)
        if last or (config.snapshot_every and k % config.snapshot_every == 0):
            emit_snapshot(state, k)
    record.steps = k
    record.final = state
    log.info("run finished: %d steps, t=%.6g", k, state.t)
    return record
