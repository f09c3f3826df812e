"""Particle paths, the theta(rho) change of variables and the log-density identity.

Along the path X(tau; t, x) with dX/dtau = u(tau, X), X(t) = x, the continuity
equation gives

    theta(rho)(t, x) - theta(rho0)(X0) = -int_0^t (P(rho) + F)(tau, X(tau)) dtau

with theta(rho) = 2 mu ln(rho) + (rho^beta - 1)/beta. The residual of this
identity measures how consistently a stored run transports density.
"""
from __future__ import annotations

import numpy as np

from .errors import HistoryGap, NonPositiveDensity, VacuumOnPath
from .grid import TWO_PI, get_grid

TIME_TOL = 1e-12


def theta(rho, params):
    """``2 mu ln(rho) + (rho^beta - 1) / beta``; requires rho > 0."""
    r = np.asarray(rho, dtype=float)
    if np.any(r <= 0):
        raise NonPositiveDensity("theta(rho) diverges as rho -> 0+")
    out = 2.0 * params.mu * np.log(r) + (r**params.beta - 1.0) / params.beta
    return float(out) if np.ndim(out) == 0 else out


def _basis(n, x):
    """Trigonometric basis rows for points ``x`` of shape (P,) along one axis."""
    k = np.fft.fftfreq(n, 1.0 / n)
    e = np.exp(1j * TWO_PI * np.outer(x, k))
    e[:, n // 2] = np.cos(np.pi * n * x)  # symmetric Nyquist term
    return e


class SpectralSampler:
    """Exact trigonometric evaluation of grid fields at off-grid points."""

    def __init__(self, n):
        self.n = n
        g = get_grid(n)
        self._w = g.col_weight
        self._g = g

    def coefficients(self, f):
        return self._g.rfft(f) * self._w

    def __call__(self, coeffs, pts):
        """Evaluate at ``pts`` of shape (P, 2); ``coeffs`` from :meth:`coefficients`."""
        pts = np.atleast_2d(pts)
        n = self.n
        e1 = _basis(n, pts[:, 0])
        e2 = _basis(n, pts[:, 1])[:, : n // 2 + 1]
        e2[:, -1] = np.cos(np.pi * n * pts[:, 1])
        return np.real(np.sum((e1 @ coeffs) * e2, axis=1))


class FrameHistory:
    """Time-ordered frames of a run with lazily cached spectra.

    ``frames`` are either model ``State`` objects (then velocity, density and
    effective flux are available) or ``(t, u)`` pairs (velocity only).
    Between frames every field is interpolated linearly in time.
    """

    def __init__(self, frames, params=None, policy=None):
        from .model import State, VacuumPolicy

        self.params = params
        self.policy = policy or VacuumPolicy()
        self._states = []
        self._vel = []
        times = []
        for fr in frames:
            if isinstance(fr, State):
                self._states.append(fr)
                self._vel.append(None)
                times.append(fr.t)
            else:
                t, u = fr
                self._states.append(None)
                self._vel.append(np.asarray(u, dtype=float))
                times.append(float(t))
        if not times:
            raise HistoryGap("empty history")
        self.times = np.asarray(times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise HistoryGap("frame times must be strictly increasing")
        first = self._states[0] if self._states[0] is not None else None
        n = first.n if first is not None else self._vel[0].shape[-1]
        self.sampler = SpectralSampler(n)
        self._cache = {}

    def __len__(self):
        return len(self.times)

    def _field(self, i, name):
        key = (i, name)
        if key not in self._cache:
            from .model import effective_flux, velocity

            st = self._states[i]
            if name in ("u1", "u2"):
                u = self._vel[i] if st is None else velocity(st, self.policy)
                self._cache[(i, "u1")] = self.sampler.coefficients(u[0])
                self._cache[(i, "u2")] = self.sampler.coefficients(u[1])
            elif st is None:
                raise ValueError(f"frame {i} stores velocity only; {name} unavailable")
            elif name == "rho":
                self._cache[key] = self.sampler.coefficients(st.rho)
            elif name == "F":
                F = effective_flux(st, self.params, self.policy)
                self._cache[key] = self.sampler.coefficients(F)
            else:
                raise KeyError(name)
        return self._cache[key]

    def check_covers(self, t):
        if self.times[0] > TIME_TOL or self.times[-1] < t - TIME_TOL * max(1.0, t):
            raise HistoryGap(f"frames span [{self.times[0]:.6g}, {self.times[-1]:.6g}], "
                             f"need [0, {t:.6g}]")

    def _bracket(self, tau):
        times = self.times
        i = int(np.searchsorted(times, tau, side="right")) - 1
        i = min(max(i, 0), len(times) - 1)
        if i == len(times) - 1 or abs(tau - times[i]) <= TIME_TOL:
            return i, i, 0.0
        w = (tau - times[i]) / (times[i + 1] - times[i])
        return i, i + 1, w

    def sample(self, name, tau, pts):
        i, j, w = self._bracket(tau)
        a = self.sampler(self._field(i, name), pts)
        if w == 0.0:
            return a
        return (1 - w) * a + w * self.sampler(self._field(j, name), pts)

    def velocity(self, tau, pts):
        return np.stack([self.sample("u1", tau, pts), self.sample("u2", tau, pts)], axis=1)


def _as_history(history, params=None, policy=None):
    if isinstance(history, FrameHistory):
        return history
    if hasattr(history, "history"):  # RunRecord
        return FrameHistory(history.history, history.params, history.policy)
    return FrameHistory(history, params, policy)


def path_nodes(times, t):
    inner = times[(times > TIME_TOL) & (times < t - TIME_TOL)]
    return np.concatenate([[0.0], inner, [t]]) if t > 0 else np.array([0.0])


def trace_path(history, t, x, substeps=1):
    """Backward RK4 trace of the particle path through ``(t, x)``.

    Returns ``(taus, X)`` with ``taus`` increasing from 0 to t (frame times in
    between) and ``X`` of shape ``(len(taus), P, 2)`` (``P`` points; a single
    point gives ``P = 1``). Positions are reduced modulo 1.
    """
    hist = _as_history(history)
    if t < 0:
        raise ValueError("t must be >= 0")
    hist.check_covers(t)
    pts = np.atleast_2d(np.asarray(x, dtype=float)).copy()
    nodes = path_nodes(hist.times, t)
    out = [pts % 1.0]
    X = pts
    for a, b in zip(nodes[::-1][:-1], nodes[::-1][1:]):
        h = (b - a) / substeps  # negative: backwards in time
        tau = a
        for _ in range(substeps):
            k1 = hist.velocity(tau, X)
            k2 = hist.velocity(tau + h / 2, X + h / 2 * k1)
            k3 = hist.velocity(tau + h / 2, X + h / 2 * k2)
            k4 = hist.velocity(tau + h, X + h * k3)
            X = X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            tau += h
        out.append(X % 1.0)
    return nodes, np.stack(out[::-1])


def _trapezoid(y, x):
    return np.sum(0.5 * np.diff(x)[:, None] * (y[1:] + y[:-1]), axis=0)


def log_density_residual(record, t, x, params=None, substeps=1, detail=False):
    """Residual of the integrated log-density identity along the path through (t, x).

    ``record`` is a run record (with stored State frames) or a
    :class:`FrameHistory`. Path integrals use the composite trapezoid rule on
    the frame times. ``x`` may hold several points (shape (P, 2)); the result
    then has one entry per point.
    """
    hist = _as_history(record, params)
    params = params or hist.params
    eps = hist.policy.eps_vac
    taus, X = trace_path(hist, t, x, substeps)
    pts_t = X[-1]
    rho_t = hist.sample("rho", t, pts_t)
    rho_0 = hist.sample("rho", 0.0, X[0])
    if np.any(rho_t <= eps) or np.any(rho_0 <= eps):
        raise VacuumOnPath("density at a path endpoint is below eps_vac")
    P = np.stack([params.A * np.maximum(hist.sample("rho", tau, X[i]), 0.0) ** params.gamma
                  for i, tau in enumerate(taus)])
    F = np.stack([hist.sample("F", tau, X[i]) for i, tau in enumerate(taus)])
    if len(taus) > 1:
        int_p = _trapezoid(P, taus)
        int_f = _trapezoid(F, taus)
    else:
        int_p = int_f = np.zeros(len(pts_t))
    b = params.beta
    res = (2 * params.mu * np.log(rho_t / rho_0) + rho_t**b / b + int_p
           - rho_0**b / b + int_f)
    scalar = np.ndim(x) == 1
    if detail:
        return {
            "residual": res[0] if scalar else res,
            "theta": theta(rho_t, params) if not scalar else theta(rho_t[0], params),
            "X0": X[0][0] if scalar else X[0],
            "rho_t": rho_t,
            "rho_0": rho_0,
        }
    return float(res[0]) if scalar else res
