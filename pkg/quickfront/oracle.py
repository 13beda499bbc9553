"""
Brute-force reference solver: forward Euler on one fine physical grid shared
by u and v, with the front tracked between grid nodes.

Nothing here is shared with fbsolver. The Laplacian is in conservative flux
form, the node next to the front uses the Shortley-Weller stencil with the
Dirichlet value at the true front position, and the Stefan flux comes from
the quadratic through the front and the two nearest nodes inside it.
"""

from datetime import timedelta
from typing import Optional, Tuple
import logging
import math

import numpy as np
from scipy import integrate

from . import util
from .fbsolver import Trajectory
from .model import InitialData, ModelParams, uniform_bounds


_log = logging.getLogger(__name__)
_log.setLevel(logging.DEBUG)

STABILITY_FACTOR = 0.2
_BLOWUP_FACTOR = 10.0
_MIN_THETA = 0.5


class Instability(RuntimeError):
    def __init__(self, t: float, sup_u: float, sup_v: float):
        super().__init__("explicit reference blew up at t={:.6g} (sup u={:.6g}, sup v={:.6g})".format(t, sup_u, sup_v))
        self.t = t
        self.sup_u = sup_u
        self.sup_v = sup_v


class ExplicitOracleConfig:
    def __init__(self, dr: float, t_end: float, L_v: float, d_max: float, dt: Optional[float]=None, record_every: int=100):
        """
        :param dr: Spacing of the shared physical grid.
        :param t_end: Horizon; keep it short, the cost grows like dr^-3.
        :param L_v: Right end of the grid, with zero flux there.
        :param d_max: Largest diffusion rate of the model; sets the step limit.
        :param dt: Explicit step. Defaults to the limit 0.2*dr^2/d_max.
        :param record_every: Steps between trajectory records.
        """
        limit = STABILITY_FACTOR * dr * dr / d_max
        if dt is None:
            dt = limit
        if not dr > 0 or not L_v > dr:
            raise ValueError("need 0 < dr < L_v, got dr={!r}, L_v={!r}".format(dr, L_v))
        if not 0 < dt <= limit * (1 + 1e-12):
            raise ValueError("dt={!r} violates the explicit stability limit {!r}".format(dt, limit))
        self.dr = dr
        self.t_end = t_end
        self.L_v = L_v
        self.d_max = d_max
        self.dt = dt
        self.record_every = record_every

    @staticmethod
    def for_params(p: ModelParams, dr: float, t_end: float, L_v: float, record_every: int=100) -> 'ExplicitOracleConfig':
        return ExplicitOracleConfig(dr, t_end, L_v, max(p.d1, p.d2), record_every=record_every)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(int(round(self.L_v / self.dr)) + 1) * self.dr

    @property
    def steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9))

    def __repr__(self) -> str:
        s = "ExplicitOracleConfig(dr={!r}, t_end={!r}, L_v={!r}, d_max={!r}, dt={!r})"
        return s.format(self.dr, self.t_end, self.L_v, self.d_max, self.dt)


class OracleResult:
    def __init__(self, trajectory: Trajectory, r: np.ndarray, u: np.ndarray, v: np.ndarray, h: float):
        self.trajectory = trajectory
        self.r = r
        self.u = u
        self.v = v
        self.h = h


def _flux_form_laplacian(w: np.ndarray, r: np.ndarray, dim: int, dr: float) -> np.ndarray:
    """
    Conservative radial Laplacian with reflection at both ends:
    (r_{i+1/2}^(N-1)(w_{i+1}-w_i) - r_{i-1/2}^(N-1)(w_i-w_{i-1})) / (r_i^(N-1) dr^2).
    """
    out = np.empty_like(w)
    face = np.power(r[:-1] + 0.5 * dr, dim - 1)
    flux = face * np.diff(w)
    out[1:-1] = (flux[1:] - flux[:-1]) / (np.power(r[1:-1], dim - 1) * dr * dr)
    out[0] = 2.0 * dim * (w[1] - w[0]) / (dr * dr)
    out[-1] = 2.0 * (w[-2] - w[-1]) / (dr * dr)
    return out


def _inside(h: float, dr: float) -> Tuple[int, float]:
    """Index k of the last node strictly inside the front and its gap fraction."""
    k = int(math.ceil(h / dr - 1e-12)) - 1
    theta = (h - k * dr) / dr
    return k, theta


def _front_slope(u: np.ndarray, r: np.ndarray, h: float, k: int, theta: float) -> float:
    # quadratic through (h, 0) and the two nearest usable nodes
    i1 = k if theta >= _MIN_THETA else k - 1
    s1 = h - r[i1]
    s2 = h - r[i1 - 1]
    return (-u[i1] * s2 / s1 + u[i1 - 1] * s1 / s2) / (s2 - s1)


def explicit_reference(p: ModelParams, init: InitialData, cfg: ExplicitOracleConfig) -> OracleResult:
    if max(p.d1, p.d2) > cfg.d_max * (1 + 1e-12):
        raise ValueError("config was built for d_max={:g} but the model has {:g}".format(cfg.d_max, max(p.d1, p.d2)))
    r = cfg.nodes
    dr = cfg.dr
    dt = cfg.dt
    n = p.dim
    m1, m2 = uniform_bounds(p, init, cfg.L_v)

    h = p.h0
    u = init.u_profile(r, h)
    v = init.v_profile(r)
    k, theta = _inside(h, dr)
    if k < 2:
        raise ValueError("grid too coarse: only {:d} nodes inside h0".format(k + 1))

    traj = Trajectory()

    def record(t: float, h_prime: float, slope: float):
        ri = np.append(r[:k + 1], h)
        ui = np.append(u[:k + 1], 0.0)
        vi = np.interp(ri, r, v)
        mass = float(integrate.trapezoid(np.power(ri, n - 1) * ui, ri))
        react = float(integrate.trapezoid(np.power(ri, n - 1) * ui * (p.a1 - p.b1 * ui - p.c1 * vi), ri))
        traj.append(t, h, h_prime, float(np.max(u)), float(np.max(v)), mass, slope, react)

    if theta < _MIN_THETA:
        u[k] = u[k - 1] * theta / (1 + theta)
    slope = _front_slope(u, r, h, k, theta)
    record(0.0, -p.mu * slope, slope)

    steps = cfg.steps
    show_progress = util.once_every(timedelta(seconds=5), lambda: _log.info("oracle h={:.6g}{:s}".format(h, util.progress(step, steps))))
    step = 0
    while step < steps:
        show_progress()
        step += 1

        lap_u = _flux_form_laplacian(u, r, n, dr)
        if theta >= _MIN_THETA:
            # Shortley-Weller: right neighbour is the front at distance theta*dr
            ri = r[k]
            h1, h2 = dr, theta * dr
            uxx = 2.0 * (u[k - 1] / (h1 * (h1 + h2)) - u[k] / (h1 * h2))
            ux = -h2 / (h1 * (h1 + h2)) * u[k - 1] + (h2 - h1) / (h1 * h2) * u[k]
            lap_u[k] = uxx + ((n - 1) / ri) * ux if ri > 0 else uxx
            active = k + 1
        else:
            active = k

        u_new = np.zeros_like(u)
        u_new[:active] = u[:active] + dt * (p.d1 * lap_u[:active] + u[:active] * (p.a1 - p.b1 * u[:active] - p.c1 * v[:active]))
        v_new = v + dt * (p.d2 * _flux_form_laplacian(v, r, n, dr) + v * (p.a2 - p.b2 * u - p.c2 * v))

        finite = np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new)) and math.isfinite(slope)
        if not finite or np.max(np.abs(u_new)) > _BLOWUP_FACTOR * m1 or np.max(np.abs(v_new)) > _BLOWUP_FACTOR * m2:
            raise Instability(step * dt, float(np.max(np.abs(u_new))), float(np.max(np.abs(v_new))))

        h_prime = -p.mu * slope
        h = h + dt * h_prime
        if not r[2] < h <= r[-3]:
            raise ValueError("front left the oracle grid at t={:.6g} (h={:.6g})".format(step * dt, h))
        u = u_new
        v = v_new
        k, theta = _inside(h, dr)
        u[k + 1:] = 0.0
        if theta < _MIN_THETA:
            u[k] = u[k - 1] * theta / (1 + theta)
        slope = _front_slope(u, r, h, k, theta)

        if step % cfg.record_every == 0 or step == steps:
            record(step * dt, h_prime, slope)

    return OracleResult(traj, r, u.copy(), v.copy(), h)
