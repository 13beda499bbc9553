"""
Semi-waves: monotone solutions of -dU'' + kU' = aU - bU^2 on the half line
with U(0) = 0 and U(+inf) = a/b, and the spreading speed k0 at which
mu*U'(0) = k.

The profile is the stable manifold of the saddle (a/b, 0) in the (U, U')
plane, so it is traced backward in r from a point just off the saddle until
U reaches zero.
"""

from typing import Optional
import logging
import math

import numpy as np
from scipy import integrate, optimize


_log = logging.getLogger(__name__)
_log.setLevel(logging.DEBUG)

_MANIFOLD_OFFSET = 1e-8
_RTOL = 1e-10
_SAMPLES = 401


class SemiWaveError(ValueError):
    """
    Base class for errors raised by the semiwave module.
    """
    pass


class NotInSpeedRange(SemiWaveError):
    def __init__(self, k: float, limit: float):
        super().__init__("k={:g} is outside [0, 2*sqrt(a*d))=[0, {:g})".format(k, limit))
        self.k = k
        self.limit = limit


class IntegrationFailure(SemiWaveError):
    def __init__(self, k: float, message: str):
        super().__init__("semi-wave integration failed for k={:g}: {:s}".format(k, message))
        self.k = k


class BracketFailure(SemiWaveError):
    def __init__(self, mu: float, lo: float, hi: float, g_lo: float, g_hi: float):
        msg = "mu*U'(0) - k does not change sign on [{:g}, {:g}] (g={:.3e}, {:.3e}) for mu={:g}"
        super().__init__(msg.format(lo, hi, g_lo, g_hi, mu))
        self.mu = mu
        self.bracket = (lo, hi)


def _check_positive(**values):
    for name, value in values.items():
        if not value > 0 or not math.isfinite(value):
            raise ValueError("{:s} must be positive, got {!r}".format(name, value))


class SemiWaveProfile:
    """
    A computed semi-wave U_k with U(0) = 0, sampled on [0, extent].

    :ivar slope0: U'(0).
    :ivar grid: Sample points r_j.
    :ivar values: U(r_j).
    :ivar extent: Length L_sw of the integrated range.
    """
    def __init__(self, a: float, b: float, d: float, k: float, slope0: float, extent: float, dense, shift: float, decay: float, offset: float):
        self.a = a
        self.b = b
        self.d = d
        self.k = k
        self.slope0 = slope0
        self.extent = extent
        self._dense = dense
        self._shift = shift
        self._decay = decay
        self._offset = offset
        self.grid = np.linspace(0.0, extent, _SAMPLES)
        self.values = self.evaluate(self.grid)

    @property
    def capacity(self) -> float:
        return self.a / self.b

    def evaluate(self, r) -> np.ndarray:
        """
        U_k at arbitrary r >= 0. Past the integrated range the linearised
        stable manifold is used.
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        inside = r <= self.extent
        if np.any(inside):
            out[inside] = self._dense(r[inside] + self._shift)[0]
        if np.any(~inside):
            out[~inside] = self.capacity - self._offset * np.exp(self._decay * (r[~inside] - self.extent))
        out[r <= 0] = 0.0
        return out

    def __repr__(self) -> str:
        s = "SemiWaveProfile(a={!r}, b={!r}, d={!r}, k={!r}, slope0={!r}, extent={!r})"
        return s.format(self.a, self.b, self.d, self.k, self.slope0, self.extent)


def speed_limit(a: float, d: float) -> float:
    """The upper end 2*sqrt(a*d) of the semi-wave speed range."""
    return 2.0 * math.sqrt(a * d)


def solve_semiwave(a: float, b: float, d: float, k: float) -> SemiWaveProfile:
    _check_positive(a=a, b=b, d=d)
    limit = speed_limit(a, d)
    if k < 0 or k >= limit:
        raise NotInSpeedRange(k, limit)

    cap = a / b
    root = math.sqrt(k * k + 4 * a * d)
    decay = (k - root) / (2 * d)  # stable eigenvalue of the saddle
    eps = _MANIFOLD_OFFSET * cap
    y0 = np.array([cap - eps, -eps * decay])

    # long enough to leave the saddle and to finish the half turn around the
    # origin, which slows down as k approaches the limit
    spiral = math.sqrt(max(4 * a * d - k * k, 1e-300))
    span = 40.0 / abs(decay) + 8.0 * math.pi * d / spiral + 20.0 * math.sqrt(d / a)

    def rhs(_, y):
        return [y[1], (k * y[1] - a * y[0] + b * y[0] * y[0]) / d]

    def hits_zero(_, y):
        return y[0]
    hits_zero.terminal = True

    scale_p = cap * math.sqrt(a / d)
    sol = integrate.solve_ivp(
        rhs, (0.0, -span), y0,
        method='DOP853',
        rtol=_RTOL,
        atol=[1e-14 * cap, 1e-14 * scale_p],
        events=hits_zero,
        dense_output=True,
    )
    if sol.status == -1:
        raise IntegrationFailure(k, sol.message)
    if len(sol.t_events[0]) == 0:
        raise IntegrationFailure(k, "U never reached 0 within r-extent {:g}".format(span))

    s_cross = float(sol.t_events[0][0])
    slope0 = float(sol.y_events[0][0][1])
    extent = -s_cross

    def dense(s):
        return sol.sol(s)

    profile = SemiWaveProfile(a, b, d, k, slope0, extent, dense, s_cross, decay, eps)
    _log.debug("semi-wave a={:g} b={:g} d={:g} k={:.10g}: U'(0)={:.12g}, extent {:.4g}".format(a, b, d, k, slope0, extent))
    return profile


def boundary_slope(a: float, b: float, d: float, k: float) -> float:
    """U_k'(0) alone."""
    return solve_semiwave(a, b, d, k).slope0


def find_k0(mu: float, a: float, b: float, d: float, xtol: Optional[float]=None) -> float:
    """
    The unique k0 in (0, 2*sqrt(a*d)) with mu*U_{k0}'(0) = k0. Since U_k'(0)
    decreases in k, g(k) = mu*U_k'(0) - k is decreasing and has one root.
    """
    _check_positive(mu=mu, a=a, b=b, d=d)
    scale = math.sqrt(a * d)
    limit = 2.0 * scale
    delta = 1e-6 * scale
    if xtol is None:
        xtol = 1e-8 * scale

    def g(k):
        return mu * boundary_slope(a, b, d, k) - k

    lo = delta
    g_lo = g(lo)
    if g_lo <= 0:
        raise BracketFailure(mu, lo, limit - delta, g_lo, float('nan'))

    # walk towards the end of the speed range; U'(0) collapses there so the
    # sign flips long before the gap shrinks to delta
    gap = 0.5 * scale
    hi = limit - gap
    g_hi = g(hi)
    while g_hi > 0:
        gap *= 0.5
        if gap < delta:
            raise BracketFailure(mu, lo, limit - delta, g_lo, g_hi)
        lo, g_lo = hi, g_hi
        hi = limit - gap
        g_hi = g(hi)

    k0 = optimize.brentq(g, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    _log.debug("k0(mu={:g}, a={:g}, b={:g}, d={:g}) = {:.12g}".format(mu, a, b, d, k0))
    return float(k0)
