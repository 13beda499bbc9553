"""
Principal Dirichlet eigenvalue of -Laplacian on balls and the critical radii
derived from it.

lambda1 of the ball of radius R in dimension N is (j / R)^2 where j is the
first positive zero of the Bessel function of order N/2 - 1.
"""

from typing import Union
import functools
import logging
import math

import numpy as np
from scipy import optimize

from .model import ModelParams


_log = logging.getLogger(__name__)
_log.setLevel(logging.DEBUG)

_SERIES_TERMS = 60
_SCAN_STEP = 0.05


class EigenError(ValueError):
    """
    Base class for errors raised by the eigen module.
    """
    pass


class ConvergenceFailure(EigenError):
    def __init__(self, nu: float, lo: float, hi: float):
        super().__init__("no sign change of J_{:g} found in [{:g}, {:g}]".format(nu, lo, hi))
        self.nu = nu
        self.bracket = (lo, hi)


class InvalidRegime(EigenError):
    def __init__(self, effective_growth: float):
        msg = "a1 - a2*c1/c2 = {:g} is not positive; no vanishing bound exists"
        super().__init__(msg.format(effective_growth))
        self.effective_growth = effective_growth


def bessel_j_scaled(nu: float, x: Union[float, np.ndarray]):
    """
    J_nu(x) * (x/2)^(-nu) from its ascending power series. The scaling keeps
    the function regular at x = 0 without changing the positive zeros.
    """
    x = np.asarray(x, dtype=float)
    q = -0.25 * x * x
    term = np.full_like(x, 1.0 / math.gamma(nu + 1.0))
    total = term.copy()
    for k in range(_SERIES_TERMS - 1):
        term = term * q / ((k + 1) * (k + 1 + nu))
        total = total + term
    if total.ndim == 0:
        return float(total)
    return total


def bessel_j(nu: float, x: Union[float, np.ndarray]):
    """
    J_nu(x) for x > 0 (small x, |x| <= 12 or so) from the power series.
    """
    x = np.asarray(x, dtype=float)
    value = bessel_j_scaled(nu, x) * np.power(0.5 * x, nu)
    if np.ndim(value) == 0:
        return float(value)
    return value


@functools.lru_cache(maxsize=64)
def bessel_first_zero(nu: float) -> float:
    """
    First positive zero j_{nu,1} of J_nu for nu >= -1/2.
    """
    if nu < -0.5:
        raise ValueError("order must be at least -1/2, got {!r}".format(nu))

    lo = nu + 1.0
    hi = nu + 10.0
    f = functools.partial(bessel_j_scaled, nu)

    # j_{nu,1} > nu + 1 for every nu >= -1/2
    grid = np.arange(lo, hi + _SCAN_STEP, _SCAN_STEP)
    values = bessel_j_scaled(nu, grid)
    changes = np.nonzero(np.sign(values[:-1]) != np.sign(values[1:]))[0]
    if len(changes) == 0:
        raise ConvergenceFailure(nu, lo, hi)

    idx = changes[0]
    root = optimize.brentq(f, grid[idx], grid[idx + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    _log.debug("j_{{{:g},1}} = {:.15g}".format(nu, root))
    return float(root)


def r_star(dim: int) -> float:
    """
    The radius R* with lambda1(R*) = 1 in dimension dim.
    """
    return bessel_first_zero(dim / 2.0 - 1.0)


def lambda1(R: float, dim: int) -> float:
    if R <= 0:
        raise ValueError("radius must be positive, got {!r}".format(R))
    if dim < 1:
        raise ValueError("dimension must be at least 1, got {!r}".format(dim))
    j = bessel_first_zero(dim / 2.0 - 1.0)
    return (j / R) ** 2


def critical_radius(d: float, a: float, dim: int) -> float:
    """
    Radius below which the scalar logistic problem with diffusion d and
    growth a can still vanish: R* sqrt(d/a).
    """
    return r_star(dim) * math.sqrt(d / a)


def vanishing_bound(p: ModelParams) -> float:
    """
    Upper bound on the limiting front radius when the invader vanishes:
    R* sqrt(d1 / (a1 - a2*c1/c2)).
    """
    eff = p.effective_growth
    if eff <= 0:
        raise InvalidRegime(eff)
    return r_star(p.dim) * math.sqrt(p.d1 / eff)


class CriticalRadii:
    """
    The critical constant R* of one dimension together with the radii it
    sets by scaling.
    """
    def __init__(self, dim: int):
        self.dim = dim
        self.r_star = r_star(dim)

    def scalar_threshold(self, d: float, a: float) -> float:
        return self.r_star * math.sqrt(d / a)

    def vanishing_bound(self, p: ModelParams) -> float:
        if p.dim != self.dim:
            raise ValueError("parameters are for dimension {:d}, not {:d}".format(p.dim, self.dim))
        return vanishing_bound(p)

    def __repr__(self) -> str:
        return "CriticalRadii(dim={!r}, r_star={!r})".format(self.dim, self.r_star)
