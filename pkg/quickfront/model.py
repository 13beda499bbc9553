"""
Model coefficients, competition regimes, constant steady states and the
closed-form/ODE solutions of the spatially homogeneous problem.
"""

from enum import Enum
from typing import Any, Callable, Dict, Optional, Tuple
import logging
import math

import numpy as np


_log = logging.getLogger(__name__)
_log.setLevel(logging.DEBUG)

_TIE_TOL = 1e-12
_DET_TOL = 1e-14

COEFFICIENT_NAMES = ('d1', 'd2', 'a1', 'a2', 'b1', 'b2', 'c1', 'c2', 'mu', 'h0')

# fields that may be zero: frozen front (mu) and uncoupled invader (c1)
_NONNEGATIVE_FIELDS = ('mu', 'c1')

U_SHAPES = ('parabola', 'cosine')


class ModelError(ValueError):
    """
    Base class for errors raised by the model module.
    """
    pass


class InvalidParameters(ModelError):
    """
    Raised when a coefficient or initial profile is not admissible.
    """
    def __init__(self, field: str, value: Any, reason: str):
        super().__init__("invalid {:s}={!r}: {:s}".format(field, value, reason))
        self.field = field
        self.value = value
        self.reason = reason


class BoundaryRegime(ModelError):
    """
    Raised when a1/a2 coincides with b1/b2 or c1/c2, which no theorem on the
    strict regimes covers.
    """
    def __init__(self, ratios: Tuple[float, float, float]):
        msg = "a1/a2={:.15g} lies on a regime boundary (b1/b2={:.15g}, c1/c2={:.15g})"
        super().__init__(msg.format(*ratios))
        self.ratios = ratios


class DegenerateDeterminant(ModelError):
    """
    Raised when b1*c2 - b2*c1 vanishes and both nullclines coincide, so the
    coexistence state is not isolated.
    """
    def __init__(self, det: float):
        super().__init__("b1*c2 - b2*c1 = {:.3e}; nullclines coincide".format(det))
        self.det = det


class StepSizeTooLarge(ModelError):
    """
    Raised by lv_ode when halving the step moves the endpoint too much.
    """
    def __init__(self, dt: float, change: float, tolerance: float):
        msg = "dt={:g} not converged: halving changed the endpoint by {:.3e} (> {:.1e})"
        super().__init__(msg.format(dt, change, tolerance))
        self.dt = dt
        self.change = change
        self.tolerance = tolerance


class Regime(Enum):
    SUPERIOR_U = 'SuperiorU'
    INFERIOR_U = 'InferiorU'
    WEAK_COMPETITION = 'WeakCompetition'
    STRONG_COMPETITION = 'StrongCompetition'

    def __str__(self) -> str:
        return self.value


class ModelParams:
    def __init__(self, **kwargs):
        """
        Create a new ModelParams object. Every coefficient defaults to 1 and
        the dimension to 1. ModelParams(**p.to_dict()) compares equal to p.

        :param d1: Diffusion rate of the invader u.
        :param d2: Diffusion rate of the native species v.
        :param a1: Intrinsic growth rate of u.
        :param a2: Intrinsic growth rate of v.
        :param b1: Intraspecific competition rate of u.
        :param b2: Competition effect of u on v.
        :param c1: Competition effect of v on u.
        :param c2: Intraspecific competition rate of v.
        :param mu: Stefan coefficient of the free boundary.
        :param h0: Initial radius of the invaded ball.
        :param dim: Space dimension N.
        """
        for name in COEFFICIENT_NAMES:
            setattr(self, name, float(kwargs.get(name, 1.0)))
        self.dim: int = int(kwargs.get('dim', 1))

        unknown = set(kwargs) - set(COEFFICIENT_NAMES) - {'dim'}
        if len(unknown) > 0:
            raise InvalidParameters(sorted(unknown)[0], kwargs[sorted(unknown)[0]], "not a model coefficient")

        self.validate()

    def validate(self):
        for name in COEFFICIENT_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameters(name, value, "must be finite")
            if name in _NONNEGATIVE_FIELDS:
                if value < 0:
                    raise InvalidParameters(name, value, "must be nonnegative")
            elif value <= 0:
                raise InvalidParameters(name, value, "must be positive")
        if self.dim < 1:
            raise InvalidParameters('dim', self.dim, "must be at least 1")

    def with_values(self, **changes) -> 'ModelParams':
        """
        Return a copy with the given coefficients replaced.
        """
        d = self.to_dict()
        d.update(changes)
        return ModelParams(**d)

    @property
    def carrying_u(self) -> float:
        return self.a1 / self.b1

    @property
    def carrying_v(self) -> float:
        return self.a2 / self.c2

    @property
    def effective_growth(self) -> float:
        """
        Growth rate of u left over when v sits at its carrying capacity.
        """
        return self.a1 - self.a2 * self.c1 / self.c2

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelParams):
            return False
        return self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.to_dict().items())))

    def __str__(self) -> str:
        parts = ["{:s}: {:g}".format(n, getattr(self, n)) for n in COEFFICIENT_NAMES]
        return "ModelParams<{:s}, dim: {:d}>".format(', '.join(parts), self.dim)

    def __repr__(self) -> str:
        parts = ["{:s}={!r}".format(n, getattr(self, n)) for n in COEFFICIENT_NAMES]
        return "ModelParams({:s}, dim={!r})".format(', '.join(parts), self.dim)

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert these parameters to a dict suitable for storage.
        """
        d = {n: getattr(self, n) for n in COEFFICIENT_NAMES}
        d['dim'] = self.dim
        return d


class SteadyStates:
    def __init__(self, r0: Tuple[float, float], r1: Tuple[float, float], r2: Tuple[float, float], coexistence: Optional[Tuple[float, float]]=None):
        self.r0 = r0
        self.r1 = r1
        self.r2 = r2
        self.coexistence = coexistence

    def all(self):
        states = [self.r0, self.r1, self.r2]
        if self.coexistence is not None:
            states.append(self.coexistence)
        return states

    def __repr__(self) -> str:
        s = "SteadyStates(r0={!r}, r1={!r}, r2={!r}, coexistence={!r})"
        return s.format(self.r0, self.r1, self.r2, self.coexistence)


class InitialData:
    def __init__(self, **kwargs):
        """
        Create a new InitialData object. Kwargs can contain each of the
        properties below, and InitialData(**i.to_dict()) compares equal to i
        as long as no custom profile callables were given.

        :param u_shape: 'parabola' for amp*(1-(r/h0)^2) or 'cosine' for
        amp*cos(pi*r/(2*h0)). Both satisfy u0'(0)=u0(h0)=0.
        :param u_amplitude: Peak value of u0 at r=0. When omitted, the
        caller is expected to fill it in from the model (a1/(2*b1)).
        :param v_level: Constant value of v0.
        :param u_profile: Optional callable (r, h0) -> u0(r) replacing the
        shape; it is validated numerically.
        :param v_profile: Optional callable r -> v0(r) replacing the level.
        """
        self.u_shape: str = str(kwargs.get('u_shape', 'parabola'))
        self.u_amplitude: float = float(kwargs.get('u_amplitude', 1.0))
        self.v_level: float = float(kwargs.get('v_level', 1.0))
        self._u_custom: Optional[Callable[[np.ndarray, float], np.ndarray]] = kwargs.get('u_profile', None)
        self._v_custom: Optional[Callable[[np.ndarray], np.ndarray]] = kwargs.get('v_profile', None)

        if self.u_shape not in U_SHAPES:
            raise InvalidParameters('u_shape', self.u_shape, "must be one of " + ', '.join(U_SHAPES))
        if not self.u_amplitude > 0:
            raise InvalidParameters('u_amplitude', self.u_amplitude, "must be positive")
        if not self.v_level >= 0:
            raise InvalidParameters('v_level', self.v_level, "must be nonnegative")

    @staticmethod
    def default_for(p: ModelParams, v_level: Optional[float]=None) -> 'InitialData':
        """
        The default data: parabola of height a1/(2*b1) and v0 = a2/c2 unless
        another level is given.
        """
        if v_level is None:
            v_level = p.carrying_v
        return InitialData(u_shape='parabola', u_amplitude=p.a1 / (2 * p.b1), v_level=v_level)

    def u_profile(self, r: np.ndarray, h0: float) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self._u_custom is not None:
            u = np.asarray(self._u_custom(r, h0), dtype=float)
        else:
            s = np.clip(r / h0, 0.0, 1.0)
            if self.u_shape == 'parabola':
                u = self.u_amplitude * (1.0 - s * s)
            else:
                u = self.u_amplitude * np.cos(0.5 * math.pi * s)
        return np.where(r >= h0, 0.0, u)

    def v_profile(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self._v_custom is not None:
            return np.asarray(self._v_custom(r), dtype=float)
        return np.full_like(r, self.v_level)

    @property
    def native_absent(self) -> bool:
        """True when v0 is identically zero, reducing the system to the scalar problem."""
        return self._v_custom is None and self.v_level == 0.0

    def u_sup(self, h0: float) -> float:
        if self._u_custom is None:
            return self.u_amplitude
        r = np.linspace(0.0, h0, 1025)
        return float(np.max(self.u_profile(r, h0)))

    def v_sup(self, extent: float) -> float:
        if self._v_custom is None:
            return self.v_level
        r = np.linspace(0.0, extent, 4097)
        return float(np.max(self.v_profile(r)))

    def v_inf(self, extent: float) -> float:
        if self._v_custom is None:
            return self.v_level
        r = np.linspace(0.0, extent, 4097)
        return float(np.min(self.v_profile(r)))

    def inf_positive(self, extent: float) -> bool:
        """Whether inf v0 > 0 on the represented domain [0, extent]."""
        return self.v_inf(extent) > 0

    def far_field_saturated(self, p: ModelParams, extent: float) -> bool:
        """Whether v0 at the far end of [0, extent] is at least a2/c2."""
        tail = float(self.v_profile(np.array([extent]))[0])
        return tail >= p.carrying_v * (1 - 1e-12)

    def validate(self, h0: float, extent: Optional[float]=None):
        """
        Check the admissibility conditions: u0'(0)=0, u0(h0)=0, u0>0 on
        [0, h0), v0 >= 0 and bounded.
        """
        if self._u_custom is not None:
            eps = 1e-6 * h0
            ends = self.u_profile(np.array([0.0, eps]), h0)
            if abs(float(self._u_custom(np.array([h0]), h0)[0])) > 1e-12:
                raise InvalidParameters('u_profile', 'u0(h0)', "must vanish at the initial front")
            if abs(ends[1] - ends[0]) > 1e-8 * max(abs(ends[0]), 1.0):
                raise InvalidParameters('u_profile', "u0'(0)", "must be zero at the origin")
        inner = self.u_profile(np.linspace(0.0, h0, 513)[:-1], h0)
        if np.any(inner <= 0):
            raise InvalidParameters('u_profile', 'u0', "must be positive on [0, h0)")
        if extent is not None:
            r = np.linspace(0.0, extent, 4097)
            v = self.v_profile(r)
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise InvalidParameters('v_profile', 'v0', "must be nonnegative and bounded")

    def __eq__(self, other) -> bool:
        if not isinstance(other, InitialData):
            return False
        if self._u_custom is not other._u_custom or self._v_custom is not other._v_custom:
            return False
        return self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash((self.u_shape, self.u_amplitude, self.v_level))

    def __repr__(self) -> str:
        s = "InitialData(u_shape={!r}, u_amplitude={!r}, v_level={!r})"
        return s.format(self.u_shape, self.u_amplitude, self.v_level)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'u_shape': self.u_shape,
            'u_amplitude': self.u_amplitude,
            'v_level': self.v_level,
        }


def uniform_bounds(p: ModelParams, init: InitialData, extent: float) -> Tuple[float, float]:
    """
    A-priori bounds (M1, M2) = (max(a1/b1, sup u0), max(a2/c2, sup v0)) that
    the solution never exceeds.
    """
    m1 = max(p.carrying_u, init.u_sup(p.h0))
    m2 = max(p.carrying_v, init.v_sup(extent))
    return m1, m2


def classify_regime(p: ModelParams) -> Regime:
    """
    Decide which competition regime the reaction coefficients fall into by
    comparing a1/a2 with b1/b2 and c1/c2.
    """
    ra = p.a1 / p.a2
    rb = p.b1 / p.b2
    rc = p.c1 / p.c2

    for other in (rb, rc):
        if abs(ra - other) <= _TIE_TOL * max(abs(ra), abs(other)):
            raise BoundaryRegime((ra, rb, rc))

    if ra > max(rb, rc):
        return Regime.SUPERIOR_U
    if ra < min(rb, rc):
        return Regime.INFERIOR_U
    if rb > ra > rc:
        return Regime.WEAK_COMPETITION
    return Regime.STRONG_COMPETITION


def steady_states(p: ModelParams) -> SteadyStates:
    r0 = (0.0, 0.0)
    r1 = (p.a1 / p.b1, 0.0)
    r2 = (0.0, p.a2 / p.c2)

    det = p.b1 * p.c2 - p.b2 * p.c1
    num_u = p.a1 * p.c2 - p.a2 * p.c1
    num_v = p.a2 * p.b1 - p.a1 * p.b2
    scale = max(abs(p.b1 * p.c2), abs(p.b2 * p.c1))
    if abs(det) < _DET_TOL * scale:
        # parallel nullclines; they only intersect when they coincide
        num_scale = max(abs(p.a1 * p.c2), abs(p.a2 * p.c1), abs(p.a2 * p.b1), abs(p.a1 * p.b2))
        if abs(num_u) <= _TIE_TOL * num_scale and abs(num_v) <= _TIE_TOL * num_scale:
            raise DegenerateDeterminant(det)
        _log.debug("nullclines are parallel; no coexistence state")
        return SteadyStates(r0, r1, r2, None)

    coexistence = (num_u / det, num_v / det)
    if coexistence[0] <= 0 or coexistence[1] <= 0:
        coexistence = None
    return SteadyStates(r0, r1, r2, coexistence)


def reaction_terms(p: ModelParams, u, v):
    """
    The reaction parts (u(a1 - b1u - c1v), v(a2 - b2u - c2v)) of the system.
    """
    return u * (p.a1 - p.b1 * u - p.c1 * v), v * (p.a2 - p.b2 * u - p.c2 * v)


def logistic_ode(a: float, b: float, u_init: float, t):
    """
    Exact solution of u' = u(a - bu), u(0) = u_init, written with a decaying
    exponential so large t cannot overflow.
    """
    t = np.asarray(t, dtype=float)
    value = a * u_init / (b * u_init + (a - b * u_init) * np.exp(-a * t))
    if value.ndim == 0:
        return float(value)
    return value


def _lv_rhs(p: ModelParams, y: np.ndarray) -> np.ndarray:
    z, w = y
    return np.array([z * (p.a1 - p.b1 * z - p.c1 * w), w * (p.a2 - p.b2 * z - p.c2 * w)])


def _rk4(p: ModelParams, y0: np.ndarray, t_end: float, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    n = max(1, int(math.ceil(t_end / dt - 1e-9)))
    h = t_end / n
    ts = np.linspace(0.0, t_end, n + 1)
    ys = np.empty((n + 1, 2))
    ys[0] = y0
    y = y0
    for k in range(n):
        k1 = _lv_rhs(p, y)
        k2 = _lv_rhs(p, y + 0.5 * h * k1)
        k3 = _lv_rhs(p, y + 0.5 * h * k2)
        k4 = _lv_rhs(p, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[k + 1] = y
    return ts, ys


def lv_ode(p: ModelParams, z0: float, w0: float, t_end: float, dt: float, tolerance: float=1e-6) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Integrate the spatially homogeneous competition system with the classical
    fourth-order Runge-Kutta method at a fixed step, gated by a rerun at dt/2.

    :return: (t, z, w) arrays of the run at the requested step.
    """
    if z0 < 0 or w0 < 0:
        raise InvalidParameters('z0/w0', (z0, w0), "must be nonnegative")
    if dt <= 0 or t_end < 0:
        raise InvalidParameters('dt', dt, "dt must be positive and t_end nonnegative")

    y0 = np.array([z0, w0], dtype=float)
    if t_end == 0:
        return np.array([0.0]), np.array([z0]), np.array([w0])

    ts, ys = _rk4(p, y0, t_end, dt)
    _, ys_half = _rk4(p, y0, t_end, dt / 2)
    change = float(np.max(np.abs(ys[-1] - ys_half[-1])))
    if not change < tolerance:
        raise StepSizeTooLarge(dt, change, tolerance)

    return ts, ys[:, 0], ys[:, 1]
