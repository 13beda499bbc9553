"""
Long-time verdicts on finite-horizon runs: spreading or vanishing of the
invader, the sharp Stefan-coefficient threshold, spreading-speed estimates
and audits of the a-priori bounds.
"""

from concurrent.futures import ProcessPoolExecutor
from datetime import timedelta
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy import integrate

from . import eigen, semiwave, util
from .fbsolver import GridSpec, SolverState, Trajectory, simulate
from .model import BoundaryRegime, InitialData, ModelParams, Regime, classify_regime, uniform_bounds


_log = logging.getLogger(__name__)
_log.setLevel(logging.DEBUG)

_AUDIT_TOL = 1e-12
_BOUND_SLACK = 1e-6
_MIN_SPEED_RECORDS = 20


class AnalysisError(RuntimeError):
    """
    Base class for errors raised by the analysis module.
    """
    pass


class WrongRegime(AnalysisError):
    def __init__(self, regime: str, required: str):
        super().__init__("coefficients are in regime {:s}; {:s} is required".format(regime, required))
        self.regime = regime
        self.required = required


class BracketInvalid(AnalysisError):
    """
    :ivar history: The trials decided before the bracket was rejected, as
    rows (mu, verdict, horizon).
    """
    def __init__(self, lo: float, hi: float, lo_verdict: 'Verdict', hi_verdict: 'Verdict', history: Optional[Sequence[Tuple[float, 'Verdict', float]]]=None):
        msg = "bracket [{:g}, {:g}] is invalid: mu_lo gives {:s} (need Vanishing), mu_hi gives {:s} (need Spreading)"
        super().__init__(msg.format(lo, hi, str(lo_verdict), str(hi_verdict)))
        self.bracket = (lo, hi)
        self.lo_verdict = lo_verdict
        self.hi_verdict = hi_verdict
        self.history = list(history) if history is not None else []


class HorizonExhausted(AnalysisError):
    """
    :ivar history: Every trial run so far, including the undecided ones, as
    rows (mu, verdict, horizon).
    :ivar bracket: The bisection bracket when the trial gave up.
    """
    def __init__(self, mu: float, horizon: float, history: Optional[Sequence[Tuple[float, 'Verdict', float]]]=None, bracket: Optional[Tuple[float, float]]=None):
        super().__init__("mu={:g} is still Undetermined at the horizon cap t={:g}".format(mu, horizon))
        self.mu = mu
        self.horizon = horizon
        self.history = list(history) if history is not None else []
        self.bracket = bracket


class NotSpreading(AnalysisError):
    def __init__(self, reason: str):
        super().__init__("no spreading front to fit: " + reason)
        self.reason = reason


class InsufficientRecords(AnalysisError):
    def __init__(self, count: int, required: int):
        super().__init__("trailing window holds {:d} records, {:d} are required".format(count, required))
        self.count = count
        self.required = required


class Verdict(Enum):
    SPREADING = 'Spreading'
    VANISHING = 'Vanishing'
    UNDETERMINED = 'Undetermined'

    def __str__(self) -> str:
        return self.value

    @property
    def code(self) -> int:
        """Numeric form for matrix output: Vanishing -1, Undetermined 0, Spreading 1."""
        return {'Vanishing': -1, 'Undetermined': 0, 'Spreading': 1}[self.value]


class Tolerances:
    def __init__(self, **kwargs):
        """
        Thresholds of the classifier.

        :param spreading_margin: Factor over the vanishing bound that the
        front must pass to count as spreading.
        :param u_rel: Vanishing needs sup u below u_rel*a1/b1.
        :param h_rel: Vanishing needs h' below h_rel*sqrt(a1*d1).
        :param window: Trailing fraction of the horizon the vanishing
        criteria must hold over.
        :param v_rel: Relative distance of v from a2/c2 accepted as saturated.
        :param speed_theta: Relative slack of the speed sandwich.
        """
        self.spreading_margin: float = float(kwargs.get('spreading_margin', 1.05))
        self.u_rel: float = float(kwargs.get('u_rel', 1e-3))
        self.h_rel: float = float(kwargs.get('h_rel', 1e-5))
        self.window: float = float(kwargs.get('window', 0.1))
        self.v_rel: float = float(kwargs.get('v_rel', 0.02))
        self.speed_theta: float = float(kwargs.get('speed_theta', 0.10))

    def u_tol(self, p: ModelParams) -> float:
        return self.u_rel * p.carrying_u

    def h_tol(self, p: ModelParams) -> float:
        return self.h_rel * math.sqrt(p.a1 * p.d1)

    def to_dict(self) -> Dict[str, float]:
        return {
            'spreading_margin': self.spreading_margin,
            'u_rel': self.u_rel,
            'h_rel': self.h_rel,
            'window': self.window,
            'v_rel': self.v_rel,
            'speed_theta': self.speed_theta,
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tolerances):
            return False
        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return "Tolerances({:s})".format(', '.join('{:s}={!r}'.format(k, v) for k, v in self.to_dict().items()))


class ClassificationResult:
    def __init__(self, verdict: Verdict, h_final: float, sup_u_final: float, bound: float, horizon: float, criterion: str):
        self.verdict = verdict
        self.h_final = h_final
        self.sup_u_final = sup_u_final
        self.bound = bound
        self.horizon = horizon
        self.criterion = criterion

    def __str__(self) -> str:
        return "{:s} ({:s})".format(str(self.verdict), self.criterion)

    def __repr__(self) -> str:
        s = "ClassificationResult(verdict={!s}, h_final={!r}, sup_u_final={!r}, bound={!r}, horizon={!r}, criterion={!r})"
        return s.format(self.verdict, self.h_final, self.sup_u_final, self.bound, self.horizon, self.criterion)


class SpeedEstimate:
    """
    Fitted front speed with the semi-wave speeds that should bracket it.
    """
    def __init__(self, c_hat: float, lower: float, upper: float, residual: float, theta: float):
        self.c_hat = c_hat
        self.lower = lower
        self.upper = upper
        self.residual = residual
        self.theta = theta

    @property
    def within_bounds(self) -> bool:
        return self.lower * (1 - self.theta) <= self.c_hat <= self.upper * (1 + self.theta)

    def __repr__(self) -> str:
        s = "SpeedEstimate(c_hat={!r}, lower={!r}, upper={!r}, residual={!r}, theta={!r})"
        return s.format(self.c_hat, self.lower, self.upper, self.residual, self.theta)


class MuStarResult:
    """
    :ivar history: Rows (mu, verdict, horizon) in the order the trials were
    decided.
    """
    def __init__(self, mu_star: float, lo: float, hi: float, horizon: float, history: Sequence[Tuple[float, Verdict, float]]):
        self.mu_star = mu_star
        self.lo = lo
        self.hi = hi
        self.horizon = horizon
        self.history = list(history)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def simulations(self) -> int:
        return len(self.history)

    def __repr__(self) -> str:
        s = "MuStarResult(mu_star={!r}, bracket=[{!r}, {!r}], horizon={!r}, simulations={:d})"
        return s.format(self.mu_star, self.lo, self.hi, self.horizon, len(self.history))


class Check:
    def __init__(self, name: str, passed: bool, value: float, limit: float):
        self.name = name
        self.passed = passed
        self.value = value
        self.limit = limit

    def __str__(self) -> str:
        return "{:s}: {:s} (value {:.6g}, limit {:.6g})".format(self.name, 'ok' if self.passed else 'FAILED', self.value, self.limit)

    def __repr__(self) -> str:
        return "Check({!r}, passed={!r}, value={!r}, limit={!r})".format(self.name, self.passed, self.value, self.limit)


class CheckReport:
    def __init__(self, title: str, checks: Sequence[Check], notes: Optional[Dict[str, float]]=None):
        self.title = title
        self.checks = list(checks)
        self.notes = dict(notes) if notes is not None else {}

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self) -> str:
        status = 'pass' if self.passed else 'fail'
        return "{:s}: {:s}\n".format(self.title, status) + '\n'.join('  ' + str(c) for c in self.checks)


def _require_regime(p: ModelParams, required: Regime):
    try:
        regime = classify_regime(p)
    except BoundaryRegime:
        raise WrongRegime('boundary', str(required))
    if regime != required:
        raise WrongRegime(str(regime), str(required))


def spreading_bound(p: ModelParams, scalar: bool=False) -> float:
    """
    The radius whose crossing rules out vanishing: R* sqrt(d1/(a1 - a2c1/c2)),
    or R* sqrt(d1/a1) for the scalar problem.
    """
    if scalar:
        return eigen.critical_radius(p.d1, p.a1, p.dim)
    return eigen.vanishing_bound(p)


def classify(traj: Trajectory, p: ModelParams, tolerances: Optional[Tolerances]=None, scalar: bool=False) -> ClassificationResult:
    """
    Decide spreading or vanishing from a trajectory.

    :param scalar: Treat the run as the single-species problem (native
    species absent). The regime check is skipped and the critical radius of
    the logistic problem replaces the vanishing bound.
    """
    if tolerances is None:
        tolerances = Tolerances()
    if not scalar:
        _require_regime(p, Regime.SUPERIOR_U)
    if len(traj) == 0:
        raise ValueError("cannot classify an empty trajectory")

    bound = spreading_bound(p, scalar)
    h = traj.column('h')
    t = traj.column('t')
    sup_u = traj.column('sup_u')

    def result(verdict: Verdict, criterion: str) -> ClassificationResult:
        return ClassificationResult(verdict, float(h[-1]), float(sup_u[-1]), bound, float(t[-1]), criterion)

    if h[0] >= bound:
        return result(Verdict.SPREADING, "initial radius {:.6g} is at or beyond the bound {:.6g}".format(h[0], bound))

    crossed = np.nonzero(h > bound * tolerances.spreading_margin)[0]
    if len(crossed) > 0:
        when = t[crossed[0]]
        return result(Verdict.SPREADING, "front passed {:.6g} x bound at t={:.6g}".format(tolerances.spreading_margin, when))

    window = traj.trailing(tolerances.window)
    u_max = float(np.max(sup_u[window]))
    hp_max = float(np.max(traj.column('h_prime')[window]))
    if u_max < tolerances.u_tol(p) and hp_max < tolerances.h_tol(p):
        return result(Verdict.VANISHING, "sup u < {:.3g} and h' < {:.3g} over the trailing window".format(tolerances.u_tol(p), tolerances.h_tol(p)))

    return result(Verdict.UNDETERMINED, "sup u {:.3g}, h' {:.3g} in the trailing window; front below the bound".format(u_max, hp_max))


def estimate_speed(traj: Trajectory, p: ModelParams, tolerances: Optional[Tolerances]=None, scalar: bool=False) -> SpeedEstimate:
    """
    Least-squares slope of h(t) over the trailing half of the record,
    bracketed by k0(mu, a1 - a2c1/c2, b1, d1) and k0(mu, a1, b1, d1).
    """
    if tolerances is None:
        tolerances = Tolerances()
    if p.mu <= 0:
        raise NotSpreading("mu is zero; the front is frozen")
    if len(traj) == 0:
        raise InsufficientRecords(0, _MIN_SPEED_RECORDS)

    h = traj.column('h')
    t = traj.column('t')
    if h[-1] - h[0] <= 1e-12 * max(1.0, h[0]):
        raise NotSpreading("h did not move")

    half = traj.trailing(0.5)
    count = int(np.count_nonzero(half))
    if count < _MIN_SPEED_RECORDS:
        raise InsufficientRecords(count, _MIN_SPEED_RECORDS)

    coeffs, residuals, _, _, _ = np.polyfit(t[half], h[half], 1, full=True)
    slope = float(coeffs[0])
    if slope <= 0:
        raise NotSpreading("fitted slope {:.3g} is not positive".format(slope))
    rms = math.sqrt(float(residuals[0]) / count) if len(residuals) > 0 else 0.0

    upper = semiwave.find_k0(p.mu, p.a1, p.b1, p.d1)
    if scalar or p.c1 == 0:
        lower = upper
    else:
        eff = p.effective_growth
        if eff <= 0:
            raise WrongRegime(str(classify_regime(p)), str(Regime.SUPERIOR_U))
        lower = semiwave.find_k0(p.mu, eff, p.b1, p.d1)

    est = SpeedEstimate(slope, lower, upper, rms, tolerances.speed_theta)
    _log.debug("front speed {!r}".format(est))
    return est


def _run_trial(args: Tuple[ModelParams, InitialData, GridSpec, Tolerances, bool, float]) -> ClassificationResult:
    p, init, g, tolerances, scalar, stop_radius = args
    res = simulate(p, init, g, stop_radius=stop_radius, allow_exhaustion=True)
    return classify(res.trajectory, p, tolerances, scalar)


def _run_trials(jobs: List[Tuple], workers: int) -> List[ClassificationResult]:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            return list(pool.map(_run_trial, jobs))
    return [_run_trial(j) for j in jobs]


def find_mu_star(
    p: ModelParams,
    init: InitialData,
    bracket: Tuple[float, float],
    g: GridSpec,
    rtol: float=0.01,
    tolerances: Optional[Tolerances]=None,
    max_doublings: int=3,
    workers: int=1,
    scalar: bool=False
) -> MuStarResult:
    """
    Bisect on mu for the threshold between vanishing and spreading.

    Each trial simulates until the horizon g.t_end (or until the front
    decides spreading) and classifies. Undetermined trials are retried with
    the horizon doubled, at most max_doublings times in total; the extended
    horizon is kept for later trials.

    :param rtol: Stop when the bracket width is at most rtol times its
    midpoint.
    :param workers: The two endpoint validations run in separate processes
    when this is above 1.
    """
    if tolerances is None:
        tolerances = Tolerances()
    if not scalar:
        _require_regime(p, Regime.SUPERIOR_U)

    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < mu_lo < mu_hi, got [{!r}, {!r}]".format(lo, hi))

    bound = spreading_bound(p, scalar)
    if p.h0 >= bound:
        _log.debug("h0={:g} is beyond the bound {:g}; spreading for every mu".format(p.h0, bound))
        return MuStarResult(0.0, 0.0, 0.0, g.t_end, [])

    stop_radius = bound * tolerances.spreading_margin * 1.01
    horizon = g.t_end
    cap = g.t_end * (2 ** max_doublings)
    history = []

    def job(mu: float, t_end: float) -> Tuple:
        return (p.with_values(mu=mu), init, g.with_values(t_end=t_end), tolerances, scalar, stop_radius)

    def decide(mu: float) -> Verdict:
        nonlocal horizon
        while True:
            res = _run_trial(job(mu, horizon))
            history.append((mu, res.verdict, horizon))
            if res.verdict != Verdict.UNDETERMINED:
                return res.verdict
            if horizon * 2 > cap * (1 + 1e-12):
                raise HorizonExhausted(mu, horizon, history, (lo, hi))
            horizon *= 2
            _log.debug("mu={:g} undetermined; horizon extended to {:g}".format(mu, horizon))

    # endpoints first, possibly concurrently
    lo_res, hi_res = _run_trials([job(lo, horizon), job(hi, horizon)], workers)
    history.append((lo, lo_res.verdict, horizon))
    history.append((hi, hi_res.verdict, horizon))
    lo_verdict, hi_verdict = lo_res.verdict, hi_res.verdict
    if lo_verdict == Verdict.SPREADING or hi_verdict == Verdict.VANISHING:
        raise BracketInvalid(lo, hi, lo_verdict, hi_verdict, history)
    if lo_verdict == Verdict.UNDETERMINED:
        lo_verdict = decide(lo)
    if hi_verdict == Verdict.UNDETERMINED:
        hi_verdict = decide(hi)
    if lo_verdict != Verdict.VANISHING or hi_verdict != Verdict.SPREADING:
        raise BracketInvalid(lo, hi, lo_verdict, hi_verdict, history)

    total = max(1, int(math.ceil(math.log2((hi - lo) / (rtol * lo)))))
    show_progress = util.once_every(timedelta(seconds=5), lambda: _log.info("mu* in [{:.6g}, {:.6g}]{:s}".format(lo, hi, util.progress(len(history), total + 2))))

    while hi - lo > rtol * 0.5 * (lo + hi):
        show_progress()
        mid = 0.5 * (lo + hi)
        if decide(mid) == Verdict.SPREADING:
            hi = mid
        else:
            lo = mid

    result = MuStarResult(0.5 * (lo + hi), lo, hi, horizon, history)
    _log.debug("threshold {!r}".format(result))
    return result


def inferior_longtime_check(traj: Trajectory, state: SolverState, p: ModelParams, g: GridSpec, tolerances: Optional[Tolerances]=None) -> CheckReport:
    """
    Extinction of an inferior invader: u gone, v back at a2/c2 on the inner
    half of the domain, and the front at rest.
    """
    if tolerances is None:
        tolerances = Tolerances()
    _require_regime(p, Regime.INFERIOR_U)

    sup_u = traj.sup_u[-1]
    r_v = np.linspace(0.0, g.L_v, len(state.v))
    inner = r_v <= 0.5 * g.L_v
    v_gap = float(np.max(np.abs(state.v[inner] - p.carrying_v)))
    window = traj.trailing(tolerances.window)
    hp = float(np.max(traj.column('h_prime')[window]))

    checks = [
        Check('u extinct', sup_u < tolerances.u_tol(p), sup_u, tolerances.u_tol(p)),
        Check('v saturated', v_gap < tolerances.v_rel * p.carrying_v, v_gap, tolerances.v_rel * p.carrying_v),
        Check('front plateaued', hp < tolerances.h_tol(p), hp, tolerances.h_tol(p)),
    ]
    report = CheckReport('inferior long-time check', checks)
    if not report['front plateaued'].passed:
        _log.debug("not plateaued: h' reaches {:.3g} in the trailing window".format(hp))
    return report


def invariant_audit(traj: Trajectory, p: ModelParams, init: InitialData, extent: float, state: Optional[SolverState]=None) -> CheckReport:
    """
    Check a run against the a-priori bounds: sup u <= M1, sup v <= M2 with
    relative slack 1e-6, nonnegative records, and a front that never moves
    back. The largest recorded h' is reported alongside.
    """
    m1, m2 = uniform_bounds(p, init, extent)
    h = traj.column('h')
    hp = traj.column('h_prime')
    sup_u = traj.column('sup_u')
    sup_v = traj.column('sup_v')
    mass = traj.column('mass_u')

    low = float(min(np.min(sup_u), np.min(sup_v), np.min(mass)))
    if state is not None:
        low = min(low, float(np.min(state.u)), float(np.min(state.v)))
    dh = float(np.min(np.diff(h))) if len(h) > 1 else 0.0

    checks = [
        Check('positivity', low >= -_AUDIT_TOL, low, -_AUDIT_TOL),
        Check('sup u <= M1', float(np.max(sup_u)) <= m1 * (1 + _BOUND_SLACK), float(np.max(sup_u)), m1),
        Check('sup v <= M2', float(np.max(sup_v)) <= m2 * (1 + _BOUND_SLACK), float(np.max(sup_v)), m2),
        Check('h nondecreasing', dh >= -_AUDIT_TOL, dh, -_AUDIT_TOL),
        Check("h' >= 0", float(np.min(hp)) >= -_AUDIT_TOL, float(np.min(hp)), -_AUDIT_TOL),
    ]
    return CheckReport('invariant audit', checks, {"max h'": float(np.max(hp))})


def spreading_mu_estimate(d: float, a: float, b: float, h0: float, dim: int, u0_sup: float, u0_mass: float) -> float:
    """
    A Stefan coefficient large enough for the scalar logistic problem to
    spread:

        max{1, b*sup u0/a} * d*((R* sqrt(d/a))^N - h0^N) / (N * int_0^h0 r^(N-1) u0 dr)

    and 0 when h0 is already at least the critical radius.

    :param u0_mass: The weighted integral of u0 over [0, h0].
    """
    radius = eigen.critical_radius(d, a, dim)
    if h0 >= radius:
        return 0.0
    if not u0_mass > 0:
        raise ValueError("initial mass must be positive, got {!r}".format(u0_mass))
    factor = max(1.0, b * u0_sup / a)
    return factor * d * (radius ** dim - h0 ** dim) / (dim * u0_mass)


def initial_mass(init: InitialData, h0: float, dim: int, samples: int=2049) -> float:
    """The weighted integral int_0^h0 r^(N-1) u0 dr by the trapezoid rule."""
    r = np.linspace(0.0, h0, samples)
    return float(integrate.trapezoid(np.power(r, dim - 1) * init.u_profile(r, h0), r))
