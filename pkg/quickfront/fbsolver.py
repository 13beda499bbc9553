"""
Front-fixing finite differences for the competition system with a free
boundary.

u lives on the moving ball {r < h(t)}; writing u(t, r) = w(t, r/h(t)) maps it
onto the fixed interval [0, 1] at the price of variable coefficients and a
drift term. v lives on the fixed truncated interval [0, L_v]. Each step is
IMEX: diffusion and drift implicit (tridiagonal), reaction explicit, and the
front advanced explicitly by the Stefan condition h' = -mu*u_r(t, h).
"""

from datetime import timedelta
from typing import Any, Dict, List, Optional, Sequence, Tuple
import csv
import functools
import logging

import numpy as np
from scipy import integrate

from . import util
from .model import InitialData, ModelParams, uniform_bounds


_log = logging.getLogger(__name__)
_log.setLevel(logging.DEBUG)

TRAJECTORY_FIELDS = ('t', 'h', 'h_prime', 'sup_u', 'sup_v', 'mass_u')

_NEG_TOL = 1e-12
_BOUND_SLACK = 1e-6
_DOMAIN_FRACTION = 0.9


class SolverError(RuntimeError):
    """
    Base class for errors raised while stepping the free boundary problem.
    """
    def __init__(self, message: str, t: Optional[float]=None):
        if t is not None:
            message = "t={:.6g}: {:s}".format(t, message)
        super().__init__(message)
        self.t = t


class BoundBreach(SolverError):
    """
    Raised when positivity or the a-priori sup bounds fail; usually dt is too
    large for the explicit reaction.
    """
    def __init__(self, field: str, value: float, limit: float, t: Optional[float]=None):
        super().__init__("{:s}={:.6g} breaches the bound {:.6g}; reduce dt".format(field, value, limit), t)
        self.field = field
        self.value = value
        self.limit = limit


class DomainExhausted(SolverError):
    """
    Raised when the front gets within 10% of the v-domain truncation radius.
    """
    def __init__(self, h: float, L_v: float, t: Optional[float]=None):
        super().__init__("front h={:.6g} exceeds {:.0%} of L_v={:g}".format(h, _DOMAIN_FRACTION, L_v), t)
        self.h = h
        self.L_v = L_v


class FrontRetreat(SolverError):
    def __init__(self, h_old: float, h_new: float, t: Optional[float]=None):
        super().__init__("front moved back from {:.12g} to {:.12g}".format(h_old, h_new), t)
        self.h_old = h_old
        self.h_new = h_new


class NotDiagonallyDominant(SolverError):
    def __init__(self, row: int):
        super().__init__("tridiagonal system is not diagonally dominant at row {:d}".format(row))
        self.row = row


class GridSpec:
    def __init__(self, **kwargs):
        """
        Create a new GridSpec. GridSpec(**g.to_dict()) compares equal to g.

        :param m_u: Number of cells on the rescaled u-interval [0, 1].
        :param m_v: Number of cells on the v-interval [0, L_v].
        :param L_v: Truncation radius of the v-domain.
        :param dt: Time step.
        :param t_end: Time horizon.
        :param output_stride: Steps between trajectory records.
        """
        self.m_u: int = int(kwargs.get('m_u', 128))
        self.m_v: int = int(kwargs.get('m_v', 512))
        self.L_v: float = float(kwargs.get('L_v', 40.0))
        self.dt: float = float(kwargs.get('dt', 0.01))
        self.t_end: float = float(kwargs.get('t_end', 30.0))
        self.output_stride: int = int(kwargs.get('output_stride', 10))

    def validate(self, h0: Optional[float]=None):
        if self.m_u < 16:
            raise ValueError("m_u must be at least 16, got {:d}".format(self.m_u))
        if self.m_v < 16:
            raise ValueError("m_v must be at least 16, got {:d}".format(self.m_v))
        if not self.dt > 0:
            raise ValueError("dt must be positive, got {!r}".format(self.dt))
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative, got {!r}".format(self.t_end))
        if self.output_stride < 1:
            raise ValueError("output_stride must be at least 1, got {:d}".format(self.output_stride))
        if h0 is not None and not self.L_v > 4 * h0:
            raise ValueError("L_v={:g} must exceed 4*h0={:g}".format(self.L_v, 4 * h0))

    def with_values(self, **changes) -> 'GridSpec':
        d = self.to_dict()
        d.update(changes)
        return GridSpec(**d)

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def u_nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.m_u + 1)

    def v_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.L_v, self.m_v + 1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridSpec):
            return False
        return self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.to_dict().items())))

    def __repr__(self) -> str:
        s = "GridSpec(m_u={!r}, m_v={!r}, L_v={!r}, dt={!r}, t_end={!r}, output_stride={!r})"
        return s.format(self.m_u, self.m_v, self.L_v, self.dt, self.t_end, self.output_stride)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'm_u': self.m_u,
            'm_v': self.m_v,
            'L_v': self.L_v,
            'dt': self.dt,
            't_end': self.t_end,
            'output_stride': self.output_stride,
        }


class SolverState:
    """
    Discrete solution at one time level.

    :ivar u: w(t, rho_j) = u(t, rho_j*h) on rho_j = j/m_u, last entry 0.
    :ivar v: v(t, r_i) on r_i = i*L_v/m_v.
    """
    def __init__(self, t: float, h: float, u: np.ndarray, v: np.ndarray, h_prev: Optional[float]=None, steps: int=0, flux: float=0.0):
        self.t = t
        self.h = h
        self.u = u
        self.v = v
        self.h_prev = h if h_prev is None else h_prev
        self.steps = steps
        self.flux = flux

    @property
    def m_u(self) -> int:
        return len(self.u) - 1

    def u_positions(self) -> np.ndarray:
        """Physical radii of the u samples."""
        return np.linspace(0.0, self.h, len(self.u))

    def copy(self) -> 'SolverState':
        return SolverState(self.t, self.h, self.u.copy(), self.v.copy(), self.h_prev, self.steps, self.flux)

    def __repr__(self) -> str:
        s = "SolverState(t={!r}, h={!r}, m_u={:d}, m_v={:d}, steps={:d})"
        return s.format(self.t, self.h, len(self.u) - 1, len(self.v) - 1, self.steps)


class Trajectory:
    """
    Time series of diagnostics. The CSV form holds the columns of
    TRAJECTORY_FIELDS; the boundary flux u_r(t, h) and the reaction integral
    int_0^h r^(N-1) u(a1 - b1u - c1v) dr are kept in memory for the mass
    balance check.
    """
    def __init__(self, **kwargs):
        self.t: List[float] = list(kwargs.get('t', []))
        self.h: List[float] = list(kwargs.get('h', []))
        self.h_prime: List[float] = list(kwargs.get('h_prime', []))
        self.sup_u: List[float] = list(kwargs.get('sup_u', []))
        self.sup_v: List[float] = list(kwargs.get('sup_v', []))
        self.mass_u: List[float] = list(kwargs.get('mass_u', []))
        self.flux: List[float] = list(kwargs.get('flux', []))
        self.reaction_u: List[float] = list(kwargs.get('reaction_u', []))
        self.termination: str = kwargs.get('termination', 'horizon')

    def append(self, t: float, h: float, h_prime: float, sup_u: float, sup_v: float, mass_u: float, flux: float=float('nan'), reaction_u: float=float('nan')):
        if len(self.t) > 0 and t <= self.t[-1]:
            raise ValueError("trajectory times must increase: {!r} after {!r}".format(t, self.t[-1]))
        self.t.append(t)
        self.h.append(h)
        self.h_prime.append(h_prime)
        self.sup_u.append(sup_u)
        self.sup_v.append(sup_v)
        self.mass_u.append(mass_u)
        self.flux.append(flux)
        self.reaction_u.append(reaction_u)

    def __len__(self) -> int:
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)

    @property
    def has_balance_diagnostics(self) -> bool:
        return len(self.reaction_u) == len(self.t) and len(self.t) > 0 and not np.any(np.isnan(self.column('reaction_u')))

    def trailing(self, fraction: float) -> np.ndarray:
        """
        Boolean mask of the records in the last `fraction` of the covered
        time span.
        """
        t = self.column('t')
        start = t[-1] - fraction * (t[-1] - t[0])
        return t >= start

    def to_dict(self) -> Dict[str, Any]:
        return {
            't': list(self.t),
            'h': list(self.h),
            'h_prime': list(self.h_prime),
            'sup_u': list(self.sup_u),
            'sup_v': list(self.sup_v),
            'mass_u': list(self.mass_u),
            'flux': list(self.flux),
            'reaction_u': list(self.reaction_u),
            'termination': self.termination,
        }

    def to_file(self, file_path: str):
        """
        Save the trajectory as CSV with the header t,h,h_prime,sup_u,sup_v,mass_u.
        Values are written with repr so identical runs give identical files.
        """
        with open(file_path, 'w', newline='') as fp:
            writer = csv.writer(fp, lineterminator='\n')
            writer.writerow(TRAJECTORY_FIELDS)
            for row in zip(*(getattr(self, f) for f in TRAJECTORY_FIELDS)):
                writer.writerow([util.format_float(x) for x in row])

    def __repr__(self) -> str:
        if len(self.t) == 0:
            return "Trajectory(records=0)"
        s = "Trajectory(records={:d}, t=[{!r}, {!r}], h_final={!r}, termination={!r})"
        return s.format(len(self.t), self.t[0], self.t[-1], self.h[-1], self.termination)


def from_file(file_path: str) -> Trajectory:
    """
    Load a trajectory CSV written by Trajectory.to_file().
    """
    cols = {f: [] for f in TRAJECTORY_FIELDS}
    with open(file_path, 'r', newline='') as fp:
        reader = csv.DictReader(fp)
        for row in reader:
            for f in TRAJECTORY_FIELDS:
                cols[f].append(float(row[f]))
    return Trajectory(**cols)


class Snapshot:
    """Field values at one recorded time."""
    def __init__(self, t: float, r_u: np.ndarray, u: np.ndarray, r_v: np.ndarray, v: np.ndarray, requested: Optional[float]=None):
        self.t = t
        self.requested = t if requested is None else requested
        self.r_u = r_u
        self.u = u
        self.r_v = r_v
        self.v = v

    def to_file(self, file_path: str):
        with open(file_path, 'w', newline='') as fp:
            writer = csv.writer(fp, lineterminator='\n')
            writer.writerow(('field', 'r', 'value'))
            for r, x in zip(self.r_u, self.u):
                writer.writerow(('u', util.format_float(r), util.format_float(x)))
            for r, x in zip(self.r_v, self.v):
                writer.writerow(('v', util.format_float(r), util.format_float(x)))


class SimulationResult:
    def __init__(self, trajectory: Trajectory, state: SolverState, snapshots: Sequence[Snapshot], bounds: Tuple[float, float]):
        self.trajectory = trajectory
        self.state = state
        self.snapshots = list(snapshots)
        self.bounds = bounds

    def __repr__(self) -> str:
        return "SimulationResult({!r}, {!r})".format(self.trajectory, self.state)


class FixedGridCoefficients:
    """
    Coefficients of w_t = diffusion*(w_rr + radial*w_r) + drift*w_r + f on
    the fixed grid, where rho is the rescaled radius.
    """
    def __init__(self, diffusion: float, drift: np.ndarray, radial: np.ndarray):
        self.diffusion = diffusion
        self.drift = drift
        self.radial = radial


def transform_equation_coefficients(h: float, h_prime: float, dim: int, d: float=1.0, rho: Optional[np.ndarray]=None) -> FixedGridCoefficients:
    """
    For u(t, r) = w(t, r/h(t)):

        w_t = (d/h^2) (w_rr + (N-1)/rho w_r) + (h'/h) rho w_r + f.

    The drift term is the coefficient of w_rho on the right-hand side; it is
    nonnegative while the ball grows. The radial weight (N-1)/rho is reported
    as 0 at rho = 0 where the symmetric limit takes over.
    """
    if not h > 0:
        raise ValueError("front radius must be positive, got {!r}".format(h))
    if rho is None:
        rho = np.linspace(0.0, 1.0, 129)
    rho = np.asarray(rho, dtype=float)
    drift = (h_prime / h) * rho
    radial = np.zeros_like(rho)
    nz = rho > 0
    radial[nz] = (dim - 1) / rho[nz]
    return FixedGridCoefficients(d / (h * h), drift, radial)


def radial_laplacian_row(j: int, dim: int, drho: float) -> Tuple[float, float, float]:
    """
    Stencil (lower, center, upper) of u_rr + (N-1)/r u_r at node r_j = j*drho.

    Interior rows combine the central second and first differences. At the
    origin the symmetric limit N*u_rr(0) with the reflected ghost u_{-1} = u_1
    gives 2N(u_1 - u_0)/drho^2. Rows where the central first difference would
    make the lower weight negative (only j < (N-1)/2) use the conservative
    flux form instead, which keeps every weight nonnegative.
    """
    if j < 0:
        raise ValueError("row index must be nonnegative, got {:d}".format(j))
    inv2 = 1.0 / (drho * drho)
    if j == 0:
        return 0.0, -2.0 * dim * inv2, 2.0 * dim * inv2

    half = (dim - 1) / (2.0 * j)
    if half <= 1.0:
        return (1.0 - half) * inv2, -2.0 * inv2, (1.0 + half) * inv2

    lo = ((j - 0.5) / j) ** (dim - 1) * inv2
    up = ((j + 0.5) / j) ** (dim - 1) * inv2
    return lo, -(lo + up), up


@functools.lru_cache(maxsize=32)
def _laplacian_bands(n: int, dim: int, drho: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = [radial_laplacian_row(j, dim, drho) for j in range(n)]
    lo, c, up = (np.array(col) for col in zip(*rows))
    for band in (lo, c, up):
        band.setflags(write=False)
    return lo, c, up


def tridiag_solve(lower: Sequence[float], diag: Sequence[float], upper: Sequence[float], rhs: Sequence[float]) -> np.ndarray:
    """
    Solve a tridiagonal system with the Thomas algorithm.

    Row i reads lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1] = rhs[i];
    lower[0] and upper[-1] are ignored.
    """
    b = [float(x) for x in diag]
    d = [float(x) for x in rhs]
    a = [float(x) for x in lower]
    c = [float(x) for x in upper]
    n = len(d)
    if not (len(a) == len(b) == len(c) == n):
        raise ValueError("bands and rhs must have equal length")
    if n == 0:
        return np.zeros(0)

    for i in range(n):
        off = (abs(a[i]) if i > 0 else 0.0) + (abs(c[i]) if i < n - 1 else 0.0)
        if abs(b[i]) < off * (1.0 - 1e-12):
            raise NotDiagonallyDominant(i)

    for k in range(1, n):
        m = a[k] / b[k - 1]
        b[k] -= m * c[k - 1]
        d[k] -= m * d[k - 1]

    x = b
    x[-1] = d[-1] / b[-1]
    for k in range(n - 2, -1, -1):
        x[k] = (d[k] - c[k] * x[k + 1]) / b[k]

    return np.array(x)


def boundary_flux(w: np.ndarray, h: float) -> float:
    """
    u_r(t, h) from the one-sided second-order stencil
    (3w_m - 4w_{m-1} + w_{m-2}) / (2 drho), divided by h.
    """
    m = len(w) - 1
    drho = 1.0 / m
    return (3.0 * w[m] - 4.0 * w[m - 1] + w[m - 2]) / (2.0 * drho * h)


def _assemble_u_system(coeffs: FixedGridCoefficients, m: int, dim: int, dt: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    drho = 1.0 / m
    lap_lo, lap_c, lap_up = _laplacian_bands(m, dim, drho)
    D = coeffs.diffusion
    A = coeffs.drift[:m]

    lo = D * lap_lo - A / (2 * drho)
    c = D * lap_c
    up = D * lap_up + A / (2 * drho)

    # central drift would give a negative lower weight: upwind instead
    upwind = lo < 0
    if np.any(upwind):
        lo = np.where(upwind, D * lap_lo, lo)
        c = np.where(upwind, D * lap_c - A / drho, c)
        up = np.where(upwind, D * lap_up + A / drho, up)

    lower = -dt * lo
    diag = 1.0 - dt * c
    upper = -dt * up
    lower[0] = 0.0
    # w_m = 0 is known
    upper[m - 1] = 0.0
    return lower, diag, upper


def _assemble_v_system(m: int, dim: int, dr: float, d: float, dt: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    lap_lo, lap_c, lap_up = _laplacian_bands(m + 1, dim, dr)
    lo = d * np.array(lap_lo)
    c = d * np.array(lap_c)
    up = d * np.array(lap_up)

    # zero flux at L_v through the reflected ghost v_{m+1} = v_{m-1}
    inv2 = 1.0 / (dr * dr)
    lo[m] = 2.0 * d * inv2
    c[m] = -2.0 * d * inv2
    up[m] = 0.0

    lower = -dt * lo
    diag = 1.0 - dt * c
    upper = -dt * up
    lower[0] = 0.0
    return lower, diag, upper


def _weighted_integral(values: np.ndarray, r: np.ndarray, dim: int) -> float:
    return float(integrate.trapezoid(np.power(r, dim - 1) * values, r))


def _check_bounds(name: str, values: np.ndarray, limit: float, t: float):
    low = float(np.min(values))
    if low < -_NEG_TOL:
        raise BoundBreach(name, low, 0.0, t)
    high = float(np.max(values))
    if high > limit * (1 + _BOUND_SLACK):
        raise BoundBreach(name, high, limit, t)


def step(state: SolverState, p: ModelParams, g: GridSpec, bounds: Optional[Tuple[float, float]]=None) -> SolverState:
    """
    Advance the discrete solution by one time step g.dt.

    :param bounds: The a-priori bounds (M1, M2). When omitted they are
    taken from the current state, which is where the bounds would start if
    the run began now.
    """
    dt = g.dt
    m = len(state.u) - 1
    w = state.u
    r_v = np.linspace(0.0, g.L_v, len(state.v))
    rho = np.linspace(0.0, 1.0, m + 1)
    t_new = (state.steps + 1) * dt

    if bounds is None:
        bounds = (max(p.carrying_u, float(np.max(w))), max(p.carrying_v, float(np.max(state.v))))

    flux = boundary_flux(w, state.h)
    h_new = state.h - dt * p.mu * flux
    if h_new < state.h - _NEG_TOL:
        raise FrontRetreat(state.h, h_new, t_new)
    if h_new > _DOMAIN_FRACTION * g.L_v:
        raise DomainExhausted(h_new, g.L_v, t_new)
    h_prime = (h_new - state.h) / dt

    # u on the fixed grid, coefficients frozen at the new front
    coeffs = transform_equation_coefficients(h_new, h_prime, p.dim, p.d1, rho)
    v_at_u = np.interp(rho * h_new, r_v, state.v)
    rhs_u = w[:m] + dt * w[:m] * (p.a1 - p.b1 * w[:m] - p.c1 * v_at_u[:m])
    lower, diag, upper = _assemble_u_system(coeffs, m, p.dim, dt)
    w_new = np.zeros(m + 1)
    w_new[:m] = tridiag_solve(lower, diag, upper, rhs_u)

    # v on its own grid, u extended by zero beyond the front
    u_at_v = np.interp(r_v / h_new, rho, w_new, right=0.0)
    rhs_v = state.v + dt * state.v * (p.a2 - p.b2 * u_at_v - p.c2 * state.v)
    dr = g.L_v / (len(state.v) - 1)
    lower, diag, upper = _assemble_v_system(len(state.v) - 1, p.dim, dr, p.d2, dt)
    v_new = tridiag_solve(lower, diag, upper, rhs_v)

    _check_bounds('u', w_new, bounds[0], t_new)
    _check_bounds('v', v_new, bounds[1], t_new)

    return SolverState(t_new, h_new, w_new, v_new, h_prev=state.h, steps=state.steps + 1, flux=flux)


def initial_state(p: ModelParams, init: InitialData, g: GridSpec) -> SolverState:
    rho = g.u_nodes()
    u = init.u_profile(rho * p.h0, p.h0)
    u[-1] = 0.0
    v = init.v_profile(g.v_nodes())
    state = SolverState(0.0, p.h0, u, v)
    state.flux = boundary_flux(u, p.h0)
    return state


def _record(traj: Trajectory, state: SolverState, p: ModelParams, g: GridSpec):
    r_u = state.u_positions()
    r_v = np.linspace(0.0, g.L_v, len(state.v))
    v_at_u = np.interp(r_u, r_v, state.v)
    w = state.u
    if state.steps == 0:
        h_prime = -p.mu * state.flux
    else:
        h_prime = (state.h - state.h_prev) / g.dt
    mass = _weighted_integral(w, r_u, p.dim)
    reaction = _weighted_integral(w * (p.a1 - p.b1 * w - p.c1 * v_at_u), r_u, p.dim)
    traj.append(state.t, state.h, h_prime, float(np.max(w)), float(np.max(state.v)), mass, state.flux, reaction)


def _snapshot(state: SolverState, g: GridSpec, requested: float) -> Snapshot:
    return Snapshot(state.t, state.u_positions(), state.u.copy(), g.v_nodes(), state.v.copy(), requested)


def simulate(
    p: ModelParams,
    init: InitialData,
    g: GridSpec,
    snapshot_times: Sequence[float]=(),
    stop_radius: Optional[float]=None,
    allow_exhaustion: bool=False
) -> SimulationResult:
    """
    Run the time stepper from the initial data up to g.t_end.

    :param snapshot_times: Times at which full fields are kept; each is
    taken at the first step reaching it.
    :param stop_radius: If given, stop as soon as the front reaches this
    radius (the trajectory termination is then 'stop-radius').
    :param allow_exhaustion: If True, a front reaching the v-domain limit
    ends the run with termination 'domain-exhausted' instead of raising.
    """
    g.validate(p.h0)
    init.validate(p.h0, g.L_v)
    bounds = uniform_bounds(p, init, g.L_v)

    state = initial_state(p, init, g)
    traj = Trajectory()
    _record(traj, state, p, g)

    pending = sorted(float(t) for t in snapshot_times)
    snapshots = []
    while pending and pending[0] <= 0.0:
        snapshots.append(_snapshot(state, g, pending.pop(0)))

    n_steps = g.steps
    show_progress = util.once_every(timedelta(seconds=5), lambda: _log.info("t={:.4g}, h={:.6g}{:s}".format(state.t, state.h, util.progress(state.steps, n_steps))))
    _log.debug("simulating {!r} on {!r} for {:d} steps".format(p, g, n_steps))

    for k in range(n_steps):
        show_progress()
        try:
            state = step(state, p, g, bounds)
        except DomainExhausted:
            if not allow_exhaustion:
                raise
            _log.debug("front reached the v-domain limit at step {:d}".format(k + 1))
            traj.termination = 'domain-exhausted'
            break
        except SolverError as e:
            _log.debug("step {:d} failed: {!s}".format(k + 1, e))
            raise

        while pending and state.t >= pending[0] - 1e-12:
            snapshots.append(_snapshot(state, g, pending.pop(0)))

        reached = stop_radius is not None and state.h >= stop_radius
        if (k + 1) % g.output_stride == 0 or k + 1 == n_steps or reached:
            _record(traj, state, p, g)
        if reached:
            traj.termination = 'stop-radius'
            break

    if traj.t[-1] < state.t:
        _record(traj, state, p, g)

    return SimulationResult(traj, state, snapshots, bounds)


def mass_balance_residual(traj: Trajectory, p: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per record interval, the discrete residual of

        d/dt int_0^h r^(N-1) u dr + (d1/mu) h^(N-1) h' - int_0^h r^(N-1) f(u, v) dr

    with the time derivatives taken as differences across the interval and
    the reaction integral averaged by the trapezoid rule.

    :return: (interval midpoints, residuals) in mass per unit time.
    """
    if not traj.has_balance_diagnostics:
        raise ValueError("trajectory lacks reaction-integral diagnostics")
    t = traj.column('t')
    h = traj.column('h')
    mass = traj.column('mass_u')
    react = traj.column('reaction_u')
    dt = np.diff(t)
    n = p.dim

    if p.mu > 0:
        front = (p.d1 / (p.mu * n)) * np.diff(np.power(h, n)) / dt
    else:
        flux = traj.column('flux')
        weighted = np.power(h, n - 1) * flux
        front = -p.d1 * 0.5 * (weighted[1:] + weighted[:-1])

    residual = np.diff(mass) / dt + front - 0.5 * (react[1:] + react[:-1])
    mid = 0.5 * (t[1:] + t[:-1])
    return mid, residual
