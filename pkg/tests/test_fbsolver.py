import numpy as np
import pytest
from scipy.linalg import solve_banded

from quickfront import fbsolver
from quickfront.fbsolver import (
    BoundBreach, DomainExhausted, GridSpec, NotDiagonallyDominant, SolverState, Trajectory,
)
from quickfront.model import InitialData, ModelParams

SUPERIOR = dict(d1=1.0, d2=1.0, a1=3.0, a2=1.0, b1=1.0, b2=1.0, c1=1.0, c2=1.0, h0=0.8)


def superior_params(mu=1.0, **kw):
    d = dict(SUPERIOR, mu=mu)
    d.update(kw)
    return ModelParams(**d)


BASE_INIT = InitialData(u_shape='parabola', u_amplitude=1.5, v_level=1.0)


class TestTridiagSolve:
    def test_identity(self):
        rhs = np.array([3.0, -1.0, 2.5, 7.0])
        x = fbsolver.tridiag_solve(np.zeros(4), np.ones(4), np.zeros(4), rhs)
        assert np.array_equal(x, rhs)

    def test_hand_system(self):
        x = fbsolver.tridiag_solve([0, -1, -1], [2, 2, 2], [-1, -1, 0], [1, 0, 1])
        assert x == pytest.approx([1.0, 1.0, 1.0], abs=1e-15)

    def test_random_dominant_system(self):
        rng = np.random.default_rng(7)
        n = 50
        lower = rng.uniform(-1, 1, n)
        upper = rng.uniform(-1, 1, n)
        diag = np.abs(lower) + np.abs(upper) + rng.uniform(0.1, 2.0, n)
        rhs = rng.uniform(-5, 5, n)
        x = fbsolver.tridiag_solve(lower, diag, upper, rhs)
        a = np.diag(diag) + np.diag(lower[1:], -1) + np.diag(upper[:-1], 1)
        assert np.max(np.abs(a @ x - rhs)) <= 1e-12 * np.max(np.abs(rhs))

    def test_not_dominant(self):
        with pytest.raises(NotDiagonallyDominant) as exc:
            fbsolver.tridiag_solve([0, 1, 3], [2, 2, 2], [1, 1, 0], [1, 1, 1])
        assert exc.value.row == 2


class TestRadialLaplacian:
    def test_one_dimension_interior(self):
        d = 0.1
        assert fbsolver.radial_laplacian_row(5, 1, d) == pytest.approx((100.0, -200.0, 100.0))

    def test_origin_row(self):
        d = 0.1
        lo, c, up = fbsolver.radial_laplacian_row(0, 3, d)
        assert lo == 0.0
        assert c == pytest.approx(-600.0)
        assert up == pytest.approx(600.0)

    @pytest.mark.parametrize('dim', [1, 2, 3])
    def test_parabola_laplacian(self, dim):
        m = 40
        d = 1.0 / m
        rho = np.linspace(0.0, 1.0, m + 1)
        w = 1.0 - rho ** 2
        for j in range(m):
            lo, c, up = fbsolver.radial_laplacian_row(j, dim, d)
            left = w[j - 1] if j > 0 else 0.0
            assert lo * left + c * w[j] + up * w[j + 1] == pytest.approx(-2.0 * dim, abs=1e-9)

    @pytest.mark.parametrize('dim', [4, 6])
    def test_high_dimension_rows_keep_nonnegative_weights(self, dim):
        for j in range(1, 10):
            lo, c, up = fbsolver.radial_laplacian_row(j, dim, 0.05)
            assert lo >= 0 and up >= 0
            assert lo + c + up == pytest.approx(0.0, abs=1e-9)


class TestTransform:
    def test_static_front_has_no_drift(self):
        co = fbsolver.transform_equation_coefficients(1.5, 0.0, 2)
        assert np.all(co.drift == 0.0)

    def test_diffusion_coefficient(self):
        co = fbsolver.transform_equation_coefficients(2.0, 0.3, 1, d=1.0)
        assert co.diffusion == pytest.approx(0.25)

    def test_one_dimension_has_no_radial_term(self):
        co = fbsolver.transform_equation_coefficients(2.0, 0.3, 1)
        assert np.all(co.radial == 0.0)

    def test_drift_and_radial_weights(self):
        rho = np.array([0.0, 0.5, 1.0])
        co = fbsolver.transform_equation_coefficients(2.0, 1.0, 3, rho=rho)
        assert co.drift == pytest.approx([0.0, 0.25, 0.5])
        assert co.radial == pytest.approx([0.0, 4.0, 2.0])

    def test_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            fbsolver.transform_equation_coefficients(0.0, 0.0, 1)


def test_boundary_flux_exact_for_quadratics():
    w = 1.0 - np.linspace(0.0, 1.0, 33) ** 2
    assert fbsolver.boundary_flux(w, 2.0) == pytest.approx(-1.0, abs=1e-12)


class TestGridSpec:
    def test_round_trip(self):
        g = GridSpec(m_u=64, m_v=100, L_v=12.5, dt=0.005, t_end=3.0, output_stride=4)
        assert GridSpec(**g.to_dict()) == g
        assert g.steps == 600

    def test_too_few_cells(self):
        with pytest.raises(ValueError):
            GridSpec(m_u=8).validate()

    def test_domain_must_dwarf_initial_ball(self):
        with pytest.raises(ValueError):
            GridSpec(L_v=3.0).validate(h0=0.8)


class TestStep:
    def test_equilibrium_is_stationary(self, small_grid):
        p = superior_params()
        state = SolverState(0.0, 0.8, np.zeros(small_grid.m_u + 1), np.full(small_grid.m_v + 1, 1.0))
        new = fbsolver.step(state, p, small_grid)
        assert new.h == 0.8
        assert new.t == pytest.approx(small_grid.dt)
        assert np.all(new.u == 0.0)
        assert new.v == pytest.approx(state.v, abs=1e-12)

    def test_frozen_front(self, small_grid):
        p = superior_params(mu=0.0)
        state = fbsolver.initial_state(p, BASE_INIT, small_grid)
        new = fbsolver.step(state, p, small_grid)
        assert new.h == state.h
        assert new.u[-1] == 0.0
        assert not np.array_equal(new.u, state.u)

    def test_front_advances(self, small_grid):
        p = superior_params(mu=2.0)
        state = fbsolver.initial_state(p, BASE_INIT, small_grid)
        new = fbsolver.step(state, p, small_grid)
        assert new.h > state.h
        assert new.h - state.h == pytest.approx(-small_grid.dt * p.mu * state.flux)

    def test_too_large_step_breaches_bounds(self):
        p = superior_params(a1=60.0, b1=20.0)
        g = GridSpec(m_u=32, m_v=80, L_v=10.0, dt=0.5, t_end=5.0)
        init = InitialData(u_amplitude=2.9, v_level=0.0)
        with pytest.raises(BoundBreach):
            fbsolver.simulate(p, init, g)

    def test_domain_exhaustion(self):
        p = superior_params(mu=50.0)
        g = GridSpec(m_u=32, m_v=64, L_v=4.0, dt=0.002, t_end=20.0, output_stride=10)
        with pytest.raises(DomainExhausted):
            fbsolver.simulate(p, BASE_INIT, g)
        res = fbsolver.simulate(p, BASE_INIT, g, allow_exhaustion=True)
        assert res.trajectory.termination == 'domain-exhausted'
        assert res.trajectory.h[-1] <= 0.9 * g.L_v


class TestSimulate:
    def test_records_and_monotone_front(self, small_grid):
        res = fbsolver.simulate(superior_params(), BASE_INIT, small_grid)
        traj = res.trajectory
        assert len(traj) == small_grid.steps // small_grid.output_stride + 1
        assert traj.t[0] == 0.0 and traj.t[-1] == pytest.approx(small_grid.t_end)
        assert np.all(np.diff(traj.t) > 0)
        assert np.all(np.diff(traj.h) >= -1e-12)
        m1, m2 = res.bounds
        assert max(traj.sup_u) <= m1 * (1 + 1e-6)
        assert max(traj.sup_v) <= m2 * (1 + 1e-6)
        assert np.min(res.state.u) >= -1e-12
        assert res.state.u[-1] == 0.0

    def test_deterministic(self, small_grid, tmp_path):
        a = fbsolver.simulate(superior_params(), BASE_INIT, small_grid).trajectory
        b = fbsolver.simulate(superior_params(), BASE_INIT, small_grid).trajectory
        a.to_file(str(tmp_path / 'a.csv'))
        b.to_file(str(tmp_path / 'b.csv'))
        assert (tmp_path / 'a.csv').read_bytes() == (tmp_path / 'b.csv').read_bytes()

    def test_csv_format(self, small_grid, tmp_path):
        traj = fbsolver.simulate(superior_params(), BASE_INIT, small_grid).trajectory
        path = str(tmp_path / 'trajectory.csv')
        traj.to_file(path)
        with open(path) as fp:
            assert fp.readline().strip() == 't,h,h_prime,sup_u,sup_v,mass_u'
        loaded = fbsolver.from_file(path)
        assert loaded.h == traj.h
        assert loaded.mass_u == traj.mass_u

    def test_snapshots_and_stop_radius(self, small_grid):
        p = superior_params(mu=4.0)
        g = small_grid.with_values(t_end=5.0)
        res = fbsolver.simulate(p, BASE_INIT, g, snapshot_times=[0.0, 0.01, 3.0], stop_radius=0.9)
        assert res.trajectory.termination == 'stop-radius'
        assert res.trajectory.h[-1] >= 0.9
        assert [s.requested for s in res.snapshots] == [0.0, 0.01]
        snap = res.snapshots[1]
        assert snap.t == pytest.approx(0.01)
        assert len(snap.r_u) == g.m_u + 1 and len(snap.r_v) == g.m_v + 1

    def test_ordering_in_mu(self, small_grid):
        g = small_grid.with_values(t_end=2.0)
        runs = [fbsolver.simulate(superior_params(mu=mu), BASE_INIT, g).trajectory for mu in (0.5, 1.0, 2.0)]
        for lo, hi in zip(runs, runs[1:]):
            cell = np.array(hi.h) / g.m_u
            assert np.all(np.array(lo.h) <= np.array(hi.h) + 2 * cell)


class TestMassBalance:
    def test_equilibrium_has_zero_residual(self):
        t = np.linspace(0.0, 1.0, 11)
        traj = Trajectory(t=t, h=np.full(11, 0.8), h_prime=np.zeros(11), sup_u=np.zeros(11), sup_v=np.ones(11),
                          mass_u=np.zeros(11), flux=np.zeros(11), reaction_u=np.zeros(11))
        _, res = fbsolver.mass_balance_residual(traj, superior_params())
        assert np.all(res == 0.0)

    def test_needs_diagnostics(self):
        traj = Trajectory(t=[0.0, 1.0], h=[1.0, 1.0], h_prime=[0, 0], sup_u=[0, 0], sup_v=[0, 0], mass_u=[0, 0])
        with pytest.raises(ValueError):
            fbsolver.mass_balance_residual(traj, superior_params())

    def test_short_run_balances(self, small_grid):
        traj = fbsolver.simulate(superior_params(), BASE_INIT, small_grid.with_values(t_end=2.0)).trajectory
        mid, res = fbsolver.mass_balance_residual(traj, superior_params())
        assert len(mid) == len(traj) - 1
        assert np.max(np.abs(res[mid > 1.0])) < 0.25 * max(traj.mass_u)

    @pytest.mark.slow
    def test_residual_shrinks_under_refinement(self):
        p = superior_params()
        coarse = GridSpec(m_u=64, m_v=320, L_v=40.0, dt=0.02, t_end=10.0, output_stride=5)
        # dt and drho^2 both quartered per level
        fine = coarse.with_values(m_u=128, dt=0.005, output_stride=20)
        finest = coarse.with_values(m_u=256, dt=0.00125, output_stride=80)
        peaks = []
        for g in (coarse, fine, finest):
            traj = fbsolver.simulate(p, BASE_INIT, g).trajectory
            mid, res = fbsolver.mass_balance_residual(traj, p)
            peaks.append(np.max(np.abs(res[mid >= 1.0])))
        assert peaks[1] <= 0.5 * peaks[0]
        assert peaks[2] <= 0.5 * peaks[1]


@pytest.mark.slow
def test_grid_convergence_of_final_front():
    p = superior_params(mu=2.0)
    g1 = GridSpec(m_u=32, m_v=160, L_v=20.0, dt=0.04, t_end=4.0, output_stride=1)
    g2 = g1.with_values(m_u=64, dt=0.01)
    g3 = g1.with_values(m_u=128, dt=0.0025)
    h = [fbsolver.simulate(p, BASE_INIT, g).trajectory.h[-1] for g in (g1, g2, g3)]
    assert abs(h[1] - h[2]) < abs(h[0] - h[1])


@pytest.mark.slow
def test_front_ordering_in_mu_on_random_superior_models():
    rng = np.random.default_rng(20240611)
    g = GridSpec(m_u=64, m_v=320, L_v=40.0, dt=0.01, t_end=5.0, output_stride=10)
    for _ in range(3):
        a1 = rng.uniform(2.0, 4.0)
        a2 = rng.uniform(0.5, 1.0)
        mu_base = rng.uniform(0.5, 2.0)
        h0 = rng.uniform(0.5, 1.0)
        init = InitialData(u_shape='parabola', u_amplitude=a1 / 2, v_level=a2)
        runs = []
        for factor in (0.5, 1.0, 2.0):
            p = superior_params(mu=factor * mu_base, a1=a1, a2=a2, h0=h0)
            res = fbsolver.simulate(p, init, g)
            assert np.all(np.diff(res.trajectory.h) >= -1e-12)
            runs.append(np.array(res.trajectory.h))
        for lo, hi in zip(runs, runs[1:]):
            assert np.all(lo <= hi + 2 * hi / g.m_u)


def test_tridiag_solve_matches_banded_solver():
    rng = np.random.default_rng(11)
    n = 40
    lower = -rng.uniform(0.0, 1.0, n)
    upper = -rng.uniform(0.0, 1.0, n)
    diag = 2.0 + rng.uniform(0.0, 1.0, n)
    rhs = rng.normal(size=n)
    bands = np.zeros((3, n))
    bands[0, 1:] = upper[:-1]
    bands[1] = diag
    bands[2, :-1] = lower[1:]
    expected = solve_banded((1, 1), bands, rhs)
    assert fbsolver.tridiag_solve(lower, diag, upper, rhs) == pytest.approx(expected, abs=1e-12)
