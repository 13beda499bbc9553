import numpy as np
import pytest

from quickfront import fbsolver, oracle
from quickfront.fbsolver import GridSpec
from quickfront.model import InitialData, ModelParams
from quickfront.oracle import ExplicitOracleConfig, Instability

SUPERIOR = ModelParams(d1=1.0, d2=1.0, a1=3.0, a2=1.0, b1=1.0, b2=1.0, c1=1.0, c2=1.0, mu=1.0, h0=0.8)
BASE_INIT = InitialData(u_shape='parabola', u_amplitude=1.5, v_level=1.0)


class TestConfig:
    def test_default_step_is_the_stability_limit(self):
        cfg = ExplicitOracleConfig(0.05, 1.0, 5.0, 2.0)
        assert cfg.dt == pytest.approx(0.2 * 0.05 ** 2 / 2.0)
        assert len(cfg.nodes) == 101

    def test_rejects_unstable_step(self):
        with pytest.raises(ValueError):
            ExplicitOracleConfig(0.05, 1.0, 5.0, 1.0, dt=0.001)

    def test_rejects_model_with_faster_diffusion(self):
        cfg = ExplicitOracleConfig(0.05, 0.1, 5.0, 1.0)
        with pytest.raises(ValueError):
            oracle.explicit_reference(SUPERIOR.with_values(d2=3.0), BASE_INIT, cfg)


def test_equilibrium_is_exactly_stationary():
    init = InitialData(u_profile=lambda r, h0: 0.0 * r, v_level=1.0)
    cfg = ExplicitOracleConfig.for_params(SUPERIOR, 0.05, 0.5, 5.0)
    res = oracle.explicit_reference(SUPERIOR, init, cfg)
    assert res.h == 0.8
    assert np.all(res.u == 0.0)
    assert np.all(res.v == 1.0)
    assert all(h == 0.8 for h in res.trajectory.h)


def test_oversized_step_is_detected():
    cfg = ExplicitOracleConfig.for_params(SUPERIOR.with_values(mu=0.0), 0.05, 1.0, 5.0)
    cfg.dt *= 50
    with pytest.raises(Instability):
        oracle.explicit_reference(SUPERIOR.with_values(mu=0.0), BASE_INIT, cfg)


def test_small_ball_decays_for_tiny_mu():
    p = ModelParams(d1=1.0, d2=1.0, a1=1.0, a2=0.5, b1=1.0, b2=1.0, c1=1.0, c2=1.0, mu=1e-3, h0=1.0)
    init = InitialData(u_shape='parabola', u_amplitude=0.5, v_level=0.0)
    cfg = ExplicitOracleConfig.for_params(p, 0.04, 3.0, 4.0)
    res = oracle.explicit_reference(p, init, cfg)
    traj = res.trajectory
    t = traj.column('t')
    sup_u = traj.column('sup_u')
    assert t[-1] == pytest.approx(3.0, abs=cfg.dt)
    assert np.all(np.diff(sup_u[t >= 1.0]) < 0)
    assert np.all(res.v == 0.0)
    assert np.all(np.diff(traj.column('h')) >= 0)


@pytest.mark.slow
def test_agrees_with_front_fixing_solver():
    L_v = 6.0
    cfg = ExplicitOracleConfig.for_params(SUPERIOR, 0.01, 2.0, L_v)
    ref = oracle.explicit_reference(SUPERIOR, BASE_INIT, cfg)

    g = GridSpec(m_u=256, m_v=600, L_v=L_v, dt=0.002, t_end=2.0, output_stride=50)
    res = fbsolver.simulate(SUPERIOR, BASE_INIT, g)

    assert abs(res.state.h - ref.h) <= 0.02 * ref.h
    inside = ref.r < ref.h
    u_fb = np.interp(ref.r[inside], res.state.u_positions(), res.state.u, right=0.0)
    assert np.max(np.abs(u_fb - ref.u[inside])) <= 0.02 * np.max(ref.u)


@pytest.mark.slow
def test_refinement_converges():
    fronts = []
    for dr in (0.04, 0.02, 0.01):
        cfg = ExplicitOracleConfig.for_params(SUPERIOR, dr, 1.0, 5.0)
        fronts.append(oracle.explicit_reference(SUPERIOR, BASE_INIT, cfg).h)
    assert abs(fronts[2] - fronts[1]) < abs(fronts[1] - fronts[0])
