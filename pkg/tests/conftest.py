import numpy as np
import pytest

from quickfront.fbsolver import GridSpec, Trajectory
from quickfront.model import InitialData, ModelParams
from quickfront import scenario


@pytest.fixture
def superior():
    return scenario.builtin('superior-baseline')


@pytest.fixture
def inferior():
    return scenario.builtin('inferior-baseline')


@pytest.fixture
def scalar():
    return scenario.builtin('scalar-logistic')


@pytest.fixture
def small_grid():
    """Coarse grid that keeps short runs well under a second."""
    return GridSpec(m_u=32, m_v=80, L_v=10.0, dt=0.01, t_end=1.0, output_stride=5)


def make_trajectory(t, h, sup_u, h_prime=None, sup_v=None, mass_u=None) -> Trajectory:
    t = np.asarray(t, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), t.shape)
    sup_u = np.broadcast_to(np.asarray(sup_u, dtype=float), t.shape)
    if h_prime is None:
        h_prime = np.gradient(h, t) if len(t) > 1 else np.zeros_like(t)
    h_prime = np.broadcast_to(np.asarray(h_prime, dtype=float), t.shape)
    sup_v = np.broadcast_to(np.asarray(1.0 if sup_v is None else sup_v, dtype=float), t.shape)
    mass_u = np.broadcast_to(np.asarray(0.0 if mass_u is None else mass_u, dtype=float), t.shape)
    return Trajectory(t=t, h=h, h_prime=h_prime, sup_u=sup_u, sup_v=sup_v, mass_u=mass_u)
