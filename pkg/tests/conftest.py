import pathlib

import numpy as np
import pytest

from swconsensus.dynamics import builtin_dynamics
from swconsensus.graphs import Topology, TopologySet
from swconsensus.riccati import build_gain, find_ell, solve_riccati

SCENARIO_DIR = pathlib.Path(__file__).resolve().parents[1] / "scenarios"


def five_node_topologies():
    n = 5
    ring = np.zeros((n, n))
    for k in range(n):
        ring[(k + 1) % n, k] = 1.0
    chords = ring.copy()
    chords[0, 2] = 1.0
    chords[3, 0] = 1.0
    empty = np.zeros((n, n))
    return (
        Topology(n, ring, "ring"),
        Topology(n, chords, "ring_chords"),
        Topology(n, empty, "empty"),
    )


@pytest.fixture(scope="session")
def scenario_dir():
    return SCENARIO_DIR


@pytest.fixture(scope="session")
def ring5_ts():
    topos = five_node_topologies()
    probe = TopologySet(topos, mu=1e-6)
    mu = min(s.min_nonzero_real for s in probe.spectra)
    return TopologySet(topos, mu=mu)


@pytest.fixture(scope="session")
def sine_dyn():
    return builtin_dynamics("bounded_sine", 2, alpha=1.0)


@pytest.fixture(scope="session")
def ring5_sol(ring5_ts):
    return solve_riccati(2, ring5_ts.mu, 1.0)


@pytest.fixture(scope="session")
def ring5_gain(ring5_sol):
    return build_gain(ring5_sol, 20.0)


@pytest.fixture(scope="session")
def ring5_ell(ring5_ts, ring5_sol):
    return find_ell(ring5_ts, ring5_sol)
