import math

import numpy as np
import pytest

from passivize import catalog
from passivize.bounds import bound_report, build_time_optimal_hamiltonian, tau_pas_nondegenerate, tau_qsl
from passivize.errors import DimensionTooLarge
from passivize.operators import bandwidth, expm_skew
from passivize.oracle import (
    min_over_group,
    numeric_min_distance,
    projector_annihilation,
    trajectory_lengths,
    verify_optimality_properties,
    verify_passivization_run,
)
from passivize.system import Permutation, SystemSpec, find_passivizing_involution, permutation_operator

PI = math.pi


def test_qutrit_three_cycle_seed_one():
    res = numeric_min_distance(catalog.qutrit_three_cycle(), seed=1)
    assert abs(res.best_distance - PI * math.sqrt(8) / 3) <= 1e-5
    assert res.converged


def test_passive_spec_is_zero():
    res = numeric_min_distance(SystemSpec([0, 1, 2], [0.5, 0.3, 0.2]))
    assert res.best_distance == 0.0


def test_bivalent_reaches_qsl():
    s = SystemSpec([0, 0, 1, 1], [0.1, 0.2, 0.3, 0.4])
    res = numeric_min_distance(s)
    assert abs(res.best_distance - PI * math.sqrt(4) / 2) <= 1e-5


def test_size_guard():
    s = SystemSpec(range(7), np.arange(1, 8) / 28)
    with pytest.raises(DimensionTooLarge):
        numeric_min_distance(s)


def test_deterministic_under_seed():
    s = SystemSpec([0, 1, 2, 3], [0.1, 0.4, 0.2, 0.3])
    r1 = numeric_min_distance(s, seed=5)
    r2 = numeric_min_distance(s, seed=5)
    assert r1.values == r2.values


@pytest.mark.parametrize("seed", range(6))
def test_random_strict_specs(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    p = rng.dirichlet(np.ones(n))
    s = SystemSpec(np.sort(rng.uniform(0, 5, n)), p)
    res = numeric_min_distance(s, seed=seed)
    assert abs(res.best_distance - tau_pas_nondegenerate(s)) <= 1e-5
    assert res.best_distance >= tau_qsl(s) - 1e-6


def test_tied_involution_does_not_reach_qsl():
    # an involution passivizes, but only with more swaps than delta / 2
    s = SystemSpec([0, 1, 1, 2], np.array([2, 3, 1, 3]) / 9)
    assert find_passivizing_involution(s) is None
    res = numeric_min_distance(s, restarts=16)
    assert res.best_distance > tau_qsl(s) + 0.1
    assert abs(res.best_distance - bound_report(s).tau_upper) <= 1e-5


def test_min_over_group_identity_partitions():
    P = permutation_operator(Permutation((1, 0)))
    res = min_over_group(P, left_groups=[[0], [1]], restarts=4)
    assert abs(res.best_distance - PI / math.sqrt(2)) <= 1e-6


def test_verify_run_detects_short_time():
    s = catalog.qutrit_three_cycle()
    H, T = build_time_optimal_hamiltonian(s)
    assert verify_passivization_run(H, s, T)
    assert not verify_passivization_run(H, s, 0.9 * T)


def test_verify_run_detects_bandwidth_violation():
    s = catalog.qutrit_three_cycle()
    H, T = build_time_optimal_hamiltonian(s)
    rep = verify_passivization_run(2 * H, s, T / 2)
    assert not rep.checks["bandwidth"]


def test_optimality_properties_of_qutrit_hamiltonian():
    s = catalog.qutrit_three_cycle()
    H, T = build_time_optimal_hamiltonian(s)
    rep = verify_optimality_properties(H, s, tol=1e-10, schedule=lambda t: H, T=T)
    assert rep.ok
    assert projector_annihilation(H, s.a_groups) <= 1e-12


def test_optimality_properties_flag_diagonal():
    s = catalog.qutrit_three_cycle()
    H = np.diag([1.0, -1.0, 0.0]) / math.sqrt(2)
    assert not verify_optimality_properties(H, s).ok


def test_trajectory_lengths_qutrit():
    s = catalog.qutrit_three_cycle()
    H, T = build_time_optimal_hamiltonian(s)
    lengths = trajectory_lengths(H, s, T)
    assert np.allclose(lengths, T * math.sqrt(1 / 3))
    assert math.isclose(np.sum(lengths**2), T**2 * bandwidth(H), rel_tol=1e-12)


def test_trajectory_lengths_involution_reach_quarter_turn():
    s = catalog.eight_level_tied()
    H, T = build_time_optimal_hamiltonian(s)
    lengths = trajectory_lengths(H, s, T)
    assert np.sum(lengths >= PI / 2 - 1e-9) >= 6
