import itertools
import math

import numpy as np
import pytest

from passivize import catalog
from passivize.bounds import build_time_optimal_hamiltonian, tau_qsl
from passivize.errors import NotAnInvolution, TooLarge, ValidationError
from passivize.multipartite import (
    QUBIT_MIXED,
    QUBIT_PURE,
    QUTRIT_FULL,
    QUTRIT_RANK2,
    CollectiveSpec,
    advantage_closed,
    advantage_ratio,
    assisted_bounds,
    assisted_hamiltonian,
    catalyst_discrepancy,
    collective_hamiltonian,
    delta_N,
    delta_N_bruteforce,
    delta_N_closed,
    figure_series,
    global_passivization_time,
    global_spec,
    product_spectrum,
    tau_cqsl,
)
from passivize.operators import bandwidth, conjugate, expm_skew
from passivize.system import SystemSpec, discrepancy, is_passive

PI = math.pi

BASES = {
    QUBIT_PURE: SystemSpec([0.0, 1.0], [0.0, 1.0]),
    QUBIT_MIXED: SystemSpec([0.0, 1.0], [0.3, 0.7]),
    QUTRIT_RANK2: SystemSpec([0.0, 1.0, 2.0], [0.0, 0.4, 0.6]),
    QUTRIT_FULL: SystemSpec([1.0, 2.0, 5.0], [0.2, 0.3, 0.5]),
}


def rel(x, y, tol=1e-10):
    return abs(x - y) <= tol * max(1.0, abs(y))


@pytest.mark.parametrize("kind", list(BASES))
def test_counting_agrees_with_closed_form(kind):
    top = 8 if kind.startswith("qubit") else 6
    for N in range(1, top + 1):
        c = CollectiveSpec(BASES[kind], N)
        assert delta_N(c) == delta_N_bruteforce(c) == delta_N_closed(kind, N)


def test_mixed_qubit_small_values():
    assert delta_N_closed(QUBIT_MIXED, 2) == 2
    assert delta_N_closed(QUBIT_MIXED, 3) == 8


def test_qutrit_pair_is_six():
    assert delta_N(catalog.qutrit_pair()) == 6
    assert delta_N_closed(QUTRIT_FULL, 2) == 6


def test_single_copy_is_discrepancy():
    s = SystemSpec([0, 1, 2, 3], [0.1, 0.4, 0.2, 0.3])
    assert delta_N(CollectiveSpec(s, 1)) == discrepancy(s)


def test_degenerate_observable_rejected():
    with pytest.raises(ValidationError):
        CollectiveSpec(SystemSpec([0, 0, 1], [0.2, 0.3, 0.5]), 2)


def test_counting_guard():
    c = CollectiveSpec(BASES[QUBIT_MIXED], 30)
    with pytest.raises(TooLarge):
        delta_N_bruteforce(c)
    assert delta_N(c) == delta_N_closed(QUBIT_MIXED, 30)


def test_tau_cqsl_single_copy_is_qsl():
    s = catalog.qutrit_three_cycle()
    assert rel(tau_cqsl(CollectiveSpec(s, 1)), tau_qsl(s))


def test_tau_cqsl_mixed_qubit_pair():
    assert rel(tau_cqsl(CollectiveSpec(BASES[QUBIT_MIXED], 2)), PI / (2 * math.sqrt(2)))


def test_tau_cqsl_qutrit_pair():
    assert rel(tau_cqsl(catalog.qutrit_pair()), PI / 2)


@pytest.mark.parametrize("N", range(1, 8))
def test_pure_qubit_advantage(N):
    assert rel(advantage_ratio(CollectiveSpec(BASES[QUBIT_PURE], N)), math.sqrt(N * 2 ** (N - 1)))


def test_mixed_qubit_pair_advantage():
    assert rel(advantage_ratio(CollectiveSpec(BASES[QUBIT_MIXED], 2)), 2.0)


def test_advantage_needs_involution():
    with pytest.raises(NotAnInvolution):
        advantage_ratio(CollectiveSpec(catalog.qutrit_three_cycle(), 2))


def test_advantage_ratio_matches_closed_form():
    for N in range(1, 7):
        assert rel(advantage_ratio(CollectiveSpec(BASES[QUBIT_MIXED], N)), advantage_closed(QUBIT_MIXED, N))
        assert rel(advantage_ratio(CollectiveSpec(BASES[QUTRIT_FULL], N)), advantage_closed(QUTRIT_FULL, N))


def test_figure_series_rows():
    rows = figure_series("qubit", 4)
    assert [r[0] for r in rows] == [1, 2, 3, 4]
    assert rows[1][1] == pytest.approx(2.0)
    with pytest.raises(ValidationError):
        figure_series("ququart", 3)


# collective Hamiltonian -------------------------------------------------------------


def _check_collective(c):
    H, tau = collective_hamiltonian(c)
    n, N = c.n, c.N
    assert rel(bandwidth(H), c.base.omega**2 * N * n ** (N - 1))
    rho0 = np.diag(product_spectrum(c.base.p, N)).astype(complex)
    rho = conjugate(expm_skew(H, tau), rho0)
    sorted_p = np.sort(c.base.p)[::-1]
    target = product_spectrum(sorted_p, N)
    assert np.max(np.abs(rho - np.diag(target))) <= 1e-8
    return H, tau


def test_single_copy_collective_is_involution_construction():
    s = BASES[QUBIT_MIXED]
    H, tau = _check_collective(CollectiveSpec(s, 1))
    H1, T1 = build_time_optimal_hamiltonian(s)
    assert rel(tau, T1) and np.allclose(np.abs(H), np.abs(H1))


def test_mixed_qubit_pair_collective():
    H, _ = _check_collective(CollectiveSpec(BASES[QUBIT_MIXED], 2))
    assert np.linalg.matrix_rank(H) == 2


def test_qutrit_pair_collective_not_globally_passive():
    c = catalog.qutrit_pair()
    H, tau = _check_collective(c)
    assert rel(tau, PI / 2)
    rho = conjugate(expm_skew(H, tau), np.diag(product_spectrum(c.base.p, 2)).astype(complex))
    for obs in ("sum", "product"):
        g = global_spec(c, obs)
        # global_spec sorts the basis; reorder the state the same way
        A = np.add.outer(c.base.a, c.base.a).ravel() if obs == "sum" else np.kron(c.base.a, c.base.a)
        order = np.argsort(A, kind="stable")
        assert not is_passive(rho[np.ix_(order, order)], g)


def test_qutrit_pair_preconditions_and_global_time():
    a = np.array([1.0, 2.0, 5.0])
    p = np.array([0.2, 0.3, 0.5])
    seq = lambda x, f: [f(x[i], x[j]) for i, j in [(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2)]]  # noqa: E731
    for vals in (seq(p, lambda x, y: x * y), seq(a, lambda x, y: x + y), seq(a, lambda x, y: x * y)):
        assert all(u < v for u, v in zip(vals, vals[1:]))
    c = catalog.qutrit_pair()
    for obs in ("sum", "product"):
        g = global_spec(c, obs)
        assert discrepancy(g) == 8
        assert rel(global_passivization_time(c, obs), PI / math.sqrt(3))


def test_collective_evolution_stays_diagonal():
    c = CollectiveSpec(BASES[QUBIT_MIXED], 4)
    H, tau = collective_hamiltonian(c)
    rho = conjugate(expm_skew(H, tau), np.diag(product_spectrum(c.base.p, 4)).astype(complex))
    assert np.max(np.abs(rho - np.diag(np.diag(rho)))) <= 1e-9


# assisted -------------------------------------------------------------------------


def test_assisted_single_catalyst():
    s = catalog.qutrit_three_cycle()
    lo, hi = assisted_bounds(s, 1)
    assert rel(lo, tau_qsl(s)) and rel(hi, PI * math.sqrt(8) / 3)


def test_assisted_maximally_active():
    p = np.arange(1, 6, dtype=float)
    s = SystemSpec(range(5), p / p.sum())
    lo, hi = assisted_bounds(s, 4)
    assert rel(lo, tau_qsl(s) / 2) and rel(hi, tau_qsl(s) / 2)


def test_assisted_qutrit_gap():
    lo, hi = assisted_bounds(catalog.qutrit_three_cycle(), 2)
    assert rel(lo, PI * math.sqrt(3) / (2 * math.sqrt(2)))
    assert rel(hi, PI * math.sqrt(8) / (3 * math.sqrt(2)))
    assert lo < hi


def test_assisted_hamiltonian_single_catalyst():
    H, _ = build_time_optimal_hamiltonian(catalog.qutrit_three_cycle())
    assert np.allclose(assisted_hamiltonian(H, 1), H)


def test_assisted_hamiltonian_passivizes_faster():
    p = np.arange(1, 5, dtype=float)
    s = SystemSpec(range(4), p / p.sum())
    H, T = build_time_optimal_hamiltonian(s, "maximally_active")
    n_c = 4
    Hc = assisted_hamiltonian(H, n_c, omega=1.0)
    assert rel(bandwidth(Hc), n_c * bandwidth(H))
    psi = np.zeros((n_c, n_c))
    psi[0, 0] = 1.0
    rho = conjugate(expm_skew(Hc, T / 2), np.kron(s.rho, psi))
    red = np.einsum("iaja->ij", rho.reshape(4, n_c, 4, n_c))
    cat = np.einsum("iaib->ab", rho.reshape(4, n_c, 4, n_c))
    assert is_passive(red, s)
    assert np.allclose(cat, psi, atol=1e-12)
    assert np.allclose(rho, np.kron(red, psi), atol=1e-12)


def test_catalyst_discrepancy_not_smaller():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(2, 5))
        s = SystemSpec(np.sort(rng.integers(0, 3, n)), rng.dirichlet(np.ones(n)))
        q = rng.dirichlet(np.ones(int(rng.integers(1, 4))))
        assert catalyst_discrepancy(s, q) >= discrepancy(s)
