"""Independent numerical ground truth.

The passivizing set is ``{U P_sigma V}`` with ``U`` commuting with ``A`` and
``V`` commuting with the initial state, for any one passivizing ``sigma``.
``numeric_min_distance`` minimizes ``||Log(U P_sigma V)||`` over both
commutants directly, without using any of the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._search import BlockUnitaries, pattern_search
from .errors import DimensionTooLarge, NoConvergence
from .operators import (
    TOL_NUM,
    as_hermitian,
    bandwidth,
    conjugate,
    expm_skew,
    log_norm,
)
from .system import (
    Permutation,
    SystemSpec,
    cycle_cost,
    cycle_decomposition,
    discrepancy,
    enumerate_passivizing_permutations,
    is_passive,
    permutation_operator,
)

ORACLE_N_MAX = 6
AGREE_TOL = 1e-6
SPREAD_TOL = 1e-5


@dataclass
class OracleResult:
    best_distance: float
    best_unitary: np.ndarray
    restarts_used: int
    converged: bool
    spread: float
    values: list[float] = field(default_factory=list)
    best_permutation: Permutation | None = None


def cycle_phase_start(sigma: Permutation) -> np.ndarray:
    """Phases ``pi (1 - l) / l`` on each ``l``-cycle.

    Multiplying an ``l``-cycle's permutation operator by this phase centres its
    eigenphases in the principal branch, so ``diag(exp(i phases)) P_sigma``
    sits at the cycle-length upper bound.
    """
    phases = np.zeros(sigma.n)
    for cyc in cycle_decomposition(sigma).cycles:
        l = len(cyc)
        phases[list(cyc)] = math.pi * (1 - l) / l
    return phases


def min_over_group(
    P: np.ndarray,
    left_groups: Sequence[Sequence[int]] | None = None,
    right_groups: Sequence[Sequence[int]] | None = None,
    restarts: int = 8,
    seed=0,
    starts: Sequence[np.ndarray] = (),
) -> OracleResult:
    """Minimize ``||Log(U P V)||`` with ``U``, ``V`` block unitary on the given partitions.

    A missing partition fixes that factor to the identity.  Parameters are
    ordered left then right.  Deterministic for a given seed.
    """
    n = P.shape[0]
    left = BlockUnitaries(left_groups, n) if left_groups is not None else None
    right = BlockUnitaries(right_groups, n) if right_groups is not None else None
    nl = left.dim if left is not None else 0
    dim = nl + (right.dim if right is not None else 0)

    def build(x):
        U = P
        if left is not None:
            U = left.unitary(x[:nl]) @ U
        if right is not None:
            U = U @ right.unitary(x[nl:])
        return U

    def f(x):
        return log_norm(build(x))

    restarts = max(int(restarts), 1)
    children = np.random.SeedSequence(seed).spawn(restarts)
    results = []
    for r in range(restarts):
        if r < len(starts):
            x0 = np.asarray(starts[r], dtype=float)
        else:
            x0 = np.random.default_rng(children[r]).uniform(-math.pi, math.pi, dim)
        results.append(pattern_search(f, x0))
    return _reduce(results, build)


def _reduce(results, build) -> OracleResult:
    values = [r.value for r in results]
    best_i = min(range(len(values)), key=lambda i: (values[i], i))
    best = values[best_i]
    hits = sum(1 for v in values if v - best <= AGREE_TOL * max(1.0, best))
    need = min(3, len(values))
    converged = hits >= need
    spread = max(values) - min(values)
    if spread > SPREAD_TOL and not converged:
        raise NoConvergence(
            f"best value {best:.10g} reproduced by {hits} of {len(values)} restarts "
            f"(spread {spread:.3g})"
        )
    return OracleResult(
        best_distance=float(best),
        best_unitary=build(results[best_i].x),
        restarts_used=len(values),
        converged=converged,
        spread=float(spread),
        values=[float(v) for v in values],
    )


def numeric_min_distance(spec: SystemSpec, restarts: int = 8, seed=0) -> OracleResult:
    """Numerical ``dist(1, passivizing set)`` by multistart pattern search.

    Passivizing permutations are ordered by their cycle-length bound and dealt
    round-robin to the restarts.  Restart ``r`` starts from the centred cycle
    phases of its permutation when ``r`` is below the number of permutations,
    otherwise from a random point.
    """
    if spec.n > ORACLE_N_MAX:
        raise DimensionTooLarge(f"oracle limited to n <= {ORACLE_N_MAX}, got {spec.n}")
    n = spec.n
    if discrepancy(spec) == 0:
        return OracleResult(0.0, np.eye(n, dtype=complex), 0, True, 0.0, [0.0], Permutation.identity(n))
    sigmas = sorted(enumerate_passivizing_permutations(spec), key=lambda s: (cycle_cost(s), s.images))
    restarts = max(int(restarts), 1)
    left = BlockUnitaries(spec.a_groups, n)
    right = BlockUnitaries(spec.p_groups, n)
    nl = left.dim
    children = np.random.SeedSequence(seed).spawn(restarts)

    results = []
    used_sigmas = []
    for r in range(restarts):
        sigma = sigmas[r % len(sigmas)]
        P = permutation_operator(sigma)

        def f(x, P=P):
            return log_norm(left.unitary(x[:nl]) @ P @ right.unitary(x[nl:]))

        if r < len(sigmas):
            x0 = np.concatenate([left.diagonal_params(cycle_phase_start(sigma)), np.zeros(right.dim)])
        else:
            rng = np.random.default_rng(children[r])
            x0 = np.concatenate([left.random_params(rng), right.random_params(rng)])
        results.append(pattern_search(f, x0))
        used_sigmas.append(sigma)

    def build_for(i):
        P = permutation_operator(used_sigmas[i])
        x = results[i].x
        return left.unitary(x[:nl]) @ P @ right.unitary(x[nl:])

    values = [r.value for r in results]
    best_i = min(range(len(values)), key=lambda i: (values[i], i))
    out = _reduce(results, lambda x: build_for(best_i))
    out.best_permutation = used_sigmas[best_i]
    return out


# ---------------------------------------------------------------------------
# verification of constructed runs
# ---------------------------------------------------------------------------


@dataclass
class CheckReport:
    checks: dict[str, bool]
    details: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def __bool__(self) -> bool:
        return self.ok


def _rel_close(x: float, y: float, tol: float) -> bool:
    return abs(x - y) <= tol * max(1.0, abs(y))


def verify_passivization_run(H, spec: SystemSpec, T: float, tol: float = TOL_NUM) -> CheckReport:
    """Check budget saturation, passivity at ``T`` and ``T`` against the QSL."""
    from .bounds import tau_qsl

    H = as_hermitian(H)
    bw = bandwidth(H)
    rho = conjugate(expm_skew(H, T), spec.rho)
    tq = tau_qsl(spec)
    checks = {
        "bandwidth": _rel_close(bw, spec.omega**2, tol),
        "passive": is_passive(rho, spec, tol),
        "above_qsl": T >= tq - tol,
    }
    return CheckReport(checks, {"bandwidth": bw, "omega_sq": spec.omega**2, "tau_qsl": tq})


def projector_annihilation(H, groups: Sequence[Sequence[int]]) -> float:
    """``max ||Pi H Pi||`` over the coordinate projectors of ``groups``."""
    H = np.asarray(H)
    worst = 0.0
    for g in groups:
        ix = np.asarray(g)
        worst = max(worst, float(np.max(np.abs(H[np.ix_(ix, ix)]))))
    return worst


def verify_optimality_properties(
    H,
    spec: SystemSpec,
    tol: float = TOL_NUM,
    schedule: Callable[[float], np.ndarray] | None = None,
    T: float | None = None,
    samples: int = 50,
) -> CheckReport:
    """Completely incompatible with ``A``, parallel transporting, traceless.

    With ``schedule`` and ``T`` also checks that ``tr H(t)^2`` is constant.
    """
    H = as_hermitian(H)
    scale = max(1.0, float(np.max(np.abs(H))))
    a_ann = projector_annihilation(H, spec.a_groups)
    p_ann = projector_annihilation(H, spec.p_groups)
    tr = abs(complex(np.trace(H)))
    checks = {
        "incompatible_with_A": a_ann <= tol * scale,
        "parallel_transporting": p_ann <= tol * scale,
        "traceless": tr <= tol * scale,
    }
    details = {"a_annihilation": a_ann, "p_annihilation": p_ann, "trace": tr}
    if schedule is not None and T is not None:
        bws = [bandwidth(schedule(t)) for t in np.linspace(0, T, samples)]
        spread = max(bws) - min(bws)
        checks["constant_bandwidth"] = spread <= tol * max(1.0, max(bws))
        details["bandwidth_spread"] = spread
    return CheckReport(checks, details)


def trajectory_lengths(H, spec: SystemSpec, T: float, tol: float = TOL_NUM) -> np.ndarray:
    """Length ``T <k|H^2|k>^(1/2)`` of each basis vector's trajectory.

    Asserts the squared lengths add up to ``T^2 tr H^2`` and, when the run
    passivizes, that at least ``delta`` of them reach ``pi/2``.
    """
    H = as_hermitian(H)
    d = np.real(np.diag(H @ H))
    lengths = T * np.sqrt(np.clip(d, 0.0, None))
    total = float(np.sum(lengths**2))
    assert abs(total - T**2 * bandwidth(H)) <= tol * max(1.0, total)
    rho = conjugate(expm_skew(H, T), spec.rho)
    if is_passive(rho, spec, tol):
        assert np.sum(lengths >= math.pi / 2 - tol) >= discrepancy(spec)
    return lengths
