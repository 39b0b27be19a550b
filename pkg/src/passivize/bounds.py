"""Time bounds, exact passivization times and time-optimal Hamiltonians.

All times are in units of ``1/omega`` scaled by the spec's ``omega``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    AlreadyPassive,
    DegenerateSpectrum,
    InvalidGrouping,
    MethodPreconditionFailed,
    NestingViolation,
    NoConvergence,
    NotPassivizing,
    UnclassifiedBlock,
)
from .operators import principal_log
from .system import (
    Permutation,
    SystemSpec,
    canonical_passivizing_permutation,
    cycle_cost,
    cycle_decomposition,
    cycle_division,
    discrepancy,
    enumeration_count,
    find_passivizing_involution,
    groups_from_labels,
    is_passivizing,
    passivizing_candidates,
    permutation_operator,
    reduce_and_order_involution,
)

N_CANDIDATES_MAX = 20_000
GFLAG_N_MAX = 6
GFLAG_RESTARTS = 32
GFLAG_STABLE = 1e-7

# exact-time provenance tags
NONDEGENERATE = "nondegenerate"
INVOLUTION = "involution"
DECOMPOSITION = "decomposition"
ORACLE = "oracle"


def parity(k: int) -> int:
    """1 for even ``k``, 0 for odd."""
    return 1 if k % 2 == 0 else 0


def tau_qsl(spec: SystemSpec) -> float:
    """Lower bound ``pi sqrt(delta) / (2 omega)``."""
    return math.pi * math.sqrt(discrepancy(spec)) / (2 * spec.omega)


def is_strict(spec: SystemSpec) -> bool:
    n = spec.n
    return len(set(spec.a_labels.tolist())) == n and len(set(spec.p_labels.tolist())) == n


def cycle_time(sigma: Permutation, omega: float) -> float:
    """``(pi / (sqrt(3) omega)) sqrt(n - sum 1/l_j)`` for the cycles of ``sigma``."""
    return math.pi * math.sqrt(max(cycle_cost(sigma), 0.0)) / (math.sqrt(3) * omega)


def tau_pas_nondegenerate(spec: SystemSpec) -> float:
    """Exact passivization time when both spectra are non-degenerate."""
    if not is_strict(spec):
        raise DegenerateSpectrum("both a and p must be non-degenerate")
    return cycle_time(canonical_passivizing_permutation(spec), spec.omega)


def tau_upper_from_permutation(sigma: Permutation, spec: SystemSpec, divide: bool = False) -> float:
    """Cycle-length upper bound; with ``divide`` minimized over cycle divisions."""
    if not is_passivizing(sigma, spec):
        raise NotPassivizing(f"{sigma} is not passivizing")
    if divide:
        return min(cycle_time(s, spec.omega) for s in cycle_division(sigma, spec))
    return cycle_time(sigma, spec.omega)


def upper_bound_search(spec: SystemSpec) -> tuple[float, Permutation, bool]:
    """Smallest cycle-length bound over the available passivizing permutations.

    Returns ``(time, permutation, exhaustive)``; ``exhaustive`` is False when only
    the cycle-division closure of the canonical permutation was searched.
    """
    exhaustive = spec.n <= 10 and enumeration_count(spec) <= N_CANDIDATES_MAX
    if exhaustive:
        cands = passivizing_candidates(spec)
    else:
        cands = cycle_division(canonical_passivizing_permutation(spec), spec)
    best = min(cands, key=lambda s: (cycle_cost(s), s.images))
    return cycle_time(best, spec.omega), best, exhaustive


# ---------------------------------------------------------------------------
# time-optimal Hamiltonians
# ---------------------------------------------------------------------------


def transposition_hamiltonian(pairs: Sequence[tuple[int, int]], n: int, omega: float) -> np.ndarray:
    """``(omega / sqrt(2m)) sum (|k1><k2| + |k2><k1|)`` over ``m`` pairs."""
    m = len(pairs)
    if m == 0:
        raise AlreadyPassive("no transpositions to implement")
    H = np.zeros((n, n), dtype=complex)
    c = omega / math.sqrt(2 * m)
    for k1, k2 in pairs:
        H[k1, k2] = H[k2, k1] = c
    return H


def cycle_hamiltonian(sigma: Permutation, omega: float) -> np.ndarray:
    """Geodesic generator from the identity to a phase multiple of ``P_sigma``.

    On each cycle ``c`` of length ``l`` the generator is
    ``(i/pi) Log P_c + (parity(l)/l) 1_c``; the whole is scaled to bandwidth
    ``omega**2``, so ``exp(-i T H)`` with ``T = cycle_time(sigma)`` maps
    ``diag(p)`` to ``diag(p[sigma.images])``.
    """
    cost = cycle_cost(sigma)
    if cost <= 0:
        raise AlreadyPassive("identity permutation")
    n = sigma.n
    H = np.zeros((n, n), dtype=complex)
    P = permutation_operator(sigma)
    for cyc in cycle_decomposition(sigma).cycles:
        l = len(cyc)
        if l == 1:
            continue
        ix = np.asarray(cyc)
        L = principal_log(P[np.ix_(ix, ix)]).matrix
        H[np.ix_(ix, ix)] = (1j / math.pi) * L + (parity(l) / l) * np.eye(l)
    H = omega * math.sqrt(3.0 / cost) * H
    return (H + H.conj().T) / 2


def maximally_active_pairs(spec: SystemSpec) -> list[tuple[int, int]]:
    """Pairs ``(k, n-1-k)`` for ``k < m``, ``m`` the largest index with strict gaps.

    Positions refer to the basis ordered by ``a`` and, inside an eigenspace of
    ``A``, by ``p``; pairs are reported as basis indices.
    """
    n = spec.n
    order = sorted(range(n), key=lambda k: (spec.a_labels[k], spec.p_labels[k], k))
    m = 0
    for k in range(n // 2):
        i, j = order[k], order[n - 1 - k]
        if spec.p_labels[i] < spec.p_labels[j] and spec.a_labels[i] < spec.a_labels[j]:
            m = k + 1
    return [tuple(sorted((order[k], order[n - 1 - k]))) for k in range(m)]


def _is_maximally_active(spec: SystemSpec) -> bool:
    for k in range(spec.n):
        for l in range(k + 1, spec.n):
            if spec.a_labels[k] < spec.a_labels[l] and spec.p_labels[k] > spec.p_labels[l]:
                return False
    return True


def build_time_optimal_hamiltonian(spec: SystemSpec, method: str = "auto") -> tuple[np.ndarray, float]:
    """Time-optimal Hamiltonian and the time at which it passivizes.

    ``method`` is ``"involution"``, ``"nondegenerate"``, ``"maximally_active"``
    or ``"auto"`` (the first applicable, in that order after the maximally
    active special case).
    """
    if discrepancy(spec) == 0:
        raise AlreadyPassive("the initial state is already passive")
    if method == "auto":
        if _is_maximally_active(spec):
            method = "maximally_active"
        elif is_strict(spec):
            method = "nondegenerate"
        else:
            method = "involution"
    if method == "maximally_active":
        if not _is_maximally_active(spec):
            raise MethodPreconditionFailed("p is not nondecreasing along a")
        pairs = maximally_active_pairs(spec)
        return transposition_hamiltonian(pairs, spec.n, spec.omega), tau_qsl(spec)
    if method == "involution":
        sigma = find_passivizing_involution(spec)
        if sigma is None:
            raise MethodPreconditionFailed("no passivizing involution exists")
        pairs = reduce_and_order_involution(sigma, spec)
        return transposition_hamiltonian(pairs, spec.n, spec.omega), tau_qsl(spec)
    if method == "nondegenerate":
        if not is_strict(spec):
            raise MethodPreconditionFailed("both spectra must be non-degenerate")
        sigma = canonical_passivizing_permutation(spec)
        return cycle_hamiltonian(sigma, spec.omega), cycle_time(sigma, spec.omega)
    raise MethodPreconditionFailed(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# invariant subspaces and flag distances
# ---------------------------------------------------------------------------

FUBINI_STUDY = "FubiniStudy"
GRASSMANN = "Grassmann"
FLAG = "Flag"
GENERALIZED_FLAG = "GeneralizedFlag"


@dataclass
class Block:
    """One invariant subspace ``H_j`` with its quotient geometry.

    ``side`` says which isotropy group is quotiented out: ``"observable"``
    (state eigenspaces nest in those of ``A``), ``"state"`` (the reverse) or
    ``"hybrid"`` (group generated by both; experimental).  ``partition`` holds
    the eigenspaces of that group as positions within ``indices``.
    """

    indices: tuple[int, ...]
    sigma: Permutation
    kind: str
    side: str
    partition: list[list[int]]
    distance: float | None = None
    numerical: bool = False

    @property
    def classification(self) -> str:
        return "RhoSide" if self.side == "state" else self.kind

    @property
    def dim(self) -> int:
        return len(self.indices)


@dataclass
class DecompositionPlan:
    sigma: Permutation
    blocks: list[Block]
    experimental: bool = False

    def distance(self) -> float:
        return math.sqrt(sum(block_distance(b) ** 2 for b in self.blocks))

    @property
    def numerical(self) -> bool:
        return any(b.numerical for b in self.blocks)


def default_grouping(sigma: Permutation, spec: SystemSpec) -> list[list[int]]:
    """Finest grouping of the cycles of ``sigma`` with whole eigenspaces per block.

    Union-find over cycles: two cycles merge when they share an eigenspace of
    ``A`` or of the initial state.
    """
    cycles = cycle_decomposition(sigma).cycles
    parent = list(range(len(cycles)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[tuple[str, int], int] = {}
    for ci, cyc in enumerate(cycles):
        for k in cyc:
            for key in (("a", int(spec.a_labels[k])), ("p", int(spec.p_labels[k]))):
                if key in owner:
                    ri, rj = find(owner[key]), find(ci)
                    if ri != rj:
                        parent[max(ri, rj)] = min(ri, rj)
                else:
                    owner[key] = ci
    blocks: dict[int, list[int]] = {}
    for ci, cyc in enumerate(cycles):
        blocks.setdefault(find(ci), []).extend(cyc)
    return sorted(sorted(b) for b in blocks.values())


def _check_grouping(grouping, sigma: Permutation, spec: SystemSpec) -> list[list[int]]:
    blocks = [sorted(int(k) for k in b) for b in grouping]
    flat = sorted(k for b in blocks for k in b)
    if flat != list(range(spec.n)):
        raise InvalidGrouping("blocks must be disjoint and cover all indices")
    where = {k: i for i, b in enumerate(blocks) for k in b}
    for b in blocks:
        if any(where[sigma.images[k]] != where[k] for k in b):
            raise InvalidGrouping("every block must be a union of cycles of sigma")
    for g in spec.a_groups + spec.p_groups:
        if len({where[k] for k in g}) > 1:
            raise InvalidGrouping("an eigenspace of A or of the state is split across blocks")
    return sorted(blocks)


def _nested(inner: list[list[int]], outer_labels: dict[int, int]) -> bool:
    return all(len({outer_labels[k] for k in g}) == 1 for g in inner)


def _join(g1: list[list[int]], g2: list[list[int]]) -> list[list[int]]:
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in g1 + g2:
        for k in g:
            parent.setdefault(k, k)
        for k in g[1:]:
            a, b = find(g[0]), find(k)
            if a != b:
                parent[max(a, b)] = min(a, b)
    out: dict[int, list[int]] = {}
    for k in parent:
        out.setdefault(find(k), []).append(k)
    return sorted(sorted(v) for v in out.values())


def _classify(partition: list[list[int]]) -> str:
    sizes = sorted(len(g) for g in partition)
    if all(s == 1 for s in sizes):
        return FLAG
    if len(sizes) == 1:
        return GRASSMANN
    if len(sizes) == 2:
        return FUBINI_STUDY if sizes[0] == 1 else GRASSMANN
    return GENERALIZED_FLAG


def decompose_invariant_subspaces(
    sigma: Permutation,
    spec: SystemSpec,
    grouping: Sequence[Sequence[int]] | None = None,
    allow_hybrid: bool = False,
) -> DecompositionPlan:
    """Split ``sigma`` into invariant blocks and classify each block's geometry.

    ``grouping`` is a list of index sets, each a union of cycles of ``sigma``;
    the default is :func:`default_grouping`.
    """
    if not is_passivizing(sigma, spec):
        raise NotPassivizing(f"{sigma} is not passivizing")
    if grouping is None:
        blocks_ix = default_grouping(sigma, spec)
    else:
        blocks_ix = _check_grouping(grouping, sigma, spec)
    experimental = False
    blocks = []
    for ix in blocks_ix:
        a_part = groups_from_labels(np.asarray([spec.a_labels[k] for k in ix]))
        p_part = groups_from_labels(np.asarray([spec.p_labels[k] for k in ix]))
        a_lab = {i: j for j, g in enumerate(a_part) for i in g}
        p_lab = {i: j for j, g in enumerate(p_part) for i in g}
        if _nested(p_part, a_lab):
            side, part = "observable", a_part
        elif _nested(a_part, p_lab):
            side, part = "state", p_part
        elif allow_hybrid:
            side, part = "hybrid", _join(a_part, p_part)
            experimental = True
        else:
            raise NestingViolation(
                f"on block {[k + 1 for k in ix]} neither isotropy group contains the other"
            )
        blocks.append(Block(tuple(ix), sigma.restricted(ix), _classify(part), side, part))
    return DecompositionPlan(sigma, blocks, experimental)


def grassmann_distance(P: np.ndarray, part: list[list[int]]) -> float:
    """``sqrt(2 sum arccos(s_i)^2)`` from the singular values of ``Pi P Pi``."""
    g = np.asarray(part[0])
    s = np.linalg.svd(P[np.ix_(g, g)], compute_uv=False)
    s = np.clip(s, 0.0, 1.0)
    return math.sqrt(2.0 * float(np.sum(np.arccos(s) ** 2)))


def flag_distance(sigma: Permutation) -> float:
    """``sqrt(pi^2/3 sum (l^2 - 1)/l)`` over the cycles of ``sigma``."""
    return math.sqrt(math.pi**2 / 3 * sum((l * l - 1) / l for l in cycle_decomposition(sigma).lengths))


def generalized_flag_distance(
    sigma: Permutation, part: list[list[int]], restarts: int = GFLAG_RESTARTS, seed=0
) -> float:
    """Numerical ``min_U ||Log(P_sigma U)||`` over unitaries block diagonal on ``part``."""
    from ._search import BlockUnitaries
    from .oracle import cycle_phase_start, min_over_group

    if sigma.n > GFLAG_N_MAX:
        raise UnclassifiedBlock(f"generalized flag block of dimension {sigma.n} exceeds {GFLAG_N_MAX}")
    P = permutation_operator(sigma)
    start = BlockUnitaries(part, sigma.n).diagonal_params(cycle_phase_start(sigma))
    res = min_over_group(P, right_groups=part, restarts=restarts, seed=seed, starts=[start])
    if res.spread > GFLAG_STABLE and not res.converged:
        raise NoConvergence("generalized flag distance did not stabilize")
    return res.best_distance


def block_distance(block: Block) -> float:
    """Geodesic distance from the identity coset to ``[P_sigma_j]`` on one block."""
    if block.distance is not None:
        return block.distance
    P = permutation_operator(block.sigma)
    if block.kind == FLAG:
        d = flag_distance(block.sigma)
    elif block.kind == FUBINI_STUDY:
        k = next(g[0] for g in block.partition if len(g) == 1)
        d = 0.0 if block.sigma.images[k] == k else math.pi / math.sqrt(2)
    elif block.kind == GRASSMANN:
        d = 0.0 if len(block.partition) == 1 else grassmann_distance(P, block.partition)
    elif block.kind == GENERALIZED_FLAG:
        d = generalized_flag_distance(block.sigma, block.partition)
        block.numerical = True
    else:
        raise UnclassifiedBlock(f"unknown block kind {block.kind!r}")
    block.distance = d
    return d


@dataclass
class DistanceResult:
    distance: float
    tau: float
    plan: DecompositionPlan
    numerical: bool
    experimental: bool
    warnings: list[str] = field(default_factory=list)


def distance_to_passivizing_set(
    spec: SystemSpec,
    sigma: Permutation | None = None,
    grouping: Sequence[Sequence[int]] | None = None,
    allow_hybrid: bool = False,
) -> DistanceResult:
    """``dist(1, passivizing set)`` from the block decomposition.

    With ``sigma`` given, uses that permutation (and ``grouping``).  Otherwise
    every available passivizing permutation is decomposed with its default
    grouping and the smallest distance is reported; a warning is attached if
    valid plans disagree.
    """
    if sigma is not None:
        plan = decompose_invariant_subspaces(sigma, spec, grouping, allow_hybrid)
        d = plan.distance()
        return DistanceResult(d, d / spec.omega, plan, plan.numerical, plan.experimental)
    if discrepancy(spec) == 0:
        ident = Permutation.identity(spec.n)
        plan = decompose_invariant_subspaces(ident, spec, None, allow_hybrid)
        for b in plan.blocks:
            b.distance = 0.0
        return DistanceResult(0.0, 0.0, plan, False, False)
    exhaustive = spec.n <= 10 and enumeration_count(spec) <= N_CANDIDATES_MAX
    cands = (
        passivizing_candidates(spec)
        if exhaustive
        else cycle_division(canonical_passivizing_permutation(spec), spec)
    )
    warnings = [] if exhaustive else ["searched only the cycle-division closure of the canonical permutation"]
    plans = []
    last_err: Exception | None = None
    seen = set()
    for s in cands:
        try:
            plan = decompose_invariant_subspaces(s, spec, None, allow_hybrid)
        except NestingViolation as exc:
            last_err = exc
            continue
        key = tuple((b.indices, b.sigma.images) for b in plan.blocks)
        if key in seen:
            continue
        seen.add(key)
        try:
            d = plan.distance()
        except UnclassifiedBlock as exc:
            last_err = exc
            continue
        plans.append((d, plan))
    if not plans:
        raise last_err if last_err is not None else NestingViolation("no valid decomposition")
    plans.sort(key=lambda t: (t[0], t[1].sigma.images))
    d, plan = plans[0]
    if plans[-1][0] - d > 1e-8 * max(1.0, d):
        warnings.append(
            f"decomposition distances range from {d:.10g} to {plans[-1][0]:.10g} across permutations"
        )
    numerical = any(p.numerical for _, p in plans)
    experimental = any(p.experimental for _, p in plans)
    return DistanceResult(d, d / spec.omega, plan, numerical, experimental, warnings)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class BoundReport:
    """Speed-limit summary of a spec.

    Invariant: ``tau_qsl <= tau_exact <= tau_upper`` whenever ``tau_exact`` is set.
    """

    tau_qsl: float
    tau_upper: float
    upper_permutation: Permutation
    tau_exact: float | None = None
    exact_method: str | None = None
    delta: int = 0
    omega: float = 1.0
    numerical: bool = False
    experimental: bool = False
    warnings: list[str] = field(default_factory=list)
    plan: DecompositionPlan | None = None

    def check(self, tol: float = 1e-9) -> bool:
        if self.tau_exact is None:
            return self.tau_qsl <= self.tau_upper + tol
        return self.tau_qsl - tol <= self.tau_exact <= self.tau_upper + tol


def bound_report(
    spec: SystemSpec,
    use_oracle: bool = False,
    oracle_restarts: int = 8,
    seed=0,
    allow_hybrid: bool = False,
) -> BoundReport:
    """Collect the QSL, the best cycle-length bound and the exact time if known."""
    tq = tau_qsl(spec)
    delta = discrepancy(spec)
    tu, usig, exhaustive = upper_bound_search(spec)
    rep = BoundReport(tq, tu, usig, delta=delta, omega=spec.omega)
    if not exhaustive:
        rep.warnings.append("upper bound searched over the cycle-division closure only")
    if delta == 0:
        rep.tau_exact, rep.exact_method = 0.0, INVOLUTION
    elif is_strict(spec):
        rep.tau_exact, rep.exact_method = tau_pas_nondegenerate(spec), NONDEGENERATE
    elif find_passivizing_involution(spec) is not None:
        rep.tau_exact, rep.exact_method = tq, INVOLUTION
    else:
        try:
            res = distance_to_passivizing_set(spec, allow_hybrid=allow_hybrid)
        except (NestingViolation, UnclassifiedBlock, NoConvergence) as exc:
            rep.warnings.append(f"decomposition unavailable: {exc}")
        else:
            rep.tau_exact, rep.exact_method = res.tau, DECOMPOSITION
            rep.numerical = res.numerical
            rep.experimental = res.experimental
            rep.plan = res.plan
            rep.warnings.extend(res.warnings)
        if rep.tau_exact is None and use_oracle:
            from .oracle import ORACLE_N_MAX, numeric_min_distance

            if spec.n <= ORACLE_N_MAX:
                res = numeric_min_distance(spec, oracle_restarts, seed)
                rep.tau_exact, rep.exact_method = res.best_distance / spec.omega, ORACLE
                rep.numerical = True
    if rep.tau_exact is not None and rep.exact_method != ORACLE:
        # the sandwich must hold; a violation means a hypothesis failed silently
        if not rep.check(1e-8):
            rep.warnings.append("exact time violates the qsl/upper sandwich")
    return rep
