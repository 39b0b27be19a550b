"""Problem instances and permutation machinery.

Indices are 0-based throughout the API.  Cycle notation produced for humans
(``CycleDecomposition.notation``) is 1-based, and ``Permutation.from_cycles``
accepts either base.

Convention: ``sigma(k) = images[k]``, ``P_sigma = sum_k |k><sigma(k)|`` and
``P_sigma diag(p) P_sigma^dagger = diag(p[images])``.  A cycle ``(k1 k2 ...)``
means ``k1 -> k2 -> ...``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionTooLargeForEnumeration,
    InvalidPermutation,
    NotAnInvolution,
    NotAProbabilityVector,
    NotBivalent,
    NotPassivizing,
    SpectrumMismatch,
    UnsortedObservable,
    ValidationError,
)
from .operators import TOL_NUM, TOL_TRACE, as_hermitian, commutator

N_ENUM_MAX = 10


def tol_deg(values) -> float:
    values = np.asarray(values, dtype=float)
    rng = float(values.max() - values.min()) if values.size else 0.0
    return 1e-9 * max(1.0, rng)


def degeneracy_labels(values, tol: float | None = None) -> np.ndarray:
    """Label indices so that equal values (within ``tol``) share a label.

    Labels are assigned in increasing order of value: label 0 is the smallest.
    """
    values = np.asarray(values, dtype=float)
    if tol is None:
        tol = tol_deg(values)
    order = np.argsort(values, kind="stable")
    labels = np.empty(len(values), dtype=int)
    cur = 0
    for pos, idx in enumerate(order):
        if pos > 0 and values[idx] - values[order[pos - 1]] > tol:
            cur += 1
        labels[idx] = cur
    return labels


def groups_from_labels(labels: np.ndarray) -> list[list[int]]:
    out: dict[int, list[int]] = {}
    for k, g in enumerate(labels):
        out.setdefault(int(g), []).append(k)
    return [out[g] for g in sorted(out)]


@dataclass(frozen=True)
class SystemSpec:
    """Spectra of the observable ``A`` and the incoherent state, plus the budget.

    ``a`` is nondecreasing, ``p`` a probability vector in the same eigenbasis and
    ``omega`` the square root of the bandwidth budget.
    """

    a: np.ndarray
    p: np.ndarray
    omega: float = 1.0
    a_labels: np.ndarray = field(init=False, repr=False, compare=False)
    p_labels: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).ravel()
        p = np.asarray(self.p, dtype=float).ravel()
        if a.size == 0:
            raise ValidationError("spectra must be non-empty")
        if a.shape != p.shape:
            raise ValidationError(f"a has {a.size} entries but p has {p.size}")
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(p)):
            raise ValidationError("spectra must be finite")
        if np.any(np.diff(a) < -tol_deg(a)):
            raise UnsortedObservable("eigenvalues of A must be nondecreasing")
        if np.any(p < -TOL_TRACE) or abs(p.sum() - 1.0) > TOL_TRACE:
            raise NotAProbabilityVector("p must be nonnegative and sum to 1")
        omega = float(self.omega)
        if not omega > 0:
            raise ValidationError("omega must be positive")
        p = np.clip(p, 0.0, None)
        a.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "omega", omega)
        al = degeneracy_labels(a)
        pl = degeneracy_labels(p)
        al.setflags(write=False)
        pl.setflags(write=False)
        object.__setattr__(self, "a_labels", al)
        object.__setattr__(self, "p_labels", pl)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def a_groups(self) -> list[list[int]]:
        return groups_from_labels(self.a_labels)

    @property
    def p_groups(self) -> list[list[int]]:
        return groups_from_labels(self.p_labels)

    @property
    def A(self) -> np.ndarray:
        return np.diag(self.a).astype(complex)

    @property
    def rho(self) -> np.ndarray:
        return np.diag(self.p).astype(complex)

    def with_omega(self, omega: float) -> "SystemSpec":
        return SystemSpec(self.a, self.p, omega)

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "p": self.p.tolist(), "omega": self.omega}

    def __hash__(self):
        return hash((self.a.tobytes(), self.p.tobytes(), self.omega))

    def __eq__(self, other):
        if not isinstance(other, SystemSpec):
            return NotImplemented
        return (
            np.array_equal(self.a, other.a)
            and np.array_equal(self.p, other.p)
            and self.omega == other.omega
        )


def validate_spec(a, p=None, omega: float | None = None) -> SystemSpec:
    """Build a checked :class:`SystemSpec` from lists or a ``{"a", "p", "omega"}`` dict."""
    if isinstance(a, SystemSpec):
        return a
    if isinstance(a, dict):
        d = a
        try:
            a, p = d["a"], d["p"]
        except KeyError as exc:
            raise ValidationError(f"spec is missing field {exc.args[0]!r}") from None
        omega = d.get("omega", 1.0) if omega is None else omega
    if p is None:
        raise ValidationError("p is required")
    return SystemSpec(a, p, 1.0 if omega is None else omega)


def sorted_system(a_diag, p_diag, omega: float = 1.0) -> tuple[SystemSpec, np.ndarray]:
    """Reorder an arbitrary diagonal pair so that ``a`` is nondecreasing.

    Returns the spec and the ordering ``order`` with ``spec.a = a_diag[order]``.
    """
    a_diag = np.asarray(a_diag, dtype=float)
    order = np.argsort(a_diag, kind="stable")
    return SystemSpec(a_diag[order], np.asarray(p_diag, dtype=float)[order], omega), order


# ---------------------------------------------------------------------------
# permutations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Permutation:
    """Bijection of ``{0, ..., n-1}`` with ``sigma(k) = images[k]``."""

    images: tuple[int, ...]

    def __post_init__(self):
        imgs = tuple(int(i) for i in self.images)
        if sorted(imgs) != list(range(len(imgs))):
            raise InvalidPermutation(f"{list(imgs)} is not a permutation of 0..{len(imgs) - 1}")
        object.__setattr__(self, "images", imgs)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], n: int, base: int = 0) -> "Permutation":
        """Build from cycle notation; ``base=1`` for 1-based indices."""
        images = list(range(n))
        seen: set[int] = set()
        for cyc in cycles:
            cyc = [int(c) - base for c in cyc]
            for c in cyc:
                if not 0 <= c < n or c in seen:
                    raise InvalidPermutation(f"bad or repeated index {c + base} in cycles")
                seen.add(c)
            for i, c in enumerate(cyc):
                images[c] = cyc[(i + 1) % len(cyc)]
        return cls(tuple(images))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, k: int) -> int:
        return self.images[k]

    def __len__(self) -> int:
        return len(self.images)

    def __lt__(self, other: "Permutation") -> bool:
        return self.images < other.images

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for k, s in enumerate(self.images):
            inv[s] = k
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """``(self o other)(k) = self(other(k))``."""
        return Permutation(tuple(self.images[other.images[k]] for k in range(self.n)))

    def restricted(self, support: Sequence[int]) -> "Permutation":
        """Restriction to an invariant index set, relabelled ``0..len(support)-1``."""
        pos = {k: i for i, k in enumerate(support)}
        try:
            return Permutation(tuple(pos[self.images[k]] for k in support))
        except KeyError:
            raise InvalidPermutation("support is not invariant under the permutation") from None

    def cycles(self) -> "CycleDecomposition":
        return cycle_decomposition(self)

    def matrix(self) -> np.ndarray:
        return permutation_operator(self)

    def __str__(self) -> str:
        return self.cycles().notation()


@dataclass(frozen=True)
class CycleDecomposition:
    """Canonical disjoint cycles (0-based), trivial cycles included."""

    cycles: tuple[tuple[int, ...], ...]

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.cycles)

    @property
    def n(self) -> int:
        return sum(self.lengths)

    def notation(self, base: int = 1) -> str:
        return "".join("(" + " ".join(str(k + base) for k in c) + ")" for c in self.cycles)

    def permutation(self) -> Permutation:
        return Permutation.from_cycles(self.cycles, self.n)


def cycle_decomposition(sigma: Permutation) -> CycleDecomposition:
    """Disjoint cycles, each starting at its smallest element, sorted by it."""
    seen = [False] * sigma.n
    cycles = []
    for start in range(sigma.n):
        if seen[start]:
            continue
        cyc = []
        k = start
        while not seen[k]:
            seen[k] = True
            cyc.append(k)
            k = sigma.images[k]
        cycles.append(tuple(cyc))
    return CycleDecomposition(tuple(cycles))


def is_involution(sigma: Permutation) -> bool:
    return all(sigma.images[s] == k for k, s in enumerate(sigma.images))


def permutation_operator(sigma: Permutation) -> np.ndarray:
    """``P_sigma = sum_k |k><sigma(k)|``."""
    n = sigma.n
    P = np.zeros((n, n), dtype=complex)
    P[np.arange(n), np.asarray(sigma.images)] = 1.0
    return P


def permuted_spectrum(spec: SystemSpec, sigma: Permutation) -> np.ndarray:
    """Diagonal of ``P_sigma diag(p) P_sigma^dagger``."""
    return spec.p[np.asarray(sigma.images)]


# ---------------------------------------------------------------------------
# passivity
# ---------------------------------------------------------------------------


def expectation(spec: SystemSpec, sigma: Permutation | None = None) -> float:
    """``sum_k a_k p_sigma(k)`` (the plain expectation when ``sigma`` is None)."""
    q = spec.p if sigma is None else permuted_spectrum(spec, sigma)
    return float(np.dot(spec.a, q))


def min_expectation(spec: SystemSpec) -> float:
    """Energy of a passive state: largest populations on the lowest levels."""
    return float(np.dot(spec.a, np.sort(spec.p)[::-1]))


def _target_quota(spec: SystemSpec) -> list[Counter]:
    """For each a-group, the multiset of p-labels a passive state puts there."""
    order = np.argsort(-spec.p, kind="stable")
    q_labels = spec.p_labels[order]
    quota = []
    pos = 0
    for g in spec.a_groups:
        quota.append(Counter(int(x) for x in q_labels[pos : pos + len(g)]))
        pos += len(g)
    return quota


def is_passive_diagonal(spec: SystemSpec, q) -> bool:
    """Whether ``diag(q)`` (a rearrangement of ``p``) is passive for ``diag(a)``."""
    return abs(float(np.dot(spec.a, q)) - min_expectation(spec)) <= TOL_NUM * max(
        1.0, float(np.max(np.abs(spec.a)))
    )


def is_passivizing(sigma: Permutation, spec: SystemSpec) -> bool:
    if sigma.n != spec.n:
        return False
    return is_passive_diagonal(spec, permuted_spectrum(spec, sigma))


def is_passive(rho, spec: SystemSpec, tol: float = TOL_NUM) -> bool:
    """Passivity of ``rho`` for ``diag(a)``: incoherent and of minimal energy."""
    rho = as_hermitian(rho)
    if rho.shape != (spec.n, spec.n):
        raise SpectrumMismatch(f"state is {rho.shape}, spec has dimension {spec.n}")
    ev = np.sort(np.linalg.eigvalsh(rho))
    if np.max(np.abs(ev - np.sort(spec.p))) > tol:
        raise SpectrumMismatch("state is not isospectral to diag(p)")
    A = spec.A
    scale = max(1.0, float(np.max(np.abs(spec.a))))
    if np.max(np.abs(commutator(rho, A))) > tol * scale:
        return False
    energy = float(np.real(np.trace(rho @ A)))
    return abs(energy - min_expectation(spec)) <= tol * scale


def canonical_passivizing_permutation(spec: SystemSpec) -> Permutation:
    """Sort ``p`` descending (stable) and assign it against ascending ``a``."""
    order = np.argsort(-spec.p, kind="stable")
    return Permutation(tuple(int(i) for i in order))


def _check_enum_size(spec: SystemSpec):
    if spec.n > N_ENUM_MAX:
        raise DimensionTooLargeForEnumeration(
            f"n = {spec.n} exceeds the enumeration limit {N_ENUM_MAX}"
        )


def enumerate_passivizing_permutations(spec: SystemSpec) -> list[Permutation]:
    """All passivizing permutations, sorted by images.

    A permutation is passivizing iff each a-eigenspace receives the same
    multiset of p-values as under the canonical assignment; the search fills
    positions in order and only draws indices whose p-label still has quota.
    """
    _check_enum_size(spec)
    n = spec.n
    a_lab = spec.a_labels
    p_lab = spec.p_labels
    quota = [dict(q) for q in _target_quota(spec)]
    images = [0] * n
    used = [False] * n
    out: list[Permutation] = []

    def rec(k: int):
        if k == n:
            out.append(Permutation(tuple(images)))
            return
        q = quota[a_lab[k]]
        for j in range(n):
            if used[j]:
                continue
            lj = p_lab[j]
            if q.get(lj, 0) <= 0:
                continue
            used[j] = True
            q[lj] -= 1
            images[k] = j
            rec(k + 1)
            q[lj] += 1
            used[j] = False

    rec(0)
    out.sort()
    return out


def brute_force_passivizing_permutations(spec: SystemSpec) -> list[Permutation]:
    """Plain ``n!`` scan; reference implementation for tests."""
    _check_enum_size(spec)
    target = min_expectation(spec)
    tol = TOL_NUM * max(1.0, float(np.max(np.abs(spec.a))))
    res = []
    for perm in itertools.permutations(range(spec.n)):
        if abs(float(np.dot(spec.a, spec.p[list(perm)])) - target) <= tol:
            res.append(Permutation(perm))
    return sorted(res)


def discrepancy(spec: SystemSpec) -> int:
    """Count of per-eigenspace p-values not shared with a passive state."""
    delta = 0
    for g, quota in zip(spec.a_groups, _target_quota(spec)):
        have = Counter(int(spec.p_labels[k]) for k in g)
        shared = sum(min(have[lab], quota[lab]) for lab in have)
        delta += len(g) - shared
    return delta


def is_spec_passive(spec: SystemSpec) -> bool:
    return discrepancy(spec) == 0


# ---------------------------------------------------------------------------
# involutions
# ---------------------------------------------------------------------------


def transpositions(sigma: Permutation) -> list[tuple[int, int]]:
    return [(k, s) for k, s in enumerate(sigma.images) if k < s]


def reduce_and_order_involution(sigma: Permutation, spec: SystemSpec) -> list[tuple[int, int]]:
    """Drop transpositions that do nothing and order the rest.

    Transpositions inside an a-eigenspace or a p-eigenspace are removed; the
    remaining pairs ``(k1, k2)``, ``k1 < k2``, come with ``p_k1 < p_k2`` first.
    Applied in order, each one lowers (never raises) the expectation value.
    """
    if not is_involution(sigma):
        raise NotAnInvolution(f"{sigma} is not an involution")
    if not is_passivizing(sigma, spec):
        raise NotPassivizing(f"{sigma} is not passivizing")
    keep = [
        (k1, k2)
        for k1, k2 in transpositions(sigma)
        if spec.a_labels[k1] != spec.a_labels[k2] and spec.p_labels[k1] != spec.p_labels[k2]
    ]
    up = [t for t in keep if spec.p[t[0]] < spec.p[t[1]]]
    down = [t for t in keep if spec.p[t[0]] > spec.p[t[1]]]
    return up + down


def involution_from_transpositions(pairs: Iterable[tuple[int, int]], n: int) -> Permutation:
    images = list(range(n))
    for k1, k2 in pairs:
        images[k1], images[k2] = k2, k1
    return Permutation(tuple(images))


def bivalent_involution(spec: SystemSpec) -> Permutation:
    """Pair the misplaced populations of a two-level observable.

    Low-eigenspace entries that do not belong to a passive state's low
    component are swapped one-for-one with high-eigenspace entries that do
    not belong to its high component.
    """
    groups = spec.a_groups
    if len(groups) != 2:
        raise NotBivalent(f"A has {len(groups)} distinct eigenvalues, expected 2")
    quotas = _target_quota(spec)
    errant = []
    for side, (g, quota) in enumerate(zip(groups, quotas)):
        left = dict(quota)
        bad = []
        sign = -1.0 if side == 0 else 1.0
        order = sorted(g, key=lambda k: sign * spec.p[k])
        for k in order:
            lab = int(spec.p_labels[k])
            if left.get(lab, 0) > 0:
                left[lab] -= 1
            else:
                bad.append(k)
        errant.append(sorted(bad))
    lo, hi = errant
    if len(lo) != len(hi):
        raise NotPassivizing("errant counts differ; degeneracy detection is inconsistent")
    sigma = involution_from_transpositions(zip(lo, hi), spec.n)
    if not is_passivizing(sigma, spec):
        raise NotPassivizing("constructed bivalent involution is not passivizing")
    return sigma


def find_passivizing_involution(spec: SystemSpec) -> Permutation | None:
    """Some passivizing involution, or None if none exists.

    Backtracking over positions; candidates equivalent under the
    (a-label, p-label) classes are tried once.  Only involutions with at most
    ``delta / 2`` effective transpositions (ones that swap both a-labels and
    p-labels) are accepted: with tied populations a chain of swaps can also
    passivize, but it does not reach the speed limit.
    """
    n = spec.n
    a_lab = spec.a_labels
    p_lab = spec.p_labels
    quota = [dict(q) for q in _target_quota(spec)]
    images = [-1] * n
    budget = discrepancy(spec) // 2
    used = [0]

    def take(k, j):
        quota[a_lab[k]][p_lab[j]] = quota[a_lab[k]].get(p_lab[j], 0) - 1

    def give(k, j):
        quota[a_lab[k]][p_lab[j]] += 1

    def ok(k, j):
        return quota[a_lab[k]].get(p_lab[j], 0) > 0

    def rec(k):
        while k < n and images[k] >= 0:
            k += 1
        if k == n:
            return True
        tried = set()
        for j in range(k, n):
            if images[j] >= 0:
                continue
            cls = (a_lab[j], p_lab[j], j == k)
            if cls in tried:
                continue
            tried.add(cls)
            if not ok(k, j):
                continue
            eff = int(j != k and a_lab[j] != a_lab[k] and p_lab[j] != p_lab[k])
            if used[0] + eff > budget:
                continue
            take(k, j)
            if j != k:
                if not ok(j, k):
                    give(k, j)
                    continue
                take(j, k)
            images[k], images[j] = j, k
            used[0] += eff
            if rec(k + 1):
                return True
            used[0] -= eff
            images[k] = images[j] = -1
            give(k, j)
            if j != k:
                give(j, k)
        return False

    if not rec(0):
        return None
    sigma = Permutation(tuple(images))
    assert is_passivizing(sigma, spec)
    return sigma


# ---------------------------------------------------------------------------
# cycle division
# ---------------------------------------------------------------------------


def cycle_cost(sigma: Permutation) -> float:
    """``n - sum_j 1/l_j`` over the cycles of ``sigma``."""
    return sigma.n - sum(1.0 / l for l in cycle_decomposition(sigma).lengths)


def _splits(sigma: Permutation, spec: SystemSpec) -> Iterable[Permutation]:
    for cyc in cycle_decomposition(sigma).cycles:
        l = len(cyc)
        for i in range(l):
            for j in range(i + 1, l):
                ki, kj = cyc[i], cyc[j]
                si, sj = sigma.images[ki], sigma.images[kj]
                # splitting swaps the images of k_i and k_j
                if spec.a_labels[ki] == spec.a_labels[kj] or spec.p_labels[si] == spec.p_labels[sj]:
                    images = list(sigma.images)
                    images[ki], images[kj] = sj, si
                    yield Permutation(tuple(images))


def cycle_division(sigma: Permutation, spec: SystemSpec) -> list[Permutation]:
    """Closure of ``{sigma}`` under passivity-preserving cycle splits.

    Splitting ``(k1 .. ki .. kj .. kl)`` into ``(k1 .. ki k_{j+1} .. kl)`` and
    ``(k_{i+1} .. kj)`` exchanges the images of ``ki`` and ``kj``; it keeps the
    permutation passivizing exactly when ``a_ki = a_kj`` or the two images
    carry equal populations.
    """
    if not is_passivizing(sigma, spec):
        raise NotPassivizing(f"{sigma} is not passivizing")
    seen = {sigma}
    queue = deque([sigma])
    while queue:
        s = queue.popleft()
        for t in _splits(s, spec):
            if t not in seen:
                if not is_passivizing(t, spec):
                    raise NotPassivizing(f"cycle division produced non-passivizing {t}")
                seen.add(t)
                queue.append(t)
    return sorted(seen)


def passivizing_candidates(spec: SystemSpec) -> list[Permutation]:
    """Enumerated set for small ``n``, else the cycle-division closure of the canonical one."""
    if spec.n <= N_ENUM_MAX:
        return enumerate_passivizing_permutations(spec)
    return cycle_division(canonical_passivizing_permutation(spec), spec)


def enumeration_count(spec: SystemSpec) -> int:
    """Size of the passivizing set without listing it.

    Each p-class is split among the a-groups by a multinomial, then each
    a-group orders its received indices freely.
    """
    quotas = _target_quota(spec)
    total = 1
    for g in spec.a_groups:
        total *= math.factorial(len(g))
    for c in Counter(int(x) for x in spec.p_labels).values():
        total *= math.factorial(c)
    for quota in quotas:
        for c in quota.values():
            total //= math.factorial(c)
    return total
