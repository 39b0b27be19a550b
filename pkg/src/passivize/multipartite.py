"""Collective passivization of ``N`` copies and catalyst-assisted passivization."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .bounds import bound_report, tau_qsl
from .errors import BandwidthMismatch, NotAnInvolution, TooLarge, ValidationError
from .operators import TOL_NUM, as_hermitian, bandwidth
from .system import (
    Permutation,
    SystemSpec,
    _target_quota,
    canonical_passivizing_permutation,
    discrepancy,
    find_passivizing_involution,
    permuted_spectrum,
    sorted_system,
)

TOL_PROD = 1e-12
COUNT_MAX = 10**7
HAMILTONIAN_DIM_MAX = 4096

QUBIT_PURE = "qubit_pure"
QUBIT_MIXED = "qubit_mixed"
QUTRIT_RANK2 = "qutrit_rank2"
QUTRIT_FULL = "qutrit_full"
CLOSED_KINDS = (QUBIT_PURE, QUBIT_MIXED, QUTRIT_RANK2, QUTRIT_FULL)


@dataclass(frozen=True)
class CollectiveSpec:
    base: SystemSpec
    N: int
    n_c: int | None = None

    def __post_init__(self):
        if int(self.N) < 1:
            raise ValidationError("N must be a positive integer")
        if self.n_c is not None and int(self.n_c) < 1:
            raise ValidationError("n_c must be a positive integer")
        if len(set(self.base.a_labels.tolist())) != self.base.n:
            raise ValidationError("collective passivization needs a non-degenerate observable")

    @property
    def n(self) -> int:
        return self.base.n


def _log_products(p: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``log prod p_k^c_k`` per row of ``counts`` and a mask of zero products."""
    zero = p <= 0
    logp = np.where(zero, 0.0, np.log(np.where(zero, 1.0, p)))
    is_zero = (counts[:, zero] > 0).any(axis=1) if zero.any() else np.zeros(len(counts), bool)
    return counts @ logp, is_zero


def _products_differ(p: np.ndarray, q: np.ndarray, counts: np.ndarray) -> np.ndarray:
    l1, z1 = _log_products(p, counts)
    l2, z2 = _log_products(q, counts)
    tol = TOL_PROD * np.maximum(1.0, np.maximum(np.abs(l1), np.abs(l2)))
    close = np.abs(l1 - l2) <= tol
    return np.where(z1 | z2, z1 != z2, ~close)


def _compositions(n: int, N: int):
    """All count vectors of length ``n`` summing to ``N``."""
    for bars in itertools.combinations(range(N + n - 1), n - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(N + n - 1 - prev - 1)
        yield out


def _multinomial(N: int, counts) -> int:
    r = math.factorial(N)
    for c in counts:
        r //= math.factorial(c)
    return r


def delta_N(cspec: CollectiveSpec) -> int:
    """Number of index sequences whose product of populations changes under ``sigma``.

    The product only depends on how often each index occurs, so sequences are
    counted per occurrence vector with a multinomial weight.
    """
    n, N = cspec.n, int(cspec.N)
    if math.comb(N + n - 1, n - 1) > COUNT_MAX:
        raise TooLarge(f"too many occurrence patterns for n={n}, N={N}; use delta_N_closed")
    p = cspec.base.p
    q = permuted_spectrum(cspec.base, canonical_passivizing_permutation(cspec.base))
    comps = np.array(list(_compositions(n, N)), dtype=float)
    differ = _products_differ(p, q, comps)
    return int(sum(_multinomial(N, c.astype(int)) for c, d in zip(comps, differ) if d))


def delta_N_bruteforce(cspec: CollectiveSpec) -> int:
    """Sequence-by-sequence count; limited to ``n**N <= 10**7``."""
    n, N = cspec.n, int(cspec.N)
    if n**N > COUNT_MAX:
        raise TooLarge(f"n**N = {n**N} sequences exceeds {COUNT_MAX}; use delta_N_closed")
    p = cspec.base.p
    q = permuted_spectrum(cspec.base, canonical_passivizing_permutation(cspec.base))
    zero_p, zero_q = p <= 0, q <= 0
    lp = np.where(zero_p, 0.0, np.log(np.where(zero_p, 1.0, p)))
    lq = np.where(zero_q, 0.0, np.log(np.where(zero_q, 1.0, q)))
    # accumulate over copies by broadcasting
    L1 = np.zeros(1)
    L2 = np.zeros(1)
    Z1 = np.zeros(1, bool)
    Z2 = np.zeros(1, bool)
    for _ in range(N):
        L1 = (L1[:, None] + lp[None, :]).ravel()
        L2 = (L2[:, None] + lq[None, :]).ravel()
        Z1 = (Z1[:, None] | zero_p[None, :]).ravel()
        Z2 = (Z2[:, None] | zero_q[None, :]).ravel()
    tol = TOL_PROD * np.maximum(1.0, np.maximum(np.abs(L1), np.abs(L2)))
    differ = np.where(Z1 | Z2, Z1 != Z2, np.abs(L1 - L2) > tol)
    return int(differ.sum())


def delta_N_closed(kind: str, N: int) -> int:
    """Closed forms of the collective discrepancy for maximally active states."""
    N = int(N)
    if N < 1:
        raise ValidationError("N must be >= 1")
    if kind == QUBIT_PURE:
        return 2
    if kind == QUBIT_MIXED:
        return 2**N - (math.comb(N, N // 2) if N % 2 == 0 else 0)
    if kind == QUTRIT_RANK2:
        return 2 * (2**N - 1)
    if kind == QUTRIT_FULL:
        tri = sum(math.factorial(N) // (math.factorial(k) ** 2 * math.factorial(N - 2 * k)) for k in range(N // 2 + 1))
        return 3**N - tri
    raise ValidationError(f"unknown closed-form kind {kind!r}; expected one of {CLOSED_KINDS}")


def _cqsl(delta: int, N: int, n: int, omega: float) -> float:
    return math.pi / (2 * omega) * math.sqrt(delta / (N * n ** (N - 1)))


def tau_cqsl(cspec: CollectiveSpec, delta: int | None = None) -> float:
    """Collective QSL ``(pi/2 omega) sqrt(delta_N / (N n^(N-1)))``."""
    if delta is None:
        delta = delta_N(cspec)
    return _cqsl(delta, int(cspec.N), cspec.n, cspec.base.omega)


def _passivizing_involution(spec: SystemSpec) -> Permutation:
    sigma = find_passivizing_involution(spec)
    if sigma is None:
        raise NotAnInvolution("no passivizing involution; collective time is only bounded")
    return sigma


def advantage_ratio(cspec: CollectiveSpec) -> float:
    """``tau_pas / tau_cpas`` when the passivizing permutation is an involution."""
    _passivizing_involution(cspec.base)
    d1 = discrepancy(cspec.base)
    if d1 == 0:
        return 1.0
    n, N = cspec.n, int(cspec.N)
    return math.sqrt(d1 * N * n ** (N - 1) / delta_N(cspec))


def advantage_closed(kind: str, N: int) -> float:
    """Advantage ratio from the closed-form ``delta_N`` of a maximally active state."""
    n = 2 if kind.startswith("qubit") else 3
    return math.sqrt(2 * N * n ** (N - 1) / delta_N_closed(kind, N))


def figure_series(which: str, max_n: int) -> list[tuple[int, float]]:
    """``(N, ratio)`` rows for mixed qubits (``"qubit"``) or full-rank qutrits (``"qutrit"``)."""
    kind = {"qubit": QUBIT_MIXED, "qutrit": QUTRIT_FULL}.get(which)
    if kind is None:
        raise ValidationError("which must be 'qubit' or 'qutrit'")
    return [(N, advantage_closed(kind, N)) for N in range(1, int(max_n) + 1)]


def product_spectrum(p: np.ndarray, N: int) -> np.ndarray:
    return reduce(np.kron, [np.asarray(p, dtype=float)] * N)


def collective_hamiltonian(cspec: CollectiveSpec, sigma: Permutation | None = None) -> tuple[np.ndarray, float]:
    """Collective generator and the time ``tau_cqsl`` at which it reaches ``rho_p^N``.

    Couples each differing sequence ``K`` to ``sigma(K)`` (pairs counted once,
    with the adjoint), scaled to bandwidth ``omega^2 N n^(N-1)``.
    """
    spec = cspec.base
    n, N = spec.n, int(cspec.N)
    if sigma is None:
        sigma = _passivizing_involution(spec)
    elif any(sigma.images[s] != k for k, s in enumerate(sigma.images)):
        raise NotAnInvolution(f"{sigma} is not an involution")
    dim = n**N
    if dim > HAMILTONIAN_DIM_MAX:
        raise TooLarge(f"collective space of dimension {dim} exceeds {HAMILTONIAN_DIM_MAX}")
    p = spec.p
    q = permuted_spectrum(spec, sigma)
    P1 = product_spectrum(p, N)
    P2 = product_spectrum(q, N)
    idx = np.arange(dim)
    digits = np.array(np.unravel_index(idx, (n,) * N))  # shape (N, dim)
    mapped = np.ravel_multi_index(tuple(np.asarray(sigma.images)[digits]), (n,) * N)
    differ = ~np.isclose(P1, P2, rtol=TOL_PROD, atol=0.0)
    X = np.zeros((dim, dim), dtype=complex)
    for K in idx[differ]:
        L = mapped[K]
        if K < L:
            X[K, L] = X[L, K] = 1.0
    delta = int(differ.sum())
    if delta == 0:
        from .errors import AlreadyPassive

        raise AlreadyPassive("the copies are already in the target state")
    tau = _cqsl(delta, N, n, spec.omega)
    H = (math.pi / (2 * tau)) * X
    budget = spec.omega**2 * N * n ** (N - 1)
    if abs(bandwidth(H) - budget) > TOL_NUM * budget:
        raise BandwidthMismatch("collective Hamiltonian does not saturate its budget")
    return H, tau


def global_spec(cspec: CollectiveSpec, observable: str = "sum") -> SystemSpec:
    """``rho_i^N`` against ``N.A`` (``"sum"``) or ``A^N`` (``"product"``).

    The bandwidth budget is the collective one, ``omega^2 N n^(N-1)``.
    """
    spec = cspec.base
    n, N = spec.n, int(cspec.N)
    if n**N > HAMILTONIAN_DIM_MAX:
        raise TooLarge(f"global space of dimension {n**N} exceeds {HAMILTONIAN_DIM_MAX}")
    if observable == "sum":
        A = reduce(lambda x, y: (x[:, None] + y[None, :]).ravel(), [spec.a] * N)
    elif observable == "product":
        A = product_spectrum(spec.a, N)
    else:
        raise ValidationError("observable must be 'sum' or 'product'")
    omega = spec.omega * math.sqrt(N * n ** (N - 1))
    return sorted_system(A, product_spectrum(spec.p, N), omega)[0]


def global_passivization_time(cspec: CollectiveSpec, observable: str = "sum") -> float | None:
    """Exact time to a globally passive state, or ``None`` when not known in closed form."""
    return bound_report(global_spec(cspec, observable)).tau_exact


# ---------------------------------------------------------------------------
# assisted passivization
# ---------------------------------------------------------------------------


def tau_aqsl(spec: SystemSpec, n_c: int) -> float:
    return math.pi / (2 * spec.omega) * math.sqrt(discrepancy(spec) / n_c)


def assisted_bounds(spec: SystemSpec, n_c: int, tau_pas: float | None = None) -> tuple[float, float]:
    """``(tau_aqsl, tau_pas / sqrt(n_c))``; ``tau_pas`` defaults to the best known time."""
    if int(n_c) < 1:
        raise ValidationError("n_c must be >= 1")
    if tau_pas is None:
        rep = bound_report(spec)
        tau_pas = rep.tau_exact if rep.tau_exact is not None else rep.tau_upper
    return tau_aqsl(spec, n_c), tau_pas / math.sqrt(n_c)


def assisted_hamiltonian(H_s, n_c: int, psi_index: int = 0, omega: float | None = None, psi=None) -> np.ndarray:
    """``sqrt(n_c) H_s (x) |psi><psi|`` on system (x) catalyst.

    ``psi`` defaults to the catalyst basis vector ``psi_index``.  With ``omega``
    given, ``H_s`` must have bandwidth ``omega**2``.
    """
    H_s = as_hermitian(H_s)
    n_c = int(n_c)
    if n_c < 1:
        raise ValidationError("n_c must be >= 1")
    if omega is not None and abs(bandwidth(H_s) - omega**2) > TOL_NUM * omega**2:
        raise BandwidthMismatch(f"tr H_s^2 = {bandwidth(H_s)!r}, expected {omega**2!r}")
    if psi is None:
        if not 0 <= psi_index < n_c:
            raise ValidationError("psi_index out of range")
        psi = np.zeros(n_c, dtype=complex)
        psi[psi_index] = 1.0
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return math.sqrt(n_c) * np.kron(H_s, np.outer(psi, psi.conj()))


def catalyst_discrepancy(spec: SystemSpec, q) -> int:
    """Discrepancy between the components of ``rho_i (x) rho_c`` and ``rho_p (x) rho_c``."""
    q = np.asarray(q, dtype=float)
    rho_p = np.sort(spec.p)[::-1]
    total = 0
    pos = 0
    for g in spec.a_groups:
        init = np.sort(np.outer(spec.p[g], q).ravel())
        pas = np.sort(np.outer(rho_p[pos : pos + len(g)], q).ravel())
        pos += len(g)
        total += _multiset_mismatch(init, pas)
    return total


def _multiset_mismatch(x: np.ndarray, y: np.ndarray) -> int:
    """Entries of ``x`` not matched (within tolerance) by entries of ``y``."""
    tol = 1e-12 * max(1.0, float(np.max(np.abs(np.concatenate([x, y])))))
    i = j = shared = 0
    while i < len(x) and j < len(y):
        if abs(x[i] - y[j]) <= tol:
            shared += 1
            i += 1
            j += 1
        elif x[i] < y[j]:
            i += 1
        else:
            j += 1
    return len(x) - shared
