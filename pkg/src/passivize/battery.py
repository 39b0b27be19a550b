"""Quantum-battery quantities: ergotropy, power bounds, discharge schedules, fluctuations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bounds import (
    _is_maximally_active,
    bound_report,
    build_time_optimal_hamiltonian,
    is_strict,
    tau_pas_nondegenerate,
    tau_qsl,
)
from .errors import (
    BandwidthMismatch,
    FormulaMismatch,
    MethodPreconditionFailed,
    NotPassivizing,
    SpectrumMismatch,
    ValidationError,
)
from .multipartite import CollectiveSpec, delta_N, tau_aqsl, tau_cqsl
from .operators import (
    TOL_NUM,
    as_unitary,
    bandwidth,
    conjugate,
    expm_skew,
    propagator,
    random_unitary,
)
from .oracle import CheckReport
from .system import (
    SystemSpec,
    enumerate_passivizing_permutations,
    expectation,
    groups_from_labels,
    is_passive,
    min_expectation,
    passivizing_candidates,
    permutation_operator,
    permuted_spectrum,
)


@dataclass(frozen=True)
class BatterySpec:
    """Internal energies ``eps`` (nondecreasing), populations ``p`` and budget ``omega``."""

    eps: tuple
    p: tuple
    omega: float = 1.0

    def __post_init__(self):
        s = SystemSpec(self.eps, self.p, self.omega)
        object.__setattr__(self, "eps", tuple(s.a.tolist()))
        object.__setattr__(self, "p", tuple(s.p.tolist()))
        object.__setattr__(self, "omega", s.omega)

    @classmethod
    def from_dict(cls, d: dict) -> "BatterySpec":
        try:
            return cls(d["eps"], d["p"], d.get("omega", 1.0))
        except KeyError as exc:
            raise ValidationError(f"battery spec is missing field {exc.args[0]!r}") from None

    @property
    def system(self) -> SystemSpec:
        return SystemSpec(self.eps, self.p, self.omega)

    @property
    def n(self) -> int:
        return len(self.eps)

    @property
    def H(self) -> np.ndarray:
        return np.diag(self.eps).astype(complex)

    def to_dict(self) -> dict:
        return {"eps": list(self.eps), "p": list(self.p), "omega": self.omega}


def _system(bspec) -> SystemSpec:
    return bspec.system if isinstance(bspec, BatterySpec) else bspec


def ergotropy(bspec) -> float:
    """Energy above a passive state: ``E_H(rho_i) - min``."""
    s = _system(bspec)
    return expectation(s) - min_expectation(s)


# ---------------------------------------------------------------------------
# power bounds
# ---------------------------------------------------------------------------


@dataclass
class PowerBound:
    power: float
    tau: float
    tau_kind: str  # exact | qsl | aqsl | cqsl
    ergotropy: float
    weak: bool = False
    extras: dict = field(default_factory=dict)


def power_upper_bound(bspec, scenario: str = "generic", n_c: int | None = None, N: int | None = None) -> PowerBound:
    """Largest average power of a complete discharge, ``W / tau``.

    ``scenario`` selects the time bound: ``generic`` (exact passivization time
    when known, else the QSL, flagged ``weak``), ``maximally_active``,
    ``nondegenerate``, ``assisted`` (needs ``n_c``) or ``collective`` (needs
    ``N``; reports the total power of ``N`` batteries plus the advantage bound).
    """
    s = _system(bspec)
    W = ergotropy(s)
    if scenario == "generic":
        rep = bound_report(s)
        if rep.tau_exact is not None:
            tau, kind, weak = rep.tau_exact, "exact", False
        else:
            tau, kind, weak = rep.tau_qsl, "qsl", True
        extras = {"method": rep.exact_method}
    elif scenario == "maximally_active":
        if not _is_maximally_active(s):
            raise MethodPreconditionFailed("state is not maximally active")
        tau, kind, weak, extras = tau_qsl(s), "exact", False, {}
    elif scenario == "nondegenerate":
        tau, kind, weak, extras = tau_pas_nondegenerate(s), "exact", False, {}
    elif scenario == "assisted":
        if n_c is None:
            raise ValidationError("assisted scenario needs n_c")
        tau, kind, weak, extras = tau_aqsl(s, n_c), "aqsl", False, {"n_c": int(n_c)}
    elif scenario == "collective":
        if N is None:
            raise ValidationError("collective scenario needs N")
        c = CollectiveSpec(s, int(N))
        dN = delta_N(c)
        tc = tau_cqsl(c, dN)
        rep = bound_report(s)
        tp = rep.tau_exact if rep.tau_exact is not None else rep.tau_qsl
        extras = {
            "N": int(N),
            "delta_N": dN,
            "per_copy_power": W / tc if tc > 0 else 0.0,
            "advantage_bound": tp / tc if tc > 0 else 1.0,
        }
        return PowerBound(int(N) * W / tc if tc > 0 else 0.0, tc, "cqsl", W, rep.tau_exact is None, extras)
    else:
        raise ValidationError(f"unknown scenario {scenario!r}")
    power = W / tau if tau > 0 else 0.0
    return PowerBound(power, tau, kind, W, weak, extras)


# ---------------------------------------------------------------------------
# smooth cyclic potentials
# ---------------------------------------------------------------------------


def _smootherstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6 * x - 15) + 10)


def _smootherstep_integral(x):
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (x * (x - 3) + 2.5)


@dataclass
class DischargeSchedule:
    """Potential ``V(t) = u'(t) exp(-itH) V_I exp(itH)`` on ``[0, duration]``.

    ``u'`` rises and falls with quintic smootherstep ramps and integrates to
    ``tau``; in the interaction picture the battery then sees ``u'(t) V_I``.
    """

    duration: float
    ramp: float
    tau: float
    H: np.ndarray
    V_I: np.ndarray
    implemented_unitary: np.ndarray
    _w: float = 0.0
    _peak: float = 1.0

    def du(self, t: float) -> float:
        if t <= 0 or t >= self.duration:
            return 0.0
        w, c, T = self._w, self._peak, self.duration
        if t < w:
            return c * float(_smootherstep(t / w))
        if t > T - w:
            return c * float(_smootherstep((T - t) / w))
        return c

    def u(self, t: float) -> float:
        w, c, T = self._w, self._peak, self.duration
        if t <= 0:
            return 0.0
        if t >= T:
            return self.tau
        if t < w:
            return c * w * float(_smootherstep_integral(t / w))
        if t <= T - w:
            return c * (w / 2 + (t - w))
        return self.tau - c * w * float(_smootherstep_integral((T - t) / w))

    def V(self, t: float) -> np.ndarray:
        du = self.du(t)
        if du == 0.0:
            return np.zeros_like(self.V_I)
        R = expm_skew(self.H, t)
        return du * conjugate(R, self.V_I)

    def V_interaction(self, t: float) -> np.ndarray:
        """``exp(itH) V(t) exp(-itH)``."""
        R = expm_skew(self.H, -t)
        return conjugate(R, self.V(t))

    def generator(self, t: float) -> np.ndarray:
        return self.H + self.V(t)

    def final_state(self, rho0, steps: int | None = None, method: str = "magnus4") -> np.ndarray:
        U = propagator(self.generator, self.duration, steps=steps, method=method)
        rho = conjugate(U, rho0)
        return (rho + rho.conj().T) / 2


def smooth_discharge_schedule(
    bspec,
    eps_ramp: float,
    V_I: np.ndarray | None = None,
    tau: float | None = None,
) -> DischargeSchedule:
    """Cyclic potential completing a discharge in ``tau + eps_ramp``.

    ``V_I`` defaults to a time-optimal Hamiltonian for the battery and ``tau``
    to its passivization time.
    """
    s = _system(bspec)
    if not eps_ramp > 0:
        raise ValidationError("eps_ramp must be positive")
    if V_I is None:
        V_I, t_opt = build_time_optimal_hamiltonian(s)
        tau = t_opt if tau is None else tau
    elif tau is None:
        raise ValidationError("tau is required with an explicit V_I")
    V_I = np.asarray(V_I, dtype=complex)
    if abs(bandwidth(V_I) - s.omega**2) > TOL_NUM * s.omega**2:
        raise BandwidthMismatch(f"tr V_I^2 = {bandwidth(V_I)!r}, expected {s.omega**2!r}")
    T = tau + eps_ramp
    if eps_ramp <= tau:
        w, peak = eps_ramp, 1.0
    else:
        w, peak = T / 2, 2 * tau / T
    H = np.diag(s.a).astype(complex)
    return DischargeSchedule(
        duration=T,
        ramp=eps_ramp,
        tau=tau,
        H=H,
        V_I=V_I,
        implemented_unitary=expm_skew(V_I, tau),
        _w=w,
        _peak=peak,
    )


def interaction_picture_check(
    schedule: DischargeSchedule,
    bspec,
    samples: int = 100,
    steps: int | None = None,
    tol: float = TOL_NUM,
) -> CheckReport:
    """Bandwidth is frame independent and the discharge ends passive in both frames."""
    s = _system(bspec)
    ts = np.linspace(0.0, schedule.duration, samples)
    diffs = [abs(bandwidth(schedule.V_interaction(t)) - bandwidth(schedule.V(t))) for t in ts]
    lab = schedule.final_state(s.rho, steps=steps)
    R = expm_skew(schedule.H, -schedule.duration)
    inter = conjugate(R, lab)
    inter = (inter + inter.conj().T) / 2
    lab_passive = is_passive(lab, s, tol)
    int_passive = is_passive(inter, s, tol)
    budget = max(bandwidth(schedule.V(t)) for t in ts)
    checks = {
        "bandwidth_equal": max(diffs) <= tol * max(1.0, s.omega**2),
        "within_budget": budget <= s.omega**2 * (1 + tol),
        "frames_agree": lab_passive == int_passive,
        "passive": lab_passive and int_passive,
    }
    return CheckReport(checks, {"max_bandwidth_gap": max(diffs), "max_bandwidth": budget})


# ---------------------------------------------------------------------------
# fluctuations of the transferred energy
# ---------------------------------------------------------------------------


def transition_probabilities(U, bspec) -> tuple[np.ndarray, np.ndarray]:
    """``p(l, k) = tr(Pi_l U Pi_k rho_i Pi_k U^dagger)`` and the distinct energies ``E``."""
    s = _system(bspec)
    groups = groups_from_labels(s.a_labels)
    E = np.array([s.a[g[0]] for g in groups])
    U = np.asarray(U, dtype=complex)
    rho = s.rho
    r = len(groups)
    P = np.zeros((r, r))
    for k, gk in enumerate(groups):
        Pk = np.zeros(s.n)
        Pk[gk] = 1.0
        rk = (Pk[:, None] * rho) * Pk[None, :]
        out = conjugate(U, rk)
        for l, gl in enumerate(groups):
            P[l, k] = float(np.real(np.trace(out[np.ix_(gl, gl)])))
    return P, E


def _variance_direct(U, s: SystemSpec) -> float:
    P, E = transition_probabilities(U, s)
    W = ergotropy(s)
    dE = E[None, :] - E[:, None]  # E_k - E_l at [l, k]
    return float(np.sum(dE**2 * P) - W**2)


def _variance_simplified(U, s: SystemSpec) -> float:
    H = s.A
    rho_i = s.rho
    rho_p = conjugate(U, rho_i)
    e_i = float(np.real(np.trace(H @ rho_i)))
    e_p = float(np.real(np.trace(H @ rho_p)))
    var_i = float(np.real(np.trace(H @ H @ rho_i))) - e_i**2
    var_p = float(np.real(np.trace(H @ H @ rho_p))) - e_p**2
    cross = float(np.real(np.trace(U.conj().T @ H @ U @ H @ rho_i)))
    return var_i + var_p + 2 * e_i * e_p - 2 * cross


def energy_transfer_variance(U, bspec, tol: float = TOL_NUM) -> float:
    """Variance of the energy transferred by the passivizing unitary ``U``.

    Evaluated from the transition probabilities and from the expanded
    expression; the two must agree.
    """
    s = _system(bspec)
    U = as_unitary(U)
    if not is_passive(conjugate(U, s.rho), s, tol):
        raise NotPassivizing("U does not take the battery to a passive state")
    v1 = _variance_direct(U, s)
    v2 = _variance_simplified(U, s)
    scale = max(1.0, float(np.max(np.abs(s.a))) ** 2)
    if abs(v1 - v2) > tol * scale:
        raise FormulaMismatch(f"variance forms disagree: {v1!r} vs {v2!r}")
    return v1


def variance_range(bspec) -> tuple[float, float]:
    """Smallest and largest variance over all complete discharges.

    The process-dependent term is linear in a diagonal that ranges over a
    permutohedron whose vertices are the passivizing permutations, so the
    extremes are attained by permutation operators.
    """
    s = _system(bspec)
    vals = [energy_transfer_variance(permutation_operator(sig), s) for sig in passivizing_candidates(s)]
    return min(vals), max(vals)


def random_passivizing_unitary(spec: SystemSpec, rng: np.random.Generator) -> np.ndarray:
    """``W P_sigma V`` with ``W``, ``V`` Haar-random in the two isotropy groups."""
    sig = enumerate_passivizing_permutations(spec)[0] if spec.n <= 10 else None
    if sig is None:
        from .system import canonical_passivizing_permutation

        sig = canonical_passivizing_permutation(spec)
    n = spec.n

    def block(groups):
        M = np.zeros((n, n), dtype=complex)
        for g in groups:
            ix = np.asarray(g)
            M[np.ix_(ix, ix)] = random_unitary(len(g), rng)
        return M

    return block(spec.a_groups) @ permutation_operator(sig) @ block(spec.p_groups)


def qutrit_passivizing_family(a: float, phases, bspec) -> np.ndarray:
    """General passivizing unitary for a non-degenerate qutrit with ``p1 = p2 < p3``.

    ``phases = (alpha, beta, gamma, theta)``; ``a`` in ``[0, 1]``.
    """
    s = _system(bspec)
    if s.n != 3:
        raise SpectrumMismatch("qutrit family needs n = 3")
    if len(set(s.a_labels.tolist())) != 3:
        raise SpectrumMismatch("energies must be non-degenerate")
    pl = s.p_labels
    if not (pl[0] == pl[1] and pl[1] < pl[2]):
        raise SpectrumMismatch("populations must satisfy p1 = p2 < p3")
    if not 0.0 <= a <= 1.0:
        raise ValidationError("a must lie in [0, 1]")
    al, be, ga, th = (float(x) for x in phases)
    ra, rb = math.sqrt(a), math.sqrt(1 - a)
    e = lambda x: complex(math.cos(x), math.sin(x))  # noqa: E731
    return np.array(
        [
            [0, 0, e(al)],
            [ra * e(be), rb * e(be + th), 0],
            [rb * e(ga), -ra * e(ga + th), 0],
        ],
        dtype=complex,
    )


def qutrit_family_variance(a: float, bspec) -> float:
    """Closed form of the family's variance with energies measured from ``eps_1``.

    ``p1 e3^2 (5 - 9 p1) - 2 a p1 e2 (e3 - e2)`` with ``e_k = eps_k - eps_1``.
    """
    s = _system(bspec)
    p1 = s.p[0]
    e2 = s.a[1] - s.a[0]
    e3 = s.a[2] - s.a[0]
    return p1 * e3**2 * (5 - 9 * p1) - 2 * a * p1 * e2 * (e3 - e2)
