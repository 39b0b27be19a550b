"""Named reference systems used by tests, the CLI and the README."""

from __future__ import annotations

import numpy as np

from .battery import BatterySpec
from .errors import ValidationError
from .multipartite import CollectiveSpec
from .system import Permutation, SystemSpec


def qutrit_three_cycle(omega: float = 1.0) -> SystemSpec:
    """Non-degenerate qutrit with ``p2 < p1 < p3``; its passivizing permutation is a 3-cycle."""
    return SystemSpec([1.0, 2.0, 3.0], [0.3, 0.2, 0.5], omega)


def eight_level_tied(omega: float = 1.0) -> SystemSpec:
    """Eight levels with a doubly degenerate observable and two tied populations."""
    return SystemSpec([1, 2, 3, 4, 5, 6, 6, 7], np.array([7, 7, 8, 5, 6, 3, 2, 4]) / 42, omega)


def eight_level_untied(omega: float = 1.0) -> SystemSpec:
    """The eight-level system with the population tie broken; no passivizing involution."""
    return SystemSpec([1, 2, 3, 4, 5, 6, 6, 7], np.array([8, 7, 9, 5, 6, 3, 2, 4]) / 44, omega)


def fourteen_level(omega: float = 1.0) -> SystemSpec:
    """Fourteen levels whose passivizing permutation splits into flag, Grassmann and projective blocks."""
    a = [1, 2, 2, 2, 2, 3, 3, 4, 5, 6, 7, 8, 8, 8]
    sigma = Permutation.from_cycles([(6, 7, 10), (2, 12, 3, 14), (4, 13), (5,), (1, 8, 9, 11)], 14, base=1)
    q = np.arange(14, 0, -1) / 105
    p = np.empty(14)
    p[list(sigma.images)] = q
    return SystemSpec(a, p, omega)


def maximally_mixed_qubit(omega: float = 1.0) -> SystemSpec:
    return SystemSpec([0.0, 1.0], [0.5, 0.5], omega)


def qutrit_pair(omega: float = 1.0) -> CollectiveSpec:
    """Two copies of a maximally active full-rank qutrit."""
    return CollectiveSpec(SystemSpec([1.0, 2.0, 5.0], [0.2, 0.3, 0.5], omega), 2)


def qutrit_battery(omega: float = 1.0) -> BatterySpec:
    """Qutrit battery with ``p1 = p2 < p3``."""
    return BatterySpec([0.0, 1.0, 2.5], [0.2, 0.2, 0.6], omega)


SYSTEMS = {
    "qutrit-three-cycle": qutrit_three_cycle,
    "eight-level-tied": eight_level_tied,
    "eight-level-untied": eight_level_untied,
    "fourteen-level": fourteen_level,
    "maximally-mixed-qubit": maximally_mixed_qubit,
}


def get(name: str, omega: float = 1.0) -> SystemSpec:
    try:
        return SYSTEMS[name](omega)
    except KeyError:
        raise ValidationError(f"unknown system {name!r}; known: {sorted(SYSTEMS)}") from None
