"""Derivative-free local search and block-unitary parametrizations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass
class SearchResult:
    x: np.ndarray
    value: float
    evals: int


def pattern_search(
    f: Callable[[np.ndarray], float],
    x0,
    step: float = 0.5,
    shrink: float = 0.5,
    tol: float = 1e-8,
    max_evals: int = 200_000,
) -> SearchResult:
    """Coordinate pattern search with a shrinking step.

    Each sweep tries ``x +/- step * e_i`` for every coordinate and keeps any
    improvement; a sweep without improvement shrinks the step.
    """
    x = np.array(x0, dtype=float)
    fx = f(x)
    evals = 1
    if x.size == 0:
        return SearchResult(x, fx, evals)
    while step >= tol and evals < max_evals:
        improved = False
        for i in range(x.size):
            for s in (step, -step):
                y = x.copy()
                y[i] += s
                fy = f(y)
                evals += 1
                if fy < fx - 1e-15:
                    x, fx = y, fy
                    improved = True
                    # keep moving along a direction that works
                    while evals < max_evals:
                        y = x.copy()
                        y[i] += s
                        fy = f(y)
                        evals += 1
                        if fy < fx - 1e-15:
                            x, fx = y, fy
                        else:
                            break
                    break
        if not improved:
            step *= shrink
    return SearchResult(x, fx, evals)


class BlockUnitaries:
    """Unitaries that are block diagonal over a partition of the basis.

    Each block of size ``d`` carries ``d**2`` real parameters: ``d`` diagonal
    entries, then the real and imaginary parts of the upper off-diagonal
    entries of a Hermitian generator ``h``; the block unitary is ``exp(i h)``.
    """

    def __init__(self, groups: Sequence[Sequence[int]], n: int):
        self.groups = [np.asarray(g, dtype=int) for g in groups]
        self.n = n
        self.sizes = [len(g) for g in self.groups]
        self.dim = sum(d * d for d in self.sizes)
        self._triu = [np.triu_indices(d, 1) for d in self.sizes]

    def generator(self, x: np.ndarray) -> np.ndarray:
        """The block-diagonal Hermitian ``h`` for parameters ``x``."""
        H = np.zeros((self.n, self.n), dtype=complex)
        pos = 0
        for g, d, (iu, ju) in zip(self.groups, self.sizes, self._triu):
            h = np.diag(x[pos : pos + d]).astype(complex)
            pos += d
            m = len(iu)
            off = x[pos : pos + m] + 1j * x[pos + m : pos + 2 * m]
            pos += 2 * m
            h[iu, ju] = off
            h[ju, iu] = off.conj()
            H[np.ix_(g, g)] = h
        return H

    def unitary(self, x: np.ndarray) -> np.ndarray:
        U = np.zeros((self.n, self.n), dtype=complex)
        pos = 0
        for g, d, (iu, ju) in zip(self.groups, self.sizes, self._triu):
            if d == 1:
                U[g[0], g[0]] = np.exp(1j * x[pos])
                pos += 1
                continue
            h = np.diag(x[pos : pos + d]).astype(complex)
            pos += d
            m = len(iu)
            off = x[pos : pos + m] + 1j * x[pos + m : pos + 2 * m]
            pos += 2 * m
            h[iu, ju] = off
            h[ju, iu] = off.conj()
            w, V = np.linalg.eigh(h)
            U[np.ix_(g, g)] = (V * np.exp(1j * w)) @ V.conj().T
        return U

    def diagonal_params(self, phases: np.ndarray) -> np.ndarray:
        """Parameters giving ``diag(exp(i phases))``."""
        x = np.zeros(self.dim)
        pos = 0
        for g, d in zip(self.groups, self.sizes):
            x[pos : pos + d] = phases[g]
            pos += d * d
        return x

    def random_params(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-math.pi, math.pi, self.dim)
