"""Portable seeded random stream.

Scenario files and the acceptance suite need "random" inputs that are
reproducible everywhere, independent of any platform RNG.  The generator is
a 64-bit linear congruential generator with Knuth's MMIX constants

    state <- (6364136223846793005 * state + 1442695040888963407) mod 2^64

mapped to uniforms via the top 53 bits, u = (state >> 11 + 0.5) / 2^53,
so u is always in the open interval (0, 1).  Gaussians come from the
Box-Muller transform applied to consecutive uniform pairs.
"""

from __future__ import annotations

import math

import numpy as np

_MULTIPLIER = 6364136223846793005
_INCREMENT = 1442695040888963407
_MASK = (1 << 64) - 1
_TWO53 = float(1 << 53)


class Stream:
    """Deterministic scalar/matrix sample source for a given seed."""

    def __init__(self, seed: int):
        self._state = seed & _MASK
        self._spare: float | None = None

    def uniform(self) -> float:
        """Next uniform in (0, 1)."""
        self._state = (_MULTIPLIER * self._state + _INCREMENT) & _MASK
        return ((self._state >> 11) + 0.5) / _TWO53

    def gaussian(self) -> float:
        """Next standard normal via Box-Muller (pairs cached)."""
        if self._spare is not None:
            out, self._spare = self._spare, None
            return out
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def complex_gaussian(self) -> complex:
        """Standard complex normal: unit-variance real and imaginary parts
        scaled by 1/sqrt(2)."""
        return complex(self.gaussian(), self.gaussian()) / math.sqrt(2.0)

    def complex_vector(self, n: int, scale: float = 1.0) -> np.ndarray:
        return scale * np.array([self.complex_gaussian() for _ in range(n)])

    def complex_matrix(self, rows: int, cols: int, scale: float = 1.0) -> np.ndarray:
        return self.complex_vector(rows * cols, scale).reshape(rows, cols)

    def hermitian(self, n: int, norm: float = 1.0) -> np.ndarray:
        """Random Hermitian n x n matrix scaled to the given spectral norm.

        Gaussian-ensemble draw: real N(0,1) diagonal, complex normal
        off-diagonal entries mirrored by conjugation.
        """
        h = np.zeros((n, n), dtype=complex)
        for i in range(n):
            h[i, i] = self.gaussian()
            for j in range(i + 1, n):
                h[i, j] = self.complex_gaussian()
                h[j, i] = np.conj(h[i, j])
        if norm > 0 and n > 0:
            top = np.max(np.abs(np.linalg.eigvalsh(h)))
            if top > 0:
                h *= norm / top
        return h
