"""Halton low-discrepancy sequences for population seeding and local scouting.

One Halton coordinate is the base-p radical inverse of the running index k;
a d-dimensional point uses the first d primes as bases.  Indexing starts at
k = 1 because k = 0 would emit the all-zero point and degrade uniformity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    i = 3
    while i * i <= p:
        if p % i == 0:
            return False
        i += 2
    return True


def first_primes(n: int) -> tuple[int, ...]:
    """Return the first n primes (2, 3, 5, ...)."""
    if n < 1:
        raise ConfigurationError(f"need at least one prime, got n={n}")
    primes: list[int] = []
    candidate = 2
    while len(primes) < n:
        if _is_prime(candidate):
            primes.append(candidate)
        candidate += 1
    return tuple(primes)


def radical_inverse(k: int, p: int) -> float:
    """Base-p radical inverse of k: digits of k mirrored across the radix point.

    k = b0 + b1*p + b2*p^2 + ...  maps to  b0/p + b1/p^2 + b2/p^3 + ...
    The result lies in (0, 1) for every k >= 1.
    """
    if k < 1:
        raise ConfigurationError(f"radical inverse index must be >= 1, got {k}")
    if not _is_prime(p):
        raise ConfigurationError(f"radical inverse base must be prime, got {p}")
    value = 0.0
    scale = 1.0 / p
    while k > 0:
        k, digit = divmod(k, p)
        value += digit * scale
        scale /= p
    return value


@dataclass
class HaltonState:
    """Single-owner cursor into a d-dimensional Halton sequence.

    Two states with equal bases and counters emit bit-identical sequences.
    """

    bases: tuple[int, ...]
    counter: int = 1

    def __post_init__(self) -> None:
        if not self.bases:
            raise ConfigurationError("HaltonState needs at least one base")
        for b in self.bases:
            if not _is_prime(b):
                raise ConfigurationError(f"Halton bases must be prime, got {b}")
        if any(a >= b for a, b in zip(self.bases, self.bases[1:])):
            raise ConfigurationError("Halton bases must be strictly increasing")
        if self.counter < 1:
            raise ConfigurationError(f"Halton counter must be >= 1, got {self.counter}")

    @classmethod
    def for_dimension(cls, dimension: int, start: int = 1) -> "HaltonState":
        """State over the first `dimension` primes, starting at index `start`."""
        return cls(bases=first_primes(dimension), counter=start)

    @property
    def dimension(self) -> int:
        return len(self.bases)

    def next_unit(self) -> np.ndarray:
        """Emit the next point of the unit cube [0, 1)^d and advance the counter."""
        point = np.array([radical_inverse(self.counter, p) for p in self.bases])
        self.counter += 1
        return point


def next_point(state: HaltonState, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Next Halton point scaled into the box [lower, upper]."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != (state.dimension,) or upper.shape != (state.dimension,):
        raise ConfigurationError(
            f"bounds of dimension {lower.shape}/{upper.shape} do not match "
            f"{state.dimension} Halton bases"
        )
    if np.any(lower >= upper):
        raise ConfigurationError("lower bounds must be strictly below upper bounds")
    return lower + (upper - lower) * state.next_unit()
