"""Finite probability mass functions on the non-negative integers.

A :class:`Pmf` keeps the probability mass lost to truncation in
``mass_deficit`` instead of renormalizing it away, so tails computed from a
truncated law stay exact up to the truncation point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    CapTooSmall,
    EmptyWeights,
    ExcessiveDeficit,
    NegativeWeight,
    NonFiniteWeight,
    ZeroTail,
)

# Loose guard against construction bugs; the 1e-12 contract is asserted in tests.
_NORMALIZATION_GUARD = 1e-9
MAX_MOMENT_DEFICIT = 0.01


@dataclass(frozen=True, eq=False)
class Pmf:
    """Law of a random variable on ``offset, offset + 1, ...``.

    ``probs[i]`` is ``P[X = offset + i]`` and ``mass_deficit`` is the
    probability lost above the truncation cap, so that
    ``probs.sum() + mass_deficit == 1``. Leading and trailing zeros are
    trimmed on construction; a pure-deficit law is stored as ``probs == [0.0]``.
    """

    offset: int
    probs: np.ndarray
    mass_deficit: float = 0.0

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64).ravel()
        if probs.size == 0:
            raise EmptyWeights("probs must be non-empty")
        if not np.all(np.isfinite(probs)):
            raise NonFiniteWeight("probs must be finite")
        if np.any(probs < 0) or np.any(probs > 1):
            raise NegativeWeight("probs must lie in [0, 1]")
        offset = int(self.offset)
        if offset < 0:
            raise ValueError("offset must be non-negative")
        deficit = float(self.mass_deficit)
        if not 0.0 <= deficit <= 1.0:
            raise ValueError(f"mass_deficit {deficit!r} outside [0, 1]")

        nz = np.flatnonzero(probs)
        if nz.size == 0:
            probs = np.zeros(1)
        else:
            offset += int(nz[0])
            probs = probs[nz[0] : nz[-1] + 1].copy()
        total = math.fsum(probs) + deficit
        if abs(total - 1.0) > _NORMALIZATION_GUARD:
            raise ValueError(f"probs + deficit sum to {total!r}, expected 1")

        probs.flags.writeable = False
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "mass_deficit", deficit)

    @property
    def size(self) -> int:
        return int(self.probs.size)

    @property
    def support_end(self) -> int:
        """Largest represented support point."""
        return self.offset + self.size - 1

    @property
    def is_pure_deficit(self) -> bool:
        return self.probs[-1] == 0.0

    def pmf_at(self, x: int) -> float:
        i = x - self.offset
        if 0 <= i < self.size:
            return float(self.probs[i])
        return 0.0

    def tails(self) -> np.ndarray:
        """``P[X > offset + i]`` for ``i = 0 .. size - 1``.

        Accumulated from the far end so that small tails keep full relative
        precision.
        """
        rev = np.cumsum(np.concatenate(([self.mass_deficit], self.probs[:0:-1])))
        # rounding can carry the sum of the upper atoms just past 1
        return np.minimum(rev[::-1], 1.0)

    def dense(self, length: int) -> np.ndarray:
        """Probabilities as a zero-based array of ``length`` entries."""
        if self.support_end >= length and not self.is_pure_deficit:
            raise ValueError(f"support reaches {self.support_end}, beyond length {length}")
        out = np.zeros(length)
        if not self.is_pure_deficit:
            out[self.offset : self.offset + self.size] = self.probs
        return out

    def __repr__(self) -> str:
        return (
            f"Pmf(offset={self.offset}, size={self.size}, "
            f"mass_deficit={self.mass_deficit:.3g})"
        )


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float


def pmf_new(offset: int, weights: Sequence[float]) -> Pmf:
    """Normalize non-negative ``weights`` into a deficit-free :class:`Pmf`."""
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size == 0:
        raise EmptyWeights("weights must be non-empty")
    if not np.all(np.isfinite(w)):
        raise NonFiniteWeight("weights must be finite")
    if np.any(w < 0):
        raise NegativeWeight("weights must be non-negative")
    total = math.fsum(w)
    if total <= 0:
        raise EmptyWeights("weights must have positive sum")
    return Pmf(offset, w / total, 0.0)


def pure_deficit(offset: int = 0) -> Pmf:
    """A law whose entire mass lies above the truncation cap."""
    return Pmf(offset, np.zeros(1), 1.0)


def point_mass(x: int) -> Pmf:
    return Pmf(x, np.ones(1), 0.0)


def uniform(lo: int, hi: int) -> Pmf:
    """Discrete uniform law on ``lo..hi`` inclusive."""
    return pmf_new(lo, np.ones(hi - lo + 1))


def geometric(q: float, cap: int, start: int = 0) -> Pmf:
    """Geometric law ``P[X = k] = (1 - q) q**(k - start)`` for ``k >= start``,
    truncated at ``cap`` with the remaining tail ``q**(cap - start + 1)`` kept
    as mass deficit."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if cap < start:
        raise CapTooSmall(f"cap {cap} below start {start}")
    n = cap - start + 1
    probs = (1.0 - q) * q ** np.arange(n, dtype=np.float64)
    return Pmf(start, probs, q**n)


def poisson(mu: float, cap: int) -> Pmf:
    """Poisson law truncated at ``cap``; the exact tail beyond ``cap`` becomes
    the mass deficit."""
    if mu <= 0:
        raise ValueError("mu must be positive")

    def term(k: int) -> float:
        return math.exp(k * math.log(mu) - mu - math.lgamma(k + 1))

    probs = np.array([term(k) for k in range(cap + 1)])
    rest, k = 0.0, cap + 1
    while True:
        t = term(k)
        rest += t
        if t <= rest * 1e-17 or t == 0.0:
            break
        k += 1
    return Pmf(0, probs, min(rest, 1.0))


def truncate(p: Pmf, cap: int) -> Pmf:
    """Move all mass above ``cap`` into the deficit."""
    if p.support_end <= cap:
        return p
    if cap < p.offset:
        return pure_deficit(p.offset)
    keep = cap - p.offset + 1
    lost = math.fsum(p.probs[keep:])
    return Pmf(p.offset, p.probs[:keep], p.mass_deficit + lost)


def tail(p: Pmf, x: int) -> float:
    """``P[X > x]``, including the mass deficit (which lies above any cap)."""
    if x < p.offset:
        return 1.0
    i = x - p.offset
    if i >= p.size:
        return p.mass_deficit
    return float(p.tails()[i])


def hazard(p: Pmf, x: int) -> float:
    """Discrete log-hazard ``-ln(P[X > x] / P[X > x - 1])``."""
    upper, lower = tail(p, x), tail(p, x - 1)
    if upper <= 0.0 or lower <= 0.0:
        raise ZeroTail(f"tail vanishes at x={x}")
    return math.log(lower) - math.log(upper)


def _ordered(a: Pmf, b: Pmf) -> tuple[Pmf, Pmf]:
    # np.convolve is not bitwise symmetric in its arguments
    ka = (a.size, a.offset, a.probs.tobytes())
    kb = (b.size, b.offset, b.probs.tobytes())
    return (a, b) if ka <= kb else (b, a)


def convolve(a: Pmf, b: Pmf, cap: int) -> Pmf:
    """Law of ``A + B`` truncated at ``cap``.

    Mass landing above ``cap`` and the operands' own deficits are carried
    into the result's deficit.
    """
    if cap < a.offset + b.offset:
        raise CapTooSmall(f"cap {cap} below smallest possible sum {a.offset + b.offset}")
    a, b = _ordered(a, b)
    inherited = a.mass_deficit + b.mass_deficit - a.mass_deficit * b.mass_deficit
    if a.is_pure_deficit or b.is_pure_deficit:
        return pure_deficit(a.offset + b.offset)
    full = np.convolve(a.probs, b.probs)
    offset = a.offset + b.offset
    keep = cap - offset + 1
    lost = math.fsum(full[keep:]) if keep < full.size else 0.0
    return Pmf(offset, full[:keep], min(1.0, inherited + lost))


def powers(p: Pmf, cap: int) -> Iterator[Pmf]:
    """Yield ``p^{*1}, p^{*2}, ...`` each truncated at ``cap``.

    Every consumer of k-fold convolutions goes through this generator so that
    operator columns and evolved laws are built from identical arithmetic.
    """
    current = truncate(p, cap)
    yield current
    while True:
        if current.offset + p.offset > cap or current.is_pure_deficit:
            current = pure_deficit(current.offset + p.offset)
        else:
            current = convolve(current, p, cap)
        yield current


def self_convolve(p: Pmf, k: int, cap: int) -> Pmf:
    """k-fold convolution of ``p`` truncated at ``cap``; ``k == 1`` returns ``p``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if cap < 0:
        raise CapTooSmall("cap must be non-negative")
    if k == 1:
        return p
    for i, power in enumerate(powers(p, cap), start=1):
        if i == k:
            return power
    raise AssertionError("unreachable")


def moments(p: Pmf) -> Moments:
    """Mean and variance of the represented (renormalized) mass."""
    if p.mass_deficit >= MAX_MOMENT_DEFICIT:
        raise ExcessiveDeficit(f"mass deficit {p.mass_deficit:.3g} too large for moments")
    x = np.arange(p.offset, p.offset + p.size, dtype=np.float64)
    w = p.probs / p.probs.sum()
    mean = float(np.dot(w, x))
    variance = float(np.dot(w, (x - mean) ** 2))
    return Moments(mean, max(variance, 0.0))


def tail_of_sum(a: Pmf, b: Pmf, x: int) -> float:
    """``P[A + B > x]`` from the tails of ``A`` and the mass function of ``B``.

    Discrete Stieltjes form ``F̄_B(x) + sum_{y <= x} F̄_A(x - y) f_B(y)``; the
    ``y = 0`` atom must be included for the identity to hold on a lattice.
    """
    total = tail(b, x)
    for y in range(b.offset, min(x, b.support_end) + 1):
        fy = b.pmf_at(y)
        if fy:
            total += tail(a, x - y) * fy
    return total
