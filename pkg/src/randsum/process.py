"""The random-sum process ``X_{n+1} = xi_1 + ... + xi_{X_n}``.

Summation runs over ``X_n`` terms, so ``X_n = 0`` is absorbing (empty sum).
Laws are evolved exactly through compound distributions; sample paths come
from the counter-based generator in :mod:`randsum.rng`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng
from .dist import Moments, Pmf, moments, point_mass, powers
from .errors import CapTooSmall
from .tail import (
    CParamEstimate,
    _bounded_estimate,
    report_estimate,
)

# upper bound on uniforms generated in one vectorized batch
_DRAW_BLOCK = 1 << 22


@dataclass(frozen=True)
class ProcessSpec:
    x0: int
    xi: Pmf
    cap: int

    def __post_init__(self):
        if self.x0 < 1:
            raise ValueError("x0 must be a positive integer")
        if self.cap < self.x0:
            raise CapTooSmall(f"cap {self.cap} below x0 {self.x0}")


def compound_pmf(count: Pmf, xi: Pmf, cap: int) -> Pmf:
    """Law of ``xi_1 + ... + xi_N`` with ``N ~ count``, truncated at ``cap``.

    ``N = 0`` contributes a point mass at 0. Mass lost to the count's own
    deficit and to truncated convolution powers ends up in the deficit.
    """
    if cap < 0:
        raise CapTooSmall("cap must be non-negative")
    out = np.zeros(cap + 1)
    deficit = count.mass_deficit
    p0 = count.pmf_at(0)
    out[0] += p0
    k_end = count.support_end
    if k_end >= 1:
        for k, power in enumerate(powers(xi, cap), start=1):
            w = count.pmf_at(k)
            if w:
                deficit += w * power.mass_deficit
                if not power.is_pure_deficit:
                    out[power.offset : power.offset + power.size] += w * power.probs
            if k >= k_end:
                break
            if power.is_pure_deficit:
                # every later power is pure deficit as well
                rest = count.probs[max(0, k + 1 - count.offset) :]
                deficit += math.fsum(rest)
                break
    # several terms landing on one point can round past 1
    return Pmf(0, np.minimum(out, 1.0), min(deficit, 1.0))


def evolve(spec: ProcessSpec, n: int) -> list[Pmf]:
    """Laws ``[f_0, ..., f_n]`` starting from the point mass at ``x0``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    laws = [point_mass(spec.x0)]
    for _ in range(n):
        laws.append(compound_pmf(laws[-1], spec.xi, spec.cap))
    return laws


def propagate_moments(spec: ProcessSpec, n: int) -> list[Moments]:
    """Mean and variance of ``X_0 .. X_n`` from the compound-sum recursions."""
    xi = moments(spec.xi)
    mean, var = float(spec.x0), 0.0
    out = [Moments(mean, var)]
    for _ in range(n):
        mean, var = mean * xi.mean, mean * xi.variance + var * xi.mean**2
        out.append(Moments(mean, var))
    return out


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    seed: int
    paths: np.ndarray  # (n_paths, n_steps + 1)
    absorbed_count: int

    def empirical_pmf(self, step: int) -> np.ndarray:
        """Relative frequencies of ``X_step`` indexed from 0."""
        return np.bincount(self.paths[:, step]) / self.paths.shape[0]


def _sum_draws(seed, cdf, offset, path_ids, counts, step):
    """One step for a batch of paths: sum ``counts[i]`` draws of xi per path."""
    total = int(counts.sum())
    out = np.zeros(counts.size, dtype=np.int64)
    if total == 0:
        return out
    if total > _DRAW_BLOCK and counts.size > 1:
        mid = counts.size // 2
        out[:mid] = _sum_draws(seed, cdf, offset, path_ids[:mid], counts[:mid], step)
        out[mid:] = _sum_draws(seed, cdf, offset, path_ids[mid:], counts[mid:], step)
        return out
    if counts.size == 1:
        acc = 0
        for lo in range(0, total, _DRAW_BLOCK):
            draw = np.arange(lo, min(total, lo + _DRAW_BLOCK), dtype=np.uint64)
            u = rng.uniforms(seed, path_ids[0], step, draw)
            idx = np.searchsorted(cdf, u, side="right")
            acc += int(idx.sum()) + offset * draw.size
        out[0] = acc
        return out

    local = np.repeat(np.arange(counts.size), counts)
    starts = np.cumsum(counts) - counts
    draw = (np.arange(total) - np.repeat(starts, counts)).astype(np.uint64)
    u = rng.uniforms(seed, path_ids[local], step, draw)
    values = np.searchsorted(cdf, u, side="right") + offset
    return np.rint(np.bincount(local, weights=values, minlength=counts.size)).astype(np.int64)


def _simulate_block(spec, cdf, seed, first, last, n_steps):
    path_ids = np.arange(first, last, dtype=np.uint64)
    block = np.empty((last - first, n_steps + 1), dtype=np.int64)
    block[:, 0] = spec.x0
    for step in range(1, n_steps + 1):
        block[:, step] = _sum_draws(seed, cdf, spec.xi.offset, path_ids, block[:, step - 1], step)
    return block


def simulate(
    spec: ProcessSpec,
    n_steps: int,
    n_paths: int,
    seed: int,
    *,
    workers: int = 1,
    block_size: int = 8192,
) -> SimulationTrace:
    """Sample ``n_paths`` trajectories of length ``n_steps + 1``.

    The draw for (path, step, summand) depends only on ``seed`` and those
    indices, so ``workers`` and ``block_size`` never change the result. The
    law of xi is conditioned on its represented mass (any deficit is dropped).
    """
    if n_steps < 1 or n_paths < 1:
        raise ValueError("n_steps and n_paths must be >= 1")
    probs = spec.xi.probs / spec.xi.probs.sum()
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0

    bounds = [(lo, min(n_paths, lo + block_size)) for lo in range(0, n_paths, block_size)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(
                pool.map(lambda b: _simulate_block(spec, cdf, seed, b[0], b[1], n_steps), bounds)
            )
    else:
        blocks = [_simulate_block(spec, cdf, seed, lo, hi, n_steps) for lo, hi in bounds]
    paths = np.vstack(blocks)
    return SimulationTrace(int(seed), paths, int(np.count_nonzero(paths[:, -1] == 0)))


@dataclass(frozen=True)
class OverTimeReport:
    xi_estimate: CParamEstimate
    estimates: list[tuple[int, CParamEstimate]]
    max_deviation: float


def _deviation_from(reference: float, values) -> float:
    worst = 0.0
    for v in values:
        if math.isinf(reference) or math.isinf(v):
            dev = 0.0 if v == reference else math.inf
        else:
            dev = abs(v - reference) / reference
        worst = max(worst, dev)
    return worst


def c_param_over_time(
    spec: ProcessSpec, n: int, window_fraction: float = 0.25, *, truncated: bool = False
) -> OverTimeReport:
    """Decay-rate estimates of ``X_1 .. X_n`` next to that of xi itself."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if spec.xi.mass_deficit == 0.0 and not truncated:
        xi_est = _bounded_estimate(spec.xi)
        # bounded xi keeps every X_m bounded
        laws = evolve(spec, n)
        estimates = [(m, _bounded_estimate(laws[m])) for m in range(1, n + 1)]
        return OverTimeReport(xi_est, estimates, 0.0)

    xi_est = report_estimate(spec.xi, window_fraction, truncated=truncated)
    laws = evolve(spec, n)
    estimates = [
        (m, report_estimate(laws[m], window_fraction, truncated=truncated))
        for m in range(1, n + 1)
    ]
    return OverTimeReport(
        xi_est, estimates, _deviation_from(xi_est.value, [e.value for _, e in estimates])
    )
