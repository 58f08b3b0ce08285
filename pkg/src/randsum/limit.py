"""Truncated Markov operator ``M[y, k] = P[xi_1 + ... + xi_k = y]`` and its
fixed point.

Column ``k`` is the k-fold convolution of xi cut at ``K``; column 0 is the
point mass at 0 (empty sum), so the point mass at 0 is always fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .dist import Pmf, powers
from .errors import SupportExceedsK

DENSE_LIMIT = 2000


@dataclass(frozen=True, eq=False)
class MarkovOperatorMatrix:
    """``entries[y, k]`` for ``0 <= y, k <= K``.

    Above :data:`DENSE_LIMIT` the matrix is not stored (``entries is None``)
    and columns are regenerated from ``xi`` whenever they are needed.
    """

    K: int
    xi: Pmf
    column_deficits: np.ndarray
    entries: np.ndarray | None = None

    @property
    def is_dense(self) -> bool:
        return self.entries is not None

    def columns(self) -> Iterator[np.ndarray]:
        """Yield columns ``0 .. K`` as dense arrays."""
        if self.entries is not None:
            for k in range(self.K + 1):
                yield self.entries[:, k]
            return
        yield _delta0(self.K)
        for k, power in enumerate(powers(self.xi, self.K), start=1):
            yield power.dense(self.K + 1)
            if k == self.K:
                return

    def diagonal(self) -> np.ndarray:
        if self.entries is not None:
            return np.diag(self.entries).copy()
        return np.array([col[k] for k, col in enumerate(self.columns())])


def _delta0(K: int) -> np.ndarray:
    col = np.zeros(K + 1)
    col[0] = 1.0
    return col


def build_operator(xi: Pmf, K: int, *, dense_limit: int = DENSE_LIMIT) -> MarkovOperatorMatrix:
    if K < 1:
        raise ValueError("K must be >= 1")
    deficits = np.zeros(K + 1)
    dense = K <= dense_limit
    entries = np.zeros((K + 1, K + 1)) if dense else None
    if dense:
        entries[0, 0] = 1.0
    for k, power in enumerate(powers(xi, K), start=1):
        deficits[k] = power.mass_deficit
        if dense:
            entries[:, k] = power.dense(K + 1)
        if k == K:
            break
    if dense:
        entries.flags.writeable = False
    deficits.flags.writeable = False
    return MarkovOperatorMatrix(K, xi, deficits, entries)


def _as_vector(M: MarkovOperatorMatrix, f: Pmf) -> np.ndarray:
    if not f.is_pure_deficit and f.support_end > M.K:
        raise SupportExceedsK(f"support reaches {f.support_end}, operator stops at {M.K}")
    return f.dense(M.K + 1)


def _matvec(M: MarkovOperatorMatrix, v: np.ndarray) -> np.ndarray:
    if M.entries is not None:
        return M.entries @ v
    out = np.zeros(M.K + 1)
    for k, col in enumerate(M.columns()):
        if v[k]:
            out += v[k] * col
    return out


def apply(M: MarkovOperatorMatrix, f: Pmf) -> Pmf:
    """One step ``f -> M f``; mass pushed above ``K`` joins the deficit."""
    v = _as_vector(M, f)
    lost = float(np.dot(v, M.column_deficits))
    return Pmf(0, np.minimum(_matvec(M, v), 1.0), min(1.0, f.mass_deficit + lost))


def residual_fixed_point_equation(M: MarkovOperatorMatrix, f: Pmf) -> float:
    """``max_j |sum_{k != j} f(k) M[j, k] - f(j) (1 - M[j, j])|``.

    Zero exactly when ``M f = f``.
    """
    v = _as_vector(M, f)
    diag = M.diagonal()
    off = _matvec(M, v) - diag * v
    return float(np.max(np.abs(off - v * (1.0 - diag))))


@dataclass(frozen=True)
class FixedPointResult:
    f_star: Pmf
    residual: float
    iterations: int
    spectral_estimate: float
    converged: bool
    mass_at_zero_raw: float
    # sup-norm change of the normalized iterate (drives the stopping rule)
    step_changes: tuple[float, ...] = field(repr=False, default=())
    # same for the unnormalized iterate M^n f0; this one decays monotonically
    raw_step_changes: tuple[float, ...] = field(repr=False, default=())


def fixed_point(
    M: MarkovOperatorMatrix, f0: Pmf, tol: float = 1e-12, max_iter: int = 10_000
) -> FixedPointResult:
    """Power iteration ``f <- M f / |M f|`` from ``f0``.

    Escaped mass is divided out after every step so iterates stay on the
    simplex; the unnormalized iterate is tracked alongside, and its mass at 0
    (``mass_at_zero_raw``) estimates the extinction probability when mass
    escapes above ``K``. Iteration stops once the normalized iterate moves
    less than ``tol`` in sup norm. Running out of iterations is reported
    through ``converged``, not raised.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    v = _as_vector(M, f0)
    raw_mass = float(v.sum())
    if raw_mass <= 0:
        raise ValueError("f0 has no mass inside the operator window")
    v = v / raw_mass
    changes: list[float] = []
    raw_changes: list[float] = []
    ratio = 1.0
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        w = _matvec(M, v)
        surviving = float(w.sum())
        if surviving <= 0:
            # everything escaped; nothing left to normalize
            v = w
            raw_mass = 0.0
            break
        ratio = surviving
        raw_changes.append(raw_mass * float(np.max(np.abs(w - v))))
        raw_mass *= surviving
        w /= surviving
        change = float(np.max(np.abs(w - v)))
        changes.append(change)
        v = w
        if change < tol:
            converged = True
            break

    f_star = Pmf(0, v, max(0.0, 1.0 - math.fsum(v)))
    return FixedPointResult(
        f_star=f_star,
        residual=residual_fixed_point_equation(M, f_star),
        iterations=it,
        spectral_estimate=ratio,
        converged=converged,
        mass_at_zero_raw=float(v[0] * raw_mass),
        step_changes=tuple(changes),
        raw_step_changes=tuple(raw_changes),
    )
