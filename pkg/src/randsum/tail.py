"""Exponential tail decay rate ``C(F) = sup{t >= 0 : F̄(x) e^{xt} -> 0}``.

Estimation goes through the discrete log-hazard, whose limit equals the
decay rate. Also provides the three-way classification of ``F̄(x) e^{xs}``
(to zero, to a positive constant, divergent), exponential bound certificates
and the closed-form Erlang tail family.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dist import Pmf, self_convolve
from .errors import (
    DeficitDominatesWindow,
    NegativeX,
    NoThresholdFound,
    SeriesTooShort,
    SupportTooShort,
)

MIN_SUPPORT = 10
MIN_SERIES = 20
DEFICIT_FACTOR = 10.0
CONVERGED_SPREAD = 0.05
SUPEREXP_SPREAD = 0.5
SLOPE_TOL = 0.01
POSITIVE_SPREAD = 0.05


@dataclass(frozen=True)
class AnalyticTail:
    """k-fold convolution of an exponential law with the given rate (Erlang)."""

    rate: float
    folds: int = 1

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if int(self.folds) != self.folds or self.folds < 1:
            raise ValueError("folds must be a positive integer")


def c_param_analytic(t: AnalyticTail) -> float:
    # polynomial prefactors of the Erlang tail do not move the supremum
    return float(t.rate)


def analytic_tail_eval(t: AnalyticTail, x: float) -> float:
    """``e^{-λx} sum_{j<k} (λx)^j / j!``."""
    if x < 0:
        raise NegativeX(f"x must be non-negative, got {x}")
    lx = t.rate * x
    term, total = 1.0, 1.0
    for j in range(1, t.folds):
        term *= lx / j
        total += term
    return math.exp(-lx) * total


@dataclass(frozen=True)
class CParamEstimate:
    value: float
    window_start: int
    window_end: int
    hazard_series: tuple[float, ...]
    converged: bool
    spread: float

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


def _bounded_estimate(p: Pmf) -> CParamEstimate:
    # Bounded support: the tail is eventually 0, so every t qualifies in the sup.
    end = p.support_end
    return CParamEstimate(math.inf, end, end, (math.inf,), True, 0.0)


def _unseen_mass(p: Pmf) -> float:
    """Mass beyond the last support point of a truncated view with no deficit.

    The last two atoms are continued geometrically; without a decaying ratio
    the last atom alone stands in.
    """
    last, before = float(p.probs[-1]), float(p.probs[-2])
    if before > 0 and last < before:
        r = last / before
        return last * r / (1.0 - r)
    return last


def _usable_end(tails: np.ndarray, deficit: float) -> int:
    """Number of leading support points whose tail is clear of truncation noise."""
    ok = (tails > DEFICIT_FACTOR * deficit) & (tails > 0)
    bad = np.flatnonzero(~ok)
    return int(bad[0]) if bad.size else int(tails.size)


def c_param_estimate(
    p: Pmf, window_fraction: float = 0.25, *, truncated: bool = False
) -> CParamEstimate:
    """Estimate the tail decay rate of ``p`` by the median log-hazard.

    The window is the trailing ``window_fraction`` of the support points whose
    tail exceeds ten times the mass deficit. A law with zero deficit has
    bounded support and gets an infinite rate, unless ``truncated`` says the
    zero deficit is an artifact (e.g. a law read back from JSON). The mass
    past the cut is then estimated by continuing the last two atoms
    geometrically and treated as the deficit.
    """
    if not 0.0 < window_fraction < 1.0:
        raise ValueError("window_fraction must lie in (0, 1)")
    if p.size < MIN_SUPPORT:
        raise SupportTooShort(f"support has {p.size} points, need {MIN_SUPPORT}")
    if p.mass_deficit == 0.0 and not truncated:
        return _bounded_estimate(p)

    tails = p.tails()
    deficit = p.mass_deficit
    if deficit == 0.0:
        deficit = _unseen_mass(p)
        tails = tails + deficit
    usable = _usable_end(tails, deficit)
    if usable < MIN_SUPPORT:
        raise DeficitDominatesWindow(
            f"only {usable} support points have tail above {DEFICIT_FACTOR:g} x deficit"
        )
    width = max(2, math.ceil(window_fraction * usable))
    lo = usable - width
    log_t = np.log(tails[:usable])
    prev = np.concatenate(([0.0], log_t[:-1]))  # ln F̄(offset - 1) = 0
    hz = (prev - log_t)[lo:usable]

    value = float(np.median(hz))
    spread = float(hz.max() - hz.min())
    return CParamEstimate(
        value=value,
        window_start=p.offset + lo,
        window_end=p.offset + usable - 1,
        hazard_series=tuple(float(h) for h in hz),
        converged=spread < CONVERGED_SPREAD * value,
        spread=spread,
    )


def _log_tail_grid(p: Pmf, x_max: int) -> np.ndarray:
    """``ln F̄(x)`` for ``x = 0 .. x_max``."""
    out = np.empty(x_max + 1)
    tails = p.tails()
    with np.errstate(divide="ignore"):
        log_t = np.log(tails)
        log_def = math.log(p.mass_deficit) if p.mass_deficit > 0 else -math.inf
    for x in range(x_max + 1):
        i = x - p.offset
        if i < 0:
            out[x] = 0.0
        elif i < tails.size:
            out[x] = log_t[i]
        else:
            out[x] = log_def
    return out


def scaled_tail_series(p: Pmf, s: float, x_max: int) -> np.ndarray:
    """``F̄(x) e^{xs}`` for ``x = 0 .. x_max``, formed in log space."""
    if s < 0:
        raise ValueError("s must be non-negative")
    log_t = _log_tail_grid(p, x_max)
    with np.errstate(over="ignore"):
        return np.exp(log_t + s * np.arange(x_max + 1))


class Trichotomy(enum.Enum):
    CONVERGES_TO_ZERO = "ConvergesToZero"
    CONVERGES_TO_POSITIVE = "ConvergesToPositive"
    DIVERGES = "Diverges"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class TrichotomyVerdict:
    kind: Trichotomy
    witness_constant: float | None
    trend_slope: float


def classify_trichotomy(series: Sequence[float]) -> TrichotomyVerdict:
    """Classify the limit behaviour of a non-negative series.

    A straight line is fitted to the log of the last half, against position
    rescaled to [0, 1]; the slope is therefore the log-change across that
    half and does not depend on how finely the series is sampled.
    """
    y = np.asarray(series, dtype=np.float64)
    if y.size < MIN_SERIES:
        raise SeriesTooShort(f"series has {y.size} points, need {MIN_SERIES}")
    if np.any(y < 0) or np.any(np.isnan(y)):
        raise ValueError("series entries must be non-negative")

    half = y[y.size // 2 :]
    if np.any(np.isposinf(half)):
        return TrichotomyVerdict(Trichotomy.DIVERGES, None, math.inf)
    if half[-1] == 0.0:
        return TrichotomyVerdict(Trichotomy.CONVERGES_TO_ZERO, None, -math.inf)

    pos = half > 0
    t = np.linspace(0.0, 1.0, half.size)[pos]
    slope = float(np.polyfit(t, np.log(half[pos]), 1)[0])
    rel_spread = float((half.max() - half.min()) / half.mean())

    if slope < -SLOPE_TOL:
        kind = Trichotomy.CONVERGES_TO_ZERO
    elif slope > SLOPE_TOL:
        kind = Trichotomy.DIVERGES
    elif rel_spread < POSITIVE_SPREAD:
        witness = float(y[-max(1, y.size // 4) :].mean())
        return TrichotomyVerdict(Trichotomy.CONVERGES_TO_POSITIVE, witness, slope)
    else:
        kind = Trichotomy.INCONCLUSIVE
    return TrichotomyVerdict(kind, None, slope)


@dataclass(frozen=True)
class BoundCertificate:
    """Witness that ``F̄(x) <= e^{-x s_star}`` for ``x_threshold < x <= window_end``,
    with ``s_star = s + ln(1/epsilon) / x_threshold``."""

    s: float
    s_star: float
    x_threshold: int
    epsilon: float
    window_end: int

    def validate(self, p: Pmf) -> bool:
        log_t = _log_tail_grid(p, self.window_end)
        xs = np.arange(self.x_threshold + 1, self.window_end + 1)
        return bool(np.all(log_t[xs] <= -xs * self.s_star))


def _certificate_window_end(p: Pmf) -> int:
    if p.mass_deficit == 0.0:
        return p.support_end
    usable = _usable_end(p.tails(), p.mass_deficit)
    return p.offset + usable - 1


def bound_certificate(p: Pmf, s: float, epsilon: float) -> BoundCertificate:
    """Find a threshold beyond which the tail is dominated by ``e^{-x s_star}``.

    ``F̄(x) e^{xs} < epsilon`` past the threshold alone does not give the bound
    for every larger ``x`` (``epsilon <= epsilon**(x/X)`` fails once ``x > X``),
    so the threshold is pushed up until ``s_star`` has dropped far enough for
    the bound to hold on the whole sampled window.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    end = _certificate_window_end(p)
    if end < 1:
        raise NoThresholdFound("sampled window is empty")

    log_t = _log_tail_grid(p, end)
    xs = np.arange(end + 1)
    below = log_t + s * xs < math.log(epsilon)
    above = np.flatnonzero(~below)
    if above.size and above[-1] == end:
        raise NoThresholdFound(f"F̄(x) e^(xs) never drops below {epsilon} by x={end}")
    first = max(1, int(above[-1]) if above.size else 0)

    for x_thr in range(first, end):
        s_star = s + math.log(1.0 / epsilon) / x_thr
        tail_x = xs[x_thr + 1 :]
        if np.all(log_t[tail_x] <= -tail_x * s_star):
            return BoundCertificate(s, s_star, x_thr, epsilon, end)
    raise NoThresholdFound(f"no threshold in [{first}, {end}) validates the bound")


@dataclass(frozen=True)
class InvarianceReport:
    estimates: list[tuple[int, CParamEstimate]]
    max_deviation: float


def report_estimate(
    p: Pmf, window_fraction: float = 0.25, *, truncated: bool = False
) -> CParamEstimate:
    """Decay-rate estimate for use inside reports.

    Short bounded supports are reported as infinite instead of failing, and a
    hazard that climbs through the whole window (super-exponential tail) is
    reported as infinite too.
    """
    if p.mass_deficit == 0.0 and (not truncated or p.size < MIN_SUPPORT):
        return _bounded_estimate(p)
    est = c_param_estimate(p, window_fraction, truncated=truncated)
    hz = np.asarray(est.hazard_series)
    rising = hz.size > 1 and bool(np.all(np.diff(hz) > 0))
    if not est.converged and rising and est.spread > SUPEREXP_SPREAD * est.value:
        return CParamEstimate(
            math.inf, est.window_start, est.window_end, est.hazard_series, False, est.spread
        )
    return est


def max_relative_deviation(values: Sequence[float]) -> float:
    """Largest pairwise ``|a - b| / min(a, b)``; infinite values only agree with
    each other."""
    vals = list(values)
    if not vals:
        return 0.0
    n_inf = sum(math.isinf(v) for v in vals)
    if n_inf == len(vals):
        return 0.0
    if n_inf:
        return math.inf
    lo, hi = min(vals), max(vals)
    if lo <= 0:
        return math.inf if hi > lo else 0.0
    return (hi - lo) / lo


def convolution_invariance_report(
    p: Pmf,
    k_max: int,
    cap: int,
    window_fraction: float = 0.25,
    *,
    truncated: bool = False,
) -> InvarianceReport:
    """Estimate the decay rate of ``p^{*k}`` for ``k = 1 .. k_max``."""
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    estimates = []
    for k in range(1, k_max + 1):
        law = self_convolve(p, k, cap)
        estimates.append((k, report_estimate(law, window_fraction, truncated=truncated)))
    return InvarianceReport(estimates, max_relative_deviation(e.value for _, e in estimates))
