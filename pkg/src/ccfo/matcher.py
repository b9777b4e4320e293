"""Similarity scores between orientation fields and the accept/reject rule."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, ParameterMismatchError, ShapeMismatchError
from .orientation import OrientationField

METRICS = ("coherence", "product", "fft")
DEFAULT_THRESHOLD = 0.85

ACCEPT = "accept"
REJECT = "reject"


@dataclass(frozen=True)
class MatchConfig:
    metric: str = "coherence"
    threshold: float = DEFAULT_THRESHOLD
    search_lags: bool = False

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}; choose from {', '.join(METRICS)}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must lie in [0, 1], got {self.threshold}")


@dataclass(frozen=True)
class MatchResult:
    score: float
    decision: str
    best_lag: Optional[tuple[int, int]] = None

    @property
    def accepted(self):
        return self.decision == ACCEPT


def _pair(t, i):
    t = np.asarray(t, dtype=np.float64)
    i = np.asarray(i, dtype=np.float64)
    if t.shape != i.shape:
        raise ShapeMismatchError(f"operand shapes differ: {t.shape} vs {i.shape}")
    if t.ndim != 2 or t.size == 0:
        raise ShapeMismatchError(f"operands must be non-empty 2-D matrices, got {t.shape}")
    return t, i


def correlate_product(t, i) -> float:
    """Sum of elementwise products divided by the element count."""
    t, i = _pair(t, i)
    return float(np.sum(t * i) / t.size)


def correlation_surface(t, i) -> np.ndarray:
    """Circular cross-correlation ``CC[s] = sum_p t[p] * i[p + s] / (n m)``.

    Computed as the inverse DFT of ``conj(F(t)) * F(i)``; numpy's FFT
    handles any size, so no padding is involved.
    """
    t, i = _pair(t, i)
    cross = np.conj(np.fft.fft2(t)) * np.fft.fft2(i)
    return np.fft.ifft2(cross).real / t.size


def correlate_fft(t, i, search_lags: bool = False) -> tuple[float, tuple[int, int]]:
    """Return the correlation value and its lag.

    Without lag search this is the (0, 0) entry of the surface. With lag
    search it is the surface maximum; values within a few ulps of the
    maximum count as ties and the smallest (row, col) wins.
    """
    surface = correlation_surface(t, i)
    if not search_lags:
        return float(surface[0, 0]), (0, 0)
    peak = surface.max()
    tol = 1e-12 * max(1.0, float(np.abs(surface).max()))
    flat = np.flatnonzero(surface >= peak - tol)[0]
    row, col = divmod(int(flat), surface.shape[1])
    return float(surface[row, col]), (row, col)


def check_compatible(t: OrientationField, i: OrientationField) -> None:
    if t.block_size != i.block_size:
        raise ParameterMismatchError(f"block size differs: {t.block_size} vs {i.block_size}")
    if t.mode != i.mode:
        raise ParameterMismatchError(f"estimator mode differs: {t.mode} vs {i.mode}")
    if t.shape != i.shape:
        raise ShapeMismatchError(f"grid differs: {t.rows}x{t.cols} vs {i.rows}x{i.cols}")


def coherence_score(t: OrientationField, i: OrientationField) -> float:
    """Coherence-weighted agreement of two orientation fields, in [0, 1].

    Each block contributes ``(1 + cos 2(dtheta)) / 2`` weighted by the
    product of both coherences, so angles that differ by pi agree fully.
    """
    if t.block_size != i.block_size:
        raise ShapeMismatchError(f"block size differs: {t.block_size} vs {i.block_size}")
    if t.shape != i.shape:
        raise ShapeMismatchError(f"grid differs: {t.rows}x{t.cols} vs {i.rows}x{i.cols}")
    w = t.coherence * i.coherence
    total = np.sum(w)
    if total <= 0:
        return 0.0
    agree = 1.0 + np.cos(2.0 * np.abs(t.theta - i.theta))
    score = np.sum(w * agree) / (2.0 * total)
    return float(min(1.0, max(0.0, score)))


def decide(score: float, cfg: MatchConfig = MatchConfig()) -> str:
    """Accept at or above the threshold; anything less is an intruder."""
    return ACCEPT if score >= cfg.threshold else REJECT


def match(t: OrientationField, i: OrientationField, cfg: MatchConfig = MatchConfig()) -> MatchResult:
    """Score a probe field ``i`` against a template ``t`` with the configured metric.

    The product and fft metrics operate on the raw angle rasters.
    """
    check_compatible(t, i)
    lag = None
    if cfg.metric == "coherence":
        score = coherence_score(t, i)
    elif cfg.metric == "product":
        score = correlate_product(t.theta, i.theta)
    else:
        score, lag = correlate_fft(t.theta, i.theta, cfg.search_lags)
    return MatchResult(score, decide(score, cfg), lag)
