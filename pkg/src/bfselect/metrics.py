"""Accuracy and latency metrics for pointwise Gaussian predictives."""

from __future__ import annotations

import logging
import statistics
import threading
import time
from typing import Callable

import numpy as np
from threadpoolctl import threadpool_limits

from .posterior import PredictiveDistribution

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-12
RELATIVE_GUARD = 1e-9

# serialises timed regions across worker threads
TIMING_LOCK = threading.Lock()


def rmse(a, b) -> float:
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size == 0 or a.size != b.size:
        raise ValueError(f"rmse needs equal non-empty lengths, got {a.size} and {b.size}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def gaussian_kl(mu1, var1, mu2, var2):
    """``KL(N(mu1, var1) || N(mu2, var2))``, elementwise."""
    mu1, var1, mu2, var2 = (np.asarray(v, dtype=float) for v in (mu1, var1, mu2, var2))
    if np.any(var1 <= 0) or np.any(var2 <= 0):
        raise ValueError("variances must be positive")
    kl = 0.5 * np.log(var2 / var1) + (var1 + (mu1 - mu2) ** 2) / (2 * var2) - 0.5
    # log/ratio rounding can go a hair negative for identical inputs
    kl = np.maximum(kl, 0.0)
    return float(kl) if kl.ndim == 0 else kl


def _floored(v: np.ndarray) -> np.ndarray:
    low = v < VARIANCE_FLOOR
    if np.any(low):
        logger.warning("flooring %d variances at %.0e", int(low.sum()), VARIANCE_FLOOR)
        v = np.maximum(v, VARIANCE_FLOOR)
    return v


def pointwise_kl(candidate: PredictiveDistribution, reference: PredictiveDistribution) -> np.ndarray:
    """``KL(candidate || reference)`` at every test point; variances floored."""
    return np.atleast_1d(gaussian_kl(candidate.means, _floored(candidate.variances),
                                     reference.means, _floored(reference.variances)))


def mean_kl(candidate: PredictiveDistribution, reference: PredictiveDistribution) -> float:
    return float(np.mean(pointwise_kl(candidate, reference)))


def nlpd(pred: PredictiveDistribution, targets) -> float:
    targets = np.asarray(targets, dtype=float).reshape(-1)
    if targets.size != len(pred):
        raise ValueError(f"{targets.size} targets for {len(pred)} predictions")
    v = _floored(pred.variances)
    return float(np.mean(0.5 * np.log(2 * np.pi * v) + (targets - pred.means) ** 2 / (2 * v)))


def relative_metric(approx_value: float, full_value: float) -> float | None:
    """``approx / full``; ``None`` when ``full`` is within the zero guard."""
    if abs(full_value) < RELATIVE_GUARD or not np.isfinite(full_value):
        return None
    return approx_value / full_value


def time_predict(task: Callable[[], object], repetitions: int = 5) -> float:
    """Median wall-clock seconds over ``repetitions`` runs after one warm-up.

    BLAS is pinned to a single thread inside the timed region.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    durations = []
    with TIMING_LOCK, threadpool_limits(limits=1):
        task()
        for _ in range(repetitions):
            start = time.perf_counter()
            task()
            durations.append(time.perf_counter() - start)
    return statistics.median(durations)
