"""Importance scores for basis functions and index-set selection.

Dropping the basis functions outside ``kept`` incurs the loss
``int_omega |sum_{j not kept} phi_j(x) m_j|^2 dx``. By the triangle inequality
this is bounded by the sum of per-function scores over the dropped set, so the
scores below rank functions by how much they can contribute on ``omega``:

* ``integral_scores``   -- ``(int_omega phi_j^2) m_j^2``
* ``simplified_scores`` -- ``m_j^2`` (equal-norm case; the shared norm is dropped)
* ``dual_scores``       -- ``(alpha_j / (B_jj + noise / lambda_j))^2``, the
  O(L) diagonal approximation for the information-form posterior.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .basis import Basis, BoxDomain, gauss_legendre_box, sq_norm_integrals
from .posterior import DualPosterior, MomentPosterior, dual_diag_sigma


@dataclass(frozen=True)
class SelectionResult:
    kept: np.ndarray
    scores: np.ndarray
    residual_bound: float

    def __post_init__(self):
        kept = np.asarray(self.kept, dtype=int).reshape(-1)
        scores = np.asarray(self.scores, dtype=float).reshape(-1)
        if kept.size and (kept.min() < 0 or kept.max() >= scores.size):
            raise ValueError("kept indices out of range")
        if np.any(np.diff(kept) <= 0):
            raise ValueError("kept indices must be strictly ascending")
        object.__setattr__(self, "kept", kept)
        object.__setattr__(self, "scores", scores)

    @classmethod
    def from_kept(cls, scores, kept) -> "SelectionResult":
        scores = np.asarray(scores, dtype=float)
        kept = np.unique(np.asarray(kept, dtype=int))
        mask = np.ones(scores.size, dtype=bool)
        mask[kept] = False
        return cls(kept, scores, float(np.sum(scores[mask])))

    @property
    def size(self) -> int:
        return self.scores.size

    @property
    def dropped(self) -> np.ndarray:
        mask = np.ones(self.size, dtype=bool)
        mask[self.kept] = False
        return np.flatnonzero(mask)

    @property
    def rho(self) -> float:
        return self.kept.size / self.size


def integral_scores(mean, basis: Basis, omega: BoxDomain) -> np.ndarray:
    mean = np.asarray(mean, dtype=float).reshape(-1)
    if mean.size != len(basis):
        raise ValueError(f"mean has length {mean.size}, basis has {len(basis)} functions")
    return sq_norm_integrals(basis, omega) * mean**2


def simplified_scores(mean) -> np.ndarray:
    return np.asarray(mean, dtype=float).reshape(-1) ** 2


def dual_scores(dual: DualPosterior) -> np.ndarray:
    return (dual_diag_sigma(dual) * dual.alpha) ** 2


def select_top_k(scores, n_j: int) -> SelectionResult:
    """Keep the ``n_j`` largest scores; ties go to the smaller index."""
    scores = np.asarray(scores, dtype=float).reshape(-1)
    if not 0 <= n_j <= scores.size:
        raise ValueError(f"n_j={n_j} outside [0, {scores.size}]")
    # stable sort on -score keeps smaller indices first among equals
    order = np.argsort(-scores, kind="stable")
    return SelectionResult.from_kept(scores, order[:n_j])


def select_by_threshold(scores, epsilon: float) -> SelectionResult:
    """Drop the longest ascending-score prefix whose cumulative sum stays ``<= epsilon``."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    scores = np.asarray(scores, dtype=float).reshape(-1)
    order = np.argsort(scores, kind="stable")
    n_drop = int(np.searchsorted(np.cumsum(scores[order]), epsilon, side="right"))
    result = SelectionResult.from_kept(scores, order[n_drop:])
    # summation order differs from the cumsum; back off if rounding broke the bound
    while result.residual_bound > epsilon and n_drop > 0:
        n_drop -= 1
        result = SelectionResult.from_kept(scores, order[n_drop:])
    return result


def reduce_moment(posterior: MomentPosterior, selection: SelectionResult) -> MomentPosterior:
    idx = selection.kept
    return MomentPosterior(posterior.mean[idx], posterior.covariance[np.ix_(idx, idx)])


def reduce_dual(dual: DualPosterior, selection: SelectionResult) -> DualPosterior:
    idx = selection.kept
    return DualPosterior(
        dual.alpha[idx],
        dual.b_matrix[np.ix_(idx, idx)],
        dual.prior_eigenvalues[idx],
        dual.noise_variance,
        dual.count,
    )


def exact_loss(full_mean, selection: SelectionResult, basis: Basis, omega: BoxDomain,
               points_per_dim: int = 64) -> float:
    """Quadrature value of ``int_omega |sum_{j dropped} phi_j(x) m_j|^2 dx``."""
    mean = np.asarray(full_mean, dtype=float).reshape(-1)
    dropped = selection.dropped
    if dropped.size == 0 or omega.measure == 0.0:
        return 0.0
    nodes, weights = gauss_legendre_box(omega, points_per_dim)
    residual = basis.evaluate(nodes)[:, dropped] @ mean[dropped]
    return float(weights @ residual**2)


def oracle_best_subset(full_mean, basis: Basis, omega: BoxDomain, n_j: int,
                       points_per_dim: int = 64, budget: int = 10**6) -> np.ndarray:
    """Exhaustive minimiser of :func:`exact_loss` over all subsets of size ``n_j``.

    Ties resolve to the lexicographically first subset. Intended for tests.
    """
    mean = np.asarray(full_mean, dtype=float).reshape(-1)
    L = mean.size
    if not 0 <= n_j <= L:
        raise ValueError(f"n_j={n_j} outside [0, {L}]")
    if math.comb(L, n_j) > budget:
        raise ValueError(f"C({L}, {n_j}) exceeds the enumeration budget {budget}")
    nodes, weights = gauss_legendre_box(omega, points_per_dim)
    # contributions of each function at the nodes; loss = w . (total - kept)^2
    contrib = basis.evaluate(nodes) * mean[None, :]
    total = contrib.sum(axis=1)
    best, best_loss = None, np.inf
    for subset in itertools.combinations(range(L), n_j):
        residual = total - contrib[:, list(subset)].sum(axis=1)
        loss = float(weights @ residual**2)
        if loss < best_loss:
            best, best_loss = subset, loss
    return np.array(best, dtype=int)
