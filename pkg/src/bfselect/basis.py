"""Basis function families and their squared-norm integrals over boxes.

Two families are provided:

* :class:`RbfBasis` -- ``phi_i(x) = exp(-||x - c_i||^2 / l^2)`` with a shared
  lengthscale ``l``.
* :class:`HilbertBasis` -- Laplacian eigenfunctions with Dirichlet boundary
  conditions on a box, ``phi_i(x) = prod_d h_d^{-1/2} sin(pi i_d (x_d - lo_d) / W_d)``
  where ``W_d = 2 h_d`` is the box width. These are orthonormal on the box.

Indices are 0-based throughout the Python API.

Any object exposing ``dim``, ``__len__`` and ``evaluate(X) -> (N, L) array`` can
be used as a basis. Bases without a closed-form ``sq_norm_integrals`` method fall
back to Gauss-Legendre quadrature in :func:`sq_norm_integral`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
from scipy.special import erfc


class BasisError(ValueError):
    pass


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box ``[lower_0, upper_0] x ... x [lower_{d-1}, upper_{d-1}]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1:
            raise BasisError("lower and upper must be 1-D of equal length >= 1")
        if np.any(lower > upper):
            raise BasisError(f"lower {lower} exceeds upper {upper}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> "BoxDomain":
        return cls(np.full(dim, lo), np.full(dim, hi))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def measure(self) -> float:
        return float(np.prod(self.widths))

    def contains(self, X, tol: float = 1e-12) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.all((X >= self.lower - tol) & (X <= self.upper + tol), axis=1)

    def contains_box(self, other: "BoxDomain", tol: float = 1e-12) -> bool:
        return bool(
            np.all(other.lower >= self.lower - tol)
            and np.all(other.upper <= self.upper + tol)
        )


class Basis(Protocol):
    dim: int

    def __len__(self) -> int: ...

    def evaluate(self, X: np.ndarray) -> np.ndarray: ...


def _as_points(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        # a flat vector is a batch of scalars only in 1-D
        X = X.reshape(-1, 1) if dim == 1 else X.reshape(1, -1)
    if X.ndim != 2 or (X.shape[0] > 0 and X.shape[1] != dim):
        raise BasisError(f"expected points of dimension {dim}, got shape {X.shape}")
    return X.reshape(-1, dim)


@dataclass(frozen=True)
class RbfBasis:
    centers: np.ndarray
    lengthscale: float

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float)
        if centers.ndim == 1:
            centers = centers.reshape(-1, 1)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise BasisError("need at least one center")
        if not self.lengthscale > 0:
            raise BasisError("lengthscale must be positive")
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "lengthscale", float(self.lengthscale))

    @classmethod
    def equidistant(cls, lo: float, hi: float, num: int, lengthscale: float) -> "RbfBasis":
        """``num`` centers on ``[lo, hi]``, endpoints included."""
        return cls(np.linspace(lo, hi, num).reshape(-1, 1), lengthscale)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def __len__(self) -> int:
        return self.centers.shape[0]

    def evaluate(self, X) -> np.ndarray:
        X = _as_points(X, self.dim)
        sq = np.zeros((X.shape[0], len(self)))
        for d in range(self.dim):
            sq += (X[:, d : d + 1] - self.centers[None, :, d]) ** 2
        return np.exp(-sq / self.lengthscale**2)

    def sq_norm_integrals(self, omega: BoxDomain) -> np.ndarray:
        # exp(-2 (x - c)^2 / l^2) integrates to l sqrt(pi/8) [erf(sqrt2 (x - c)/l)]
        _check_dim(self, omega)
        scale = np.sqrt(2.0) / self.lengthscale
        hi = scale * (omega.upper[None, :] - self.centers)
        lo = scale * (omega.lower[None, :] - self.centers)
        per_dim = self.lengthscale * np.sqrt(np.pi / 8.0) * erf_diff(lo, hi)
        return np.prod(np.maximum(per_dim, 0.0), axis=1)


def erf_diff(a, b):
    """``erf(b) - erf(a)`` for ``a <= b`` without cancellation in the tails."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = np.empty(a.shape)
    pos, neg = a >= 0, b <= 0
    mid = ~(pos | neg)
    out[pos] = erfc(a[pos]) - erfc(b[pos])
    out[neg] = erfc(-b[neg]) - erfc(-a[neg])
    out[mid] = 2.0 - erfc(-a[mid]) - erfc(b[mid])
    return out


def grid_indices(counts: Sequence[int]) -> np.ndarray:
    """Row-major multi-indices ``1..counts[d]`` per dimension, last dimension fastest."""
    counts = [int(c) for c in counts]
    if any(c < 1 for c in counts):
        raise BasisError(f"per-dimension counts must be >= 1, got {counts}")
    return np.array(list(itertools.product(*(range(1, c + 1) for c in counts))), dtype=int)


@dataclass(frozen=True)
class HilbertBasis:
    domain: BoxDomain
    indices: np.ndarray

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=int)
        if indices.ndim == 1:
            indices = indices.reshape(-1, 1)
        if indices.ndim != 2 or indices.shape[0] < 1:
            raise BasisError("need at least one multi-index")
        if indices.shape[1] != self.domain.dim:
            raise BasisError("multi-index length must match domain dimension")
        if np.any(indices < 1):
            raise BasisError("multi-index entries must be >= 1")
        if np.any(self.domain.widths <= 0):
            raise BasisError("model box must have positive width in every dimension")
        indices.setflags(write=False)
        object.__setattr__(self, "indices", indices)

    @classmethod
    def from_counts(cls, domain: BoxDomain, counts: Sequence[int]) -> "HilbertBasis":
        return cls(domain, grid_indices(counts))

    @property
    def dim(self) -> int:
        return self.domain.dim

    def __len__(self) -> int:
        return self.indices.shape[0]

    @property
    def frequencies(self) -> np.ndarray:
        """Per-dimension angular frequencies ``pi i_d / W_d``, shape (L, d)."""
        return np.pi * self.indices / self.domain.widths[None, :]

    def evaluate(self, X) -> np.ndarray:
        X = _as_points(X, self.dim)
        shifted = X - self.domain.lower[None, :]
        norm = np.prod(1.0 / np.sqrt(self.domain.widths / 2.0))
        out = np.full((X.shape[0], len(self)), norm)
        freqs = self.frequencies
        # one dimension at a time keeps the peak allocation at N x L
        for d in range(self.dim):
            out *= np.sin(shifted[:, d : d + 1] * freqs[None, :, d])
        return out

    def sq_norm_integrals(self, omega: BoxDomain) -> np.ndarray:
        _check_dim(self, omega)
        if not self.domain.contains_box(omega):
            raise BasisError("omega must lie inside the model box for a Hilbert basis")
        k = self.frequencies
        a = (omega.lower - self.domain.lower)[None, :]
        b = (omega.upper - self.domain.lower)[None, :]
        # int sin^2(k t) dt = t/2 - sin(2 k t) / (4 k)
        per_dim = (b - a) / 2.0 - (np.sin(2 * k * b) - np.sin(2 * k * a)) / (4 * k)
        per_dim = per_dim / (self.domain.widths[None, :] / 2.0)
        return np.prod(np.maximum(per_dim, 0.0), axis=1)


def _check_dim(basis, omega: BoxDomain) -> None:
    if omega.dim != basis.dim:
        raise BasisError(f"omega has dimension {omega.dim}, basis has {basis.dim}")


def _check_index(basis, i: int) -> None:
    if not 0 <= i < len(basis):
        raise BasisError(f"basis index {i} out of range for L={len(basis)}")


def eval_basis(basis: Basis, i: int, x) -> float:
    """Value of basis function ``i`` at a single point ``x``."""
    _check_index(basis, i)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (basis.dim,):
        raise BasisError(f"point has shape {x.shape}, expected ({basis.dim},)")
    return float(basis.evaluate(x.reshape(1, -1))[0, i])


def design_matrix(basis: Basis, X) -> np.ndarray:
    """``Phi[n, i] = phi_i(X[n])``, shape (N, L)."""
    X = _as_points(X, basis.dim)
    if X.shape[0] == 0:
        return np.zeros((0, len(basis)))
    return basis.evaluate(X)


def gauss_legendre_box(omega: BoxDomain, points_per_dim: int):
    """Tensor-product Gauss-Legendre nodes and weights on ``omega``."""
    if points_per_dim < 2:
        raise BasisError("points_per_dim must be >= 2")
    t, w = np.polynomial.legendre.leggauss(points_per_dim)
    half = omega.widths / 2.0
    mid = (omega.upper + omega.lower) / 2.0
    nodes_1d = [mid[d] + half[d] * t for d in range(omega.dim)]
    weights_1d = [half[d] * w for d in range(omega.dim)]
    nodes = np.stack([g.ravel() for g in np.meshgrid(*nodes_1d, indexing="ij")], axis=1)
    weights = np.ones(1)
    for wd in weights_1d:
        weights = np.multiply.outer(weights, wd).ravel()
    return nodes, weights


def sq_norm_integrals_quadrature(basis: Basis, omega: BoxDomain, points_per_dim: int = 64) -> np.ndarray:
    """Quadrature estimate of ``int_omega phi_i^2`` for every ``i``."""
    _check_dim(basis, omega)
    nodes, weights = gauss_legendre_box(omega, points_per_dim)
    if omega.measure == 0.0:
        return np.zeros(len(basis))
    out = np.zeros(len(basis))
    for start in range(0, nodes.shape[0], 8192):
        phi = basis.evaluate(nodes[start : start + 8192])
        out += weights[start : start + 8192] @ phi**2
    return out


def sq_norm_integral_quadrature(basis: Basis, i: int, omega: BoxDomain, points_per_dim: int = 64) -> float:
    _check_index(basis, i)
    return float(sq_norm_integrals_quadrature(basis, omega, points_per_dim)[i])


def sq_norm_integrals(basis: Basis, omega: BoxDomain, points_per_dim: int = 64) -> np.ndarray:
    """``int_omega |phi_i(x)|^2 dx`` for all ``i``; closed form when the basis has one."""
    closed = getattr(basis, "sq_norm_integrals", None)
    if closed is not None:
        if omega.measure == 0.0:
            _check_dim(basis, omega)
            if isinstance(basis, HilbertBasis) and not basis.domain.contains_box(omega):
                raise BasisError("omega must lie inside the model box for a Hilbert basis")
            return np.zeros(len(basis))
        return closed(omega)
    return sq_norm_integrals_quadrature(basis, omega, points_per_dim)


def sq_norm_integral(basis: Basis, i: int, omega: BoxDomain) -> float:
    _check_index(basis, i)
    return float(sq_norm_integrals(basis, omega)[i])
