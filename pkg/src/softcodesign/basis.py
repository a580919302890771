"""Gaussian RBF basis spaces and the precomputed basis matrices.

Scalar fields are spanned by isotropic Gaussians placed at the midpoints of
a uniform grid partition of an axis-aligned box. Vector fields use one
Gaussian per (center, axis) pair, so a vector coefficient block has
``d * n_rbf`` entries ordered axis-major: ``q[a * n_rbf + j]`` scales
center ``j`` along axis ``a``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import InvalidArgumentError, InvalidSpecError

__all__ = [
    "RbfGridSpec",
    "place_rbf_centers",
    "eval_scalar_basis",
    "assemble_scalar_basis_matrix",
    "assemble_vector_basis_matrix",
    "basis_gradients",
    "sup_gradient_estimate",
    "GradientBound",
]


@dataclass(frozen=True)
class RbfGridSpec:
    """Uniform grid of RBF centers over a box.

    Parameters
    ----------
    dims_per_axis : tuple of int
        Number of centers along each axis.
    lo, hi : tuple of float
        Box corners.
    overlap : float
        Width multiplier; ``sigma = overlap * max axis spacing``.
    """

    dims_per_axis: tuple
    lo: tuple
    hi: tuple
    overlap: float = 1.0

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims_per_axis)
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "dims_per_axis", dims)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if not dims or len(lo) != len(dims) or len(hi) != len(dims):
            raise InvalidSpecError("dims, lo and hi must share one non-zero length")
        if any(n < 1 for n in dims):
            raise InvalidSpecError(f"dims_per_axis must be >= 1, got {dims}")
        if any(h - l <= 0 for l, h in zip(lo, hi)):
            raise InvalidSpecError("domain extents must be strictly positive")
        if not self.overlap > 0:
            raise InvalidSpecError("overlap must be positive")

    @classmethod
    def unit(cls, dims_per_axis: Sequence[int], overlap: float = 1.0) -> "RbfGridSpec":
        d = len(dims_per_axis)
        return cls(tuple(dims_per_axis), (0.0,) * d, (1.0,) * d, overlap)

    @property
    def dim(self) -> int:
        return len(self.dims_per_axis)

    @property
    def n_rbf(self) -> int:
        return int(np.prod(self.dims_per_axis))

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.hi) - np.asarray(self.lo)) / np.asarray(self.dims_per_axis)

    @property
    def sigma(self) -> float:
        return float(self.overlap * self.spacing.max())


def place_rbf_centers(spec: RbfGridSpec):
    """Return ``(centers, sigma)`` for a grid spec.

    Centers sit at cell midpoints, first axis varying fastest.
    """
    h = spec.spacing
    axes = [spec.lo[a] + (np.arange(n) + 0.5) * h[a] for a, n in enumerate(spec.dims_per_axis)]
    mesh = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([m.ravel(order="F") for m in mesh], axis=1)
    return centers, spec.sigma


def eval_scalar_basis(x, center, sigma: float) -> float:
    """Gaussian ``exp(-|x - center|^2 / (2 sigma^2))``."""
    if not sigma > 0:
        raise InvalidArgumentError("sigma must be positive")
    diff = np.asarray(x, dtype=float) - np.asarray(center, dtype=float)
    return float(np.exp(-np.dot(diff, diff) / (2.0 * sigma * sigma)))


def _check_points(points, d=None) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0 or pts.shape[0] == 0:
        raise InvalidArgumentError("points must be non-empty")
    if d is not None and pts.shape[1] != d:
        raise InvalidArgumentError(f"point dimension {pts.shape[1]} != basis dimension {d}")
    return pts


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def assemble_scalar_basis_matrix(points, spec: RbfGridSpec) -> np.ndarray:
    """Basis matrix ``B[j, i] = b_i(points[j])``."""
    pts = _check_points(points, spec.dim)
    centers, sigma = place_rbf_centers(spec)
    return np.exp(-_sq_dists(pts, centers) / (2.0 * sigma * sigma))


def assemble_vector_basis_matrix(nodes, spec: RbfGridSpec, d: int | None = None) -> np.ndarray:
    """Vector basis matrix of shape ``(d * n_nodes, d * n_rbf)``.

    Rows are node-major (``row = i * d + axis``) so ``(A @ q).reshape(-1, d)``
    gives per-node displacements.
    """
    pts = _check_points(nodes)
    if d is None:
        d = pts.shape[1]
    if d != pts.shape[1] or d != spec.dim:
        raise InvalidArgumentError(
            f"dimension mismatch: d={d}, nodes {pts.shape[1]}-D, spec {spec.dim}-D"
        )
    b = assemble_scalar_basis_matrix(pts, spec)
    n_nodes, n_rbf = b.shape
    A = np.zeros((d * n_nodes, d * n_rbf))
    for axis in range(d):
        A[axis::d, axis * n_rbf:(axis + 1) * n_rbf] = b
    return A


def basis_gradients(points, spec: RbfGridSpec) -> np.ndarray:
    """Spatial gradients ``G[s, j, beta] = d b_j / d x_beta`` at ``points``."""
    pts = _check_points(points, spec.dim)
    centers, sigma = place_rbf_centers(spec)
    diff = pts[:, None, :] - centers[None, :, :]
    vals = np.exp(-np.einsum("ijk,ijk->ij", diff, diff) / (2.0 * sigma * sigma))
    return -(vals[:, :, None] * diff) / (sigma * sigma)


class GradientBound:
    """Precomputed evaluator of the sup-norm Jacobian bound at fixed samples.

    The bound is the maximum over samples of the infinity operator norm
    (max absolute row sum) of the Jacobian of the displacement field.
    """

    def __init__(self, spec: RbfGridSpec, samples):
        self.spec = spec
        self._grads = basis_gradients(samples, spec)

    def __call__(self, q) -> float:
        d, n = self.spec.dim, self.spec.n_rbf
        Q = np.asarray(q, dtype=float).reshape(d, n)
        # J[s, alpha, beta] = sum_j Q[alpha, j] * G[s, j, beta]
        J = np.einsum("aj,sjb->sab", Q, self._grads)
        return float(np.abs(J).sum(axis=2).max())


def sup_gradient_estimate(spec: RbfGridSpec, q, samples) -> float:
    """Max over ``samples`` of the infinity operator norm of the displacement Jacobian."""
    q = np.asarray(q, dtype=float)
    if q.size != spec.dim * spec.n_rbf:
        raise InvalidArgumentError(f"q has {q.size} entries, expected {spec.dim * spec.n_rbf}")
    return GradientBound(spec, samples)(q)
