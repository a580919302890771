"""Expressiveness analysis of shape encoders.

Random design vectors morph a reference sphere cloud; the resulting shapes
are compared with the symmetric Chamfer distance, embedded with classical
MDS and summarized by the 95 % intrinsic dimensionality and per-sample
novelty (nearest-neighbor distance within the sample).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, TransformerMixin

from .baselines import MlpSpec, mlp_forward, mlp_param_count
from .basis import GradientBound, RbfGridSpec, assemble_vector_basis_matrix
from .exceptions import DegenerateInputError, InvalidArgumentError
from .geometry import build_sphere_cloud

__all__ = [
    "SpatialGrid",
    "nearest_distances",
    "nearest_distances_brute",
    "chamfer_distance",
    "pairwise_chamfer",
    "BasisMorpher",
    "NeuralMorpher",
    "sample_design_distances",
    "MdsResult",
    "classical_mds",
    "ClassicalMDS",
    "d95",
    "novelty_scores",
]

VARIANCE_LEVEL = 0.95


# ------------------------------------------------------------ nearest neighbors
#
# Points are padded to three coordinates so one kernel serves 1-, 2- and 3-D
# input. Padding adds exact zeros, which leaves every squared distance as is.


def _pad3(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2 or p.shape[0] == 0:
        raise InvalidArgumentError("point sets must be nonempty (m, d) arrays")
    if p.shape[1] > 3:
        raise InvalidArgumentError("at most 3 coordinates are supported")
    out = np.zeros((p.shape[0], 3))
    out[:, : p.shape[1]] = p
    return out


@njit(cache=True, nogil=True)
def _sq(p, q, i, j):
    dx = p[i, 0] - q[j, 0]
    dy = p[i, 1] - q[j, 1]
    dz = p[i, 2] - q[j, 2]
    return dx * dx + dy * dy + dz * dz


@njit(cache=True, nogil=True)
def _nn_brute(p, q):
    out = np.empty(p.shape[0])
    for i in range(p.shape[0]):
        best = np.inf
        for j in range(q.shape[0]):
            d2 = _sq(p, q, i, j)
            if d2 < best:
                best = d2
        out[i] = np.sqrt(best)
    return out


@njit(cache=True, nogil=True)
def _build_cells(q, lo, h, shape):
    nc = shape[0] * shape[1] * shape[2]
    cell = np.empty(q.shape[0], dtype=np.int64)
    for j in range(q.shape[0]):
        c = 0
        stride = 1
        for a in range(3):
            k = int((q[j, a] - lo[a]) / h)
            k = min(max(k, 0), shape[a] - 1)
            c += k * stride
            stride *= shape[a]
        cell[j] = c
    start = np.zeros(nc + 1, dtype=np.int64)
    for j in range(q.shape[0]):
        start[cell[j] + 1] += 1
    for c in range(nc):
        start[c + 1] += start[c]
    order = np.empty(q.shape[0], dtype=np.int64)
    fill = start[:-1].copy()
    for j in range(q.shape[0]):
        order[fill[cell[j]]] = j
        fill[cell[j]] += 1
    return start, order


@njit(cache=True, nogil=True)
def _nn_grid(p, q, lo, h, shape, start, order):
    out = np.empty(p.shape[0])
    home = np.empty(3, dtype=np.int64)
    max_ring = max(shape[0], max(shape[1], shape[2]))
    for i in range(p.shape[0]):
        for a in range(3):
            k = int(np.floor((p[i, a] - lo[a]) / h))
            home[a] = min(max(k, 0), shape[a] - 1)
        best = np.inf
        for r in range(max_ring + 1):
            for cz in range(home[2] - r, home[2] + r + 1):
                if cz < 0 or cz >= shape[2]:
                    continue
                for cy in range(home[1] - r, home[1] + r + 1):
                    if cy < 0 or cy >= shape[1]:
                        continue
                    edge_zy = abs(cz - home[2]) == r or abs(cy - home[1]) == r
                    for cx in range(home[0] - r, home[0] + r + 1):
                        if cx < 0 or cx >= shape[0]:
                            continue
                        # only the shell of the current ring is new
                        if not edge_zy and abs(cx - home[0]) != r:
                            continue
                        c = cx + shape[0] * (cy + shape[1] * cz)
                        for t in range(start[c], start[c + 1]):
                            d2 = _sq(p, q, i, order[t])
                            if d2 < best:
                                best = d2
            # distance from p to the outside of the visited block of cells
            bound = np.inf
            covered = True
            for a in range(3):
                lo_k = home[a] - r
                hi_k = home[a] + r + 1
                if lo_k > 0:
                    covered = False
                    g = p[i, a] - (lo[a] + lo_k * h)
                    bound = min(bound, max(g, 0.0))
                if hi_k < shape[a]:
                    covered = False
                    g = (lo[a] + hi_k * h) - p[i, a]
                    bound = min(bound, max(g, 0.0))
            if covered or best <= bound * bound:
                break
        out[i] = np.sqrt(best)
    return out


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform bucket grid over a point set for exact nearest-neighbor queries.

    Parameters
    ----------
    points : array of shape (m, d), d <= 3
    lo, hi : optional corners of the gridded box; default to the point bounds.
        Queries outside the box are still exact.
    per_cell : target mean number of points per occupied-volume cell.
    """

    points: np.ndarray
    lo: np.ndarray
    h: float
    shape: np.ndarray
    start: np.ndarray
    order: np.ndarray

    @classmethod
    def build(cls, points, lo=None, hi=None, per_cell: float = 2.0) -> "SpatialGrid":
        q = _pad3(points)
        lo = q.min(axis=0) if lo is None else np.minimum(_pad3(np.atleast_2d(lo))[0], q.min(axis=0))
        hi = q.max(axis=0) if hi is None else np.maximum(_pad3(np.atleast_2d(hi))[0], q.max(axis=0))
        ext = np.maximum(hi - lo, 0.0)
        span = float(ext.max())
        if span <= 0:
            span = 1.0
        active = int(np.sum(ext > 1e-12 * span)) or 1
        per_axis = max(1, int(np.ceil((q.shape[0] / per_cell) ** (1.0 / active))))
        h = span / per_axis
        # one spare cell so rounding never leaves a point outside the last cell
        shape = np.floor(ext / h).astype(np.int64) + 1
        start, order = _build_cells(q, lo, h, shape)
        return cls(q, lo, h, shape, start, order)

    def query(self, points) -> np.ndarray:
        """Distance from every query point to its nearest grid point."""
        p = _pad3(points)
        return _nn_grid(p, self.points, self.lo, self.h, self.shape, self.start, self.order)


def nearest_distances(P, Q) -> np.ndarray:
    """For every point of ``P``, the Euclidean distance to the nearest point of ``Q``."""
    return SpatialGrid.build(Q).query(P)


def nearest_distances_brute(P, Q) -> np.ndarray:
    return _nn_brute(_pad3(P), _pad3(Q))


def chamfer_distance(P, Q) -> float:
    """Symmetric, non-squared Chamfer distance between two point sets.

    ``0.5 * (mean_p min_q |p - q| + mean_q min_p |q - p|)``.
    """
    P, Q = _pad3(P), _pad3(Q)
    return 0.5 * (float(nearest_distances(P, Q).mean()) + float(nearest_distances(Q, P).mean()))


@njit(cache=True, nogil=True)
def _pairwise(clouds, lo, h, shape, starts, orders, out):
    n = clouds.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            a = _nn_grid(clouds[i], clouds[j], lo[j], h[j], shape[j], starts[j], orders[j]).mean()
            b = _nn_grid(clouds[j], clouds[i], lo[i], h[i], shape[i], starts[i], orders[i]).mean()
            d = 0.5 * (a + b)
            out[i, j] = d
            out[j, i] = d


def pairwise_chamfer(clouds) -> np.ndarray:
    """Symmetric Chamfer distance matrix of a stack of clouds ``(n, m, d)``.

    Each cloud gets its own bucket grid, built once and reused for every pair.
    """
    C = np.asarray(clouds, dtype=float)
    if C.ndim != 3 or C.shape[0] < 1 or C.shape[1] < 1:
        raise InvalidArgumentError("clouds must have shape (n, m, d)")
    n, m = C.shape[:2]
    padded = np.zeros((n, m, 3))
    padded[:, :, : C.shape[2]] = C
    grids = [SpatialGrid.build(padded[i]) for i in range(n)]
    nc = max(g.start.size for g in grids)
    lo = np.stack([g.lo for g in grids])
    h = np.array([g.h for g in grids])
    shape = np.stack([g.shape for g in grids])
    starts = np.zeros((n, nc), dtype=np.int64)
    orders = np.stack([g.order for g in grids])
    for i, g in enumerate(grids):
        starts[i, : g.start.size] = g.start
    D = np.zeros((n, n))
    _pairwise(padded, lo, h, shape, starts, orders, D)
    return D


# ------------------------------------------------------------------ morphers


class BasisMorpher(TransformerMixin, BaseEstimator):
    """Morph a reference point cloud with a Gaussian RBF displacement field.

    ``transform`` maps coefficient rows ``q`` of length ``d * n_rbf`` to
    morphed clouds. ``q`` is rescaled so the sup-norm Jacobian bound over
    the cloud does not exceed ``gamma``; ``gamma=None`` disables the clamp.
    """

    def __init__(self, dims_per_axis=(2, 2, 2), gamma: Optional[float] = 0.3, overlap: float = 1.0,
                 lo=None, hi=None):
        self.dims_per_axis = dims_per_axis
        self.gamma = gamma
        self.overlap = overlap
        self.lo = lo
        self.hi = hi

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        d = X.shape[1]
        lo = tuple(X.min(axis=0)) if self.lo is None else tuple(self.lo)
        hi = tuple(X.max(axis=0)) if self.hi is None else tuple(self.hi)
        self.spec_ = RbfGridSpec(tuple(self.dims_per_axis), lo, hi, self.overlap)
        if self.spec_.dim != d:
            raise InvalidArgumentError("basis dimension does not match the cloud")
        self.reference_ = X.copy()
        self.A_ = assemble_vector_basis_matrix(X, self.spec_)
        self.grad_bound_ = GradientBound(self.spec_, X)
        self.n_params_ = self.A_.shape[1]
        return self

    def morph(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(self.n_params_)
        g = self.grad_bound_(q) if self.gamma is not None else 0.0
        if self.gamma is not None and g > self.gamma:
            q = q * (self.gamma / g)
        return self.reference_ + (self.A_ @ q).reshape(self.reference_.shape)

    def transform(self, X) -> np.ndarray:
        return np.stack([self.morph(q) for q in np.atleast_2d(X)])


class NeuralMorpher(TransformerMixin, BaseEstimator):
    """Morph a reference cloud with an MLP displacement field.

    Inputs are normalized to ``[-1, 1]``; the displacement is
    ``gamma * tanh(f(x)) * scale`` with ``scale`` half the smallest box side.
    """

    def __init__(self, layer_sizes=(3, 4, 3), gamma: float = 0.3):
        self.layer_sizes = layer_sizes
        self.gamma = gamma

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        self.net_ = MlpSpec(tuple(self.layer_sizes))
        if self.net_.n_in != X.shape[1] or self.net_.n_out != X.shape[1]:
            raise InvalidArgumentError("network input and output width must equal the cloud dimension")
        self.reference_ = X.copy()
        lo, hi = X.min(axis=0), X.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        self.inputs_ = 2.0 * (X - lo) / span - 1.0
        self.scale_ = 0.5 * float(span.min())
        self.n_params_ = mlp_param_count(self.net_)
        return self

    def morph(self, w) -> np.ndarray:
        out = mlp_forward(self.net_, w, self.inputs_)
        return self.reference_ + self.gamma * self.scale_ * np.tanh(out)

    def transform(self, X) -> np.ndarray:
        return np.stack([self.morph(w) for w in np.atleast_2d(X)])


def sample_design_distances(morpher, n_samples: int = 600, cloud_size: int = 200, seed=0,
                            reference=None, return_clouds: bool = False):
    """Chamfer distance matrix of ``n_samples`` randomly morphed spheres.

    Parameters are drawn from ``Uniform[-1, 1]``. ``morpher`` is an unfitted
    :class:`BasisMorpher` or :class:`NeuralMorpher`; it is fitted to the
    reference cloud (unit sphere of ``cloud_size`` points by default).
    """
    if n_samples < 2:
        raise InvalidArgumentError("need at least two samples")
    ref = build_sphere_cloud(cloud_size) if reference is None else np.asarray(reference, dtype=float)
    m = morpher.fit(ref)
    rng = np.random.default_rng(seed)
    C = rng.uniform(-1.0, 1.0, size=(n_samples, m.n_params_))
    clouds = m.transform(C)
    D = pairwise_chamfer(clouds)
    return (D, clouds) if return_clouds else D


# ---------------------------------------------------------------------- MDS


@dataclass(frozen=True)
class MdsResult:
    eigenvalues: np.ndarray  # descending
    cumulative: np.ndarray  # positive-variance fractions, non-decreasing, last = 1
    d95: int
    embedding: Optional[np.ndarray] = None


def _check_distance_matrix(D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] < 1:
        raise InvalidArgumentError("distance matrix must be square")
    scale = max(1.0, float(np.abs(D).max()))
    if not np.allclose(D, D.T, rtol=0, atol=1e-12 * scale):
        raise InvalidArgumentError("distance matrix must be symmetric")
    if np.any(np.abs(np.diag(D)) > 1e-12 * scale) or np.any(D < 0):
        raise InvalidArgumentError("distance matrix needs a zero diagonal and nonnegative entries")
    return 0.5 * (D + D.T)


def _cumulative(eigenvalues) -> np.ndarray:
    pos = np.clip(eigenvalues, 0.0, None)
    total = pos.sum()
    if total <= 0:
        raise DegenerateInputError("no positive eigenvalues")
    cum = np.cumsum(pos) / total
    cum[-1] = 1.0
    return cum


def d95(result, level: float = VARIANCE_LEVEL) -> int:
    """Smallest number of components whose positive eigenvalues explain ``level`` of the variance.

    Accepts an :class:`MdsResult` or a plain eigenvalue sequence.
    """
    vals = result.eigenvalues if isinstance(result, MdsResult) else np.asarray(result, dtype=float)
    vals = np.sort(np.asarray(vals, dtype=float))[::-1]
    cum = _cumulative(vals)
    return int(np.searchsorted(cum, level, side="left")) + 1


def classical_mds(D, level: float = VARIANCE_LEVEL) -> MdsResult:
    """Eigen-decomposition of ``-0.5 J D^2 J``; negative eigenvalues drop out of the variance."""
    D = _check_distance_matrix(D)
    n = D.shape[0]
    D2 = D * D
    # double centering without forming J
    B = -0.5 * (D2 - D2.mean(axis=0) - D2.mean(axis=1)[:, None] + D2.mean())
    B = 0.5 * (B + B.T)
    vals, vecs = np.linalg.eigh(B)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    cum = _cumulative(vals)
    k = int(np.searchsorted(cum, level, side="left")) + 1
    emb = vecs * np.sqrt(np.clip(vals, 0.0, None))
    return MdsResult(vals, cum, k, emb if n else None)


class ClassicalMDS(BaseEstimator):
    """Estimator wrapper: ``fit(D)`` sets ``eigenvalues_``, ``cumulative_``,
    ``d95_`` and ``embedding_`` (all components)."""

    def __init__(self, level: float = VARIANCE_LEVEL):
        self.level = level

    def fit(self, D, y=None):
        res = classical_mds(D, self.level)
        self.eigenvalues_ = res.eigenvalues
        self.cumulative_ = res.cumulative
        self.d95_ = res.d95
        self.embedding_ = res.embedding
        return self

    def fit_transform(self, D, y=None, n_components: Optional[int] = None):
        self.fit(D)
        k = self.d95_ if n_components is None else int(n_components)
        return self.embedding_[:, :k]


def novelty_scores(D) -> np.ndarray:
    """Nearest-neighbor distance of each sample within the set."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] < 2:
        raise InvalidArgumentError("need a square distance matrix with n >= 2")
    off = D.copy()
    np.fill_diagonal(off, np.inf)
    return off.min(axis=1)
