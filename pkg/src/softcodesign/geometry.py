"""Reference geometries and body-frame measurements."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .exceptions import DegenerateGeometryError, InvalidArgumentError

__all__ = [
    "Mesh",
    "BodyFrame",
    "build_grid_mesh",
    "build_sphere_cloud",
    "body_frame_metrics",
    "orientation_series",
    "frame_moments",
    "rigid_rotation_series",
]


@dataclass(frozen=True)
class Mesh:
    """Axis-aligned structured mesh of quads (2D) or hexes (3D).

    Node and element ids run with the first axis fastest. Quads are listed
    counter-clockwise; hexes as the bottom quad then the top quad.
    """

    nodes: np.ndarray
    elements: np.ndarray
    element_centers: np.ndarray
    dims: tuple
    cell_size: float

    @property
    def dim(self) -> int:
        return len(self.dims)

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def lo(self) -> np.ndarray:
        return np.zeros(self.dim)

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.dims, dtype=float) * self.cell_size

    def element_index_grid(self) -> np.ndarray:
        """Per-element grid coordinates, shape ``(n_elements, dim)``."""
        idx = np.unravel_index(np.arange(self.n_elements), self.dims, order="F")
        return np.stack(idx, axis=1)


def _corner_offsets(dim: int) -> list:
    if dim == 1:
        return [(0,), (1,)]
    quad = [(0, 0), (1, 0), (1, 1), (0, 1)]
    if dim == 2:
        return quad
    if dim == 3:
        return [q + (0,) for q in quad] + [q + (1,) for q in quad]
    raise InvalidArgumentError("only 1-, 2- and 3-D meshes are supported")


def build_grid_mesh(dims, cell_size: float = 1.0) -> Mesh:
    dims = tuple(int(n) for n in dims)
    if not dims or any(n < 1 for n in dims):
        raise InvalidArgumentError(f"mesh dims must all be >= 1, got {dims}")
    if not cell_size > 0:
        raise InvalidArgumentError("cell_size must be positive")
    d = len(dims)
    node_dims = tuple(n + 1 for n in dims)
    grids = np.meshgrid(*[np.arange(n) for n in node_dims], indexing="ij")
    nodes = np.stack([g.ravel(order="F") for g in grids], axis=1) * float(cell_size)

    eidx = np.stack(np.unravel_index(np.arange(int(np.prod(dims))), dims, order="F"), axis=1)
    corners = []
    for off in _corner_offsets(d):
        ids = np.ravel_multi_index(tuple((eidx + np.asarray(off)).T), node_dims, order="F")
        corners.append(ids)
    elements = np.stack(corners, axis=1)
    centers = nodes[elements].mean(axis=1)
    return Mesh(nodes, elements, centers, dims, float(cell_size))


def build_sphere_cloud(n: int, radius: float = 1.0) -> np.ndarray:
    """Fibonacci-spiral points on a sphere surface."""
    if n < 4:
        raise InvalidArgumentError("need at least 4 points")
    if not radius > 0:
        raise InvalidArgumentError("radius must be positive")
    i = np.arange(n, dtype=float) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    # renormalize so every norm is the radius to rounding
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts * radius


@dataclass(frozen=True)
class BodyFrame:
    com: np.ndarray
    orientation: float
    length: float


def _principal_angle(sxx, syy, sxy):
    # major-axis angle of the 2x2 second-moment matrix; atan2(0, 0) = 0 breaks ties
    theta = 0.5 * np.arctan2(2.0 * sxy, sxx - syy)
    return np.mod(theta, np.pi)


def body_frame_metrics(nodes) -> BodyFrame:
    """Centroid, principal-axis angle in ``[0, pi)`` and extent along that axis (2D)."""
    pts = np.asarray(nodes, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise DegenerateGeometryError("need at least two 2-D nodes")
    com = pts.mean(axis=0)
    c = pts - com
    if not np.any(np.abs(c) > 1e-15 * max(1.0, np.abs(pts).max())):
        raise DegenerateGeometryError("all nodes coincide")
    sxx = np.dot(c[:, 0], c[:, 0])
    syy = np.dot(c[:, 1], c[:, 1])
    sxy = np.dot(c[:, 0], c[:, 1])
    theta = float(_principal_angle(sxx, syy, sxy))
    if theta >= np.pi:
        theta = 0.0
    axis = np.array([np.cos(theta), np.sin(theta)])
    proj = c @ axis
    return BodyFrame(com, theta, float(proj.max() - proj.min()))


@njit(cache=True, nogil=True)
def _frame_moments(pos):
    T, n = pos.shape[0], pos.shape[1]
    out = np.empty((T, 5))
    for t in range(T):
        cx = 0.0
        cy = 0.0
        for i in range(n):
            cx += pos[t, i, 0]
            cy += pos[t, i, 1]
        cx /= n
        cy /= n
        sxx = 0.0
        syy = 0.0
        sxy = 0.0
        for i in range(n):
            dx = pos[t, i, 0] - cx
            dy = pos[t, i, 1] - cy
            sxx += dx * dx
            syy += dy * dy
            sxy += dx * dy
        out[t, 0] = cx
        out[t, 1] = cy
        out[t, 2] = sxx
        out[t, 3] = syy
        out[t, 4] = sxy
    return out


def frame_moments(positions) -> np.ndarray:
    """Per-frame ``(com_x, com_y, sxx, syy, sxy)`` of a ``(T, n, 2)`` array."""
    pos = np.ascontiguousarray(positions, dtype=float)
    if pos.ndim != 3 or pos.shape[2] != 2:
        raise InvalidArgumentError("positions must have shape (T, n, 2)")
    return _frame_moments(pos)


def orientation_series(positions) -> np.ndarray:
    """Principal-axis angle for every frame of a ``(T, n, 2)`` position array."""
    m = frame_moments(positions)
    theta = _principal_angle(m[:, 2], m[:, 3], m[:, 4])
    return np.where(theta >= np.pi, 0.0, theta)


@njit(cache=True, nogil=True)
def _rigid_angles(pos):
    T, n = pos.shape[0], pos.shape[1]
    ref = np.empty((n, 2))
    cx = 0.0
    cy = 0.0
    for i in range(n):
        cx += pos[0, i, 0]
        cy += pos[0, i, 1]
    for i in range(n):
        ref[i, 0] = pos[0, i, 0] - cx / n
        ref[i, 1] = pos[0, i, 1] - cy / n
    out = np.empty(T)
    for t in range(T):
        mx = 0.0
        my = 0.0
        for i in range(n):
            mx += pos[t, i, 0]
            my += pos[t, i, 1]
        mx /= n
        my /= n
        dot = 0.0
        cross = 0.0
        for i in range(n):
            dx = pos[t, i, 0] - mx
            dy = pos[t, i, 1] - my
            dot += ref[i, 0] * dx + ref[i, 1] * dy
            cross += ref[i, 0] * dy - ref[i, 1] * dx
        out[t] = np.arctan2(cross, dot)
    return out


def rigid_rotation_series(positions) -> np.ndarray:
    """Best-fit rigid rotation angle of every frame relative to the first.

    The least-squares rotation between centered point sets in 2D has the
    closed form ``atan2(sum x0 x y, sum x0 . y)``. Unlike the principal axis
    it stays well defined for nearly isotropic bodies. Values lie in
    ``(-pi, pi]``.
    """
    pos = np.ascontiguousarray(positions, dtype=float)
    if pos.ndim != 3 or pos.shape[2] != 2:
        raise InvalidArgumentError("positions must have shape (T, n, 2)")
    return _rigid_angles(pos)
