import numpy as np
import pytest

from softcodesign.exceptions import DegenerateGeometryError, InvalidArgumentError
from softcodesign.geometry import (
    body_frame_metrics,
    build_grid_mesh,
    build_sphere_cloud,
    frame_moments,
    orientation_series,
    rigid_rotation_series,
)


def _rot(phi):
    return np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])


def test_grid_mesh_counts():
    assert build_grid_mesh((7, 7, 7)).n_elements == 343
    m = build_grid_mesh((7, 7), 0.5)
    assert m.n_elements == 49 and m.n_nodes == 64
    np.testing.assert_allclose(m.element_centers[0], [0.25, 0.25])
    np.testing.assert_allclose(m.hi, [3.5, 3.5])


def test_grid_mesh_quads_are_ccw():
    m = build_grid_mesh((3, 2))
    p = m.nodes[m.elements]
    x, y = p[..., 0], p[..., 1]
    area = 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)
    np.testing.assert_allclose(area, 1.0)


def test_grid_mesh_invalid():
    with pytest.raises(InvalidArgumentError):
        build_grid_mesh((0, 3))
    with pytest.raises(InvalidArgumentError):
        build_grid_mesh((3, 3), 0.0)


def test_sphere_cloud():
    pts = build_sphere_cloud(500, 2.0)
    assert pts.shape == (500, 3)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 2.0, atol=1e-12)
    assert np.linalg.norm(pts.mean(axis=0)) <= 0.02 * 2.0
    np.testing.assert_array_equal(pts, build_sphere_cloud(500, 2.0))
    with pytest.raises(InvalidArgumentError):
        build_sphere_cloud(3)


def test_body_frame_square_tie_breaks_to_zero():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    bf = body_frame_metrics(sq)
    assert bf.orientation == 0.0
    np.testing.assert_allclose(bf.com, [0.5, 0.5])


def test_body_frame_translation_and_rotation():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(30, 2)) * [3.0, 1.0]
    ref = body_frame_metrics(pts)
    t = np.array([2.5, -1.25])
    moved = body_frame_metrics(pts + t)
    np.testing.assert_allclose(moved.com, ref.com + t, rtol=0, atol=1e-12)
    assert moved.orientation == pytest.approx(ref.orientation, abs=1e-12)
    for phi in (0.3, 1.1, 2.0, -0.7):
        rot = body_frame_metrics(pts @ _rot(phi).T)
        diff = (rot.orientation - ref.orientation - phi) % np.pi
        assert min(diff, np.pi - diff) < 1e-9


def test_body_frame_degenerate():
    with pytest.raises(DegenerateGeometryError):
        body_frame_metrics(np.ones((5, 2)))


def test_frame_moments_and_orientation():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(20, 2)) * [2.0, 0.5]
    traj = np.stack([pts, pts + 1.0, pts @ _rot(0.4).T])
    m = frame_moments(traj)
    np.testing.assert_allclose(m[0, :2], pts.mean(axis=0))
    np.testing.assert_allclose(m[1, :2], pts.mean(axis=0) + 1.0)
    th = orientation_series(traj)
    assert th[0] == pytest.approx(body_frame_metrics(pts).orientation, abs=1e-12)
    assert th[2] == pytest.approx((th[0] + 0.4) % np.pi, abs=1e-9)


def test_rigid_rotation_series():
    pts = np.random.default_rng(4).normal(size=(12, 2))
    phis = np.array([0.0, 0.2, -1.0, 3.0])
    traj = np.stack([pts @ _rot(p).T + [p, 2 * p] for p in phis])
    np.testing.assert_allclose(rigid_rotation_series(traj), phis, atol=1e-12)
    # defined even for a perfectly isotropic body
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    np.testing.assert_allclose(rigid_rotation_series(np.stack([sq, sq @ _rot(0.5).T]))[1], 0.5, atol=1e-12)
    with pytest.raises(InvalidArgumentError):
        rigid_rotation_series(np.zeros((3, 4, 3)))
