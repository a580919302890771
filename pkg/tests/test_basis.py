import numpy as np
import pytest

from softcodesign.basis import (
    GradientBound,
    RbfGridSpec,
    assemble_scalar_basis_matrix,
    assemble_vector_basis_matrix,
    eval_scalar_basis,
    place_rbf_centers,
    sup_gradient_estimate,
)
from softcodesign.exceptions import InvalidArgumentError, InvalidSpecError


def test_unit_square_centers():
    centers, sigma = place_rbf_centers(RbfGridSpec.unit((4, 4)))
    assert centers.shape == (16, 2)
    np.testing.assert_allclose(centers[0], [0.125, 0.125])
    # first axis fastest
    np.testing.assert_allclose(centers[1], [0.375, 0.125])
    assert sigma == pytest.approx(0.25)


def test_swimmer_grid_count():
    spec = RbfGridSpec((6, 2, 2), (0, 0, 0), (12, 4, 4))
    centers, _ = place_rbf_centers(spec)
    assert centers.shape == (24, 3)
    assert 3 * spec.n_rbf == 72


def test_single_center_1d():
    centers, _ = place_rbf_centers(RbfGridSpec.unit((1,)))
    np.testing.assert_allclose(centers, [[0.5]])


@pytest.mark.parametrize(
    "dims, lo, hi, overlap",
    [((2, 2), (0, 0), (1, 0), 1.0), ((0, 2), (0, 0), (1, 1), 1.0), ((2,), (0,), (1,), 0.0), ((2, 2), (0,), (1,), 1.0)],
)
def test_invalid_specs(dims, lo, hi, overlap):
    with pytest.raises(InvalidSpecError):
        RbfGridSpec(dims, lo, hi, overlap)


def test_scalar_basis_closed_forms():
    c = np.array([0.3, -0.2])
    assert eval_scalar_basis(c, c, 0.7) == 1.0
    x = c + np.array([0.7, 0.0])
    assert eval_scalar_basis(x, c, 0.7) == pytest.approx(np.exp(-0.5), abs=1e-15)
    d = np.array([0.11, -0.05])
    assert eval_scalar_basis(c + d, c, 0.4) == eval_scalar_basis(c - d, c, 0.4)
    with pytest.raises(InvalidArgumentError):
        eval_scalar_basis(c, c, 0.0)


def test_scalar_matrix_on_matching_grid():
    g = (np.arange(50) + 0.5) / 50
    X, Y = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([X.ravel(order="F"), Y.ravel(order="F")], axis=1)
    spec = RbfGridSpec.unit((4, 4))
    B = assemble_scalar_basis_matrix(pts, spec)
    assert B.shape == (2500, 16)
    assert np.all(B > 0) and np.all(B <= 1)


def test_scalar_matrix_entries_match_pointwise_oracle():
    spec = RbfGridSpec((3, 2), (0, 0), (1.5, 1.0), overlap=1.3)
    centers, sigma = place_rbf_centers(spec)
    rng = np.random.default_rng(1)
    pts = np.vstack([rng.uniform(0, 1, (7, 2)), centers[4]])
    B = assemble_scalar_basis_matrix(pts, spec)
    for j, p in enumerate(pts):
        for i, c in enumerate(centers):
            assert B[j, i] == pytest.approx(eval_scalar_basis(p, c, sigma), rel=1e-14)
    assert np.argmax(B[-1]) == 4
    assert B[-1, 4] == 1.0


def test_scalar_matrix_rejects_empty_and_mismatch():
    spec = RbfGridSpec.unit((2, 2))
    with pytest.raises(InvalidArgumentError):
        assemble_scalar_basis_matrix(np.zeros((0, 2)), spec)
    with pytest.raises(InvalidArgumentError):
        assemble_scalar_basis_matrix(np.zeros((3, 3)), spec)


def test_vector_matrix_shape_and_one_hot():
    spec = RbfGridSpec((6, 2, 2), (0, 0, 0), (1, 1, 1))
    rng = np.random.default_rng(0)
    nodes = rng.uniform(0, 1, (10, 3))
    A = assemble_vector_basis_matrix(nodes, spec, 3)
    assert A.shape == (30, 72)
    np.testing.assert_array_equal(A @ np.zeros(72), 0.0)

    centers, sigma = place_rbf_centers(spec)
    q = np.zeros(72)
    j, axis = 5, 2
    q[axis * 24 + j] = 1.0
    disp = (A @ q).reshape(-1, 3)
    for n, x in enumerate(nodes):
        expected = np.zeros(3)
        expected[axis] = eval_scalar_basis(x, centers[j], sigma)
        np.testing.assert_allclose(disp[n], expected, rtol=1e-14, atol=0)


def test_vector_matrix_dimension_mismatch():
    spec = RbfGridSpec.unit((2, 2))
    with pytest.raises(InvalidArgumentError):
        assemble_vector_basis_matrix(np.zeros((4, 3)), spec, 3)
    with pytest.raises(InvalidArgumentError):
        assemble_vector_basis_matrix(np.zeros((4, 2)), spec, 3)


def test_sup_gradient_zero_field():
    spec = RbfGridSpec.unit((3, 3))
    samples = np.random.default_rng(0).uniform(0, 1, (50, 2))
    assert sup_gradient_estimate(spec, np.zeros(18), samples) == 0.0


def test_sup_gradient_single_gaussian_closed_form():
    spec = RbfGridSpec((1,), (0.0,), (2.0,))
    _, sigma = place_rbf_centers(spec)
    amp = 0.7
    # dense samples include the extremum at distance sigma from the center
    samples = np.linspace(-2, 4, 60001)[:, None]
    got = sup_gradient_estimate(spec, [amp], samples)
    assert got == pytest.approx(amp * np.exp(-0.5) / sigma, rel=1e-8)


def test_sup_gradient_matches_finite_differences():
    spec = RbfGridSpec((3, 3), (0, 0), (1, 1))
    _, sigma = place_rbf_centers(spec)
    rng = np.random.default_rng(3)
    q = rng.normal(size=18)
    samples = rng.uniform(0, 1, (40, 2))
    A_of = lambda p: assemble_vector_basis_matrix(np.atleast_2d(p), spec, 2) @ q
    h = 1e-5 * sigma
    best = 0.0
    for p in samples:
        J = np.empty((2, 2))
        for beta in range(2):
            e = np.zeros(2)
            e[beta] = h
            J[:, beta] = (A_of(p + e) - A_of(p - e)) / (2 * h)
        best = max(best, np.abs(J).sum(axis=1).max())
    assert sup_gradient_estimate(spec, q, samples) == pytest.approx(best, rel=0.05)


def test_gradient_bound_is_linear_in_q():
    spec = RbfGridSpec.unit((2, 3))
    samples = np.random.default_rng(0).uniform(0, 1, (30, 2))
    gb = GradientBound(spec, samples)
    q = np.random.default_rng(1).normal(size=12)
    assert gb(3.0 * q) == pytest.approx(3.0 * gb(q), rel=1e-12)
    with pytest.raises(InvalidArgumentError):
        sup_gradient_estimate(spec, np.zeros(5), samples)
