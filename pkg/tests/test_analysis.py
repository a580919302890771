import numpy as np
import pytest

from softcodesign.analysis import (
    BasisMorpher,
    ClassicalMDS,
    NeuralMorpher,
    SpatialGrid,
    chamfer_distance,
    classical_mds,
    d95,
    nearest_distances,
    nearest_distances_brute,
    novelty_scores,
    pairwise_chamfer,
    sample_design_distances,
)
from softcodesign.exceptions import DegenerateInputError, InvalidArgumentError
from softcodesign.geometry import build_sphere_cloud


def test_chamfer_hand_cases():
    P = np.random.default_rng(0).normal(size=(20, 3))
    assert chamfer_distance(P, P) == 0.0
    assert chamfer_distance([[0.0]], [[3.0]]) == 3.0
    Q = np.random.default_rng(1).normal(size=(13, 3))
    assert chamfer_distance(P, Q) == chamfer_distance(Q, P)
    with pytest.raises(InvalidArgumentError):
        chamfer_distance(np.zeros((0, 3)), P)


def test_chamfer_against_direct_formula():
    rng = np.random.default_rng(2)
    P, Q = rng.normal(size=(9, 2)), rng.normal(size=(11, 2))
    D = np.linalg.norm(P[:, None] - Q[None], axis=2)
    expected = 0.5 * (D.min(axis=1).mean() + D.min(axis=0).mean())
    assert chamfer_distance(P, Q) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_grid_nn_equals_brute_force(seed):
    rng = np.random.default_rng(seed)
    Q = rng.normal(size=(300, 3)) * [3.0, 1.0, 0.2]
    P = rng.normal(size=(250, 3)) * 2.0
    np.testing.assert_array_equal(nearest_distances(P, Q), nearest_distances_brute(P, Q))


def test_grid_handles_clustered_and_planar_points():
    rng = np.random.default_rng(7)
    Q = np.vstack([rng.normal(size=(100, 2)) * 1e-3, rng.normal(size=(5, 2)) + 50.0])
    P = rng.uniform(-60, 60, size=(80, 2))
    np.testing.assert_array_equal(nearest_distances(P, Q), nearest_distances_brute(P, Q))
    g = SpatialGrid.build(Q)
    np.testing.assert_array_equal(g.query(P), nearest_distances_brute(P, Q))


def test_pairwise_matrix_structure():
    rng = np.random.default_rng(3)
    clouds = rng.normal(size=(6, 40, 3))
    D = pairwise_chamfer(clouds)
    assert np.all(np.diag(D) == 0) and np.array_equal(D, D.T)
    for i, j in [(0, 1), (2, 5), (4, 3)]:
        assert D[i, j] == pytest.approx(chamfer_distance(clouds[i], clouds[j]), rel=1e-12)


def test_sampling_is_seeded():
    a = sample_design_distances(BasisMorpher((2, 2, 2)), n_samples=8, cloud_size=50, seed=4)
    b = sample_design_distances(BasisMorpher((2, 2, 2)), n_samples=8, cloud_size=50, seed=4)
    np.testing.assert_array_equal(a, b)
    c = sample_design_distances(BasisMorpher((2, 2, 2)), n_samples=8, cloud_size=50, seed=5)
    assert not np.array_equal(a, c)


def test_morphers_parameter_counts_and_identity():
    ref = build_sphere_cloud(100)
    for dims, n in [((2, 2, 2), 24), ((4, 4, 4), 192), ((6, 6, 6), 648)]:
        assert BasisMorpher(dims).fit(ref).n_params_ == n
    for layers, n in [((3, 4, 3), 31), ((3, 6, 12, 6, 3), 207)]:
        assert NeuralMorpher(layers).fit(ref).n_params_ == n
    bm = BasisMorpher((2, 2, 2)).fit(ref)
    np.testing.assert_array_equal(bm.morph(np.zeros(24)), ref)


def test_basis_morpher_clamp():
    ref = build_sphere_cloud(100)
    bm = BasisMorpher((3, 3, 3), gamma=0.3).fit(ref)
    q = np.random.default_rng(0).uniform(-1, 1, bm.n_params_) * 10
    moved = bm.morph(q)
    q_eff = np.linalg.lstsq(bm.A_, (moved - ref).ravel(), rcond=None)[0]
    assert bm.grad_bound_(q_eff) <= 0.3 + 1e-9


def test_mds_equilateral_triangle():
    D = np.ones((3, 3)) - np.eye(3)
    res = classical_mds(D)
    np.testing.assert_allclose(res.eigenvalues, [0.5, 0.5, 0.0], atol=1e-9)
    assert res.d95 == 2


def test_mds_collinear_has_one_positive_eigenvalue():
    x = np.array([0.0, 1.0, 3.0])
    D = np.abs(x[:, None] - x[None])
    vals = classical_mds(D).eigenvalues
    assert np.sum(vals > 1e-9) == 1


def test_mds_round_trip():
    X = np.random.default_rng(0).normal(size=(12, 4))
    D = np.linalg.norm(X[:, None] - X[None], axis=2)
    emb = ClassicalMDS().fit(D).embedding_
    D2 = np.linalg.norm(emb[:, None] - emb[None], axis=2)
    np.testing.assert_allclose(D2, D, atol=1e-9)
    assert ClassicalMDS().fit_transform(D, n_components=2).shape == (12, 2)


def test_mds_input_checks():
    with pytest.raises(InvalidArgumentError):
        classical_mds(np.array([[0, 1], [2, 0]], dtype=float))
    with pytest.raises(InvalidArgumentError):
        classical_mds(np.ones((2, 3)))
    with pytest.raises(DegenerateInputError):
        classical_mds(np.zeros((3, 3)))


def test_d95_hand_cases():
    assert d95([0.5, 0.5, 0.0]) == 2
    assert d95([2.0]) == 1
    assert d95([0.96, 0.04]) == 1
    assert d95([0.9, 0.1, -0.3]) == 2
    with pytest.raises(DegenerateInputError):
        d95([0.0, -1.0])


def test_novelty_hand_cases():
    x = np.array([0.0, 1.0, 3.0])
    np.testing.assert_array_equal(novelty_scores(np.abs(x[:, None] - x[None])), [1.0, 1.0, 2.0])
    x = np.array([0.0, 0.0, 5.0])
    nu = novelty_scores(np.abs(x[:, None] - x[None]))
    assert nu[0] == 0.0 and nu[1] == 0.0
    D = np.random.default_rng(0).uniform(1, 2, (5, 5))
    D = D + D.T
    np.fill_diagonal(D, 0)
    nu = novelty_scores(D)
    assert np.all(nu >= 0)
    for i in range(5):
        assert np.all(nu[i] <= np.delete(D[i], i))
    with pytest.raises(InvalidArgumentError):
        novelty_scores(np.zeros((1, 1)))
