import io

import numpy as np
import pytest

from toposig import embedding as em


def random_spd(rng, dim=4, jitter=0.1):
    a = rng.normal(size=(dim, dim))
    return a @ a.T + jitter * np.eye(dim)


def unit_covariance_cloud(rng, n=400, dim=4):
    """Data whose *sample* covariance is the identity (up to float error)."""
    x = rng.multivariate_normal(np.zeros(dim), random_spd(rng), size=n)
    xc = x - x.mean(axis=0)
    cov = xc.T @ xc / (n - 1)
    w, v = np.linalg.eigh(cov)
    return xc @ (v / np.sqrt(w)) @ v.T


# ---------------------------------------------------------------------------
# eigendecomposition
# ---------------------------------------------------------------------------

def test_jacobi_matches_library_solver():
    rng = np.random.default_rng(0)
    for _ in range(25):
        s = random_spd(rng, jitter=float(rng.uniform(0, 1)))
        w, v = em.jacobi_eigh(s)
        w_ref = np.sort(np.linalg.eigvalsh(s))[::-1]
        assert np.allclose(w, w_ref, rtol=1e-10, atol=1e-10)
        assert np.allclose(v.T @ v, np.eye(4), atol=1e-10)
        assert np.allclose(v @ np.diag(w) @ v.T, s, atol=1e-9)


def test_jacobi_descending_and_nonnegative():
    rng = np.random.default_rng(1)
    s = random_spd(rng)
    w, _ = em.jacobi_eigh(s)
    assert np.all(np.diff(w) <= 0)
    assert np.all(w >= 0)


def test_jacobi_zero_matrix():
    w, v = em.jacobi_eigh(np.zeros((3, 3)))
    assert np.array_equal(w, np.zeros(3))
    assert np.array_equal(v, np.eye(3))


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def test_isotropic_data_gives_euclidean_distances():
    rng = np.random.default_rng(2)
    x = unit_covariance_cloud(rng)
    model = em.fit_embedding(x)
    assert model.retained == 4
    assert np.allclose(model.whitening @ model.whitening.T, np.eye(4), atol=1e-8)
    for _ in range(50):
        a, b = x[rng.integers(len(x))], x[rng.integers(len(x))]
        d = em.distance(em.transform(model, a), em.transform(model, b))
        assert d == pytest.approx(float(np.linalg.norm(a - b)), abs=1e-8)


def test_collinear_data_retains_one_component():
    t = np.linspace(0, 1, 50)
    x = np.outer(t, [1.0, -2.0, 0.5, 3.0])
    model = em.fit_embedding(x)
    assert model.retained == 1


def test_whitened_training_covariance_is_identity():
    rng = np.random.default_rng(3)
    x = rng.multivariate_normal(np.array([5.0, -1.0, 2.0, 0.0]), random_spd(rng), size=10_000)
    model = em.fit_embedding(x)
    y = em.transform_all(model, x)
    cov = np.cov(y.T)
    assert np.abs(cov - np.eye(model.retained)).max() < 5e-2
    # exact identity against the fitted (not population) covariance
    exact = (y.T @ y - len(y) * np.outer(y.mean(0), y.mean(0))) / (len(y) - 1)
    assert np.abs(exact - np.eye(model.retained)).max() < 1e-8


def test_degenerate_table_rejected():
    x = np.ones((10, 4))
    with pytest.raises(em.DegenerateFeaturesError):
        em.fit_embedding(x)


def test_too_few_rows_rejected():
    with pytest.raises(ValueError):
        em.fit_embedding(np.eye(4))


# ---------------------------------------------------------------------------
# transform
# ---------------------------------------------------------------------------

def test_transform_of_mean_is_origin():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(100, 4))
    model = em.fit_embedding(x)
    assert np.allclose(em.transform(model, model.mean), 0.0, atol=1e-12)


def test_transformed_training_mean_is_zero():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(500, 4)) * [1, 5, 0.2, 3] + [4, 0, -2, 1]
    model = em.fit_embedding(x)
    y = em.transform_all(model, x)
    assert np.abs(y.mean(axis=0)).max() < 1e-10


def test_transform_matches_matrix_vector_oracle():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(200, 4))
    model = em.fit_embedding(x)
    for _ in range(20):
        v = rng.normal(size=4)
        expected = model.whitening @ (v - model.mean)
        assert np.allclose(em.transform(model, v), expected, rtol=1e-12, atol=1e-12)


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def test_distance_identity_and_symmetry():
    rng = np.random.default_rng(7)
    a, b = rng.normal(size=4), rng.normal(size=4)
    assert em.distance(a, a) == 0.0
    assert em.distance(a, b) == em.distance(b, a)


def test_distance_matches_quadratic_form_oracle():
    rng = np.random.default_rng(8)
    for _ in range(25):
        x = rng.multivariate_normal(np.zeros(4), random_spd(rng), size=600)
        model = em.fit_embedding(x)
        inv = np.linalg.inv(model.covariance)
        a, b = x[rng.integers(600)], x[rng.integers(600)]
        d = em.distance(em.transform(model, a), em.transform(model, b))
        expected = float(np.sqrt((a - b) @ inv @ (a - b)))
        assert d == pytest.approx(expected, rel=1e-8)


def test_triangle_inequality_on_random_triples():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(300, 4)) @ random_spd(rng)
    model = em.fit_embedding(x)
    y = em.transform_all(model, x)
    for _ in range(200):
        i, j, k = rng.integers(0, 300, size=3)
        assert em.distance(y[i], y[k]) <= em.distance(y[i], y[j]) + em.distance(y[j], y[k]) + 1e-9


def test_affine_invariance_of_distances():
    rng = np.random.default_rng(10)
    x = rng.multivariate_normal(np.zeros(4), random_spd(rng), size=800)
    model = em.fit_embedding(x)
    y = em.transform_all(model, x)

    a = rng.normal(size=(4, 4)) + 2 * np.eye(4)  # invertible w.h.p.
    assert abs(np.linalg.det(a)) > 1e-6
    shifted = x @ a.T + rng.normal(size=4)
    model2 = em.fit_embedding(shifted)
    y2 = em.transform_all(model2, shifted)
    for _ in range(100):
        i, j = rng.integers(0, 800, size=2)
        d1, d2 = em.distance(y[i], y[j]), em.distance(y2[i], y2[j])
        if d1 > 1e-12:
            assert d2 == pytest.approx(d1, rel=1e-6)


# ---------------------------------------------------------------------------
# mean pairwise distance
# ---------------------------------------------------------------------------

def test_two_points_exact():
    pts = np.array([[0.0, 0.0], [3.0, 4.0]])
    r = em.mean_pairwise_distance(pts)
    assert (r.mean, r.pair_count_used, r.exact) == (5.0, 1, True)


def test_identical_points_zero():
    pts = np.tile([1.0, 2.0, 3.0], (40, 1))
    assert em.mean_pairwise_distance(pts).mean == 0.0


def test_single_point_rejected():
    with pytest.raises(ValueError):
        em.mean_pairwise_distance(np.zeros((1, 3)))


def test_exact_mean_matches_allpairs_loop():
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(100, 4))
    r = em.mean_pairwise_distance(pts, pair_budget=5000)
    brute = np.mean(
        [np.linalg.norm(pts[i] - pts[j]) for i in range(100) for j in range(i + 1, 100)]
    )
    assert r.exact and r.pair_count_used == 4950
    assert r.mean == pytest.approx(float(brute), abs=1e-12)


def test_sampled_mean_is_unbiased():
    rng = np.random.default_rng(12)
    pts = rng.normal(size=(300, 4))
    exact = em.mean_pairwise_distance(pts).mean
    runs = np.array(
        [
            em.mean_pairwise_distance(
                pts, pair_budget=800, rng=np.random.default_rng(1000 + i)
            ).mean
            for i in range(200)
        ]
    )
    stderr = runs.std(ddof=1) / np.sqrt(len(runs))
    assert abs(runs.mean() - exact) <= 3 * stderr
    assert not em.mean_pairwise_distance(pts, pair_budget=800, rng=rng).exact


def test_sampling_requires_rng():
    pts = np.random.default_rng(13).normal(size=(200, 3))
    with pytest.raises(ValueError):
        em.mean_pairwise_distance(pts, pair_budget=10, rng=None)


def test_pair_index_decode_covers_all_pairs():
    for n in (2, 3, 10, 57):
        total = n * (n - 1) // 2
        i, j = em._decode_pair_indices(np.arange(total), n)
        got = set(zip(i.tolist(), j.tolist()))
        assert got == {(a, b) for a in range(n) for b in range(a + 1, n)}


def test_sampled_pairs_distinct_and_uniformish():
    rng = np.random.default_rng(14)
    idx = em._sample_distinct_indices(10**12, 50_000, rng)
    assert len(np.unique(idx)) == 50_000
    assert int(idx.max()) < 10**12


# ---------------------------------------------------------------------------
# model file
# ---------------------------------------------------------------------------

def test_model_save_load_bit_identical():
    rng = np.random.default_rng(15)
    x = rng.multivariate_normal(np.zeros(4), random_spd(rng), size=300)
    model = em.fit_embedding(x)
    out = io.StringIO()
    em.save_model(model, out)
    loaded = em.load_model(io.StringIO(out.getvalue()))
    again = io.StringIO()
    em.save_model(loaded, again)
    assert again.getvalue() == out.getvalue()
    assert np.array_equal(loaded.whitening, model.whitening)
    v = rng.normal(size=4)
    assert np.array_equal(em.transform(loaded, v), em.transform(model, v))


def test_model_load_rejects_garbage():
    with pytest.raises(ValueError):
        em.load_model(io.StringIO("not a model\n"))
