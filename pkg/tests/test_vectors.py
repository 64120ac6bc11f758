import numpy as np
import pytest

from stpafl import vectors
from stpafl.vectors import ClientUpdate


def test_dot_basic():
    assert vectors.dot(np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0
    assert vectors.dot(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_dot_zero_annihilation():
    v = np.array([3.7, -1.2, 0.5])
    assert vectors.dot(v, np.zeros(3)) == 0.0


def test_dot_dimension_mismatch():
    with pytest.raises(ValueError):
        vectors.dot(np.zeros(2), np.zeros(3))


def test_cosine_parallel():
    assert vectors.cosine_similarity(np.array([1.0, 2.0]), np.array([2.0, 4.0])) == pytest.approx(1.0)


def test_cosine_orthogonal():
    assert vectors.cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_cosine_antiparallel():
    assert vectors.cosine_similarity(np.array([1.0, 2.0]), np.array([-1.0, -2.0])) == pytest.approx(-1.0)


def test_cosine_zero_norm_convention():
    assert vectors.cosine_similarity(np.zeros(2), np.array([1.0, 1.0])) == 0.0
    assert vectors.cosine_similarity(np.array([1.0, 1.0]), np.zeros(2)) == 0.0
    tiny = np.full(2, 1e-13)
    assert vectors.cosine_similarity(tiny, np.array([1.0, 1.0])) == 0.0


def test_cosine_clipped_to_unit_interval():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = rng.standard_normal(5)
        b = rng.standard_normal(5)
        assert -1.0 <= vectors.cosine_similarity(a, b) <= 1.0


def test_euclidean_distance():
    assert vectors.euclidean_distance(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 5.0
    v = np.array([1.5, -2.0])
    assert vectors.euclidean_distance(v, v) == 0.0
    assert vectors.euclidean_distance(np.array([1.0]), np.array([-1.0])) == 2.0


def test_axpy():
    assert np.array_equal(
        vectors.axpy(2.0, np.array([1.0, 1.0]), np.array([0.0, 1.0])), np.array([2.0, 3.0])
    )
    x = np.array([5.0, -1.0])
    y = np.array([2.0, 2.0])
    assert np.array_equal(vectors.axpy(0.0, x, y), y)
    assert np.array_equal(vectors.axpy(1.0, x, np.zeros(2)), x)


def test_scale_and_subtract():
    assert np.array_equal(vectors.scale(3.0, np.array([1.0, -2.0])), np.array([3.0, -6.0]))
    assert np.array_equal(
        vectors.subtract(np.array([3.0, 1.0]), np.array([1.0, 1.0])), np.array([2.0, 0.0])
    )


def test_as_vector_rejects_nonfinite_and_matrix():
    with pytest.raises(ValueError):
        vectors.as_vector([1.0, np.nan])
    with pytest.raises(ValueError):
        vectors.as_vector([1.0, np.inf])
    with pytest.raises(ValueError):
        vectors.as_vector(np.zeros((2, 2)))


def test_client_update_validation():
    u = ClientUpdate(0, 3, [1.0, 2.0], 10)
    assert u.dim == 2
    assert u.model.dtype == np.float64
    with pytest.raises(ValueError):
        ClientUpdate(-1, 0, [1.0], 1)
    with pytest.raises(ValueError):
        ClientUpdate(0, -1, [1.0], 1)
    with pytest.raises(ValueError):
        ClientUpdate(0, 0, [1.0], 0)
    with pytest.raises(ValueError):
        ClientUpdate(0, 0, [np.nan], 1)
