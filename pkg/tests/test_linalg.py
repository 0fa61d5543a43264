import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eigendroid.errors import ConvergenceError, DataError, DegenerateError
from eigendroid.linalg import (
    EigenPairs,
    center,
    compute_mean,
    covariance,
    eigendecompose,
    n_components_for_variance,
    project,
    reconstruct,
    select_eigenvectors,
)


def naive_matmul(a, b):
    n, m = len(a), len(b[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(len(b)):
                s += a[i][k] * b[k][j]
            out[i][j] = s
    return np.array(out)


def assert_eigen_invariants(c, pairs, tol=1e-8):
    c = np.asarray(c, dtype=float)
    g = pairs.vectors
    n = c.shape[0]
    assert np.abs(g @ g.T - np.eye(n)).max() <= tol
    scale = max(1.0, np.linalg.norm(c))
    for lam, vec in zip(pairs.values, g):
        assert np.linalg.norm(c @ vec - lam * vec) <= tol * scale
        assert vec[np.argmax(np.abs(vec))] > 0
    assert np.all(np.diff(pairs.values) <= 0)


class TestMean:
    def test_two_point(self):
        np.testing.assert_array_equal(compute_mean([[1, 0], [0, 1]]), [0.5, 0.5])

    def test_identical_columns(self):
        v = np.array([1.0, 0.0, 1.0, 1.0])
        m = np.tile(v[:, None], (1, 7))
        np.testing.assert_array_equal(compute_mean(m), v)

    def test_matches_direct_summation(self, rng):
        m = (rng.random((4, 3)) < 0.5).astype(int)
        expected = [sum(m[i][j] for j in range(3)) / 3 for i in range(4)]
        np.testing.assert_allclose(compute_mean(m), expected, atol=1e-15)

    def test_empty_is_error(self):
        with pytest.raises(DataError):
            compute_mean(np.zeros((3, 0)))


class TestCenter:
    def test_mean_column_becomes_zero(self):
        m = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]])
        out = center(m, [0.5, 0.5])
        np.testing.assert_array_equal(out[:, 2], [0, 0])

    def test_two_point(self):
        out = center([[1, 0], [0, 1]], [0.5, 0.5])
        np.testing.assert_array_equal(out, [[0.5, -0.5], [-0.5, 0.5]])

    def test_columns_sum_to_zero(self, rng):
        m = (rng.random((12, 40)) < 0.3).astype(float)
        a = center(m, compute_mean(m))
        assert np.abs(a.sum(axis=1)).max() <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            center(np.zeros((3, 4)), np.zeros(2))


class TestCovariance:
    def test_zero(self):
        np.testing.assert_array_equal(covariance(np.zeros((3, 5))), np.zeros((3, 3)))

    def test_outer_product(self):
        np.testing.assert_array_equal(covariance([[1.0], [-1.0]]), [[1, -1], [-1, 1]])

    def test_matches_triple_loop(self, rng):
        a = rng.normal(size=(5, 8))
        expected = naive_matmul(a.tolist(), a.T.tolist())
        c = covariance(a)
        assert np.abs(c - expected).max() <= 1e-12
        assert np.array_equal(c, c.T)
        assert np.linalg.eigvalsh(c).min() >= -1e-12


class TestEigendecompose:
    def test_identity(self):
        pairs = eigendecompose(np.eye(3))
        np.testing.assert_allclose(pairs.values, [1, 1, 1])
        assert_eigen_invariants(np.eye(3), pairs)

    def test_analytic_2x2(self):
        pairs = eigendecompose([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(pairs.values, [3.0, 1.0], atol=1e-14)
        r = 1 / np.sqrt(2)
        np.testing.assert_allclose(pairs.vectors[0], [r, r], atol=1e-14)
        # largest-magnitude component positive; tie on magnitude -> first index
        np.testing.assert_allclose(pairs.vectors[1], [r, -r], atol=1e-14)

    def test_random_psd_residuals(self, rng):
        m = rng.normal(size=(6, 6))
        c = m.T @ m
        assert_eigen_invariants(c, eigendecompose(c))

    def test_eigenvalues_agree_with_reference_solver(self, rng):
        m = rng.normal(size=(15, 15))
        c = m.T @ m
        ref = np.sort(np.linalg.eigvalsh(c))[::-1]
        np.testing.assert_allclose(eigendecompose(c).values, ref, atol=1e-10 * np.abs(ref).max())

    def test_trace_equals_spectrum_sum(self, rng):
        m = rng.normal(size=(9, 20))
        c = m @ m.T
        pairs = eigendecompose(c)
        assert abs(pairs.values.sum() - np.trace(c)) <= 1e-8 * abs(np.trace(c))

    def test_deterministic(self, rng):
        m = rng.normal(size=(10, 10))
        c = m + m.T
        a, b = eigendecompose(c), eigendecompose(c.copy())
        assert a.values.tobytes() == b.values.tobytes()
        assert a.vectors.tobytes() == b.vectors.tobytes()

    def test_indefinite_matrix(self, rng):
        m = rng.normal(size=(7, 7))
        c = m + m.T
        assert_eigen_invariants(c, eigendecompose(c))

    def test_non_symmetric_rejected(self):
        with pytest.raises(DataError, match="symmetric"):
            eigendecompose([[1.0, 2.0], [0.0, 1.0]])

    def test_convergence_cap_reports_residual(self, rng):
        m = rng.normal(size=(8, 8))
        with pytest.raises(ConvergenceError) as info:
            eigendecompose(m + m.T, max_sweeps=1)
        assert info.value.off_norm > 0

    def test_diagonal_input_needs_no_sweeps(self):
        pairs = eigendecompose(np.diag([1.0, 5.0, 3.0]))
        np.testing.assert_array_equal(pairs.values, [5.0, 3.0, 1.0])
        np.testing.assert_array_equal(pairs.vectors, [[0, 1, 0], [0, 0, 1], [1, 0, 0]])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**32 - 1))
    def test_property_invariants(self, n, seed):
        m = np.random.default_rng(seed).normal(size=(n, n + 2))
        c = m @ m.T
        assert_eigen_invariants(c, eigendecompose(c))


class TestVarianceSelection:
    def test_boundary_case(self):
        assert n_components_for_variance([9.0, 0.5, 0.5], 0.95) == 2

    def test_full_variance_counts_positive(self, rng):
        for _ in range(20):
            lam = np.sort(rng.random(10) * 5)[::-1]
            lam[rng.integers(1, 10):] *= rng.choice([0.0, -1e-14])
            assert n_components_for_variance(lam, 1.0) == int((lam > 0).sum())

    def test_negative_roundoff_clamped(self):
        assert n_components_for_variance([4.0, 1.0, -1e-15], 0.79) == 1
        assert n_components_for_variance([4.0, 1.0, -1e-15], 0.81) == 2

    def test_degenerate_spectrum(self):
        with pytest.raises(DegenerateError):
            n_components_for_variance([0.0, -1e-16], 0.95)

    def test_threshold_range(self):
        with pytest.raises(ValueError):
            n_components_for_variance([1.0], 0.0)
        with pytest.raises(ValueError):
            n_components_for_variance([1.0], 1.5)

    def test_select_truncates_pairs(self):
        pairs = EigenPairs([9.0, 0.5, 0.5], np.eye(3))
        sel = select_eigenvectors(pairs, 0.95)
        assert len(sel) == 2 and sel.vectors.shape == (2, 3)


class TestProjection:
    def test_eigenvector_maps_to_unit_weight(self, rng):
        m = rng.normal(size=(5, 5))
        pairs = eigendecompose(m @ m.T)
        w = project(pairs.vectors[0], pairs)
        np.testing.assert_allclose(w, np.eye(5)[0], atol=1e-12)

    def test_zero_vector(self):
        pairs = EigenPairs([2.0, 1.0], np.eye(2))
        np.testing.assert_array_equal(project(np.zeros(2), pairs), [0.0, 0.0])

    def test_full_rank_round_trip(self, rng):
        m = rng.normal(size=(7, 7))
        pairs = eigendecompose(m @ m.T)
        v = rng.normal(size=7)
        np.testing.assert_allclose(reconstruct(project(v, pairs), pairs), v, atol=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            project(np.zeros(3), EigenPairs([1.0], [[1.0, 0.0]]))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 10), st.integers(0, 2**32 - 1))
    def test_isometry_and_contraction(self, n, seed):
        r = np.random.default_rng(seed)
        m = r.normal(size=(n, n))
        pairs = eigendecompose(m @ m.T)
        u, v = r.normal(size=n), r.normal(size=n)
        d_w = np.linalg.norm(project(u, pairs) - project(v, pairs))
        assert abs(d_w - np.linalg.norm(u - v)) <= 1e-8
        part = pairs.truncate(max(1, n // 2))
        assert np.linalg.norm(project(v, part)) <= np.linalg.norm(v) + 1e-8
