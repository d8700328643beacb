import numpy as np
import pytest

from rsclab import (
    NotSpdError,
    SingularBlockError,
    SparseMatrix,
    a_inner,
    a_norm,
    dense_lu_solve,
    inner,
    jacobi_eigh,
    operator_a_norm,
    spmv,
)
from conftest import random_spd, tridiag


class TestSparseMatrix:
    def test_fields_round_trip(self):
        A = tridiag(3)
        assert A.shape == (3, 3)
        assert A.nnz == 7
        assert list(A.row_offsets) == [0, 2, 5, 7]

    def test_rejects_bad_offsets(self):
        with pytest.raises(ValueError, match="row_offsets"):
            SparseMatrix(2, 2, [0, 1], [0], [1.0])

    def test_rejects_column_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            SparseMatrix(2, 2, [0, 1, 2], [0, 5], [1.0, 1.0])

    def test_rejects_duplicate_column(self):
        with pytest.raises(ValueError, match="duplicate"):
            SparseMatrix(1, 3, [0, 2], [1, 1], [1.0, 2.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="finite"):
            SparseMatrix(1, 1, [0, 1], [0], [np.nan])


class TestSpmv:
    def test_identity(self):
        A = SparseMatrix.identity(3)
        np.testing.assert_array_equal(spmv(A, [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])

    def test_tridiag_row_sums(self):
        np.testing.assert_array_equal(spmv(tridiag(3), [1.0, 1.0, 1.0]), [1.0, 0.0, 1.0])

    def test_zero_vector(self):
        np.testing.assert_array_equal(spmv(tridiag(5), np.zeros(5)), np.zeros(5))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            spmv(tridiag(3), [1.0, 2.0])

    def test_linearity(self):
        rng = np.random.default_rng(0)
        A = random_spd(rng, 20)
        x, y = rng.standard_normal(20), rng.standard_normal(20)
        a, b = 0.7, -1.3
        lhs = spmv(A, a * x + b * y)
        rhs = a * spmv(A, x) + b * spmv(A, y)
        assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(lhs).max()


class TestInnerProducts:
    def test_orthogonal(self):
        assert inner([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_mismatch(self):
        with pytest.raises(ValueError):
            inner([1.0], [1.0, 2.0])

    def test_a_inner_diagonal_readoff(self):
        assert a_inner(tridiag(3), [1, 0, 0], [1, 0, 0]) == 2.0

    def test_a_norm(self):
        assert a_norm(tridiag(3), [1, 0, 0]) == pytest.approx(np.sqrt(2.0), rel=1e-15)

    def test_a_inner_symmetry(self):
        rng = np.random.default_rng(1)
        A = random_spd(rng, 12)
        for _ in range(20):
            x, y = rng.standard_normal(12), rng.standard_normal(12)
            l, r = a_inner(A, x, y), a_inner(A, y, x)
            assert abs(l - r) <= 1e-12 * max(abs(l), 1.0)

    def test_a_norm_flags_indefinite(self):
        A = SparseMatrix.from_dense([[-1.0]])
        with pytest.raises(NotSpdError):
            a_norm(A, [1.0])


class TestDenseLuSolve:
    def test_identity(self):
        np.testing.assert_array_equal(dense_lu_solve(np.eye(2), [5.0, 7.0]), [5.0, 7.0])

    def test_two_by_two(self):
        x = dense_lu_solve([[2.0, -1.0], [-1.0, 2.0]], [3.0, 3.0])
        np.testing.assert_allclose(x, [3.0, 3.0], rtol=1e-14)

    def test_scalar(self):
        assert dense_lu_solve([[2.0]], [3.0])[0] == 1.5

    def test_singular_block(self):
        with pytest.raises(SingularBlockError):
            dense_lu_solve([[1.0, 1.0], [1.0, 1.0]], [1.0, 1.0])

    def test_round_trip_identity(self):
        rng = np.random.default_rng(2)
        for n in (3, 17, 64):
            M = rng.standard_normal((n, n)) + n * np.eye(n)
            x = rng.standard_normal(n)
            b = M @ x
            sol = dense_lu_solve(M, b)
            assert np.linalg.norm(M @ sol - b) <= 1e-10 * np.linalg.norm(b)


class TestJacobiEigh:
    def test_tridiag_spectrum(self):
        w, V = jacobi_eigh(tridiag(3).toarray())
        np.testing.assert_allclose(w, [2 - np.sqrt(2), 2.0, 2 + np.sqrt(2)], rtol=1e-12)
        np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-13)

    def test_reconstruction(self):
        rng = np.random.default_rng(3)
        S = rng.standard_normal((10, 10))
        S = S + S.T
        w, V = jacobi_eigh(S)
        np.testing.assert_allclose(V @ np.diag(w) @ V.T, S, atol=1e-12 * np.abs(S).max())


class TestOperatorANorm:
    def test_zero_operator(self):
        A = random_spd(np.random.default_rng(4), 5)
        assert operator_a_norm(A, np.zeros((5, 5))) == 0.0

    def test_identity_operator(self):
        A = random_spd(np.random.default_rng(5), 5)
        assert operator_a_norm(A, np.eye(5)) == pytest.approx(1.0, rel=1e-12)

    def test_diagonal_case(self):
        A = SparseMatrix.from_dense(np.diag([2.0, 1.0]))
        E = np.eye(2) - 0.5 * A.toarray()
        assert operator_a_norm(A, E) == pytest.approx(0.5, rel=1e-12)

    def test_oracle_cap(self):
        A = SparseMatrix.identity(6)
        with pytest.raises(ValueError, match="cap"):
            operator_a_norm(A, np.eye(6), oracle_cap=5)

    def test_rejects_asymmetric(self):
        A = SparseMatrix.from_dense([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(NotSpdError):
            operator_a_norm(A, np.eye(2))

    def test_sampled_lower_bound(self):
        # exhaustive sampling can only come in below the true norm
        rng = np.random.default_rng(6)
        for n in (4, 9, 16):
            A = random_spd(rng, n)
            E = rng.standard_normal((n, n))
            norm = operator_a_norm(A, E)
            Ad = A.toarray()
            V = rng.standard_normal((n, 100_000))
            num = np.einsum("ij,ij->j", Ad @ (E @ V), E @ V)
            den = np.einsum("ij,ij->j", Ad @ V, V)
            sampled = np.sqrt((num / den).max())
            assert sampled <= norm + 1e-6
            assert norm <= sampled * 1.5 + 1e-6  # sampling shouldn't be absurdly loose
