import numpy as np
import pytest

from rsclab import (
    NotSpdError,
    OverlapPartition,
    build_overlap_partition,
    build_pairing,
    build_solver,
    verify_theorem2,
    xz_constant,
    xz_report,
)
from rsclab.analysis import xz_constant_exact_reduced
from rsclab.linalg import SparseMatrix
from rsclab.partition import color_subdomains
from conftest import banded_spd, exact_solvers, random_spd, tridiag


def solvers_for(A, subspaces, kind="exact"):
    return [build_solver(A, idx, kind, subdomain_id=i) for i, idx in enumerate(subspaces)]


class TestXzConstant:
    def test_whole_space_exact(self):
        A = tridiag(4)
        sub = [np.arange(4)]
        C = xz_constant(A, sub, solvers_for(A, sub))
        assert C == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_splitting(self):
        A = SparseMatrix.from_dense(np.diag([1.0, 2.0]))
        sub = [np.array([0]), np.array([1])]
        C = xz_constant(A, sub, solvers_for(A, sub))
        assert C == pytest.approx(1.0, abs=1e-12)

    def test_identity_on_overlapping_three_dof(self):
        A = tridiag(3)
        owned = [np.array([0, 1]), np.array([2])]
        overlapped = [np.array([0, 1]), np.array([1, 2])]
        part = OverlapPartition(3, owned, overlapped, 1, color_subdomains(overlapped, A))
        rep = xz_report(A, part, solvers_for(A, overlapped))
        assert rep.identity_gap <= 1e-8
        assert rep.constant >= 1.0 - 1e-9
        assert 0.0 <= rep.contraction_sq < 1.0

    def test_reduced_form_agrees_for_exact_solvers(self):
        rng = np.random.default_rng(32)
        for _ in range(6):
            n = int(rng.integers(5, 13))
            A = banded_spd(rng, n)
            part = build_overlap_partition(A, int(rng.integers(2, 4)), delta=1)
            C_general = xz_constant(A, part.overlapped, exact_solvers(A, part))
            C_reduced = xz_constant_exact_reduced(A, part.overlapped)
            assert abs(C_general - C_reduced) <= 1e-8 * max(C_general, 1.0)

    def test_identity_with_scaled_solvers(self):
        rng = np.random.default_rng(33)
        for _ in range(4):
            n = int(rng.integers(6, 13))
            A = banded_spd(rng, n)
            part = build_overlap_partition(A, 2, delta=1)
            rep = xz_report(A, part, solvers_for(A, part.overlapped, "scaled_identity"))
            assert rep.identity_gap <= 1e-8

    def test_zero_solver_rejected(self):
        A = tridiag(3)
        sub = [np.arange(3)]
        with pytest.raises(ValueError, match="zero solvers"):
            xz_constant(A, sub, solvers_for(A, sub, "zero"))

    def test_non_spanning_subspaces(self):
        A = tridiag(3)
        sub = [np.array([0]), np.array([1])]
        with pytest.raises(ValueError, match="span"):
            xz_constant(A, sub, solvers_for(A, sub))

    def test_size_limits(self):
        A = tridiag(40)
        sub = [np.arange(40)]
        with pytest.raises(ValueError, match="oracle limit"):
            xz_constant(A, sub, solvers_for(A, sub))


class TestVerifyTheorem2:
    def test_single_failure_report(self):
        # instance-verified comparison; disjoint blocks keep it nontrivial
        # (overlap growth on a dense pattern saturates every subspace)
        rng = np.random.default_rng(34)
        A = random_spd(rng, 16)
        part = build_overlap_partition(A, 4, delta=0)
        pairing = build_pairing(4)
        for failed in range(4):
            rep = verify_theorem2(A, part, pairing, failed_rank=failed)
            assert rep.failed_rank == failed
            assert rep.satisfied, f"slack {rep.slack}"
            assert rep.norm_resilient <= rep.norm_baseline + 1e-10

    def test_error_free_product_bound(self):
        rng = np.random.default_rng(35)
        A = random_spd(rng, 14)
        part = build_overlap_partition(A, 4, delta=0)
        rep = verify_theorem2(A, part, build_pairing(4), failed_rank=None)
        assert rep.norm_baseline_tilde is not None
        assert rep.satisfied
        assert rep.norm_resilient <= rep.norm_baseline * rep.norm_baseline_tilde + 1e-10

    def test_degenerate_two_rank_pair(self):
        # one subspace per pair member: the resilient sweep with a failure is
        # the reversed baseline sweep, whose norm is identical (adjoint)
        rng = np.random.default_rng(36)
        A = random_spd(rng, 10)
        part = build_overlap_partition(A, 2, delta=0)
        pairing = build_pairing(2)
        for failed in (0, 1):
            rep = verify_theorem2(A, part, pairing, failed_rank=failed)
            assert rep.satisfied
            assert rep.norm_resilient == pytest.approx(rep.norm_baseline, abs=1e-9)
