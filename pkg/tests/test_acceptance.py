"""Acceptance suite: one test per criterion, summarized as PASS/FAIL lines."""
import time
from fractions import Fraction

import numpy as np
import pytest

from compdof.algebra import (
    claim2_determinant,
    coordinate_map,
    monomial_matrix_full_rank,
    polynomial_map,
    structural_rank,
)
from compdof.channel_core import CooperationPattern, complement, down_set, sample_channel, wrap
from compdof.cj_alignment import (
    achievable_dof,
    build_mk_general,
    build_mk_km2,
    required_length,
    verify_decodability,
)
from compdof.derived_channel import (
    general_generator_count,
    general_receiver_map,
    verify_triviality,
    zf_transform_general,
    zf_transform_km2,
)
from compdof.dof_bounds import (
    asymmetric_dof_vector,
    check_dof_vector,
    known_dof,
    miso_reference_dof,
    region_constraints,
    sum_dof_outer_bound,
)
from compdof.ia_closed_form import (
    band_leakage,
    closed_form_beams,
    column_form_ranks,
    nullity_identity,
    row_form_ranks,
)
from compdof.simulator import LinkBudget, estimate_dof_slope, sweep
from compdof.smd import comp_smatrices, full_dof_beams, smd_feasible, smd_jacobian_rank_at_identity


@pytest.mark.criterion(1)
def test_full_dof_beams():
    start = time.perf_counter()
    for K in (3, 4, 5, 6):
        for Mt in range(1, K + 1):
            for Mr in range(1, K + 1):
                if Mt + Mr < K + 1:
                    continue
                for seed in range(20):
                    H = sample_channel(K, 1, seed).matrix(1)
                    b = full_dof_beams(H, Mt, Mr)
                    err = np.abs(b.U.T @ H @ b.V - np.eye(K)).max()
                    assert err < 1e-8, (K, Mt, Mr, seed, err)
                    assert np.all(b.V[b.Vbar == 0] == 0) and np.all(b.U[b.Ubar == 0] == 0)
    assert time.perf_counter() - start < 30


@pytest.mark.criterion(2)
def test_smd_feasibility_boundary():
    for K in range(2, 13):
        for Mt in range(1, K + 1):
            for Mr in range(1, K + 1):
                masks = comp_smatrices(K, Mt, Mr)
                feasible = smd_feasible(*masks)
                assert feasible == (Mt + Mr >= K + 1), (K, Mt, Mr)
                if feasible and K <= 8:
                    assert smd_jacobian_rank_at_identity(*masks) == K * K, (K, Mt, Mr)


@pytest.mark.criterion(3)
def test_closed_form_alignment():
    for K in range(3, 9):
        p = CooperationPattern(K, K - 1, 2)
        for seed in range(25):
            H = sample_channel(K, 1, seed).matrix(1)
            b = closed_form_beams(H)
            assert np.abs(b.U.T @ H @ b.V - np.eye(K)).max() < 1e-8
            assert band_leakage(b.U) < 1e-8
            M = H @ b.V
            assert column_form_ranks(M, p) == [1] * K
            assert row_form_ranks(M, p) == [1] * K
            for k in range(1, K + 1):
                km1 = wrap(k - 1, K)
                for A, B in [(p.receive_set(k), complement([k], K)),
                             (complement([km1], K), down_set(km1, 2, K))]:
                    lhs, rhs = nullity_identity(M, list(A), list(B))
                    assert lhs == rhs == 1


@pytest.mark.criterion(4)
def test_claim2_determinant():
    start = time.perf_counter()
    for K in (4, 5, 6, 7):
        assert abs(abs(claim2_determinant(K)) - 1) <= 1e-6
        assert abs(abs(claim2_determinant(K, "numeric")) - 1) <= 1e-6
    assert time.perf_counter() - start < 10


@pytest.mark.criterion(5)
def test_km2_scheme():
    columns = {(4, 1): 63, (4, 2): 255, (5, 1): 184}
    for (K, n), cols in columns.items():
        Mt = K - 2
        L = required_length(K, Mt, "km2", n)
        assert L == cols
        for seed in range(10):
            dc = zf_transform_km2(sample_channel(K, L, seed))
            assert verify_triviality(dc)
            Mks = build_mk_km2(dc, n)
            assert all(M.shape == (L, cols) for M in Mks)
            assert verify_decodability(Mks).ok, (K, n, seed)
        KMt = Fraction(K * Mt)
        assert achievable_dof(K, Mt, "km2", n) == KMt / (Mt + 1 + KMt / (n + 1))
    assert achievable_dof(4, 2, "km2", 1) == Fraction(8, 7)
    assert achievable_dof(4, 2, "km2") == Fraction(8, 3) == sum_dof_outer_bound(4, 2, 1)
    assert achievable_dof(5, 3, "km2") == Fraction(15, 4) == sum_dof_outer_bound(5, 3, 1)


@pytest.mark.criterion(6)
def test_general_scheme():
    K, Mt, n = 4, 2, 1
    N = general_generator_count(K, Mt)
    for k in range(1, K + 1):
        f = general_receiver_map(K, Mt, k)
        expected = N + 2 if k < Mt else N + 1
        assert f.n_outputs == expected and structural_rank(f) == expected
    assert (N + 2, N + 1) == (14, 13)
    L = required_length(K, Mt, "general", n)
    for seed in range(10):
        dc = zf_transform_general(sample_channel(K, L, seed), Mt)
        assert verify_triviality(dc)
        assert verify_decodability(build_mk_general(dc, n)).ok, seed
    assert achievable_dof(K, Mt, "general") == Fraction(5, 2) == Fraction(K + Mt - 1, 2)
    p = CooperationPattern(K, Mt, 1)
    assert check_dof_vector(p, asymmetric_dof_vector(K, Mt), region_constraints(p))

    start = time.perf_counter()
    for K2 in range(3, 8):
        for Mt2 in range(2, K2):
            for k in range(1, K2 + 1):
                f = general_receiver_map(K2, Mt2, k)
                assert structural_rank(f) == f.n_outputs, (K2, Mt2, k)
    assert time.perf_counter() - start < 300


@pytest.mark.criterion(7)
def test_bounds_table():
    for K in range(3, 13):
        assert known_dof(K, 1, 1) == Fraction(K, 2)
        assert known_dof(K, K - 1, 1) == K - 1
        assert known_dof(K, K, 1) == K
        assert known_dof(K, 1, K) == K
    assert sum_dof_outer_bound(5, 3, 1) == Fraction(15, 4) == achievable_dof(5, 3, "km2")
    for K in range(3, 13):
        for Mt in range(1, K + 1):
            if Mt in (1, K - 2, K - 1, K):
                continue
            assert sum_dof_outer_bound(K, Mt, 1) < miso_reference_dof(K, Mt), (K, Mt)


@pytest.mark.criterion(8)
def test_simulation_slopes():
    start = time.perf_counter()
    base = dict(K=3, schemes=("zf", "cf"), snr_db=tuple(range(0, 65, 5)), trials=100, seed=0)
    fixed = sweep(LinkBudget(**base))
    best = sweep(LinkBudget(**base, eig_policy="best"))
    for s in ("zf", "cf"):
        assert 2.7 <= estimate_dof_slope(fixed, s, (40, 60)) <= 3.3
    x = np.asarray(fixed.snr_db)
    assert np.all(fixed.curve("zf")[x >= 20] > fixed.curve("cf")[x >= 20])
    assert np.all(best.curve("cf") >= fixed.curve("cf"))
    assert np.all(best.curve("zf") == fixed.curve("zf"))
    assert time.perf_counter() - start < 120


@pytest.mark.criterion(9)
def test_monomial_rank_harness():
    dependent = polynomial_map([lambda t: t[0], lambda t: t[0] ** 2], 1)
    exps = [(2, 0), (0, 1)]
    assert sum(monomial_matrix_full_rank(dependent, exps, seed=s) for s in range(50)) == 0
    assert sum(monomial_matrix_full_rank(coordinate_map(2), exps, seed=s) for s in range(50)) == 50
