import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compdof.channel_core import CooperationPattern, complex_normal, make_rng, sample_channel, up_set
from compdof.exceptions import ArgumentError, NumericalDomainError
from compdof.ia_closed_form import (
    ClosedFormAligner,
    alignment_matrices,
    band_leakage,
    best_eigen_beams,
    closed_form_beams,
    column_form_ranks,
    nullity_identity,
    row_form_ranks,
    verify_alignment_conditions,
)
from compdof.simulator import sum_rate
from compdof.smd import full_dof_beams


def H_of(K, seed):
    return sample_channel(K, 1, seed).matrix(1)


def test_chain_shapes():
    chain = alignment_matrices(H_of(5, 0))
    assert chain.K == 5
    assert all(B.shape == (4, 4) for B in chain.B)
    assert chain.product.shape == (4, 4)
    assert chain.eigenvectors.shape == (4, 4)
    np.testing.assert_allclose(np.linalg.norm(chain.eigenvectors, axis=0), 1.0)
    mags = np.abs(chain.eigenvalues)
    assert np.all(np.diff(mags) <= 1e-12 * mags.max())


def test_product_order():
    chain = alignment_matrices(H_of(4, 3))
    P = chain.B[3] @ chain.B[2] @ chain.B[1] @ chain.B[0]
    np.testing.assert_allclose(chain.product, P, atol=1e-12)


@pytest.mark.parametrize("K", range(3, 8))
def test_closed_form_properties(K):
    H = H_of(K, K)
    for i in range(1, K):
        beams = closed_form_beams(H, i)
        np.testing.assert_allclose(beams.effective_channel(H), np.eye(K), atol=1e-9)
        assert band_leakage(beams.U) < 1e-10
        # V is exactly structured; U comes from an inverse
        assert np.all(beams.V[beams.Vbar == 0] == 0)
        assert beams.mask_violation() < 1e-10
        for k in range(1, K + 1):
            # transmitter k-1 never carries stream k
            assert beams.V[(k - 2) % K, k - 1] == 0
        assert verify_alignment_conditions(H @ beams.V, CooperationPattern(K, K - 1, 2))


def test_scaling_eigenvector_scales_beams_only():
    H = H_of(4, 11)
    chain = alignment_matrices(H)
    b1 = closed_form_beams(H, 1, chain)
    c = 2.5 - 1.5j
    scaled = type(chain)(chain.B, chain.product, chain.eigenvalues, chain.eigenvectors * c)
    b2 = closed_form_beams(H, 1, scaled)
    np.testing.assert_allclose(b2.V, c * b1.V, atol=1e-12)
    np.testing.assert_allclose(b2.U, b1.U / c, atol=1e-12)


def test_homotopy_solution_is_on_the_chain():
    # an independent solver for the same masks must produce an eigenvector of the product
    for K in (3, 4, 5):
        H = H_of(K, 40 + K)
        beams = full_dof_beams(H, K - 1, 2)
        v1 = beams.V[np.asarray(up_set(1, K - 1, K)) - 1, 0]
        P = alignment_matrices(H).product
        w = P @ v1
        lam = np.vdot(v1, w) / np.vdot(v1, v1)
        assert np.linalg.norm(w - lam * v1) < 1e-7 * np.linalg.norm(w)


def test_generic_matrix_fails_conditions():
    M = complex_normal(make_rng(5), (4, 4))
    p = CooperationPattern(4, 3, 2)
    assert not verify_alignment_conditions(M, p)
    assert column_form_ranks(M, p) == [2, 2, 2, 2]
    assert row_form_ranks(M, p) == [2, 2, 2, 2]


def test_mr3_conditions_on_full_dof_beams():
    H = H_of(3, 2)
    beams = full_dof_beams(H, 1, 3)
    assert verify_alignment_conditions(H @ beams.V, CooperationPattern(3, 1, 3))


@settings(max_examples=100, deadline=None)
@given(
    st.integers(2, 6).flatmap(
        lambda K: st.tuples(
            st.just(K),
            st.sets(st.integers(1, K), min_size=1, max_size=K),
            st.sets(st.integers(1, K), min_size=1, max_size=K),
            st.integers(0, 2**32),
        )
    )
)
def test_nullity_identity(args):
    K, A, B, seed = args
    M = complex_normal(make_rng(seed), (K, K))
    lhs, rhs = nullity_identity(M, sorted(A), sorted(B))
    assert lhs == rhs


def test_nullity_identity_on_structured_matrix():
    H = H_of(5, 1)
    M = H @ closed_form_beams(H).V
    for k in range(1, 6):
        A = list(up_set(k, 2, 5))
        B = [j for j in range(1, 6) if j != k]
        lhs, rhs = nullity_identity(M, A, B)
        assert lhs == rhs == 1


def test_circulant_products_are_invertible():
    from compdof.channel_core import circulant_test_point

    for K in range(3, 8):
        chain = alignment_matrices(circulant_test_point(K))
        assert np.linalg.cond(chain.product) < 1e8


def test_singular_block_raises_domain_error():
    H = np.ones((4, 4), dtype=complex)
    with pytest.raises(NumericalDomainError):
        alignment_matrices(H)


def test_argument_checks():
    with pytest.raises(ArgumentError):
        alignment_matrices(np.eye(2))
    with pytest.raises(ArgumentError):
        closed_form_beams(H_of(4, 0), eig_index=4)


def test_best_eigen_beams_maximizes_rate():
    H = H_of(4, 8)
    best = best_eigen_beams(H, 20.0, sum_rate)
    rates = [sum_rate(H, closed_form_beams(H, i), 20.0) for i in range(1, 4)]
    assert sum_rate(H, best, 20.0) == pytest.approx(max(rates))


def test_estimator():
    H = H_of(4, 6)
    est = ClosedFormAligner(eig_index=2)
    np.testing.assert_allclose(est.fit_transform(H), np.eye(4), atol=1e-9)
    assert est.pattern() == CooperationPattern(4, 3, 2)
    assert est.get_params() == {"eig_index": 2}
