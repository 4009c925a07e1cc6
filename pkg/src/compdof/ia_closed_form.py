"""Closed-form alignment beams for ``Mt = K - 1`` and ``Mr = 2``.

Each user's transmit beam ``v_k`` lives on ``T_k`` (all antennas except
``k - 1``). The receive structure forces ``v_{k+1}`` to be proportional
to ``B_k v_k`` around the whole cycle, so ``v_1`` must be an eigenvector
of the product ``B_K ... B_1``. The receive beams are then ``U = (HV)^{-T}``.

Steps, numbered contiguously:

1. ``B_k = H(T_{k+2}, T_{k+1})^{-1} H(T_{k+2}, T_k)`` for every ``k``.
2. ``v_1`` is a unit eigenvector of ``B_K ... B_1``.
3. ``v_{k+1} = B_k v_k`` for ``k = 1 .. K-1``.
4. ``V(T_k, k) = v_k``.
5. ``U = (H V)^{-T}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_complex_matrix, check_count, frozen
from .algebra import numeric_rank
from .channel_core import CooperationPattern, complement, down_set, submatrix, up_set, wrap
from .exceptions import ArgumentError, NumericalDomainError, NumericalFailure
from .smd import BeamPair, comp_smatrices

COND_LIMIT = 1e12
ALIGN_RANK_TOL = 1e-9


@dataclass(frozen=True)
class AlignmentChain:
    """The matrices ``B_1 .. B_K`` and their ordered product ``B_K ... B_1``."""

    B: tuple
    product: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def K(self):
        return len(self.B)


def _solve_checked(X, Y, what):
    if np.linalg.cond(X) > COND_LIMIT:
        raise NumericalDomainError(f"{what} is singular to working precision")
    return np.linalg.solve(X, Y)


def _sorted_eig(P):
    w, vecs = np.linalg.eig(P)
    # descending magnitude, ties broken by angle; rounding keeps near-ties stable
    order = sorted(range(len(w)), key=lambda i: (-round(abs(w[i]), 12), np.angle(w[i])))
    vecs = vecs[:, order]
    return w[order], vecs / np.linalg.norm(vecs, axis=0)


def alignment_matrices(H):
    H = check_complex_matrix(H, "H", square=True)
    K = H.shape[0]
    if K < 3:
        raise ArgumentError(f"closed-form alignment needs K >= 3, got {K}")
    Mt = K - 1
    T = lambda k: up_set(wrap(k, K), Mt, K)
    B = []
    for k in range(1, K + 1):
        X = submatrix(H, T(k + 2), T(k + 1))
        Y = submatrix(H, T(k + 2), T(k))
        B.append(frozen(_solve_checked(X, Y, f"H(T_{wrap(k + 2, K)}, T_{wrap(k + 1, K)})")))
    P = np.eye(Mt, dtype=np.complex128)
    for Bk in B:
        P = Bk @ P
    w, vecs = _sorted_eig(P)
    return AlignmentChain(tuple(B), frozen(P), frozen(w), frozen(vecs))


def closed_form_beams(H, eig_index=1, chain=None):
    """Beams with ``U^T H V = I`` for ``Mt = K - 1`` and ``Mr = 2``.

    ``eig_index`` (1-based) picks the eigenvector of ``B_K ... B_1`` under
    the ordering by descending eigenvalue magnitude.
    """
    H = check_complex_matrix(H, "H", square=True)
    K = H.shape[0]
    if chain is None:
        chain = alignment_matrices(H)
    eig_index = check_count(eig_index, "eig_index", minimum=1, maximum=K - 1)

    v = chain.eigenvectors[:, eig_index - 1].copy()
    V = np.zeros((K, K), dtype=np.complex128)
    for k in range(1, K + 1):
        V[np.asarray(up_set(k, K - 1, K)) - 1, k - 1] = v
        if k < K:
            v = chain.B[k - 1] @ v

    M = H @ V
    if np.linalg.cond(M) > COND_LIMIT:
        raise NumericalFailure("HV is singular; pick another eigenvector or realization")
    U = np.linalg.inv(M).T
    Vbar, Ubar = comp_smatrices(K, K - 1, 2)
    return BeamPair(V, U, Vbar, Ubar)


def best_eigen_beams(H, snr_db, rate_fn):
    """Try every eigenvector; keep the beams with the largest ``rate_fn(H, beams, snr_db)``."""
    H = check_complex_matrix(H, "H", square=True)
    chain = alignment_matrices(H)
    best, best_rate = None, -np.inf
    for i in range(1, H.shape[0]):
        try:
            beams = closed_form_beams(H, i, chain)
        except NumericalFailure:
            continue
        r = rate_fn(H, beams, snr_db)
        if r > best_rate:
            best, best_rate = beams, r
    if best is None:
        raise NumericalFailure("no eigenvector produced invertible HV")
    return best


def band_leakage(U, Mr=2):
    """Largest ``|U_ik|`` outside ``i in k..k+Mr-1``, relative to ``max |U|``."""
    U = np.asarray(U)
    K = U.shape[0]
    mask = np.zeros((K, K), dtype=bool)
    for k in range(1, K + 1):
        mask[np.asarray(up_set(k, Mr, K)) - 1, k - 1] = True
    scale = np.abs(U).max()
    return float(np.abs(U[~mask]).max() / scale) if (~mask).any() and scale > 0 else 0.0


def _norm2(M):
    return float(np.linalg.norm(M, 2))


def column_form_ranks(M, pattern, rel_tol=ALIGN_RANK_TOL):
    """``rank M(R_k, K \\ {k})`` for each ``k``, judged against ``||M||``."""
    K = pattern.K
    scale = _norm2(M)
    return [
        numeric_rank(submatrix(M, pattern.receive_set(k), complement([k], K)), rel_tol, scale)
        for k in range(1, K + 1)
    ]


def row_form_ranks(M, pattern, rel_tol=ALIGN_RANK_TOL):
    """``rank M(K \\ {k-1}, (k-1) down Mr)`` for each ``k``, judged against ``||M||``."""
    K = pattern.K
    scale = _norm2(M)
    out = []
    for k in range(1, K + 1):
        km1 = wrap(k - 1, K)
        out.append(numeric_rank(submatrix(M, complement([km1], K), down_set(km1, pattern.Mr, K)), rel_tol, scale))
    return out


def verify_alignment_conditions(M, pattern, rel_tol=ALIGN_RANK_TOL):
    """Both the column-form and row-form alignment conditions hold for ``M = HV``."""
    M = check_complex_matrix(M, "M", shape=(pattern.K, pattern.K))
    target = pattern.Mr - 1
    cols = column_form_ranks(M, pattern, rel_tol)
    rows = row_form_ranks(M, pattern, rel_tol)
    return all(r == target for r in cols) and all(r == target for r in rows)


def nullity_identity(M, A, B, rel_tol=ALIGN_RANK_TOL):
    """Both sides of ``rank M(A,B) = rank U(A^c,B^c) + |A| + |B| - K`` with ``U = M^{-T}``.

    Submatrix ranks are judged against the norm of the full matrix.
    """
    M = check_complex_matrix(M, "M", square=True)
    K = M.shape[0]
    U = np.linalg.inv(M).T
    Ac, Bc = complement(A, K), complement(B, K)
    lhs = numeric_rank(submatrix(M, A, B), rel_tol, _norm2(M)) if A and B else 0
    rhs_u = numeric_rank(submatrix(U, Ac, Bc), rel_tol, _norm2(U)) if Ac and Bc else 0
    return lhs, rhs_u + len(set(A)) + len(set(B)) - K


class ClosedFormAligner(BaseEstimator):
    """Estimator form of the closed-form scheme.

    ``fit(H)`` designs the beams; ``transform(H)`` returns ``U_^T H V_``.
    """

    def __init__(self, eig_index=1):
        self.eig_index = eig_index

    def fit(self, H, y=None):
        self.chain_ = alignment_matrices(H)
        beams = closed_form_beams(H, self.eig_index, self.chain_)
        self.V_, self.U_ = beams.V, beams.U
        self.beams_ = beams
        return self

    def transform(self, H):
        check_is_fitted(self, "V_")
        H = check_complex_matrix(H, "H", shape=self.V_.shape)
        return self.U_.T @ H @ self.V_

    def fit_transform(self, H, y=None):
        return self.fit(H).transform(H)

    def pattern(self):
        check_is_fitted(self, "V_")
        K = self.V_.shape[0]
        return CooperationPattern(K, K - 1, 2)


__all__ = [
    "AlignmentChain",
    "alignment_matrices",
    "closed_form_beams",
    "best_eigen_beams",
    "band_leakage",
    "column_form_ranks",
    "row_form_ranks",
    "verify_alignment_conditions",
    "nullity_identity",
    "ClosedFormAligner",
]
