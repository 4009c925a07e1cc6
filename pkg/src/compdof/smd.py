"""Structural matrix decomposition ``A = V U^T`` under (0,1) support masks.

A generic square matrix admits such a factorization whenever both masks
have a full diagonal and ``Vbar + Ubar^T`` has no zero entry. The
factorization is computed by homotopy continuation from ``A(0) = I``,
where ``V = U = I`` is a regular solution, to ``A(1) = A``, correcting
each step with damped minimum-norm Gauss-Newton iterations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_complex_matrix, check_count, check_mask
from .algebra import numeric_rank
from .channel_core import CooperationPattern
from .exceptions import ArgumentError, NumericalFailure


def comp_smatrices(K, Mt, Mr):
    """Masks with ``Vbar[i, k] = 1`` iff ``i`` is in ``T_k`` and ``Ubar[i, k] = 1`` iff ``i`` is in ``R_k``."""
    p = CooperationPattern(K, Mt, Mr)
    Vbar = np.zeros((p.K, p.K), dtype=np.int8)
    Ubar = np.zeros((p.K, p.K), dtype=np.int8)
    for k in range(1, p.K + 1):
        for i in p.transmit_set(k):
            Vbar[i - 1, k - 1] = 1
        for i in p.receive_set(k):
            Ubar[i - 1, k - 1] = 1
    return Vbar, Ubar


def lu_smatrices(K):
    """Lower-triangular masks; the SMD then reduces to a Crout LU factorization."""
    K = check_count(K, "K")
    L = np.tril(np.ones((K, K), dtype=np.int8))
    return L, L.copy()


def smd_feasible(Vbar, Ubar):
    """Sufficient condition for a generic matrix to admit an SMD.

    A False result does not prove that no decomposition exists.
    """
    Vbar = check_mask(Vbar, "Vbar")
    Ubar = check_mask(Ubar, "Ubar", size=Vbar.shape[0])
    return bool(np.all(np.diag(Vbar)) and np.all(np.diag(Ubar)) and np.all(Vbar | Ubar.T))


class _Layout:
    """Free-variable bookkeeping: every ``v_ij`` in the mask, ``u_ij`` off the diagonal."""

    def __init__(self, Vbar, Ubar):
        self.K = Vbar.shape[0]
        self.v_idx = np.argwhere(Vbar)
        u_free = Ubar.copy()
        np.fill_diagonal(u_free, False)
        self.u_idx = np.argwhere(u_free)
        self.nv = len(self.v_idx)
        self.n = self.nv + len(self.u_idx)

    def unpack(self, t):
        K = self.K
        V = np.zeros((K, K), dtype=np.complex128)
        U = np.eye(K, dtype=np.complex128)
        V[self.v_idx[:, 0], self.v_idx[:, 1]] = t[: self.nv]
        U[self.u_idx[:, 0], self.u_idx[:, 1]] = t[self.nv:]
        return V, U

    def pack(self, V, U):
        return np.concatenate(
            [V[self.v_idx[:, 0], self.v_idx[:, 1]], U[self.u_idx[:, 0], self.u_idx[:, 1]]]
        )

    def jacobian(self, V, U):
        """d vec(V U^T) / dt with ``vec`` in row-major order."""
        K = self.K
        J = np.zeros((K, K, self.n), dtype=np.complex128)
        # (V U^T)_pq = sum_l v_pl u_ql
        for col, (i, j) in enumerate(self.v_idx):
            J[i, :, col] = U[:, j]
        for col, (i, j) in enumerate(self.u_idx, start=self.nv):
            J[:, i, col] = V[:, j]
        return J.reshape(K * K, self.n)


def smd_jacobian_rank_at_identity(Vbar, Ubar, rel_tol=1e-10):
    """Rank of ``d vec(V U^T)/dt`` at ``V = U = I``; equals ``K^2`` for feasible masks."""
    if not smd_feasible(Vbar, Ubar):
        raise ArgumentError("masks do not satisfy the SMD feasibility conditions")
    lay = _Layout(check_mask(Vbar), check_mask(Ubar))
    I = np.eye(lay.K, dtype=np.complex128)
    return numeric_rank(lay.jacobian(I, I), rel_tol)


@dataclass(frozen=True)
class BeamPair:
    """Transmit beams ``V`` (columns) and receive beams ``U`` with their support masks."""

    V: np.ndarray
    U: np.ndarray
    Vbar: np.ndarray
    Ubar: np.ndarray

    def mask_violation(self):
        """Largest magnitude of an entry outside the masks (0.0 when exact)."""
        out = np.concatenate([np.abs(self.V[~self.Vbar.astype(bool)]),
                              np.abs(self.U[~self.Ubar.astype(bool)])])
        return float(out.max()) if out.size else 0.0

    def effective_channel(self, H):
        return self.U.T @ H @ self.V


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    steps: int = 10
    max_refinements: int = 10
    newton_tol: float = 1e-12
    max_newton_iter: int = 50


def _newton(lay, t, target, opts, scale):
    """Minimum-norm Gauss-Newton on ``V U^T = target``; returns (t, residual, converged)."""
    res_prev = np.inf
    for _ in range(opts.max_newton_iter):
        V, U = lay.unpack(t)
        F = (V @ U.T - target).ravel()
        res = np.abs(F).max() / scale
        if res <= opts.newton_tol:
            return t, res, True
        if res > 0.5 * res_prev and res_prev < opts.tol:
            # stagnated at round-off level, already inside the output tolerance
            return t, res, True
        if res > 10 * res_prev:
            return t, res, False
        res_prev = res
        step, *_ = np.linalg.lstsq(lay.jacobian(V, U), -F, rcond=None)
        t = t + step
    V, U = lay.unpack(t)
    res = np.abs(V @ U.T - target).max() / scale
    return t, res, res <= opts.tol


def smd_solve(A, Vbar, Ubar, opts=None):
    """Factor ``A = V U^T`` respecting the masks, with ``u_kk = 1``.

    Raises NumericalFailure when continuation cannot proceed with steps
    down to ``2**-max_refinements``, which signals that ``A`` sits close
    to the exceptional set where no decomposition exists.
    """
    opts = opts or SolverOptions()
    Vbar = check_mask(Vbar, "Vbar")
    K = Vbar.shape[0]
    Ubar = check_mask(Ubar, "Ubar", size=K)
    A = check_complex_matrix(A, "A", shape=(K, K))
    if not smd_feasible(Vbar, Ubar):
        raise ArgumentError("masks do not satisfy the SMD feasibility conditions")

    lay = _Layout(Vbar, Ubar)
    I = np.eye(K, dtype=np.complex128)
    t = lay.pack(I, I)
    scale = max(1.0, np.abs(A).max())
    h_min = 1.0 / (opts.steps * 2 ** opts.max_refinements)
    h = 1.0 / opts.steps
    s = 0.0
    n_steps = 0
    while s < 1.0:
        h = min(h, 1.0 - s)
        s_new = 1.0 if 1.0 - (s + h) < 1e-14 else s + h
        V, U = lay.unpack(t)
        # tangent predictor: J dt/ds = A - I
        dt, *_ = np.linalg.lstsq(lay.jacobian(V, U), (A - I).ravel(), rcond=None)
        t_pred = t + (s_new - s) * dt
        target = (1 - s_new) * I + s_new * A
        t_new, res, ok = _newton(lay, t_pred, target, opts, scale)
        if ok and np.all(np.isfinite(t_new)):
            t, s = t_new, s_new
            n_steps += 1
            h = min(2 * h, 1.0 / opts.steps)
        else:
            h /= 2
            if h < h_min:
                raise NumericalFailure(
                    f"continuation stalled at s={s:.6g}; target is near the exceptional set"
                )

    V, U = lay.unpack(t)
    residual = np.abs(V @ U.T - A).max() / max(np.abs(A).max(), np.finfo(float).tiny)
    if residual > opts.tol:
        raise NumericalFailure(f"SMD residual {residual:.3e} exceeds tolerance {opts.tol:.1e}")
    return BeamPair(V, U, Vbar.astype(np.int8), Ubar.astype(np.int8)), residual, n_steps


def full_dof_beams(H, Mt, Mr, opts=None):
    """Beams with ``U^T H V = I`` for ``Mt + Mr >= K + 1`` (SMD of ``H^{-1}``)."""
    H = check_complex_matrix(H, "H", square=True)
    K = H.shape[0]
    p = CooperationPattern(K, Mt, Mr)
    if not p.full_dof:
        raise ArgumentError(f"full DoF beams need Mt + Mr >= K + 1, got {Mt} + {Mr} < {K + 1}")
    Vbar, Ubar = comp_smatrices(K, Mt, Mr)
    try:
        A = np.linalg.inv(H)
    except np.linalg.LinAlgError as exc:
        raise ArgumentError("H is singular") from exc
    beams, _, _ = smd_solve(A, Vbar, Ubar, opts)
    return beams


class StructuredMatrixDecomposition(BaseEstimator):
    """Estimator wrapper around :func:`smd_solve`.

    Parameters
    ----------
    v_mask, u_mask : (K, K) arrays of 0/1
        Allowed supports of ``V`` and ``U``.
    tol : float
        Relative residual ``||V U^T - A||_inf / ||A||_inf`` to accept.
    steps : int
        Initial number of continuation steps.
    max_refinements : int
        Step halvings allowed before giving up.

    Attributes
    ----------
    V_, U_ : ndarray
        The factors, with exact zeros outside the masks and ``U_[k, k] = 1``.
    residual_ : float
    n_steps_ : int
        Accepted continuation steps.
    """

    def __init__(self, v_mask, u_mask, tol=1e-10, steps=10, max_refinements=10):
        self.v_mask = v_mask
        self.u_mask = u_mask
        self.tol = tol
        self.steps = steps
        self.max_refinements = max_refinements

    def _options(self):
        return SolverOptions(tol=self.tol, steps=self.steps, max_refinements=self.max_refinements)

    def fit(self, A, y=None):
        beams, self.residual_, self.n_steps_ = smd_solve(A, self.v_mask, self.u_mask, self._options())
        self.V_, self.U_ = beams.V, beams.U
        return self

    def reconstruct(self):
        check_is_fitted(self, "V_")
        return self.V_ @ self.U_.T


class FullDoFBeamformer(BaseEstimator):
    """Design ``K`` interference-free streams for ``Mt + Mr >= K + 1``.

    ``fit(H)`` stores ``V_`` and ``U_``; ``transform(H)`` returns the
    effective channel ``U_^T H V_``, which is the identity for the
    channel the beams were fitted on.
    """

    def __init__(self, mt, mr, tol=1e-10, steps=10, max_refinements=10):
        self.mt = mt
        self.mr = mr
        self.tol = tol
        self.steps = steps
        self.max_refinements = max_refinements

    def fit(self, H, y=None):
        opts = SolverOptions(tol=self.tol, steps=self.steps, max_refinements=self.max_refinements)
        beams = full_dof_beams(H, self.mt, self.mr, opts)
        self.beams_ = beams
        self.V_, self.U_ = beams.V, beams.U
        return self

    def transform(self, H):
        check_is_fitted(self, "V_")
        H = check_complex_matrix(H, "H", shape=self.V_.shape)
        return self.U_.T @ H @ self.V_

    def fit_transform(self, H, y=None):
        return self.fit(H).transform(H)


def feasibility_verdict(Vbar, Ubar):
    """Human-readable verdict; failing the sufficient conditions is not a proof of non-existence."""
    if smd_feasible(Vbar, Ubar):
        return "sufficient conditions hold: a generic matrix admits this decomposition"
    return "sufficient conditions fail: existence is not guaranteed (not a proof of non-existence)"


__all__ = [
    "comp_smatrices",
    "lu_smatrices",
    "smd_feasible",
    "smd_jacobian_rank_at_identity",
    "BeamPair",
    "SolverOptions",
    "smd_solve",
    "full_dof_beams",
    "StructuredMatrixDecomposition",
    "FullDoFBeamformer",
    "feasibility_verdict",
]
