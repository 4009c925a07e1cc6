"""Numerical Jacobians, rank oracles and algebraic-independence tests.

A family of rational functions ``f_1..f_m`` of ``t_1..t_n`` is
algebraically independent exactly when its Jacobian has full row rank at
some point. Evaluating the Jacobian at random complex points gives that
rank with probability one, which is what :func:`structural_rank` does.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._validation import check_count
from .channel_core import circulant_test_point, complex_normal, make_rng, up_set, wrap
from .exceptions import ArgumentError, NumericalDomainError

DEFAULT_STEP = 1e-6
DEFAULT_RANK_TOL = 1e-10
# central differences carry roughly eps/step ~ 1e-10 relative noise, so
# finite-difference Jacobians are ranked with a looser threshold
FD_RANK_TOL = 1e-7
DEFAULT_TRIALS = 3
MAX_RESAMPLE = 20


@dataclass(frozen=True)
class RationalMap:
    """A black-box map ``C^n -> C^m``.

    ``eval`` takes a complex vector of length ``n_inputs`` and returns one
    of length ``n_outputs``. ``singular_guard`` returns False where the map
    is undefined. ``jacobian`` is an optional analytic derivative; when it
    is absent the Jacobian is approximated by central differences.
    """

    n_inputs: int
    n_outputs: int
    eval: Callable[[np.ndarray], np.ndarray]
    singular_guard: Optional[Callable[[np.ndarray], bool]] = None
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, t):
        t = np.asarray(t, dtype=np.complex128)
        if not self.is_defined(t):
            raise NumericalDomainError(f"map {self.name or '<anonymous>'} undefined at point")
        out = np.atleast_1d(np.asarray(self.eval(t), dtype=np.complex128))
        if out.shape != (self.n_outputs,):
            raise ArgumentError(f"map returned shape {out.shape}, expected ({self.n_outputs},)")
        return out

    def is_defined(self, t):
        return self.singular_guard is None or bool(self.singular_guard(t))


def _as_map(f):
    if not isinstance(f, RationalMap):
        raise ArgumentError(f"expected a RationalMap, got {type(f).__name__}")
    return f


def numeric_jacobian(f, point, step=DEFAULT_STEP):
    """Central-difference Jacobian ``(f(t + d e_j) - f(t - d e_j)) / 2d``.

    The probe size is ``d = step * max(1, |t_j|)``. Probing along the real
    axis is enough because every component is holomorphic away from its
    poles.
    """
    f = _as_map(f)
    t = np.asarray(point, dtype=np.complex128).ravel()
    if t.shape != (f.n_inputs,):
        raise ArgumentError(f"point must have length {f.n_inputs}, got {t.shape[0]}")
    if step <= 0:
        raise ArgumentError("step must be positive")
    J = np.empty((f.n_outputs, f.n_inputs), dtype=np.complex128)
    for j in range(f.n_inputs):
        d = step * max(1.0, abs(t[j]))
        tp, tm = t.copy(), t.copy()
        tp[j] += d
        tm[j] -= d
        J[:, j] = (f(tp) - f(tm)) / (2 * d)
    return J


def jacobian(f, point, step=DEFAULT_STEP):
    """Analytic Jacobian when the map provides one, else central differences."""
    f = _as_map(f)
    if f.jacobian is not None:
        t = np.asarray(point, dtype=np.complex128).ravel()
        if not f.is_defined(t):
            raise NumericalDomainError("map undefined at point")
        return np.asarray(f.jacobian(t), dtype=np.complex128)
    return numeric_jacobian(f, point, step)


def numeric_rank(M, rel_tol=DEFAULT_RANK_TOL, scale=None):
    """Number of singular values above ``rel_tol * sigma_max * max(rows, cols)``.

    ``scale`` replaces ``sigma_max`` when a submatrix must be judged against
    the size of the matrix it was cut from.
    """
    M = np.asarray(M)
    if M.ndim != 2:
        raise ArgumentError(f"numeric_rank expects a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ArgumentError("matrix has non-finite entries")
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    ref = s[0] if scale is None else scale
    if ref == 0:
        return 0
    return int(np.sum(s > rel_tol * ref * max(M.shape)))


def _generic_point(f, rng):
    for _ in range(MAX_RESAMPLE):
        t = complex_normal(rng, (f.n_inputs,))
        if f.is_defined(t):
            return t
    raise NumericalDomainError(f"no defined point found after {MAX_RESAMPLE} samples")


def structural_rank(f, trials=DEFAULT_TRIALS, seed=0, rel_tol=None, step=DEFAULT_STEP):
    """Maximum Jacobian rank over ``trials`` random generic points.

    ``rel_tol`` defaults to 1e-10 for analytic Jacobians and 1e-7 for
    finite-difference ones.
    """
    f = _as_map(f)
    trials = check_count(trials, "trials", minimum=1)
    if rel_tol is None:
        rel_tol = DEFAULT_RANK_TOL if f.jacobian is not None else FD_RANK_TOL
    rng = make_rng(seed)
    best = 0
    for _ in range(trials):
        t = _generic_point(f, rng)
        best = max(best, numeric_rank(jacobian(f, t, step), rel_tol))
        if best == min(f.n_outputs, f.n_inputs):
            break
    return best


def is_algebraically_independent(f, trials=DEFAULT_TRIALS, seed=0, rel_tol=None):
    f = _as_map(f)
    if f.n_outputs > f.n_inputs:
        return False
    return structural_rank(f, trials, seed, rel_tol) == f.n_outputs


def _check_exponents(exponents, m):
    E = np.asarray(exponents)
    if E.ndim == 1:
        E = E[:, None]
    if E.ndim != 2 or E.shape[1] != m:
        raise ArgumentError(f"exponent vectors must have length {m}")
    if not np.issubdtype(E.dtype, np.integer) or np.any(E < 0):
        raise ArgumentError("exponents must be non-negative integers")
    return E.astype(np.int64)


def monomial_matrix(f, exponents, p=None, seed=0):
    """``p x q`` matrix with rows ``(s^a_1, ..., s^a_q)``, ``s = f(t)`` at fresh generic ``t``."""
    f = _as_map(f)
    E = _check_exponents(exponents, f.n_outputs)
    q = E.shape[0]
    p = q if p is None else check_count(p, "p", minimum=q)
    rng = make_rng(seed)
    rows = []
    for _ in range(p):
        s = f(_generic_point(f, rng))
        rows.append(np.prod(s[None, :] ** E, axis=1))
    return np.array(rows)


def monomial_matrix_full_rank(f, exponents, seed=0, rel_tol=1e-9):
    """True iff the square monomial matrix has numeric rank ``q``.

    The check is done on the row/column-equilibrated matrix; diagonal
    scaling does not change the rank but keeps the SVD threshold meaningful
    when monomials differ by many orders of magnitude.
    """
    M = monomial_matrix(f, exponents, seed=seed)
    return numeric_rank(equilibrate(M), rel_tol) == M.shape[1]


def equilibrate(M, sweeps=3):
    """Alternately normalize rows and columns to unit 2-norm (rank preserving)."""
    M = np.array(M, dtype=np.complex128)
    for _ in range(sweeps):
        for axis in (1, 0):
            n = np.linalg.norm(M, axis=axis, keepdims=True)
            n[n == 0] = 1.0
            M /= n
    return M


def coordinate_map(n):
    """The identity map on ``C^n``."""
    n = check_count(n, "n")
    return RationalMap(n, n, lambda t: t, jacobian=lambda t: np.eye(n), name="coordinates")


def polynomial_map(funcs, n_inputs, name=""):
    """Wrap a list of scalar callables ``g(t)`` as a RationalMap."""
    funcs = list(funcs)
    return RationalMap(
        n_inputs, len(funcs), lambda t: np.array([g(t) for g in funcs]), name=name
    )


# -- derived-coefficient maps for the M_t = K - 2 construction ------------


def _km2_blocks(K):
    """1-based (row, T_source, T_target) triples defining g_0 and g_1..g_K."""
    Mt = K - 2
    blocks = [(1, up_set(1, Mt, K), up_set(2, Mt, K))]
    for i in range(1, K + 1):
        blocks.append((i, up_set(wrap(i + 1, K), Mt, K), up_set(wrap(i + 2, K), Mt, K)))
    return blocks


def km2_receiver_map(K, receiver=1):
    """Map ``vec(H) -> (g_kk, g_{1,2}, ..., g_{K,1})`` for the ``M_t = K - 2`` scheme.

    Outputs are the ``(K + 1) M_t`` coefficients seen by ``receiver``:
    ``g_kk = H(k, T_k) H(T_{k+1}, T_k)^{-1}`` followed by
    ``g_{i,i+1} = H(i, T_{i+1}) H(T_{i+2}, T_{i+1})^{-1}`` for ``i = 1..K``.
    Inputs are the ``K^2`` entries of ``H`` in row-major order.
    """
    K = check_count(K, "K", minimum=4)
    k = check_count(receiver, "receiver", minimum=1, maximum=K)
    Mt = K - 2
    blocks = [(k, up_set(k, Mt, K), up_set(wrap(k + 1, K), Mt, K))] + _km2_blocks(K)[1:]
    return _row_times_inverse_map(K, blocks, f"km2[K={K},k={k}]")


def _row_times_inverse_map(K, blocks, name):
    """Map whose output blocks are ``H(i, C) H(R, C)^{-1}`` for each (i, C, R)."""
    idx = [
        (i - 1, np.asarray(C) - 1, np.asarray(R) - 1) for i, C, R in blocks
    ]
    n_out = sum(len(C) for _, C, _ in idx)

    def unpack(t):
        return np.asarray(t, dtype=np.complex128).reshape(K, K)

    def guard(t):
        H = unpack(t)
        for _, C, R in idx:
            if np.linalg.cond(H[np.ix_(R, C)]) > 1e12:
                return False
        return True

    def ev(t):
        H = unpack(t)
        out = []
        for i, C, R in idx:
            out.append(np.linalg.solve(H[np.ix_(R, C)].T, H[i, C]))
        return np.concatenate(out)

    def jac(t):
        # d(h X^{-1}) = dh X^{-1} - h X^{-1} dX X^{-1}
        H = unpack(t)
        J = np.zeros((n_out, K * K), dtype=np.complex128)
        r0 = 0
        for i, C, R in idx:
            m = len(C)
            Xinv = np.linalg.inv(H[np.ix_(R, C)])
            g = H[i, C] @ Xinv
            for a, c in enumerate(C):
                J[r0:r0 + m, i * K + c] += Xinv[a, :]
            for a, r in enumerate(R):
                for b, c in enumerate(C):
                    J[r0:r0 + m, r * K + c] -= g[a] * Xinv[b, :]
            r0 += m
        return J

    return RationalMap(K * K, n_out, ev, guard, jac, name)


def claim2_columns(K):
    """Row-major positions of the variables ``h_0, h_1, ..., h_K``.

    ``h_0 = (h_11, ..., h_{Mt,Mt})`` and ``h_i = H(i, T_{i+1})``.
    """
    Mt = K - 2
    cols = [(j - 1) * K + (j - 1) for j in range(1, Mt + 1)]
    for i in range(1, K + 1):
        cols.extend((i - 1) * K + (c - 1) for c in up_set(wrap(i + 1, K), Mt, K))
    return cols


def claim2_submatrix(K, method="analytic", step=DEFAULT_STEP):
    """Square Jacobian block ``J[g_0..g_K; h_0..h_K]`` at the circulant point."""
    K = check_count(K, "K", minimum=4)
    f = km2_receiver_map(K, receiver=1)
    A = circulant_test_point(K).ravel()
    if not f.is_defined(A):
        raise NumericalDomainError("a required submatrix is singular at the circulant point")
    if method == "analytic":
        J = jacobian(f, A)
    elif method == "numeric":
        J = numeric_jacobian(f, A, step)
    else:
        raise ArgumentError(f"method must be 'analytic' or 'numeric', got {method!r}")
    return J[:, claim2_columns(K)]


def claim2_determinant(K, method="analytic"):
    """Determinant of the Claim-2 Jacobian block; its modulus is 1."""
    return complex(np.linalg.det(claim2_submatrix(K, method)))


__all__ = [
    "RationalMap",
    "numeric_jacobian",
    "jacobian",
    "numeric_rank",
    "structural_rank",
    "is_algebraically_independent",
    "monomial_matrix",
    "monomial_matrix_full_rank",
    "equilibrate",
    "coordinate_map",
    "polynomial_map",
    "km2_receiver_map",
    "claim2_columns",
    "claim2_submatrix",
    "claim2_determinant",
]
