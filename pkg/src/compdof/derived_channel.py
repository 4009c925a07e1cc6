"""Zero-forcing transforms from the CoMP channel to derived uplink-like channels.

A derived channel has per-cell virtual transmitters ``X_j^(m)`` and
coefficients ``g[i, j, m, l]``: the gain from stream ``m`` of cell ``j``
to receiver ``i`` on parallel channel ``l`` (all 0-based in the array,
1-based in the docs). Two constructions are provided.

``KM2`` (``Mt = K - 2``)
    Every cell runs ``Mt`` streams with ``V_k = H(T_{k+1}, T_k)^{-1}``.
    Coefficients toward ``T_{k+1}`` collapse to 0 or 1; only the signal
    gains ``g_kk`` and the interference gains ``g_{k-1,k}`` stay free.

``GENERAL`` (``2 <= Mt <= K - 1``)
    Cells ``j >= Mt`` run one stream whose cofactor beam on ``T_j`` nulls
    receivers ``1..Mt-1``. Cells ``j < Mt`` run two streams, on the first
    and the last ``Mt - 1`` antennas of ``T_j``, each nulling the other
    low-index receivers ``{1..Mt-1} \\ {j}``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_complex_matrix, check_count, frozen
from .algebra import RationalMap
from .channel_core import ChannelRealization, submatrix, up_set, wrap
from .exceptions import ArgumentError, NumericalDomainError

COND_LIMIT = 1e12
DEGENERATE_TOL = 1e-13


class Triviality(enum.IntEnum):
    FREE = 0
    FORCED_ZERO = 1
    FORCED_ONE = 2
    UNUSED = 3


@dataclass(frozen=True)
class ZFBeam:
    """Cofactor beam on ``support`` annihilating the rows ``nulls`` of ``H``."""

    support: tuple
    nulls: tuple
    coefficients: np.ndarray
    degenerate: bool = False

    def gain(self, H, i):
        return complex(submatrix(H, [i], self.support)[0] @ self.coefficients)


@dataclass(frozen=True)
class DerivedChannel:
    """Coefficient tensor ``(K, K, S, L)`` with a triviality mask ``(K, K, S)``."""

    K: int
    Mt: int
    L: int
    scheme: str
    coefficients: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)
    streams: tuple = ()

    def __post_init__(self):
        if self.scheme not in ("KM2", "GENERAL"):
            raise ArgumentError(f"unknown scheme {self.scheme!r}")
        S = self.coefficients.shape[2]
        if self.coefficients.shape != (self.K, self.K, S, self.L) or self.mask.shape != (self.K, self.K, S):
            raise ArgumentError("coefficient and mask shapes are inconsistent")
        object.__setattr__(self, "coefficients", frozen(self.coefficients))
        object.__setattr__(self, "mask", frozen(self.mask))

    @property
    def max_streams(self):
        return self.coefficients.shape[2]

    def diagonal(self, i, j, m):
        """Diagonal of ``G_ij^(m)`` over the ``L`` parallel channels (1-based indices)."""
        return self.coefficients[i - 1, j - 1, m - 1, :]

    def free_links(self):
        """``(i, j, m)`` triples (1-based) whose coefficient is not forced."""
        idx = np.argwhere(self.mask == Triviality.FREE)
        return [tuple(int(x) + 1 for x in row) for row in idx]

    def with_coefficients(self, coefficients):
        return DerivedChannel(self.K, self.Mt, self.L, self.scheme, coefficients, self.mask, self.streams)


def _realization(H_per_parallel):
    if isinstance(H_per_parallel, ChannelRealization):
        return H_per_parallel
    arr = np.asarray(H_per_parallel)
    if arr.ndim == 2:
        return ChannelRealization.from_matrix(arr)
    if arr.ndim == 3 and arr.shape[0] == arr.shape[1]:
        return ChannelRealization(arr.shape[0], arr.shape[2], None, arr)
    raise ArgumentError(f"expected a ChannelRealization or (K, K[, L]) array, got shape {arr.shape}")


def km2_mask(K):
    Mt = K - 2
    mask = np.full((K, K, Mt), Triviality.FREE, dtype=np.int8)
    for k in range(1, K + 1):
        for m in range(1, Mt + 1):
            for i in up_set(wrap(k + 1, K), Mt, K):
                mask[i - 1, k - 1, m - 1] = (
                    Triviality.FORCED_ONE if i == wrap(k + m, K) else Triviality.FORCED_ZERO
                )
    return mask


def zf_transform_km2(H_per_parallel):
    """Derived channel with ``V_k = H(T_{k+1}, T_k)^{-1}`` on every parallel channel."""
    real = _realization(H_per_parallel)
    K, L = real.K, real.L
    if K < 4:
        raise ArgumentError(f"the Mt = K - 2 construction needs K >= 4, got {K}")
    Mt = K - 2
    G = np.zeros((K, K, Mt, L), dtype=np.complex128)
    for ell, H in enumerate(real):
        for k in range(1, K + 1):
            Tk = up_set(k, Mt, K)
            X = submatrix(H, up_set(wrap(k + 1, K), Mt, K), Tk)
            if np.linalg.cond(X) > COND_LIMIT:
                raise NumericalDomainError(f"H(T_{wrap(k + 1, K)}, T_{k}) singular on parallel channel {ell + 1}")
            G[:, k - 1, :, ell] = submatrix(H, range(1, K + 1), Tk) @ np.linalg.inv(X)
    return DerivedChannel(K, Mt, L, "KM2", G, km2_mask(K), tuple([Mt] * K))


def _cofactors(N):
    """Cofactors of the last row of ``[N; a]`` for an ``(n-1) x n`` matrix ``N``."""
    n = N.shape[1]
    c = np.empty(n, dtype=np.complex128)
    for j in range(n):
        minor = np.delete(N, j, axis=1)
        c[j] = (-1) ** (n - 1 + j) * (np.linalg.det(minor) if n > 1 else 1.0)
    return c


def zf_beam_from_nulls(H, support, nulls):
    """Cofactor beam: ``H(i, support) @ beam = det H(nulls + [i], support)``.

    A beam whose cofactors all vanish (rank-deficient ``H(nulls, support)``)
    is returned with ``degenerate=True``.
    """
    H = check_complex_matrix(H, "H", square=True)
    support, nulls = tuple(support), tuple(nulls)
    if len(support) != len(nulls) + 1:
        raise ArgumentError(f"|support| must be |nulls| + 1, got {len(support)} and {len(nulls)}")
    N = submatrix(H, nulls, support) if nulls else np.zeros((0, len(support)), dtype=np.complex128)
    c = _cofactors(N)
    scale = max(1.0, np.abs(N).max()) ** max(len(nulls), 1) if nulls else 1.0
    degenerate = bool(np.abs(c).max() <= DEGENERATE_TOL * scale)
    if degenerate:
        c = np.zeros_like(c)
    return ZFBeam(support, nulls, frozen(c), degenerate)


def general_stream_plan(K, Mt):
    """Per stream ``(cell, m, support, nulls)`` for the GENERAL construction (1-based)."""
    K = check_count(K, "K", minimum=3)
    Mt = check_count(Mt, "Mt", minimum=2, maximum=K - 1)
    low = tuple(range(1, Mt))
    plan = []
    for j in range(1, K + 1):
        Tj = up_set(j, Mt, K)
        if j < Mt:
            nulls = tuple(x for x in low if x != j)
            plan.append((j, 1, Tj[:-1], nulls))
            plan.append((j, 2, Tj[1:], nulls))
        else:
            plan.append((j, 1, Tj, low))
    return plan


def general_mask(K, Mt):
    mask = np.full((K, K, 2), Triviality.UNUSED, dtype=np.int8)
    for j, m, _, nulls in general_stream_plan(K, Mt):
        for i in range(1, K + 1):
            mask[i - 1, j - 1, m - 1] = Triviality.FORCED_ZERO if i in nulls else Triviality.FREE
    return mask


def zf_transform_general(H_per_parallel, Mt):
    real = _realization(H_per_parallel)
    K, L = real.K, real.L
    if not (isinstance(Mt, (int, np.integer)) and 2 <= Mt <= K - 1):
        raise ArgumentError(f"Mt must satisfy 2 <= Mt <= K - 1, got Mt={Mt}, K={K}")
    plan = general_stream_plan(K, Mt)
    G = np.zeros((K, K, 2, L), dtype=np.complex128)
    for ell, H in enumerate(real):
        for j, m, support, nulls in plan:
            beam = zf_beam_from_nulls(H, support, nulls)
            G[:, j - 1, m - 1, ell] = submatrix(H, range(1, K + 1), support) @ beam.coefficients
    streams = tuple(2 if j < Mt else 1 for j in range(1, K + 1))
    return DerivedChannel(K, Mt, L, "GENERAL", G, general_mask(K, Mt), streams)


def verify_triviality(dc, tol=1e-10):
    """Every forced coefficient matches its forced value within ``tol`` on all parallel channels."""
    mask = np.asarray(dc.mask)
    G = np.asarray(dc.coefficients)
    zero = mask == Triviality.FORCED_ZERO
    one = mask == Triviality.FORCED_ONE
    if zero.any() and np.abs(G[zero]).max() > tol:
        return False
    if one.any() and np.abs(G[one] - 1).max() > tol:
        return False
    return True


def gain_determinant_block(K, Mt, i, j, m):
    """Rows and columns whose determinant equals ``g_ij^(m)`` in the GENERAL scheme."""
    for cell, stream, support, nulls in general_stream_plan(K, Mt):
        if (cell, stream) == (j, m):
            return nulls + (i,), support
    raise ArgumentError(f"cell {j} has no stream {m} for K={K}, Mt={Mt}")


def general_interference_links(K, Mt):
    """Generators carrying interference: ``(i, j, m)`` with ``i >= Mt`` and ``i != j``."""
    links = []
    for j, m, _, _ in general_stream_plan(K, Mt):
        for i in range(Mt, K + 1):
            if i != j:
                links.append((i, j, m))
    return sorted(links)


def km2_interference_links(K):
    """Generators carrying interference in KM2: ``(i, i+1, m)``."""
    return [(i, wrap(i + 1, K), m) for i in range(1, K + 1) for m in range(1, K - 1)]


def _determinant_map(K, blocks, name):
    """Map ``vec(H) -> [det H(rows, cols) for each block]`` with the adjugate Jacobian."""
    idx = [(np.asarray(r) - 1, np.asarray(c) - 1) for r, c in blocks]

    def ev(t):
        H = np.asarray(t, dtype=np.complex128).reshape(K, K)
        return np.array([np.linalg.det(H[np.ix_(r, c)]) for r, c in idx])

    def jac(t):
        H = np.asarray(t, dtype=np.complex128).reshape(K, K)
        J = np.zeros((len(idx), K * K), dtype=np.complex128)
        for row, (r, c) in enumerate(idx):
            X = H[np.ix_(r, c)]
            # d det X / dX_ab = cofactor_ab
            if len(r) == 1:
                cof = np.ones((1, 1), dtype=np.complex128)
            else:
                cof = np.empty_like(X)
                for a in range(len(r)):
                    for b in range(len(c)):
                        minor = np.delete(np.delete(X, a, axis=0), b, axis=1)
                        cof[a, b] = (-1) ** (a + b) * np.linalg.det(minor)
            for a, ra in enumerate(r):
                J[row, ra * K + c] = cof[a]
        return J

    return RationalMap(K * K, len(idx), ev, None, jac, name)


def general_receiver_map(K, Mt, k):
    """Signal gains at receiver ``k`` followed by every interference generator.

    Output count is ``N + 2`` for ``k < Mt`` and ``N + 1`` otherwise, with
    ``N = (K - Mt + 1)(K + Mt - 2)``.
    """
    K = check_count(K, "K", minimum=3)
    Mt = check_count(Mt, "Mt", minimum=2, maximum=K - 1)
    k = check_count(k, "k", minimum=1, maximum=K)
    signal = [(k, k, 1), (k, k, 2)] if k < Mt else [(k, k, 1)]
    links = signal + general_interference_links(K, Mt)
    blocks = [gain_determinant_block(K, Mt, i, j, m) for i, j, m in links]
    return _determinant_map(K, blocks, f"general_receiver_{k}")


def general_generator_count(K, Mt):
    return (K - Mt + 1) * (K + Mt - 2)


class ZeroForcingTransform(TransformerMixin, BaseEstimator):
    """Stateless transformer from channel realizations to derived channels.

    Parameters
    ----------
    scheme : {"km2", "general"}
    mt : int or None
        Cooperation order for ``"general"``; ignored by ``"km2"``.
    """

    def __init__(self, scheme="km2", mt=None):
        self.scheme = scheme
        self.mt = mt

    def fit(self, X=None, y=None):
        if self.scheme not in ("km2", "general"):
            raise ArgumentError(f"scheme must be 'km2' or 'general', got {self.scheme!r}")
        if self.scheme == "general" and self.mt is None:
            raise ArgumentError("the general scheme needs mt")
        return self

    def transform(self, X):
        self.fit()
        if self.scheme == "km2":
            return zf_transform_km2(X)
        return zf_transform_general(X, self.mt)

    def __sklearn_is_fitted__(self):
        return True


__all__ = [
    "Triviality",
    "ZFBeam",
    "DerivedChannel",
    "km2_mask",
    "zf_transform_km2",
    "zf_beam_from_nulls",
    "general_stream_plan",
    "general_mask",
    "zf_transform_general",
    "verify_triviality",
    "gain_determinant_block",
    "general_interference_links",
    "km2_interference_links",
    "general_receiver_map",
    "general_generator_count",
    "ZeroForcingTransform",
]
