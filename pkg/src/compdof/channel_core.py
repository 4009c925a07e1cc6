"""Index arithmetic, cooperation sets and channel sampling.

User indices are 1-based at every public interface. Sets such as
``up_set(k, m, K)`` are returned as tuples so their order is preserved.

Random numbers come from numpy's ``PCG64`` bit generator wrapped in a
``numpy.random.Generator``. A complex standard normal sample is built as
``(n1 + 1j * n2) / sqrt(2)`` where ``n1`` and ``n2`` are drawn with
``Generator.standard_normal`` (ziggurat transform), real parts first.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_complex_matrix, check_count, frozen
from .exceptions import ArgumentError

RNG_NAME = "numpy.random.PCG64 + Generator.standard_normal"

# soft limits: exceeding them warns but still runs
MAX_USERS = 16
MAX_PARALLEL = 4096

IndexSet = tuple


def _check_k_m(k, m, K):
    K = check_count(K, "K", minimum=1)
    k = check_count(k, "k", minimum=1, maximum=K)
    m = check_count(m, "m", minimum=1, maximum=K)
    return k, m, K


def up_set(k, m, K):
    """Return ``k, k+1, ..., k+m-1`` wrapped into ``1..K``.

    >>> up_set(4, 3, 5)
    (4, 5, 1)
    """
    k, m, K = _check_k_m(k, m, K)
    return tuple((k - 1 + r) % K + 1 for r in range(m))


def down_set(k, m, K):
    """Return ``k, k-1, ..., k-m+1`` wrapped into ``1..K``.

    >>> down_set(2, 3, 5)
    (2, 1, 5)
    """
    k, m, K = _check_k_m(k, m, K)
    return tuple((k - 1 - r) % K + 1 for r in range(m))


def wrap(i, K):
    """Map any integer onto ``1..K`` modulo ``K``."""
    return (i - 1) % K + 1


@dataclass(frozen=True)
class CooperationPattern:
    """User count ``K`` with transmit/receive cooperation orders and ``L``."""

    K: int
    Mt: int
    Mr: int = 1
    L: int = 1

    def __post_init__(self):
        K = check_count(self.K, "K", minimum=2)
        check_count(self.Mt, "Mt", minimum=1, maximum=K)
        check_count(self.Mr, "Mr", minimum=1, maximum=K)
        check_count(self.L, "L", minimum=1)
        if K > MAX_USERS:
            warnings.warn(f"K={K} exceeds the soft limit {MAX_USERS}", stacklevel=2)

    def transmit_set(self, k):
        return up_set(k, self.Mt, self.K)

    def receive_set(self, k):
        return up_set(k, self.Mr, self.K)

    @property
    def full_dof(self):
        return self.Mt + self.Mr >= self.K + 1


@dataclass(frozen=True)
class ChannelRealization:
    """Coefficients ``h_ij(l)`` stored as a read-only ``(K, K, L)`` array."""

    K: int
    L: int
    seed: int | None
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients)
        if coeffs.shape != (self.K, self.K, self.L):
            raise ArgumentError(
                f"coefficients must have shape {(self.K, self.K, self.L)}, got {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ArgumentError("channel coefficients must be finite")
        object.__setattr__(self, "coefficients", frozen(coeffs.astype(np.complex128)))

    @classmethod
    def from_matrix(cls, H, seed=None):
        """Wrap a single ``K x K`` matrix as an ``L = 1`` realization."""
        H = check_complex_matrix(H, "H", square=True)
        return cls(H.shape[0], 1, seed, H[:, :, None])

    def matrix(self, ell):
        """Channel matrix of parallel channel ``ell`` (1-based)."""
        ell = check_count(ell, "ell", minimum=1, maximum=self.L)
        return self.coefficients[:, :, ell - 1]

    def __iter__(self):
        for ell in range(self.L):
            yield self.coefficients[:, :, ell]


def make_rng(seed):
    seed = check_count(seed, "seed", minimum=0, maximum=2**64 - 1)
    return np.random.Generator(np.random.PCG64(seed))


def complex_normal(rng, shape):
    """Circularly-symmetric complex standard normal samples."""
    z = rng.standard_normal((2,) + tuple(shape))
    return (z[0] + 1j * z[1]) / np.sqrt(2.0)


def sample_channel(K, L, seed):
    """Draw an i.i.d. CN(0, 1) realization; a pure function of ``(K, L, seed)``."""
    K = check_count(K, "K", minimum=2)
    L = check_count(L, "L", minimum=1)
    if K > MAX_USERS:
        warnings.warn(f"K={K} exceeds the soft limit {MAX_USERS}", stacklevel=2)
    if L > MAX_PARALLEL:
        warnings.warn(f"L={L} exceeds the soft limit {MAX_PARALLEL}", stacklevel=2)
    rng = make_rng(seed)
    return ChannelRealization(K, L, int(seed), complex_normal(rng, (K, K, L)))


def submatrix(H, rows, cols):
    """Rows and columns of ``H`` picked by 1-based index sequences, in order."""
    H = np.asarray(H)
    if H.ndim != 2:
        raise ArgumentError(f"H must be 2-D, got shape {H.shape}")
    rows = _zero_based(rows, H.shape[0], "row")
    cols = _zero_based(cols, H.shape[1], "column")
    return H[np.ix_(rows, cols)]


def _zero_based(idx, n, what):
    out = []
    for i in idx:
        if isinstance(i, bool) or not isinstance(i, (int, np.integer)) or not 1 <= i <= n:
            raise ArgumentError(f"{what} index {i!r} outside 1..{n}")
        out.append(int(i) - 1)
    return np.asarray(out, dtype=np.intp)


def complement(indices, K):
    """Indices of ``1..K`` not in ``indices``, ascending."""
    s = set(indices)
    return tuple(i for i in range(1, K + 1) if i not in s)


def circulant_test_point(K):
    """``K x K`` matrix with ones on the diagonal and the cyclic subdiagonal."""
    K = check_count(K, "K", minimum=3)
    A = np.zeros((K, K), dtype=np.complex128)
    for i in range(K):
        A[i, i] = 1.0
        A[i, (i - 1) % K] = 1.0
    return A
