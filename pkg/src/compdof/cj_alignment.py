"""Cadambe-Jafar alignment subspaces and decodability checks.

Diagonal generators are carried as vectors of their diagonals, shape
``(N, L)``, and basis columns are entrywise products, so no ``L x L``
matrix is ever materialized.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._validation import check_count
from .algebra import equilibrate, numeric_rank
from .derived_channel import general_generator_count, general_interference_links, km2_interference_links
from .exceptions import ArgumentError, ResourceError

MAX_EXPONENTS = 10**6
MAX_L = 4096
WARN_L = 512
DECODE_RANK_TOL = 1e-9


def enumerate_exponents(N, n):
    """Exponent vectors of total degree ``<= n`` in graded lexicographic order.

    >>> enumerate_exponents(2, 1)
    [(0, 0), (1, 0), (0, 1)]
    """
    N = check_count(N, "N", minimum=1)
    n = check_count(n, "n", minimum=0)
    if math.comb(N + n, n) > MAX_EXPONENTS:
        raise ResourceError(f"C({N}+{n}, {n}) exponent vectors exceed the cap {MAX_EXPONENTS}")
    out = []
    for d in range(n + 1):
        for combo in itertools.combinations_with_replacement(range(N), d):
            a = [0] * N
            for i in combo:
                a[i] += 1
            out.append(tuple(a))
    return out


def _diagonals(generators):
    if isinstance(generators, np.ndarray) and generators.ndim == 2:
        D = generators
    else:
        gens = list(generators)
        if not gens:
            raise ArgumentError("at least one generator is required")
        mats = [np.asarray(g) for g in gens]
        if all(m.ndim == 2 for m in mats):
            L = mats[0].shape[0]
            for m in mats:
                if m.shape != (L, L):
                    raise ArgumentError("generators must all be L x L")
                if np.any(m - np.diag(np.diag(m))):
                    raise ArgumentError("generators must be diagonal")
            D = np.array([np.diag(m) for m in mats])
        elif all(m.ndim == 1 for m in mats):
            D = np.array(mats)
        else:
            raise ArgumentError("generators must be all diagonal matrices or all diagonal vectors")
    D = np.asarray(D, dtype=np.complex128)
    if D.shape[1] > MAX_L:
        raise ResourceError(f"L={D.shape[1]} exceeds the cap {MAX_L}")
    return D


def cj_matrix(generators, n):
    """Order-``n`` CJ matrix, columns ``prod_i G_i^{a_i} 1`` in exponent order."""
    D = _diagonals(generators)
    N, L = D.shape
    exps = enumerate_exponents(N, n)
    # each graded-lex column extends a lower-degree column by one factor
    index = {}
    cols = np.empty((L, len(exps)), dtype=np.complex128)
    for c, a in enumerate(exps):
        index[a] = c
        if sum(a) == 0:
            cols[:, c] = 1.0
            continue
        i = next(p for p, e in enumerate(a) if e)
        prev = list(a)
        prev[i] -= 1
        cols[:, c] = cols[:, index[tuple(prev)]] * D[i]
    return cols


@dataclass(frozen=True)
class CJBasis:
    generators: np.ndarray
    order: int
    exponents: tuple
    matrix: np.ndarray

    @classmethod
    def build(cls, generators, n):
        D = _diagonals(generators)
        return cls(D, n, tuple(enumerate_exponents(D.shape[0], n)), cj_matrix(D, n))


def shift_contained(generators, n):
    """Each column of ``G_i V`` is exactly a column of the order-``n+1`` matrix.

    Checked on exponents and on the numbers themselves (bitwise equality).
    """
    D = _diagonals(generators)
    N = D.shape[0]
    V = cj_matrix(D, n)
    INT = cj_matrix(D, n + 1)
    index = {a: c for c, a in enumerate(enumerate_exponents(N, n + 1))}
    for i in range(N):
        for c, a in enumerate(enumerate_exponents(N, n)):
            b = list(a)
            b[i] += 1
            col = index.get(tuple(b))
            if col is None:
                return False
            if not np.allclose(D[i] * V[:, c], INT[:, col], rtol=1e-13, atol=0):
                return False
    return True


def column_counts(N, n):
    """``(|V|, |INT|)`` for ``N`` generators at order ``n``."""
    return math.comb(N + n, n), math.comb(N + n + 1, n + 1)


def required_length(K, Mt, scheme, n):
    """Number of parallel channels making every receiver matrix square."""
    scheme = _scheme(scheme)
    n = check_count(n, "n", minimum=0)
    if scheme == "KM2":
        if Mt != K - 2:
            raise ArgumentError(f"KM2 needs Mt = K - 2, got K={K}, Mt={Mt}")
        v, i = column_counts(K * Mt, n)
        return Mt * v + i
    v, i = column_counts(general_generator_count(K, Mt), n)
    return v + i


def _scheme(scheme):
    s = str(scheme).upper()
    if s not in ("KM2", "GENERAL"):
        raise ArgumentError(f"scheme must be KM2 or GENERAL, got {scheme!r}")
    return s


def _check_length(dc, n):
    L = required_length(dc.K, dc.Mt, dc.scheme, n)
    if dc.L != L:
        raise ArgumentError(f"{dc.scheme} at K={dc.K}, Mt={dc.Mt}, n={n} needs L={L}, got L={dc.L}")
    if L > WARN_L:
        warnings.warn(f"rank decisions at L={L} may be ill-conditioned", RuntimeWarning, stacklevel=3)


def build_mk_km2(dc, n):
    """Receiver matrices ``[G_kk^(1) V ... G_kk^(Mt) V  INT]`` for every ``k``."""
    if dc.scheme != "KM2":
        raise ArgumentError(f"expected a KM2 derived channel, got {dc.scheme}")
    _check_length(dc, n)
    D = np.array([dc.diagonal(i, j, m) for i, j, m in km2_interference_links(dc.K)])
    V = cj_matrix(D, n)
    INT = cj_matrix(D, n + 1)
    out = []
    for k in range(1, dc.K + 1):
        blocks = [dc.diagonal(k, k, m)[:, None] * V for m in range(1, dc.Mt + 1)]
        out.append(np.hstack(blocks + [INT]))
    return out


def build_mk_general(dc, n):
    """``[G_kk^(1) V  G_kk^(2) V]`` for ``k < Mt``, ``[G_kk^(1) V  INT]`` otherwise."""
    if dc.scheme != "GENERAL":
        raise ArgumentError(f"expected a GENERAL derived channel, got {dc.scheme}")
    _check_length(dc, n)
    D = np.array([dc.diagonal(i, j, m) for i, j, m in general_interference_links(dc.K, dc.Mt)])
    V = cj_matrix(D, n)
    INT = cj_matrix(D, n + 1)
    out = []
    for k in range(1, dc.K + 1):
        g1 = dc.diagonal(k, k, 1)[:, None] * V
        if k < dc.Mt:
            out.append(np.hstack([g1, dc.diagonal(k, k, 2)[:, None] * V]))
        else:
            out.append(np.hstack([g1, INT]))
    return out


@dataclass(frozen=True)
class DecodabilityReport:
    L: int
    shapes: tuple
    ranks: tuple
    passed: tuple

    @property
    def ok(self):
        return all(self.passed)

    def to_dict(self):
        return {
            "L": self.L,
            "receivers": [
                {"receiver": k + 1, "rows": s[0], "columns": s[1], "rank": r, "pass": p}
                for k, (s, r, p) in enumerate(zip(self.shapes, self.ranks, self.passed))
            ],
            "pass": self.ok,
        }


def verify_decodability(Mks, rel_tol=DECODE_RANK_TOL):
    """Full column rank of every receiver matrix.

    Rows and columns are equilibrated first; that rescaling preserves the
    rank while removing the large spread of monomial magnitudes.
    """
    shapes, ranks, passed = [], [], []
    L = 0
    for M in Mks:
        M = np.asarray(M, dtype=np.complex128)
        L = max(L, M.shape[0])
        r = numeric_rank(equilibrate(M), rel_tol) if M.size else 0
        shapes.append(tuple(int(x) for x in M.shape))
        ranks.append(int(r))
        passed.append(bool(r == M.shape[1]))
    return DecodabilityReport(L, tuple(shapes), tuple(ranks), tuple(passed))


def achievable_dof(K, Mt, scheme, n=None):
    """Exact achievable sum DoF; ``n=None`` gives the limit as the order grows."""
    scheme = _scheme(scheme)
    K = check_count(K, "K", minimum=3)
    Mt = check_count(Mt, "Mt", minimum=1, maximum=K - 1)
    if scheme == "KM2":
        if Mt != K - 2:
            raise ArgumentError(f"KM2 needs Mt = K - 2, got K={K}, Mt={Mt}")
        num = Fraction(K * Mt)
        if n is None:
            return num / (Mt + 1)
        n = check_count(n, "n", minimum=0)
        return num / (Mt + 1 + num / (n + 1))
    if Mt < 2:
        raise ArgumentError("GENERAL needs Mt >= 2")
    if n is None:
        return Fraction(K + Mt - 1, 2)
    n = check_count(n, "n", minimum=0)
    return Fraction(K + Mt - 1) / (2 + Fraction(general_generator_count(K, Mt), n + 1))


def achievable_dof_from_counts(K, Mt, scheme, n):
    """The same quantity computed from stream and column counts instead of the closed form."""
    scheme = _scheme(scheme)
    if scheme == "KM2":
        v, _ = column_counts(K * Mt, n)
        return Fraction(K * Mt * v, required_length(K, Mt, scheme, n))
    v, _ = column_counts(general_generator_count(K, Mt), n)
    streams = 2 * (Mt - 1) + (K - Mt + 1)
    return Fraction(streams * v, required_length(K, Mt, scheme, n))


__all__ = [
    "enumerate_exponents",
    "cj_matrix",
    "CJBasis",
    "shift_contained",
    "column_counts",
    "required_length",
    "build_mk_km2",
    "build_mk_general",
    "DecodabilityReport",
    "verify_decodability",
    "achievable_dof",
    "achievable_dof_from_counts",
]
