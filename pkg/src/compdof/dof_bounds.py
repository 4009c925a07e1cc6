"""Exact outer bounds and reference DoF values.

All arithmetic uses :class:`fractions.Fraction` so that boundary
comparisons (``d <= bound``) are decided exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._validation import check_count
from .channel_core import CooperationPattern
from .exceptions import ArgumentError, ResourceError

MAX_REGION_USERS = 12


@dataclass(frozen=True)
class RegionConstraint:
    """``sum(d_k for k in users) <= bound`` for one pair of sets ``(A, B)``."""

    users: frozenset
    bound: int
    setA: tuple
    setB: tuple


def _bits(indices):
    out = 0
    for i in indices:
        out |= 1 << (i - 1)
    return out


def _members(bits, K):
    return tuple(i + 1 for i in range(K) if bits >> i & 1)


def region_constraint(pattern, A, B):
    """The single region inequality induced by transmitter set A and receiver set B."""
    K = pattern.K
    a, b = set(A), set(B)
    if not a <= set(range(1, K + 1)) or not b <= set(range(1, K + 1)):
        raise ArgumentError("A and B must be subsets of 1..K")
    users = frozenset(
        k for k in range(1, K + 1)
        if set(pattern.transmit_set(k)) <= a or set(pattern.receive_set(k)) <= b
    )
    return RegionConstraint(users, max(len(a), len(b)), tuple(sorted(a)), tuple(sorted(b)))


def region_constraints(pattern, max_set_size=None, symmetric_only=True):
    """Enumerate the region inequalities, one per distinct user set.

    By default only pairs with ``|A| == |B|`` are enumerated; any pair with
    unequal sizes is dominated by padding the smaller set. Pass
    ``symmetric_only=False`` for the full enumeration. When several pairs
    produce the same user set, the one with the smallest bound is kept.
    Constraints over the empty user set are dropped.
    """
    K = pattern.K
    if K > MAX_REGION_USERS:
        raise ResourceError(f"region enumeration is O(4^K); K={K} exceeds {MAX_REGION_USERS}")
    if max_set_size is None:
        max_set_size = K
    max_set_size = check_count(max_set_size, "max_set_size", minimum=0, maximum=K)

    n_sub = 1 << K
    tmask = np.array([_bits(pattern.transmit_set(k)) for k in range(1, K + 1)], dtype=np.int64)
    rmask = np.array([_bits(pattern.receive_set(k)) for k in range(1, K + 1)], dtype=np.int64)
    subsets = np.arange(n_sub, dtype=np.int64)
    sizes = np.array([bin(s).count("1") for s in range(n_sub)])
    # users served by A through T_k <= A, and by B through R_k <= B
    by_tx = np.zeros(n_sub, dtype=np.int64)
    by_rx = np.zeros(n_sub, dtype=np.int64)
    for k in range(K):
        by_tx |= np.where((subsets & tmask[k]) == tmask[k], 1 << k, 0)
        by_rx |= np.where((subsets & rmask[k]) == rmask[k], 1 << k, 0)

    best = {}
    for ra in range(max_set_size + 1):
        a_idx = np.flatnonzero(sizes == ra)
        rb_range = [ra] if symmetric_only else range(max_set_size + 1)
        for rb in rb_range:
            b_idx = np.flatnonzero(sizes == rb)
            users = (by_tx[a_idx][:, None] | by_rx[b_idx][None, :]).ravel()
            bound = max(ra, rb)
            uniq, first = np.unique(users, return_index=True)
            for u, pos in zip(uniq.tolist(), first.tolist()):
                if u == 0:
                    continue
                if u not in best or best[u][0] > bound:
                    ia, ib = divmod(pos, len(b_idx))
                    best[u] = (bound, int(a_idx[ia]), int(b_idx[ib]))

    return [
        RegionConstraint(frozenset(_members(u, K)), bound, _members(a, K), _members(b, K))
        for u, (bound, a, b) in sorted(best.items())
    ]


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    return Fraction(x)


def check_dof_vector(pattern, d, constraints=None):
    """True iff ``d`` satisfies every region constraint, compared exactly."""
    d = [_as_fraction(x) for x in d]
    if len(d) != pattern.K:
        raise ArgumentError(f"DoF vector must have length K={pattern.K}, got {len(d)}")
    if any(x < 0 for x in d):
        raise ArgumentError("DoF vector entries must be non-negative")
    if constraints is None:
        constraints = region_constraints(pattern)
    return all(sum(d[k - 1] for k in c.users) <= c.bound for c in constraints)


def _pattern_args(K, Mt, Mr):
    p = CooperationPattern(K, Mt, Mr)
    return p.K, p.Mt, p.Mr


def full_dof_condition(K, Mt, Mr):
    K, Mt, Mr = _pattern_args(K, Mt, Mr)
    return Mt + Mr >= K + 1


def sum_dof_outer_bound(K, Mt, Mr):
    """Closed-form sum-DoF outer bound; equals ``K`` exactly when full DoF is possible."""
    K, Mt, Mr = _pattern_args(K, Mt, Mr)
    if Mt + Mr >= K + 1:
        return Fraction(K)
    total = K + Mt + Mr
    if total % 2 == 0:
        bound = Fraction(math.ceil(Fraction(total - 2, 2)))
    else:
        bound = Fraction(K, K - 1) * Fraction(total - 3, 2)
    return min(Fraction(K), bound)


def known_dof(K, Mt, Mr):
    """Exactly known DoF for the pattern, or ``None`` when not established."""
    K, Mt, Mr = _pattern_args(K, Mt, Mr)
    if (Mt, Mr) == (1, 1):
        return Fraction(K, 2)
    if (Mt, Mr) in ((K - 1, 1), (1, K - 1)):
        return Fraction(K - 1)
    if max(Mt, Mr) == K or Mt + Mr >= K + 1:
        return Fraction(K)
    if Mr == 1 and Mt == K - 2:
        return Fraction(K * (K - 2), K - 1)
    if Mr == 1 and (K + Mt) % 2 == 1 and K < 10:
        return Fraction(K + Mt - 1, 2)
    return None


def miso_reference_dof(K, Mt):
    """Sum DoF ``K Mt / (Mt + 1)`` of the MISO interference / cellular uplink channel."""
    K = check_count(K, "K", minimum=2)
    Mt = check_count(Mt, "Mt", minimum=1)
    if Mt >= K:
        raise ArgumentError(f"Mt must be < K, got Mt={Mt}, K={K}")
    return Fraction(K * Mt, Mt + 1)


def asymmetric_dof_vector(K, Mt):
    """Per-user DoF: 1 for users ``1..Mt-1`` and 1/2 for the rest."""
    K = check_count(K, "K", minimum=2)
    Mt = check_count(Mt, "Mt", minimum=1, maximum=K)
    return [Fraction(1) if k < Mt else Fraction(1, 2) for k in range(1, K + 1)]


def bounds_table(K_values, Mr=1):
    """Rows of ``(K, Mt, Mr, outer_bound, known_dof)`` for a range of user counts."""
    rows = []
    for K in K_values:
        for Mt in range(1, K + 1):
            rows.append((K, Mt, Mr, sum_dof_outer_bound(K, Mt, Mr), known_dof(K, Mt, Mr)))
    return rows


def format_fraction(x):
    """Serialize as ``"num/den"`` (or ``"num"`` for integers)."""
    if x is None:
        return None
    return str(Fraction(x))


__all__ = [
    "RegionConstraint",
    "region_constraint",
    "region_constraints",
    "check_dof_vector",
    "full_dof_condition",
    "sum_dof_outer_bound",
    "known_dof",
    "miso_reference_dof",
    "asymmetric_dof_vector",
    "bounds_table",
    "format_fraction",
]
