import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from compdof.channel_core import CooperationPattern
from compdof.dof_bounds import (
    asymmetric_dof_vector,
    bounds_table,
    check_dof_vector,
    format_fraction,
    full_dof_condition,
    known_dof,
    miso_reference_dof,
    region_constraint,
    region_constraints,
    sum_dof_outer_bound,
)
from compdof.exceptions import ArgumentError, ResourceError


def spiral(k, m, K):
    return {(k - 1 + r) % K + 1 for r in range(m)}


def brute_force_region(K, Mt, Mr, symmetric_only=True):
    """Every (A, B) pair over plain Python sets; no shared code with the package."""
    universe = range(1, K + 1)
    subsets = [set(c) for r in range(K + 1) for c in itertools.combinations(universe, r)]
    out = []
    for A in subsets:
        for B in subsets:
            if symmetric_only and len(A) != len(B):
                continue
            users = {k for k in universe if spiral(k, Mt, K) <= A or spiral(k, Mr, K) <= B}
            out.append((users, max(len(A), len(B))))
    return out


def brute_force_check(K, Mt, Mr, d, symmetric_only=True):
    return all(sum(d[k - 1] for k in users) <= bound for users, bound in brute_force_region(K, Mt, Mr, symmetric_only))


def test_single_constraint_examples():
    c = region_constraint(CooperationPattern(3, 1, 1), {1}, {1})
    assert (c.users, c.bound) == (frozenset({1}), 1)
    c = region_constraint(CooperationPattern(3, 3, 1), set(), {1})
    assert (c.users, c.bound) == (frozenset({1}), 1)
    c = region_constraint(CooperationPattern(4, 2, 1), {1, 2, 3}, {3, 4})
    assert (c.users, c.bound) == (frozenset({1, 2, 3, 4}), 3)


def test_constraints_are_deduplicated_with_smallest_bound():
    cons = region_constraints(CooperationPattern(4, 2, 1))
    users = [c.users for c in cons]
    assert len(users) == len(set(users))
    oracle = {}
    for u, b in brute_force_region(4, 2, 1):
        if u:
            oracle[frozenset(u)] = min(b, oracle.get(frozenset(u), b))
    assert {c.users: c.bound for c in cons} == oracle


def test_constraint_witness_sets_reproduce_the_constraint():
    p = CooperationPattern(5, 2, 2)
    for c in region_constraints(p):
        again = region_constraint(p, c.setA, c.setB)
        assert again.users == c.users and again.bound == c.bound


def test_max_set_size_limits_enumeration():
    cons = region_constraints(CooperationPattern(5, 2, 1), max_set_size=2)
    assert all(c.bound <= 2 for c in cons)


def test_region_enumeration_caps_K():
    with pytest.raises(ResourceError):
        region_constraints(CooperationPattern(13, 2, 1))


def test_check_examples():
    assert check_dof_vector(CooperationPattern(5, 3, 1), [1, 1, F(1, 2), F(1, 2), F(1, 2)])
    assert check_dof_vector(CooperationPattern(4, 2, 2), [0, 0, 0, 0])
    assert not check_dof_vector(CooperationPattern(3, 1, 1), [1, 1, 1])


def test_check_rejects_bad_vectors():
    p = CooperationPattern(3, 1, 1)
    with pytest.raises(ArgumentError):
        check_dof_vector(p, [1, -1, 0])
    with pytest.raises(ArgumentError):
        check_dof_vector(p, [1, 1])


def test_check_is_exact_at_the_boundary():
    p = CooperationPattern(3, 1, 1)
    assert check_dof_vector(p, [F(1, 2)] * 3)
    assert not check_dof_vector(p, [F(1, 2), F(1, 2), F(1, 2) + F(1, 10**12)])


@settings(max_examples=60, deadline=None)
@given(
    st.integers(3, 5).flatmap(
        lambda K: st.tuples(
            st.just(K), st.integers(1, K), st.integers(1, K),
            st.lists(st.fractions(0, 2, max_denominator=4), min_size=K, max_size=K),
        )
    )
)
def test_check_agrees_with_brute_force(args):
    K, Mt, Mr, d = args
    p = CooperationPattern(K, Mt, Mr)
    assert check_dof_vector(p, d) == brute_force_check(K, Mt, Mr, d)


@pytest.mark.parametrize("K, Mt, Mr", [(3, 1, 1), (4, 2, 1), (4, 1, 2)])
def test_symmetric_reduction_loses_nothing(K, Mt, Mr):
    p = CooperationPattern(K, Mt, Mr)
    full = region_constraints(p, symmetric_only=False)
    sym = {c.users: c.bound for c in region_constraints(p)}
    for c in full:
        assert sym.get(c.users, c.bound) <= c.bound


@pytest.mark.parametrize(
    "args, expected",
    [((4, 2, 1), F(8, 3)), ((3, 2, 2), F(3)), ((10, 3, 2), F(20, 3)), ((5, 3, 1), F(15, 4)), ((6, 3, 1), F(4))],
)
def test_outer_bound_values(args, expected):
    assert sum_dof_outer_bound(*args) == expected


def test_full_dof_condition():
    assert full_dof_condition(3, 2, 2)
    assert not full_dof_condition(3, 2, 1)
    assert all(full_dof_condition(K, K, 1) for K in range(2, 12))


@pytest.mark.parametrize(
    "args, expected",
    [((4, 2, 1), F(8, 3)), ((7, 1, 1), F(7, 2)), ((6, 3, 2), None), ((5, 4, 1), F(4)), ((5, 1, 4), F(4)),
     ((5, 5, 1), F(5)), ((6, 3, 1), F(4)), ((6, 2, 1), None), ((7, 2, 1), F(4)), ((11, 2, 1), None)],
)
def test_known_dof_values(args, expected):
    assert known_dof(*args) == expected


def test_miso_reference():
    assert miso_reference_dof(5, 2) == F(10, 3)
    assert miso_reference_dof(4, 2) == known_dof(4, 2, 1)
    assert sum_dof_outer_bound(5, 2, 1) == 3 < miso_reference_dof(5, 2)
    with pytest.raises(ArgumentError):
        miso_reference_dof(4, 4)


ALL_PATTERNS = [(K, Mt, Mr) for K in range(2, 13) for Mt in range(1, K + 1) for Mr in range(1, K + 1)]


def test_known_never_exceeds_outer_bound():
    for K, Mt, Mr in ALL_PATTERNS:
        kd = known_dof(K, Mt, Mr)
        if kd is not None:
            assert kd <= sum_dof_outer_bound(K, Mt, Mr), (K, Mt, Mr)


def test_outer_bound_equals_K_iff_full_dof():
    for K, Mt, Mr in ALL_PATTERNS:
        assert (sum_dof_outer_bound(K, Mt, Mr) == K) == full_dof_condition(K, Mt, Mr), (K, Mt, Mr)


def test_outer_bound_is_exact_rational():
    for K, Mt, Mr in ALL_PATTERNS:
        assert isinstance(sum_dof_outer_bound(K, Mt, Mr), F)


def test_miso_strictly_above_bound_outside_special_orders():
    for K in range(3, 13):
        for Mt in range(1, K):
            if Mt in (1, K - 2, K - 1, K):
                continue
            assert sum_dof_outer_bound(K, Mt, 1) < miso_reference_dof(K, Mt), (K, Mt)


def test_asymmetric_vector_is_inside_region():
    for K in range(2, 10):
        for Mt in range(1, K + 1):
            assert check_dof_vector(CooperationPattern(K, Mt, 1), asymmetric_dof_vector(K, Mt)), (K, Mt)


def test_bounds_table_rows():
    rows = bounds_table([4])
    assert [r[:3] for r in rows] == [(4, m, 1) for m in range(1, 5)]
    assert rows[1][3] == F(8, 3)


def test_format_fraction():
    assert format_fraction(F(8, 3)) == "8/3"
    assert format_fraction(F(3)) == "3"
    assert format_fraction(None) is None
