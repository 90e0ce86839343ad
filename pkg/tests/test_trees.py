import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subtree_census.trees import (
    OrderedTree,
    TreeError,
    brute_force_counts,
    build_special_tree,
    count_root_subtrees,
    count_subtrees,
    counts,
    format_tree,
    iter_trees,
    log_counts,
    log_counts_batch,
    parse_tree,
    toll_profile,
)

CHERRY = OrderedTree((2, 0, 0))
PATH3 = OrderedTree((1, 1, 0))
LEAF = OrderedTree((0,))


@st.composite
def trees(draw, max_size=40, max_deg=4):
    n = draw(st.integers(1, max_size))
    degs = [draw(st.integers(0, max_deg)) for _ in range(n)]
    # force a valid word: fix the sum to n - 1, then rotate by the cycle lemma
    total = sum(degs)
    i = 0
    while total > n - 1:
        if degs[i % n] > 0:
            degs[i % n] -= 1
            total -= 1
        i += 1
    while total < n - 1:
        degs[i % n] += 1
        total += 1
        i += 1
    walk = np.cumsum(np.array(degs) - 1)
    start = (int(np.argmin(walk)) + 1) % n
    return OrderedTree(tuple(degs[start:] + degs[:start]))


def test_validation():
    with pytest.raises(TreeError):
        OrderedTree(())
    with pytest.raises(TreeError):
        OrderedTree((0, 0))
    with pytest.raises(TreeError):
        OrderedTree((2, 0))
    with pytest.raises(TreeError):
        OrderedTree((1, -1, 1))
    with pytest.raises(TreeError):
        parse_tree("2,a,0")


def test_text_round_trip():
    assert parse_tree(" 2, 0,0 ") == CHERRY
    assert format_tree(CHERRY) == "2,0,0"
    assert str(PATH3) == "1,1,0"


def test_small_counts():
    assert counts(LEAF).r == 1 and counts(LEAF).s == 1
    assert count_root_subtrees(PATH3) == 3 and count_subtrees(PATH3) == 6
    assert count_root_subtrees(CHERRY) == 4 and count_subtrees(CHERRY) == 6
    assert brute_force_counts(CHERRY) == counts(CHERRY)
    assert brute_force_counts(LEAF).r == 1


def test_special_trees():
    ta, tb = build_special_tree("Ta", 2), build_special_tree("Tb", 2)
    assert len(ta) == len(tb) == 7
    assert count_root_subtrees(ta) == 25
    assert count_root_subtrees(tb) == 22
    for ell in (3, 4, 5):
        t = build_special_tree("Ta", ell)
        assert len(t) == 3 * ell + 1
        assert count_root_subtrees(t) == 2 ** (3 * ell - 2) + 2 ** (2 * ell - 1) + 2 ** (ell - 2)
        assert len(build_special_tree("Tb", ell)) == 3 * ell + 1
    with pytest.raises(TreeError):
        build_special_tree("Ta", 1)
    with pytest.raises(TreeError):
        build_special_tree("Tc", 2)


def test_iter_trees_counts():
    catalan = [1, 1, 2, 5, 14, 42, 132]
    assert [sum(1 for _ in iter_trees(n, range(n))) for n in range(1, 8)] == catalan
    assert [sum(1 for _ in iter_trees(n, [0, 2])) for n in (1, 3, 5, 7, 9, 11, 13)] == catalan
    assert sum(1 for _ in iter_trees(4, [0, 2])) == 0
    # Motzkin numbers for unary-binary trees
    assert [sum(1 for _ in iter_trees(n, [0, 1, 2])) for n in range(1, 8)] == [1, 1, 2, 4, 9, 21, 51]


def test_oracle_all_binary_trees_to_13():
    for n in range(1, 14, 2):
        for t in iter_trees(n, [0, 2]):
            assert brute_force_counts(t) == counts(t)


@settings(max_examples=60, deadline=None)
@given(t=trees(max_size=13))
def test_oracle_equivalence(t):
    assert brute_force_counts(t) == counts(t)


@settings(max_examples=80, deadline=None)
@given(t=trees(max_size=120))
def test_count_bounds(t):
    c = counts(t)
    n = len(t)
    assert n <= c.r <= 2 ** (n - 1)
    assert c.r <= c.s <= n * c.r


@settings(max_examples=60, deadline=None)
@given(t=trees(max_size=300, max_deg=3))
def test_log_counts_match_exact(t):
    c = counts(t)
    lr, ls = log_counts(t)
    assert lr == pytest.approx(math.log(c.r), rel=1e-9, abs=1e-12)
    assert ls == pytest.approx(math.log(c.s), rel=1e-9, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(t=trees(max_size=60))
def test_toll_profile(t):
    prof = toll_profile(t)
    assert len(prof) == len(t)
    assert math.fsum(prof) == pytest.approx(math.log(counts(t).r + 1), rel=1e-9)
    # f(T_v) <= 1/R(T_v) <= 1/|T_v|; fringe sizes from the degree word
    sizes = [0] * len(t)
    stack = []
    for i in range(len(t) - 1, -1, -1):
        d = t.degrees[i]
        sz = 1 + sum(stack[-d:]) if d else 1
        if d:
            del stack[-d:]
        stack.append(sz)
        sizes[i] = sz
    for f, sz in zip(prof, sizes):
        assert 0 < f <= 1 / sz + 1e-15


def test_toll_examples():
    assert toll_profile(LEAF) == [pytest.approx(math.log(2))]
    assert sum(toll_profile(CHERRY)) == pytest.approx(math.log(5))


def test_log_counts_special():
    assert log_counts(LEAF) == (0.0, 0.0)
    assert log_counts(build_special_tree("Ta", 2))[0] == pytest.approx(math.log(25), abs=1e-10)


def test_log_counts_batch_matches_scalar():
    rng = random.Random(4)
    all_trees = list(iter_trees(9, [0, 1, 2, 3]))
    rows = [rng.choice(all_trees).degrees for _ in range(50)]
    lr, ls = log_counts_batch(np.array(rows))
    for i, row in enumerate(rows):
        a, b = log_counts(OrderedTree(row))
        assert lr[i] == pytest.approx(a, rel=1e-12, abs=1e-14)
        assert ls[i] == pytest.approx(b, rel=1e-12, abs=1e-14)


def test_bigint_cap():
    t = OrderedTree((1,) * 30 + (0,))
    with pytest.raises(TreeError):
        counts(t, cap=10)
    with pytest.raises(TreeError):
        brute_force_counts(t)
