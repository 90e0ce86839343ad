"""Rooted ordered trees and exact subtree counts.

A tree is stored as its preorder out-degree sequence (Lukasiewicz word).
``R(T)`` counts root subtrees, ``S(T)`` counts all (non-fringe) subtrees.
Both come out of one post-order pass using

    R(T) = prod over root children c of (R(T_c) + 1),
    S(T) = sum over nodes v of R(T_v).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "OrderedTree",
    "CountPair",
    "TreeError",
    "parse_tree",
    "format_tree",
    "count_root_subtrees",
    "count_subtrees",
    "counts",
    "log_counts",
    "log_counts_batch",
    "toll_profile",
    "brute_force_counts",
    "build_special_tree",
    "iter_trees",
    "parents",
    "tree_weight",
    "DEFAULT_BIGINT_CAP",
]

DEFAULT_BIGINT_CAP = 20000
BRUTE_FORCE_CAP = 25


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class OrderedTree:
    """Preorder out-degree sequence of a rooted ordered tree."""

    degrees: tuple

    def __post_init__(self):
        degs = tuple(int(d) for d in self.degrees)
        object.__setattr__(self, "degrees", degs)
        if not degs:
            raise TreeError("empty degree sequence")
        open_slots = 1
        for i, d in enumerate(degs):
            if d < 0:
                raise TreeError("negative out-degree")
            if open_slots <= 0:
                raise TreeError(f"sequence completes a tree before position {i}")
            open_slots += d - 1
        if open_slots != 0:
            raise TreeError("degree sum must equal size - 1")

    def __len__(self):
        return len(self.degrees)

    @property
    def size(self) -> int:
        return len(self.degrees)

    def __str__(self):
        return format_tree(self)


@dataclass(frozen=True)
class CountPair:
    r: int
    s: int


def parse_tree(text: str) -> OrderedTree:
    """Parse ``"2,0,0"`` style text into a tree."""
    try:
        degs = [int(tok) for tok in text.replace(" ", "").split(",") if tok != ""]
    except ValueError as exc:
        raise TreeError(f"bad tree text {text!r}") from exc
    return OrderedTree(tuple(degs))


def format_tree(t: OrderedTree) -> str:
    return ",".join(str(d) for d in t.degrees)


def parents(t: OrderedTree) -> list[int]:
    """Parent index of every node (``-1`` for the root)."""
    par = [-1] * len(t)
    stack: list[list[int]] = []  # [node, remaining child slots]
    for i, d in enumerate(t.degrees):
        if stack:
            top = stack[-1]
            par[i] = top[0]
            top[1] -= 1
            if top[1] == 0:
                stack.pop()
        if d > 0:
            stack.append([i, d])
    return par


def _postorder_values(t: OrderedTree, leaf, combine):
    # Reverse preorder visits every node after all of its descendants, so the
    # top d stack entries are exactly the children of a node of out-degree d.
    stack = []
    out = [None] * len(t)
    degs = t.degrees
    for i in range(len(degs) - 1, -1, -1):
        d = degs[i]
        if d == 0:
            v = leaf
        else:
            kids = stack[-d:]
            del stack[-d:]
            v = combine(kids)
        out[i] = v
        stack.append(v)
    return out


def _check_cap(t: OrderedTree, cap: int):
    if len(t) > cap:
        raise TreeError(f"tree of size {len(t)} exceeds big-integer cap {cap}; use log_counts")


def _r_values(t: OrderedTree) -> list[int]:
    def combine(kids):
        r = 1
        for c in kids:
            r *= c + 1
        return r

    return _postorder_values(t, 1, combine)


def counts(t: OrderedTree, cap: int = DEFAULT_BIGINT_CAP) -> CountPair:
    """Exact ``(R(T), S(T))`` in one pass."""
    _check_cap(t, cap)
    rv = _r_values(t)
    return CountPair(rv[0], sum(rv))


def count_root_subtrees(t: OrderedTree, cap: int = DEFAULT_BIGINT_CAP) -> int:
    return counts(t, cap).r


def count_subtrees(t: OrderedTree, cap: int = DEFAULT_BIGINT_CAP) -> int:
    return counts(t, cap).s


def _log1p_r(log_r: float) -> float:
    # log(R + 1) from log R
    return log_r + math.log1p(math.exp(-log_r))


def log_counts(t: OrderedTree) -> tuple[float, float]:
    """``(log R(T), log S(T))`` in double precision without big integers."""
    stack: list[float] = []
    degs = t.degrees
    log_s = -math.inf
    for i in range(len(degs) - 1, -1, -1):
        d = degs[i]
        if d == 0:
            v = 0.0
        else:
            v = math.fsum(_log1p_r(x) for x in stack[-d:])
            del stack[-d:]
        stack.append(v)
        hi, lo = (v, log_s) if v >= log_s else (log_s, v)
        log_s = hi + math.log1p(math.exp(lo - hi)) if lo > -math.inf else hi
    return stack[0], log_s


def log_counts_batch(degrees: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Log counts for a batch of equal-size trees, one tree per row.

    Works position by position across the batch: a forward pass finds
    parents, a backward pass accumulates ``log(R + 1)`` into each parent.
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    if degrees.ndim != 2:
        raise ValueError("expected a 2-d array of degree sequences")
    B, n = degrees.shape
    rows = np.arange(B)
    par = np.full((B, n), -1, dtype=np.int64)
    stack = np.zeros((B, n + 1), dtype=np.int64)
    rem = np.zeros((B, n), dtype=np.int64)
    sp = np.zeros(B, dtype=np.int64)
    for i in range(n):
        d = degrees[:, i]
        if i > 0:
            top = stack[rows, sp - 1]
            par[:, i] = top
            rem[rows, top] -= 1
            sp -= rem[rows, top] == 0
        rem[:, i] = d
        push = d > 0
        stack[rows[push], sp[push]] = i
        sp += push
    log_r = np.zeros((B, n))
    for i in range(n - 1, 0, -1):
        # one entry per row, so plain fancy-index accumulation is safe
        log_r[rows, par[:, i]] += np.logaddexp(log_r[:, i], 0.0)
    m = log_r.max(axis=1)
    log_s = m + np.log(np.exp(log_r - m[:, None]).sum(axis=1))
    return log_r[:, 0].copy(), log_s


def toll_profile(t: OrderedTree) -> list[float]:
    """``f(T_v) = log(1 + 1/R(T_v))`` for every node, in preorder."""
    vals = _postorder_values(t, 0.0, lambda kids: math.fsum(_log1p_r(x) for x in kids))
    return [math.log1p(math.exp(-x)) for x in vals]


def brute_force_counts(t: OrderedTree) -> CountPair:
    """Count connected node subsets by exhaustive enumeration (``|T| <= 25``).

    A subset of a tree's nodes induces a forest; it is connected exactly when
    the number of its nodes whose parent is also in it is ``size - 1``.
    """
    n = len(t)
    if n > BRUTE_FORCE_CAP:
        raise TreeError(f"brute force limited to {BRUTE_FORCE_CAP} nodes")
    par = parents(t)
    total = 1 << n
    r = s = 0
    chunk = 1 << 20
    for lo in range(1, total, chunk):
        masks = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
        bits = [(masks >> i) & 1 for i in range(n)]
        size = np.zeros_like(masks)
        edges = np.zeros_like(masks)
        for i in range(n):
            size += bits[i]
            if par[i] >= 0:
                edges += bits[i] & bits[par[i]]
        connected = edges == size - 1
        s += int(connected.sum())
        r += int((connected & (bits[0] == 1)).sum())
    return CountPair(r, s)


def build_special_tree(variant: str, ell: int) -> OrderedTree:
    """The two size-``3*ell+1`` trees with equal size but different ``R``.

    ``Ta``: the root and two of its children have out-degree ``ell``.
    ``Tb``: the root, one child and one grandchild have out-degree ``ell``.
    """
    if ell < 2:
        raise TreeError("ell must be at least 2")
    if variant == "Ta":
        degs = [ell] + [ell] + [0] * ell + [ell] + [0] * ell + [0] * (ell - 2)
    elif variant == "Tb":
        degs = [ell, ell, ell] + [0] * ell + [0] * (ell - 1) + [0] * (ell - 1)
    else:
        raise TreeError(f"unknown variant {variant!r}")
    return OrderedTree(tuple(degs))


def iter_trees(n: int, alphabet: Iterable[int]) -> Iterator[OrderedTree]:
    """All ordered trees of size ``n`` whose out-degrees lie in ``alphabet``."""
    alpha = sorted(set(int(a) for a in alphabet if 0 <= a <= n - 1))
    if 0 not in alpha:
        return
    degs = [0] * n

    def rec(i: int, open_slots: int):
        remaining = n - i
        if open_slots == 0:
            if remaining == 0:
                yield OrderedTree(tuple(degs))
            return
        if open_slots > remaining:
            return
        for d in alpha:
            nxt = open_slots + d - 1
            # all later nodes must still fit
            if nxt > remaining - 1:
                break
            if nxt == 0 and remaining - 1 != 0:
                continue
            degs[i] = d
            yield from rec(i + 1, nxt)

    yield from rec(0, 1)


def tree_weight(t: OrderedTree, model, exact: bool = True):
    """``w(T) = prod_v w_{deg(v)}``."""
    out = 1
    for d in t.degrees:
        out *= model.weight(d, exact=exact)
    return out
