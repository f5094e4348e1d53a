"""Tree averaging: the binary tree that agrees most with a set of parses.

Maximising summed F1 against K binary parses of one sentence is the same
as maximising the total hit count of the chosen tree's spans, where a
span's hit count is the number of parses that contain it.  The maximiser
factorises over spans, so a CYK-style chart finds it exactly in O(n^3).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .metrics import check_same_tokens
from .treebank import Node, Span, Token, Tree, constituents

ENUMERATION_CAP = 12

__all__ = [
    "HitCountTable",
    "Chart",
    "hit_counts",
    "avg_tree",
    "tree_hits",
    "selective_mbr",
    "selective_mbr_index",
    "enumerate_binary_trees",
    "split_signature",
    "f1_objective",
    "brute_force_avg",
    "binary_oracle",
    "ENUMERATION_CAP",
]


@dataclass
class HitCountTable:
    """Sparse span -> number of teachers containing it; absent spans are 0."""

    counts: dict[Span, int]
    n: int
    k: int
    words: tuple[str, ...] = ()

    def __getitem__(self, span) -> int:
        return self.counts.get(span, 0)


@dataclass
class Chart:
    n: int
    h: dict[Span, int] = field(default_factory=dict)
    split: dict[Span, int] = field(default_factory=dict)
    # number of candidate splits scored while filling
    evaluations: int = 0

    @property
    def objective(self) -> int:
        return self.h[Span(1, self.n + 1)]


def hit_counts(teachers: Sequence[Tree]) -> HitCountTable:
    """Count, for every span, the teachers whose full-sentence parse contains it."""
    if not teachers:
        raise ValueError("need at least one teacher tree")
    words = teachers[0].words
    counts: dict[Span, int] = {}
    for k, tree in enumerate(teachers):
        if k:
            check_same_tokens(words, tree.words, where=f"teacher {k + 1} vs teacher 1")
        for span in constituents(tree, include_trivial=True):
            counts[span] = counts.get(span, 0) + 1
    return HitCountTable(counts, len(words), len(teachers), words)


def avg_tree(hits: HitCountTable) -> tuple[Tree, Chart]:
    """Fill the chart bottom-up and read off the best binary tree.

    Ties between split points go to the smallest one.
    """
    n, k, counts = hits.n, hits.k, hits.counts
    if n < 1:
        raise ValueError("empty sentence")
    # best[b][e] for 1 <= b < e <= n + 1
    best = [[0] * (n + 2) for _ in range(n + 2)]
    split = [[0] * (n + 2) for _ in range(n + 2)]
    for b in range(1, n + 1):
        best[b][b + 1] = k
    evaluations = 0
    for width in range(2, n + 1):
        for b in range(1, n - width + 2):
            e = b + width
            row = best[b]
            top, arg = -1, 0
            evaluations += e - b - 1
            for j in range(b + 1, e):
                v = row[j] + best[j][e]
                if v > top:
                    top, arg = v, j
            row[e] = top + counts.get((b, e), 0)
            split[b][e] = arg

    chart = Chart(n, evaluations=evaluations)
    for b in range(1, n + 1):
        for e in range(b + 1, n + 2):
            chart.h[Span(b, e)] = best[b][e]
            if e - b > 1:
                chart.split[Span(b, e)] = split[b][e]

    words = hits.words or tuple(f"w{i}" for i in range(1, n + 1))

    def build(b: int, e: int) -> Node:
        if e - b == 1:
            return Node(Span(b, e))
        j = split[b][e]
        return Node(Span(b, e), None, (build(b, j), build(j, e)))

    tokens = tuple(Token(w, i) for i, w in enumerate(words, start=1))
    return Tree(tokens, build(1, n + 1)), chart


def tree_hits(tree: Tree, hits: HitCountTable) -> int:
    """Total hit count of a tree's spans, trivial ones included."""
    return sum(hits[s] for s in constituents(tree, include_trivial=True))


def selective_mbr_index(teachers: Sequence[Tree]) -> int:
    """0-based index of the teacher with the largest summed F1 to all teachers.

    F1 here counts every span, trivial ones included.  Ties go to the
    lowest index.
    """
    if not teachers:
        raise ValueError("need at least one teacher tree")
    words = teachers[0].words
    for k, t in enumerate(teachers[1:], start=2):
        check_same_tokens(words, t.words, where=f"teacher {k} vs teacher 1")
    spans = [constituents(t, include_trivial=True) for t in teachers]
    best_i, best = 0, Fraction(-1)
    for i, cand in enumerate(spans):
        score = sum(Fraction(2 * len(cand & ref), len(cand) + len(ref)) for ref in spans)
        if score > best:
            best_i, best = i, score
    return best_i


def selective_mbr(teachers: Sequence[Tree]) -> Tree:
    return teachers[selective_mbr_index(teachers)]


# ---------------------------------------------------------------------------
# Exhaustive search, used as an independent check on the chart


def _check_cap(n: int, cap: int) -> None:
    if n < 1:
        raise ValueError("need at least one token")
    if n > cap:
        raise ValueError(
            f"{n} tokens exceeds the enumeration cap of {cap} "
            f"({math.comb(2 * (n - 1), n - 1) // n} trees)"
        )


def enumerate_binary_trees(
    n: int, words: Optional[Sequence[str]] = None, cap: int = ENUMERATION_CAP
) -> Iterator[Tree]:
    """Every unlabeled binary bracketing of ``n`` tokens, each exactly once.

    Trees come out ordered by their pre-order split positions.
    """
    _check_cap(n, cap)
    words = tuple(words) if words is not None else tuple(f"w{i}" for i in range(1, n + 1))
    if len(words) != n:
        raise ValueError(f"expected {n} words, got {len(words)}")
    tokens = tuple(Token(w, i) for i, w in enumerate(words, start=1))
    memo: dict[tuple[int, int], list[Node]] = {}

    def shapes(b: int, e: int) -> list[Node]:
        if (b, e) not in memo:
            if e - b == 1:
                memo[b, e] = [Node(Span(b, e))]
            else:
                memo[b, e] = [
                    Node(Span(b, e), None, (left, right))
                    for j in range(b + 1, e)
                    for left in shapes(b, j)
                    for right in shapes(j, e)
                ]
        return memo[b, e]

    if n == 1:
        yield Tree(tokens, Node(Span(1, 2)))
        return
    for j in range(2, n + 1):
        for left in shapes(1, j):
            for right in shapes(j, n + 1):
                yield Tree(tokens, Node(Span(1, n + 1), None, (left, right)))


def split_signature(tree: Tree) -> tuple[int, ...]:
    """Pre-order split positions; smaller compares as 'further left'."""
    return tuple(node.children[1].span.begin for node in tree.nodes() if node.children)


def f1_objective(tree: Tree, teachers: Sequence[Tree]) -> Fraction:
    """Summed F1 of ``tree`` against each teacher, all spans counted."""
    cand = constituents(tree, include_trivial=True)
    return sum(
        (Fraction(2 * len(cand & ref), len(cand) + len(ref))
         for ref in (constituents(t, include_trivial=True) for t in teachers)),
        Fraction(0),
    )


def brute_force_avg(teachers: Sequence[Tree], cap: int = ENUMERATION_CAP) -> Tree:
    """Scan every binary tree for the one with the largest summed F1.

    Ties resolve to the smallest :func:`split_signature`, matching the
    chart's smallest-split rule.
    """
    if not teachers:
        raise ValueError("need at least one teacher tree")
    words = teachers[0].words
    n = len(words)
    _check_cap(n, cap)
    refs = [constituents(t, include_trivial=True) for t in teachers]
    # every candidate has 2n-1 spans, so scale by a common denominator and stay in ints
    dens = [2 * n - 1 + len(r) for r in refs]
    lcm = math.lcm(*dens)
    weights = [2 * lcm // d for d in dens]

    best_tree, best_score, best_sig = None, -1, ()
    for tree in enumerate_binary_trees(n, words, cap):
        cand = constituents(tree, include_trivial=True)
        score = sum(w * len(cand & r) for w, r in zip(weights, refs))
        if score < best_score:
            continue
        sig = split_signature(tree)
        if score > best_score or sig < best_sig:
            best_tree, best_score, best_sig = tree, score, sig
    return best_tree


def binary_oracle(gold: Tree) -> Tree:
    """The binary tree with the highest F1 against a possibly non-binary gold tree."""
    tree, _ = avg_tree(hit_counts([gold]))
    return tree
