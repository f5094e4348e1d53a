"""Random tree generators and fixtures shared by the test modules.

Generators build bracketed text directly, never through the library, so
the trees they describe are independent of the code being tested.
"""
import random
from functools import lru_cache

from treeavg.ensemble import enumerate_binary_trees
from treeavg.treebank import parse_bracketed

FIGURE5_TEACHERS = [
    "(((w1 w2) (w3 w4)) w5)",
    "((w1 w2) ((w3 w4) w5))",
    "(((w1 w2) w3) (w4 w5))",
    "(w1 ((w2 (w3 w4)) w5))",
]
FIGURE5_AVERAGE = "((w1 w2) ((w3 w4) w5))"
# (begin, end) -> hit count, as drawn in the worked example
FIGURE5_HITS = {
    (1, 3): 3, (2, 4): 0, (3, 5): 3, (4, 6): 1,
    (1, 4): 1, (2, 5): 1, (3, 6): 1,
    (1, 5): 1, (2, 6): 1,
    (1, 6): 4,
    (1, 2): 4, (2, 3): 4, (3, 4): 4, (4, 5): 4, (5, 6): 4,
}
FIGURE5_CHART = {
    (1, 3): 11, (2, 4): 8, (3, 5): 11, (4, 6): 9,
    (1, 4): 16, (2, 5): 16, (3, 6): 16,
    (1, 5): 23, (2, 6): 21,
    (1, 6): 31,
}


def figure5_trees():
    return [parse_bracketed(s, labeled=False) for s in FIGURE5_TEACHERS]


def words(n):
    return [f"w{i}" for i in range(1, n + 1)]


def random_binary_text(rng, toks):
    if len(toks) == 1:
        return toks[0]
    j = rng.randint(1, len(toks) - 1)
    left, right = random_binary_text(rng, toks[:j]), random_binary_text(rng, toks[j:])
    return f"({left} {right})"


def random_binary(rng, n, toks=None):
    toks = toks or words(n)
    text = random_binary_text(rng, toks)
    if n == 1:
        text = f"({text})"
    return parse_bracketed(text, labeled=False)


def random_nary_text(rng, toks, labels=None, max_arity=4):
    """Random tree text; nodes get 2..max_arity children.  ``labels`` adds phrase labels."""
    if len(toks) == 1:
        return toks[0]
    arity = rng.randint(2, min(max_arity, len(toks)))
    cuts = sorted(rng.sample(range(1, len(toks)), arity - 1))
    parts = [toks[a:b] for a, b in zip([0] + cuts, cuts + [len(toks)])]
    inner = " ".join(random_nary_text(rng, p, labels, max_arity) for p in parts)
    if labels:
        return f"({rng.choice(labels)} {inner})"
    return f"({inner})"


def random_nonbinary(rng, n):
    """Unlabeled tree over n >= 3 tokens with at least one node of arity >= 3."""
    while True:
        tree = parse_bracketed(random_nary_text(rng, words(n)), labeled=False)
        if not tree.is_binary():
            return tree


@lru_cache(maxsize=None)
def all_binary(n):
    return tuple(enumerate_binary_trees(n))


def uniform_teachers(rng, n, k):
    pool = all_binary(n)
    return [rng.choice(pool) for _ in range(k)]


def random_instances(seed, count, n_range=(2, 10), k_range=(1, 7)):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.randint(*n_range)
        k = rng.randint(*k_range)
        out.append(uniform_teachers(rng, n, k))
    return out
