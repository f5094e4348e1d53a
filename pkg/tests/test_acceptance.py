"""Acceptance criteria.  Each test function is one criterion; conftest prints a PASS/FAIL line per test."""
import random
import time
from fractions import Fraction

import pytest

from helpers import (
    FIGURE5_AVERAGE, FIGURE5_CHART, FIGURE5_HITS, all_binary, figure5_trees,
    random_binary, random_binary_text, random_instances, random_nary_text,
    random_nonbinary, words,
)
from treeavg.ensemble import (
    avg_tree, binary_oracle, brute_force_avg, f1_objective, hit_counts,
    selective_mbr, split_signature,
)
from treeavg.metrics import agreement_matrix, prf
from treeavg.pipeline import RunConfig, run
from treeavg.treebank import Span, constituents, parse_bracketed, render_bracketed


@pytest.fixture(scope="module")
def instances():
    return random_instances(seed=2024, count=500)


def test_criterion_01_worked_example_golden_values():
    teachers = figure5_trees()
    hits = hit_counts(teachers)
    for (b, e), count in FIGURE5_HITS.items():
        assert hits[Span(b, e)] == count, (b, e)
    tree, chart = avg_tree(hits)
    # chart values as drawn include the cell's own count
    assert {span: chart.h[span] for span in FIGURE5_CHART} == FIGURE5_CHART
    assert render_bracketed(tree) == FIGURE5_AVERAGE

    best = float("inf")
    for _ in range(50):
        start = time.perf_counter()
        avg_tree(hit_counts(teachers))
        best = min(best, time.perf_counter() - start)
    assert best < 1e-3, f"{best * 1e3:.3f} ms"


def test_criterion_02_dp_matches_brute_force(instances):
    start = time.perf_counter()
    for teachers in instances:
        dp, _ = avg_tree(hit_counts(teachers))
        oracle = brute_force_avg(teachers)
        assert f1_objective(dp, teachers) == f1_objective(oracle, teachers)
        assert split_signature(dp) == split_signature(oracle)
        assert dp == oracle
    elapsed = time.perf_counter() - start
    assert elapsed < 30, f"{elapsed:.1f} s"


def test_criterion_03_dominance(instances):
    strict = 0
    for teachers in instances:
        dp, _ = avg_tree(hit_counts(teachers))
        generative = f1_objective(dp, teachers)
        selective = f1_objective(selective_mbr(teachers), teachers)
        assert generative >= selective
        assert all(selective >= f1_objective(t, teachers) for t in teachers)
        strict += generative > selective
    assert strict >= 1


def test_criterion_04_permutation_and_duplication_invariance():
    rng = random.Random(77)
    for teachers in random_instances(seed=4, count=100):
        base = render_bracketed(avg_tree(hit_counts(teachers))[0])
        shuffled = list(teachers)
        rng.shuffle(shuffled)
        assert render_bracketed(avg_tree(hit_counts(shuffled))[0]) == base
        for m in (2, 3):
            assert render_bracketed(avg_tree(hit_counts(list(teachers) * m))[0]) == base


def _naive_prf(pred, gold):
    pred, gold = set(pred), set(gold)
    common = sum(1 for s in pred if s in gold)
    p = Fraction(common, len(pred)) if pred else None
    r = Fraction(common, len(gold)) if gold else None
    if p is None and r is None:
        return None, None, None
    if not p or not r:
        return p, r, Fraction(0)
    return p, r, 2 * p * r / (p + r)


def test_criterion_05_metric_correctness():
    rng = random.Random(5)

    def random_spans():
        n = rng.randint(2, 12)
        out = set()
        for _ in range(rng.randint(0, 15)):
            b = rng.randint(1, n)
            out.add(Span(b, rng.randint(b + 1, n + 1)))
        return frozenset(out)

    for _ in range(1000):
        pred, gold = random_spans(), random_spans()
        got = prf(pred, gold)
        assert tuple(got) == _naive_prf(pred, gold)
        assert all(x is None or isinstance(x, (int, Fraction)) for x in got)

    for _ in range(1000):
        n = rng.randint(1, 20)
        a, b = random_binary(rng, n), random_binary(rng, n)
        p, r, f = prf(constituents(a, True), constituents(b, True))
        assert p == r == f


def test_criterion_06_binary_size_identity():
    rng = random.Random(6)
    for _ in range(200):
        n = rng.randint(1, 30)
        assert len(constituents(random_binary(rng, n), include_trivial=True)) == 2 * n - 1
    for _ in range(200):
        n = rng.randint(3, 30)
        assert len(constituents(random_nonbinary(rng, n), include_trivial=True)) < 2 * n - 1


def test_criterion_07_agreement_matrix_sanity():
    rng = random.Random(7)
    lengths = [rng.randint(1, 25) for _ in range(40)]
    streams = [[random_binary(rng, n) for n in lengths] for _ in range(5)]
    pct = [[None if v is None else 100 * v for v in row] for row in agreement_matrix(streams)]
    for i in range(5):
        assert pct[i][i] == 100.0
        for j in range(5):
            assert pct[i][j] == pct[j][i]


def test_criterion_08_binary_oracle_upper_bound():
    rng = random.Random(8)

    def score(tree, gold):
        return prf(constituents(tree), constituents(gold)).f1

    for _ in range(50):
        n = rng.randint(3, 10)
        gold = random_nonbinary(rng, n)
        best = score(binary_oracle(gold), gold)
        assert all(score(random_binary(rng, n), gold) <= best for _ in range(1000))
        assert best == max(score(t, gold) for t in all_binary(n))


def _write_corpus(tmp_path, rng, sentences, k, mean_length):
    sents = [[f"x{rng.randint(0, 99)}" for _ in range(max(1, round(rng.gauss(mean_length, 6))))]
             for _ in range(sentences)]
    paths = []
    for t in range(k):
        lines = [random_binary_text(rng, s) if len(s) > 1 else f"({s[0]})" for s in sents]
        path = tmp_path / f"teacher{t}.txt"
        path.write_text("".join(line + "\n" for line in lines))
        paths.append(str(path))
    return paths, sum(map(len, sents)) / sentences


def test_criterion_09_pipeline_determinism_and_speed(tmp_path):
    rng = random.Random(9)
    paths, mean_len = _write_corpus(tmp_path, rng, 1000, 7, 20)
    assert 19 <= mean_len <= 21

    outputs, timings = [], {}
    for workers in (1, 8):
        out = tmp_path / f"avg{workers}.txt"
        start = time.perf_counter()
        run(RunConfig(teacher_paths=paths, output_path=str(out), workers=workers))
        timings[workers] = time.perf_counter() - start
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    assert len(outputs[0].splitlines()) == 1000
    assert timings[1] < 5, f"serial run took {timings[1]:.2f} s"
    assert timings[8] < 5, f"parallel run took {timings[8]:.2f} s"

    teachers = [random_binary(rng, 25) for _ in range(7)]
    hits = hit_counts(teachers)
    per_sentence = min(_time(lambda: avg_tree(hits), 20) for _ in range(3))
    assert per_sentence <= 6e-3, f"{per_sentence * 1e3:.2f} ms"


def _time(fn, reps):
    start = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - start) / reps


PHRASES = ["S", "NP", "VP", "PP", "SBAR", "ADJP", "NP-SBJ"]
TAGS = ["DT", "NN", "VBZ", "IN", "JJ", "PRP"]


def _unary_chain_text(rng, toks):
    """Labeled text with preterminals and random unary wrappers."""
    if len(toks) == 1:
        text = f"({rng.choice(TAGS)} {toks[0]})"
    else:
        arity = rng.randint(2, min(3, len(toks)))
        cuts = sorted(rng.sample(range(1, len(toks)), arity - 1))
        parts = [toks[a:b] for a, b in zip([0] + cuts, cuts + [len(toks)])]
        inner = " ".join(_unary_chain_text(rng, p) for p in parts)
        text = f"({rng.choice(PHRASES)} {inner})"
    for _ in range(rng.choice([0, 0, 1, 2])):
        text = f"({rng.choice(PHRASES)} {text})"
    return text


def test_criterion_10_round_trip_fixpoint():
    rng = random.Random(10)
    corpus = []
    for i in range(500):
        n = rng.randint(1, 25)
        kind = i % 3
        if kind == 0:
            text = random_nary_text(rng, words(n)) if n > 1 else "(w1)"
            corpus.append((text, False))
        elif kind == 1:
            text = random_nary_text(rng, words(n), PHRASES) if n > 1 else "(NP w1)"
            corpus.append((text, True))
        else:
            corpus.append((_unary_chain_text(rng, words(n)), True))

    kinds = set()
    for text, labeled in corpus:
        tree = parse_bracketed(text, labeled=labeled)
        rendered = render_bracketed(tree)
        again = parse_bracketed(rendered, labeled=labeled)
        assert again == tree, text
        assert render_bracketed(again) == rendered
        kinds.add(labeled)
    assert kinds == {True, False}
