"""Unlabeled bracket scoring: sentence F1, corpus averages, agreement, breakdowns."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import zip_longest
from typing import Iterable, NamedTuple, Optional, Sequence

from .treebank import Tree, Token, constituents, labeled_constituents, strip_tokens

DEFAULT_PUNCTUATION = frozenset(
    {".", ",", ":", ";", "``", "''", "'", "`", "?", "!", "-LRB-", "-RRB-", "...", "--", "-"}
)
DEFAULT_LENGTH_BUCKETS: tuple[tuple[int, Optional[int]], ...] = (
    (1, 10), (11, 20), (21, 30), (31, 40), (41, None),
)
DEFAULT_LABELS = ("NP", "VP", "PP", "S", "SBAR")


class TokenMismatchError(ValueError):
    def __init__(self, index: int, left: Optional[str], right: Optional[str], where: str = ""):
        prefix = f"{where}: " if where else ""
        super().__init__(
            f"{prefix}token mismatch at index {index}: {left!r} vs {right!r}"
        )
        self.index = index
        self.left = left
        self.right = right


def first_mismatch(a: Sequence[str], b: Sequence[str]) -> Optional[int]:
    """1-based index of the first differing token, or None if equal."""
    for i, (x, y) in enumerate(zip_longest(a, b), start=1):
        if x != y:
            return i
    return None


def check_same_tokens(a: Sequence[str], b: Sequence[str], where: str = "") -> None:
    i = first_mismatch(a, b)
    if i is not None:
        left = a[i - 1] if i <= len(a) else None
        right = b[i - 1] if i <= len(b) else None
        raise TokenMismatchError(i, left, right, where)


@dataclass(frozen=True)
class EvalConfig:
    punctuation: frozenset = DEFAULT_PUNCTUATION
    min_gold_constituents: int = 1
    length_buckets: tuple = DEFAULT_LENGTH_BUCKETS

    def __post_init__(self):
        object.__setattr__(self, "punctuation", frozenset(self.punctuation))
        buckets = tuple((lo, hi) for lo, hi in self.length_buckets)
        prev_hi = 0
        for lo, hi in buckets:
            if prev_hi is None or lo <= prev_hi or (hi is not None and hi < lo):
                raise ValueError(f"length buckets must be ordered and disjoint: {buckets}")
            prev_hi = hi
        object.__setattr__(self, "length_buckets", buckets)

    def is_punct(self, token: Token) -> bool:
        return token.surface in self.punctuation


class PRF(NamedTuple):
    precision: Optional[Fraction]
    recall: Optional[Fraction]
    f1: Optional[Fraction]


def prf(pred: frozenset, gold: frozenset) -> PRF:
    """Exact precision, recall and F1 of two span sets.

    An empty side leaves its ratio undefined (None) and F1 at 0; when both
    are empty everything is None and the caller should skip the sentence.
    """
    if not pred and not gold:
        return PRF(None, None, None)
    hit = len(pred & gold)
    p = Fraction(hit, len(pred)) if pred else None
    r = Fraction(hit, len(gold)) if gold else None
    if not hit:
        return PRF(p, r, Fraction(0))
    return PRF(p, r, Fraction(2 * hit, len(pred) + len(gold)))


def _strip(tree: Tree, cfg: EvalConfig) -> Optional[Tree]:
    if not any(t.surface in cfg.punctuation for t in tree.tokens):
        return tree
    if all(t.surface in cfg.punctuation for t in tree.tokens):
        return None
    return strip_tokens(tree, cfg.is_punct)


def _scored_spans(pred: Tree, gold: Tree, cfg: EvalConfig, where: str = ""):
    check_same_tokens(pred.words, gold.words, where)
    p, g = _strip(pred, cfg), _strip(gold, cfg)
    if g is None:
        return None
    return constituents(p, False), constituents(g, False), g


def sentence_f1(pred: Tree, gold: Tree, cfg: EvalConfig = EvalConfig(), where: str = "") -> Optional[float]:
    """F1 under the usual protocol, or None when the sentence is excluded.

    Punctuation is removed from both trees and single words and the whole
    sentence do not count.  A sentence whose gold tree keeps fewer than
    ``cfg.min_gold_constituents`` spans is excluded.
    """
    scored = _scored_spans(pred, gold, cfg, where)
    if scored is None:
        return None
    p_spans, g_spans, _ = scored
    if len(g_spans) < cfg.min_gold_constituents or not g_spans:
        return None
    return float(prf(p_spans, g_spans).f1)


@dataclass
class EvalReport:
    # (sentence id, length after punctuation removal, f1)
    per_sentence: list = field(default_factory=list)
    skipped: int = 0

    @property
    def per_sentence_f1(self) -> list[tuple[int, float]]:
        return [(sid, f1) for sid, _, f1 in self.per_sentence]

    @property
    def corpus_f1(self) -> Optional[float]:
        if not self.per_sentence:
            return None
        return math.fsum(f1 for _, _, f1 in self.per_sentence) / len(self.per_sentence)

    @property
    def total(self) -> int:
        return len(self.per_sentence) + self.skipped


def _paired(preds: Iterable[Tree], golds: Iterable[Tree]):
    sentinel = object()
    for i, (p, g) in enumerate(zip_longest(preds, golds, fillvalue=sentinel), start=1):
        if p is sentinel or g is sentinel:
            raise ValueError(
                f"stream length mismatch: {'predictions' if p is sentinel else 'gold'} "
                f"ran out at sentence {i}"
            )
        yield i, p, g


def corpus_eval(preds: Iterable[Tree], golds: Iterable[Tree], cfg: EvalConfig = EvalConfig()) -> EvalReport:
    report = EvalReport()
    for i, p, g in _paired(preds, golds):
        scored = _scored_spans(p, g, cfg, where=f"line {i}")
        if scored is None:
            report.skipped += 1
            continue
        p_spans, g_spans, g_stripped = scored
        if not g_spans or len(g_spans) < cfg.min_gold_constituents:
            report.skipped += 1
            continue
        report.per_sentence.append((i, g_stripped.n, float(prf(p_spans, g_spans).f1)))
    return report


def agreement_matrix(models: Sequence[Sequence[Tree]], cfg: EvalConfig = EvalConfig()) -> list[list[Optional[float]]]:
    """Entry ``[i][j]`` scores model ``i`` against model ``j`` as reference."""
    models = [list(m) for m in models]
    k = len(models)
    out: list[list[Optional[float]]] = [[None] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            out[i][j] = corpus_eval(models[i], models[j], cfg).corpus_f1
    return out


def base_label(label: str) -> str:
    """``NP-SBJ-1`` -> ``NP``; ``-NONE-`` and similar stay whole."""
    if label.startswith("-"):
        return label
    return label.split("-", 1)[0].split("=", 1)[0]


def recall_by_label(
    preds: Iterable[Tree],
    golds: Iterable[Tree],
    cfg: EvalConfig = EvalConfig(),
    labels: Sequence[str] = DEFAULT_LABELS,
) -> dict[str, tuple[int, Optional[float]]]:
    """Corpus-wide recall of gold spans per label: ``{label: (count, recall)}``.

    Labels are matched on their base category.  A label that never occurs
    has recall None.
    """
    found: dict[str, int] = defaultdict(int)
    total: dict[str, int] = defaultdict(int)
    wanted = set(labels)
    for i, p, g in _paired(preds, golds):
        scored = _scored_spans(p, g, cfg, where=f"line {i}")
        if scored is None:
            continue
        p_spans, _, g_stripped = scored
        for label, span in labeled_constituents(g_stripped, include_trivial=False):
            label = base_label(label)
            if label in wanted:
                total[label] += 1
                found[label] += span in p_spans
    return {
        label: (total[label], found[label] / total[label] if total[label] else None)
        for label in labels
    }


def bucket_name(bucket: tuple[int, Optional[int]]) -> str:
    lo, hi = bucket
    return f"{lo}+" if hi is None else f"{lo}-{hi}"


def f1_by_length(
    preds: Iterable[Tree], golds: Iterable[Tree], cfg: EvalConfig = EvalConfig()
) -> list[tuple[str, int, Optional[float]]]:
    """Mean sentence F1 per length bucket as ``(bucket, count, mean)`` rows."""
    report = corpus_eval(preds, golds, cfg)
    return by_length(report, cfg.length_buckets)


def by_length(report: EvalReport, buckets) -> list[tuple[str, int, Optional[float]]]:
    rows = []
    for lo, hi in buckets:
        vals = [f1 for _, n, f1 in report.per_sentence if n >= lo and (hi is None or n <= hi)]
        rows.append((bucket_name((lo, hi)), len(vals), math.fsum(vals) / len(vals) if vals else None))
    return rows


# ---------------------------------------------------------------------------
# TSV output


def fmt_score(x: Optional[float]) -> str:
    return "NA" if x is None else repr(float(x))


def report_tsv(report: EvalReport) -> str:
    lines = ["id\tlength\tf1"]
    lines += [f"{sid}\t{n}\t{fmt_score(f1)}" for sid, n, f1 in report.per_sentence]
    lines.append(f"ALL\t{len(report.per_sentence)}\t{fmt_score(report.corpus_f1)}")
    lines.append(f"SKIPPED\t{report.skipped}\tNA")
    return "\n".join(lines) + "\n"


def breakdown_tsv(rows, key_name: str = "bucket") -> str:
    lines = [f"{key_name}\tcount\tscore"]
    lines += [f"{key}\t{count}\t{fmt_score(score)}" for key, count, score in rows]
    return "\n".join(lines) + "\n"
