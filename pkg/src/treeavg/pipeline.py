"""Corpus-level runs: read aligned tree files, process sentences, write results.

Each line of each input file is one sentence.  Sentences are independent,
so they are processed in fixed-size batches, optionally across worker
processes, and written back in input order.
"""
from __future__ import annotations

import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from itertools import islice
from typing import Iterator, Optional, Sequence

from . import ensemble
from .metrics import EvalConfig, EvalReport, first_mismatch, sentence_f1
from .treebank import Tree, TreeFormatError, branching_tree, parse_bracketed, render_bracketed, strip_tokens

log = logging.getLogger(__name__)

MODES = ("ensemble", "selective", "oracle", "baseline")
FORMATS = {"auto": None, "labeled": True, "unlabeled": False}


class CorpusError(Exception):
    """One or more validation failures, each tagged with file and line."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        shown = self.problems[:20]
        more = len(self.problems) - len(shown)
        msg = "\n".join(shown) + (f"\n... and {more} more" if more > 0 else "")
        super().__init__(msg)


@dataclass
class RunConfig:
    teacher_paths: list = field(default_factory=list)
    gold_path: Optional[str] = None
    eval: EvalConfig = field(default_factory=EvalConfig)
    mode: str = "ensemble"
    output_path: Optional[str] = None
    direction: str = "right"
    strip_punct_pre: bool = False
    teacher_format: str = "unlabeled"
    gold_format: str = "auto"
    workers: int = 1
    batch_size: int = 256

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.mode in ("ensemble", "selective") and not self.teacher_paths:
            raise ValueError(f"mode {self.mode} needs at least one teacher file")
        if self.mode in ("oracle", "baseline") and not self.gold_path:
            raise ValueError(f"mode {self.mode} needs a gold file")
        for fmt in (self.teacher_format, self.gold_format):
            if fmt not in FORMATS:
                raise ValueError(f"unknown tree format {fmt!r}; expected one of {sorted(FORMATS)}")
        if self.direction not in ("left", "right"):
            raise ValueError(f"direction must be 'left' or 'right', got {self.direction!r}")
        if self.workers < 1 or self.batch_size < 1:
            raise ValueError("workers and batch_size must be positive")

    def input_paths(self) -> list:
        paths = list(self.teacher_paths) if self.mode in ("ensemble", "selective") else []
        if self.gold_path:
            paths.append(self.gold_path)
        return paths


@dataclass
class AlignedSentence:
    id: int
    words: tuple
    teachers: tuple
    gold: Optional[Tree] = None


@dataclass
class AlignedCorpus:
    sentences: list

    @property
    def k(self) -> int:
        return len(self.sentences[0].teachers) if self.sentences else 0

    def __len__(self) -> int:
        return len(self.sentences)


def count_lines(path: str) -> int:
    with open(path, encoding="utf-8") as f:
        return sum(1 for _ in f)


def check_line_counts(paths: Sequence[str]) -> None:
    counts = [(p, count_lines(p)) for p in paths]
    if len({c for _, c in counts}) > 1:
        ref_path, ref = counts[0]
        bad = [f"{p} has {c} lines but {ref_path} has {ref}" for p, c in counts[1:] if c != ref]
        raise CorpusError([f"line-count mismatch: {b}" for b in bad])


def _read_lines(paths: Sequence[str]) -> Iterator[tuple]:
    files = [open(p, encoding="utf-8") for p in paths]
    try:
        for i, lines in enumerate(zip(*files), start=1):
            yield i, tuple(line.rstrip("\n").rstrip("\r") for line in lines)
    finally:
        for f in files:
            f.close()


def _batches(it, size):
    it = iter(it)
    while batch := list(islice(it, size)):
        yield batch


# ---------------------------------------------------------------------------
# Per-sentence work (runs inside worker processes)


def _parse_line(text: str, path: str, lineno: int, labeled, problems: list) -> Optional[Tree]:
    if not text.strip():
        problems.append(f"{path}:{lineno}: blank line")
        return None
    try:
        return parse_bracketed(text, labeled)
    except TreeFormatError as exc:
        problems.append(f"{path}:{lineno}: {exc}")
        return None


def _maybe_strip(tree: Tree, cfg: RunConfig) -> Tree:
    punct = cfg.eval.punctuation
    if not any(t.surface in punct for t in tree.tokens) or all(t.surface in punct for t in tree.tokens):
        return tree
    return strip_tokens(tree, cfg.eval.is_punct)


def _align_one(cfg: RunConfig, item: tuple) -> tuple:
    """Parse and cross-check one line from every input; returns (sentence, problems)."""
    lineno, texts = item
    problems: list[str] = []
    paths = cfg.input_paths()
    n_teach = len(paths) - (1 if cfg.gold_path else 0)
    t_fmt, g_fmt = FORMATS[cfg.teacher_format], FORMATS[cfg.gold_format]
    trees = [
        _parse_line(text, path, lineno, t_fmt if i < n_teach else g_fmt, problems)
        for i, (path, text) in enumerate(zip(paths, texts))
    ]
    if problems:
        return None, problems
    if cfg.strip_punct_pre:
        trees = [_maybe_strip(t, cfg) for t in trees]
    ref_words = trees[0].words
    for path, tree in zip(paths[1:], trees[1:]):
        i = first_mismatch(ref_words, tree.words)
        if i is not None:
            a = ref_words[i - 1] if i <= len(ref_words) else None
            b = tree.words[i - 1] if i <= len(tree.words) else None
            problems.append(
                f"{path}:{lineno}: token mismatch with {paths[0]} at token {i}: {b!r} vs {a!r}"
            )
    if problems:
        return None, problems
    gold = trees[n_teach] if cfg.gold_path else None
    return AlignedSentence(lineno, ref_words, tuple(trees[:n_teach]), gold), []


def _solve(cfg: RunConfig, sent: AlignedSentence) -> tuple[Tree, Optional[int]]:
    if cfg.mode == "ensemble":
        tree, chart = ensemble.avg_tree(ensemble.hit_counts(sent.teachers))
        return tree, chart.objective
    if cfg.mode == "selective":
        tree = ensemble.selective_mbr(sent.teachers)
        return tree, ensemble.tree_hits(tree, ensemble.hit_counts(sent.teachers))
    if cfg.mode == "oracle":
        return ensemble.binary_oracle(sent.gold), None
    return branching_tree(len(sent.words), cfg.direction, sent.words), None


def _process_batch(cfg: RunConfig, batch: list) -> list:
    out = []
    for item in batch:
        sent, problems = _align_one(cfg, item)
        if sent is None:
            out.append((item[0], None, None, None, problems))
            continue
        tree, objective = _solve(cfg, sent)
        f1 = None
        if sent.gold is not None:
            f1 = sentence_f1(tree, sent.gold, cfg.eval)
        # length after punctuation removal, for the report
        n = sum(1 for w in sent.words if w not in cfg.eval.punctuation)
        out.append((sent.id, render_bracketed(tree), objective, (n, f1), []))
    return out


# ---------------------------------------------------------------------------
# Public entry points


def load_aligned(cfg: RunConfig) -> AlignedCorpus:
    """Parse and validate every input line; raise CorpusError listing all failures."""
    cfg.validate()
    paths = cfg.input_paths()
    check_line_counts(paths)
    sentences, problems = [], []
    for item in _read_lines(paths):
        sent, errs = _align_one(cfg, item)
        problems.extend(errs)
        if sent is not None:
            sentences.append(sent)
    if problems:
        raise CorpusError(problems)
    return AlignedCorpus(sentences)


@dataclass
class RunResult:
    output_path: Optional[str]
    sentences: int
    k: int
    objectives: list
    report: Optional[EvalReport] = None
    lines: list = field(default_factory=list)

    @property
    def mean_objective(self) -> Optional[float]:
        vals = [o for o in self.objectives if o is not None]
        return math.fsum(vals) / len(vals) if vals else None


def iter_results(cfg: RunConfig) -> Iterator[tuple]:
    """Yield per-sentence results in input order, in batches over ``cfg.workers``."""
    items = _read_lines(cfg.input_paths())
    work = partial(_process_batch, cfg)
    if cfg.workers == 1:
        for batch in _batches(items, cfg.batch_size):
            yield from work(batch)
        return
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        # bounded look-ahead so memory stays proportional to workers * batch_size
        pending = []
        for batch in _batches(items, cfg.batch_size):
            pending.append(pool.submit(work, batch))
            if len(pending) >= 2 * cfg.workers:
                yield from pending.pop(0).result()
        for fut in pending:
            yield from fut.result()


def run(cfg: RunConfig) -> RunResult:
    """Run one mode over the aligned inputs and write one tree per line.

    Output goes to a temporary file that replaces ``cfg.output_path`` only
    when every sentence validated, so a failed run never leaves a partial
    file behind.  Without an output path the trees are kept in
    ``RunResult.lines``.
    """
    cfg.validate()
    check_line_counts(cfg.input_paths())
    k = len(cfg.teacher_paths) if cfg.mode in ("ensemble", "selective") else 0

    out = None
    tmp_name = None
    if cfg.output_path:
        out_dir = os.path.dirname(os.path.abspath(cfg.output_path))
        fd, tmp_name = tempfile.mkstemp(dir=out_dir, prefix=".treeavg-", suffix=".tmp")
        out = os.fdopen(fd, "w", encoding="utf-8", newline="\n")

    problems: list[str] = []
    objectives: list = []
    lines: list[str] = []
    report = EvalReport() if cfg.gold_path else None
    count = 0
    try:
        for sid, line, objective, score, errs in iter_results(cfg):
            count += 1
            if errs:
                problems.extend(errs)
                continue
            if problems:
                continue
            objectives.append(objective)
            if out is not None:
                out.write(line + "\n")
            else:
                lines.append(line)
            if report is not None:
                n, f1 = score
                if f1 is None:
                    report.skipped += 1
                else:
                    report.per_sentence.append((sid, n, f1))
        if problems:
            raise CorpusError(problems)
        if out is not None:
            out.close()
            os.replace(tmp_name, cfg.output_path)
            tmp_name = None
    finally:
        if out is not None and not out.closed:
            out.close()
        if tmp_name is not None and os.path.exists(tmp_name):
            os.unlink(tmp_name)

    log.info("processed %d sentences in mode %s", count, cfg.mode)
    return RunResult(cfg.output_path, count, k, objectives, report, lines)


def read_trees(path: str, labeled: Optional[bool] = False) -> list[Tree]:
    """All trees of one file; raises CorpusError listing every bad line."""
    trees, problems = [], []
    with open(path, encoding="utf-8") as f:
        for i, line in enumerate(f, start=1):
            tree = _parse_line(line.rstrip("\n").rstrip("\r"), path, i, labeled, problems)
            if tree is not None:
                trees.append(tree)
    if problems:
        raise CorpusError(problems)
    return trees


def read_paired(pred_path: str, gold_path: str, pred_format: str = "unlabeled",
                gold_format: str = "auto") -> tuple[list[Tree], list[Tree]]:
    check_line_counts([pred_path, gold_path])
    preds = read_trees(pred_path, FORMATS[pred_format])
    golds = read_trees(gold_path, FORMATS[gold_format])
    problems = []
    for i, (p, g) in enumerate(zip(preds, golds), start=1):
        j = first_mismatch(p.words, g.words)
        if j is not None:
            problems.append(f"{pred_path}:{i}: token mismatch with {gold_path} at token {j}")
    if problems:
        raise CorpusError(problems)
    return preds, golds


__all__ = [
    "CorpusError",
    "RunConfig",
    "AlignedSentence",
    "AlignedCorpus",
    "RunResult",
    "load_aligned",
    "run",
    "iter_results",
    "read_trees",
    "read_paired",
]
