"""Command-line front end.

Exit status: 0 on success, 1 when the input fails validation, 2 on usage
errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from . import ensemble, metrics, pipeline
from .metrics import DEFAULT_LABELS, DEFAULT_LENGTH_BUCKETS, DEFAULT_PUNCTUATION, EvalConfig
from .treebank import render_bracketed

PUNCT_HELP = " ".join(sorted(DEFAULT_PUNCTUATION))
BUCKETS_HELP = ",".join(metrics.bucket_name(b) for b in DEFAULT_LENGTH_BUCKETS)


def parse_buckets(text: str) -> tuple:
    buckets = []
    for part in text.split(","):
        part = part.strip()
        if part.endswith("+"):
            buckets.append((int(part[:-1]), None))
        else:
            lo, _, hi = part.partition("-")
            buckets.append((int(lo), int(hi) if hi else int(lo)))
    return tuple(buckets)


def _eval_config(args) -> EvalConfig:
    punct = frozenset(args.punct.split())
    buckets = DEFAULT_LENGTH_BUCKETS
    if getattr(args, "buckets", None):
        buckets = parse_buckets(args.buckets)
    return EvalConfig(punct, args.min_gold, buckets)


def _pct(x: Optional[float]) -> str:
    return "NA" if x is None else f"{100 * x:.1f}"


def _fmt_objective(x: Optional[float]) -> str:
    if x is None:
        return "NA"
    return str(int(x)) if float(x).is_integer() else f"{x:.4f}"


def _write(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _summarise(result: pipeline.RunResult, show_objective: bool) -> None:
    noun = "sentence" if result.sentences == 1 else "sentences"
    parts = [f"{result.sentences} {noun}"]
    if result.k:
        parts.append(f"K={result.k}")
    if show_objective:
        parts.append(f"mean objective {_fmt_objective(result.mean_objective)}")
    print(", ".join(parts))
    if result.report is not None:
        r = result.report
        print(f"F1 {_pct(r.corpus_f1)} over {len(r.per_sentence)} sentences ({r.skipped} skipped)")


def _finish_run(cfg: pipeline.RunConfig, args, show_objective: bool) -> int:
    result = pipeline.run(cfg)
    _summarise(result, show_objective)
    if result.report is not None and args.report:
        _write(metrics.report_tsv(result.report), args.report)
    return 0


def _run_config(args, mode: str, **extra) -> pipeline.RunConfig:
    return pipeline.RunConfig(
        teacher_paths=list(getattr(args, "teachers", None) or []),
        gold_path=args.gold,
        eval=_eval_config(args),
        mode=mode,
        output_path=args.out,
        strip_punct_pre=getattr(args, "strip_punct_pre", False),
        teacher_format=getattr(args, "teacher_format", "unlabeled"),
        gold_format=args.gold_format,
        workers=args.workers,
        **extra,
    )


def cmd_ensemble(args) -> int:
    return _finish_run(_run_config(args, "ensemble"), args, show_objective=True)


def cmd_mbr_select(args) -> int:
    return _finish_run(_run_config(args, "selective"), args, show_objective=True)


def cmd_oracle(args) -> int:
    return _finish_run(_run_config(args, "oracle"), args, show_objective=False)


def cmd_baseline(args) -> int:
    return _finish_run(_run_config(args, "baseline", direction=args.direction), args, show_objective=False)


def cmd_eval(args) -> int:
    preds, golds = pipeline.read_paired(args.pred, args.gold, args.pred_format, args.gold_format)
    report = metrics.corpus_eval(preds, golds, _eval_config(args))
    _write(metrics.report_tsv(report), args.out)
    return 0


def cmd_agree(args) -> int:
    pipeline.check_line_counts(args.inputs)
    fmt = pipeline.FORMATS[args.input_format]
    models = [pipeline.read_trees(p, fmt) for p in args.inputs]
    matrix = metrics.agreement_matrix(models, _eval_config(args))
    names = args.names.split(",") if args.names else [f"m{i}" for i in range(1, len(models) + 1)]
    if len(names) != len(models):
        raise SystemExit(f"--names lists {len(names)} names for {len(models)} inputs")
    if args.tsv:
        lines = ["\t" + "\t".join(names)]
        lines += [n + "\t" + "\t".join(metrics.fmt_score(x) for x in row) for n, row in zip(names, matrix)]
        _write("\n".join(lines) + "\n", args.tsv)
    width = max(8, *(len(n) for n in names))
    print(" " * width + "".join(f"{n:>{width + 1}}" for n in names))
    for n, row in zip(names, matrix):
        print(f"{n:>{width}}" + "".join(f"{_pct(x):>{width + 1}}" for x in row))
    return 0


def cmd_by_length(args) -> int:
    preds, golds = pipeline.read_paired(args.pred, args.gold, args.pred_format, args.gold_format)
    cfg = _eval_config(args)
    rows = metrics.f1_by_length(preds, golds, cfg)
    _write(metrics.breakdown_tsv(rows, "bucket"), args.out)
    return 0


def cmd_by_label(args) -> int:
    preds, golds = pipeline.read_paired(args.pred, args.gold, args.pred_format, args.gold_format)
    labels = args.labels.split(",")
    table = metrics.recall_by_label(preds, golds, _eval_config(args), labels)
    rows = [(label, count, recall) for label, (count, recall) in table.items()]
    _write(metrics.breakdown_tsv(rows, "label"), args.out)
    return 0


def cmd_enumerate(args) -> int:
    for tree in ensemble.enumerate_binary_trees(args.n, cap=args.cap):
        print(render_bracketed(tree))
    return 0


# ---------------------------------------------------------------------------


def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--punct", default=PUNCT_HELP,
                   help="space-separated punctuation tokens removed before scoring")
    p.add_argument("--min-gold", type=int, default=1,
                   help="skip sentences whose gold tree has fewer non-trivial spans than this")


def _add_gold_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gold-format", choices=sorted(pipeline.FORMATS), default="auto",
                   help="how to read gold trees")


def _add_run_flags(p: argparse.ArgumentParser, teachers: bool) -> None:
    if teachers:
        p.add_argument("--teachers", nargs="+", required=True, metavar="FILE",
                       help="one bracketed-tree file per teacher, line-aligned")
        p.add_argument("--teacher-format", choices=sorted(pipeline.FORMATS), default="unlabeled",
                       help="how to read teacher trees")
        p.add_argument("--strip-punct-pre", action="store_true",
                       help="remove punctuation from the teacher trees before ensembling")
        p.add_argument("--gold", default=None, help="gold trees; adds an F1 report")
    else:
        p.add_argument("--gold", required=True, help="gold trees")
    p.add_argument("--out", required=True, help="output tree file")
    p.add_argument("--report", default=None, help="write the per-sentence F1 TSV here")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    _add_gold_format(p)
    _add_eval_flags(p)


def _add_paired_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pred", required=True, help="predicted trees")
    p.add_argument("--gold", required=True, help="gold trees")
    p.add_argument("--pred-format", choices=sorted(pipeline.FORMATS), default="unlabeled",
                   help="how to read predicted trees")
    p.add_argument("--out", default=None, help="TSV output path (default: stdout)")
    _add_gold_format(p)
    _add_eval_flags(p)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="treeavg", description=__doc__, formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ensemble", help="average tree of several parsers", formatter_class=fmt)
    _add_run_flags(p, teachers=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("mbr-select", help="pick the lowest-risk teacher tree", formatter_class=fmt)
    _add_run_flags(p, teachers=True)
    p.set_defaults(func=cmd_mbr_select)

    p = sub.add_parser("eval", help="unlabeled F1 of predictions against gold", formatter_class=fmt)
    _add_paired_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("agree", help="pairwise F1 matrix between parsers", formatter_class=fmt)
    p.add_argument("--inputs", nargs="+", required=True, metavar="FILE")
    p.add_argument("--input-format", choices=sorted(pipeline.FORMATS), default="unlabeled")
    p.add_argument("--names", default=None, help="comma-separated row/column names")
    p.add_argument("--tsv", default=None, help="also write raw fractions as TSV to this path")
    _add_eval_flags(p)
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("oracle", help="best binary tree for each gold tree", formatter_class=fmt)
    _add_run_flags(p, teachers=False)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("baseline", help="left- or right-branching trees", formatter_class=fmt)
    p.add_argument("--direction", choices=("left", "right"), default="right")
    _add_run_flags(p, teachers=False)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("by-length", help="mean F1 per sentence-length bucket", formatter_class=fmt)
    _add_paired_flags(p)
    p.add_argument("--buckets", default=BUCKETS_HELP,
                   help="comma-separated length ranges, e.g. 1-10,11-20,21+")
    p.set_defaults(func=cmd_by_length)

    p = sub.add_parser("by-label", help="gold-span recall per constituent label", formatter_class=fmt)
    _add_paired_flags(p)
    p.add_argument("--labels", default=",".join(DEFAULT_LABELS), help="comma-separated labels")
    p.set_defaults(func=cmd_by_label)

    p = sub.add_parser("enumerate", help="print every binary bracketing of N tokens", formatter_class=fmt)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cap", type=int, default=ensemble.ENUMERATION_CAP, help="largest N allowed")
    p.set_defaults(func=cmd_enumerate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (pipeline.CorpusError, ValueError, OSError) as exc:
        # TreeFormatError and TokenMismatchError are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
