"""Command-line entry point: ``rsabl {reduct,rules,abl,synth}``.

Exit codes: 0 on success, 2 on usage or data errors, 1 when an internal
invariant fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .abduction import LabeledBatch
from .errors import ConfigError, RsablError
from .loop import DEFAULT_EPOCHS, DEFAULT_THETA, AblConfig, predict_labels, run_abl, train_builtin
from .rough import exhaustive_min_reduct, greedy_reduct
from .rules import DEFAULT_CER_THRESHOLD, KnowledgeBase, format_rules, generate_rules, load_kb, save_kb
from .synth import make_synthetic, split_indices, subset
from .table import format_csv, load_rows, load_table, save_table

log = logging.getLogger("rsabl")


def _ratio(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a ratio: {text!r}") from None
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"{text} is outside [0, 1]")
    return value


def fmt(value: Fraction | float | None) -> float | None:
    """Decimal rendering used in every report."""
    return None if value is None else round(float(value), 6)


@dataclass(frozen=True)
class ExperimentConfig:
    decision: str
    out: Path
    labeled: Path | None = None
    unlabeled: Path | None = None
    test: Path | None = None
    table: Path | None = None
    label_fraction: float | None = None
    kb: Path | None = None
    epochs: int = DEFAULT_EPOCHS
    theta: float = DEFAULT_THETA
    seed: int = 0
    cer_threshold: Fraction = DEFAULT_CER_THRESHOLD
    min_cer: Fraction | None = None
    negative: bool = True
    min_support: int = 1

    def __post_init__(self) -> None:
        if self.table is not None:
            if self.labeled is not None or self.unlabeled is not None:
                raise ConfigError("give either --table (auto split) or --labeled/--unlabeled, not both")
            if self.label_fraction is None:
                raise ConfigError("--table needs --label-fraction")
        elif self.labeled is None:
            raise ConfigError("give --labeled or --table")
        if self.label_fraction is not None and not 0 < self.label_fraction <= 1:
            raise ConfigError("--label-fraction must lie in (0, 1]")
        if self.epochs < 0:
            raise ConfigError("--epochs must be >= 0")

    def abl_config(self) -> AblConfig:
        return AblConfig(
            epochs=self.epochs,
            theta=self.theta,
            seed=self.seed,
            cer_threshold=self.cer_threshold,
            min_cer=self.min_cer,
            negative=self.negative,
            min_support=self.min_support,
        )


def cmd_reduct(args: argparse.Namespace) -> int:
    table = load_table(args.table, args.decision)
    result = exhaustive_min_reduct(table) if args.method == "exhaustive" else greedy_reduct(table)
    print(f"reduct: {','.join(result.attrs)}")
    print(f"size: {len(result.attrs)}")
    print(f"method: {result.method}")
    print(f"gamma_full: {fmt(result.gamma_full)}")
    print(f"gamma_reduct: {fmt(result.gamma_reduct)}")
    return 0


def cmd_rules(args: argparse.Namespace) -> int:
    table = load_table(args.table, args.decision)
    min_cer = DEFAULT_CER_THRESHOLD if args.min_cer is None else args.min_cer
    rules = generate_rules(table, negative=args.negative, min_cer=min_cer, min_support=args.min_support)
    text = format_rules(rules, metadata=args.metadata, sort=True)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _experiment_data(cfg: ExperimentConfig):
    """Load (or split) the labeled, unlabeled and test data under one shared schema."""
    if cfg.table is not None:
        full = load_table(cfg.table, cfg.decision)
        split = split_indices(len(full), cfg.label_fraction, cfg.seed)
        labeled = subset(full, split.labeled)
        unlabeled = [full.rows[i] for i in split.unlabeled]
        test = subset(full, split.test) if split.test else None
        return full.schema, LabeledBatch.from_table(labeled), unlabeled, test and LabeledBatch.from_table(test)
    labeled = load_table(cfg.labeled, cfg.decision)
    schema = labeled.schema
    test = None
    if cfg.test is not None:
        test = load_table(cfg.test, cfg.decision)
        schema = schema.merged(test.schema)
    unlabeled = load_rows(cfg.unlabeled, schema.condition_attrs) if cfg.unlabeled is not None else []
    schema = schema.extended(unlabeled)
    rebased = LabeledBatch(schema, labeled.rows, labeled.decisions)
    test_batch = LabeledBatch(schema, test.rows, test.decisions) if test is not None else None
    return schema, rebased, unlabeled, test_batch


def cmd_abl(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig(
        decision=args.decision,
        out=Path(args.out),
        labeled=args.labeled,
        unlabeled=args.unlabeled,
        test=args.test,
        table=args.table,
        label_fraction=args.label_fraction,
        kb=args.kb,
        epochs=args.epochs,
        theta=args.theta,
        seed=args.seed,
        cer_threshold=args.cer_threshold,
        min_cer=args.min_cer,
        negative=args.negative,
        min_support=args.min_support,
    )
    schema, labeled, unlabeled, test = _experiment_data(cfg)
    kb = load_kb(cfg.kb, schema.decision_attr) if cfg.kb is not None else KnowledgeBase()
    result = run_abl(labeled, unlabeled, kb, cfg.abl_config(), test=test)

    baseline = train_builtin(labeled, cfg.seed)
    top1_baseline = None
    if test is not None and len(test):
        hits = sum(p == y for p, y in zip(predict_labels(baseline, test.rows), test.labels))
        top1_baseline = hits / len(test)

    cfg.out.mkdir(parents=True, exist_ok=True)
    with open(cfg.out / "metrics.jsonl", "w", encoding="utf-8") as fh:
        for record in result.history:
            fh.write(json.dumps(record.as_record(), sort_keys=True) + "\n")
    save_kb(result.kb, cfg.out / "kb.rules")
    summary = {
        "top1_final": fmt(result.history[-1].top1),
        "top1_baseline": fmt(top1_baseline),
        "rule_count_final": len(result.kb),
        "epochs_run": result.history[-1].epoch,
    }
    (cfg.out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    table = make_synthetic(args.classes, args.attrs, args.rows, args.noise, args.seed)
    split = split_indices(len(table), args.label_fraction, args.seed, args.test_fraction)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_table(table, out / "full.csv")
    save_table(subset(table, split.labeled), out / "labeled.csv")
    (out / "unlabeled.csv").write_text(
        format_csv(table.condition_attrs, (table.rows[i] for i in split.unlabeled)), encoding="utf-8"
    )
    if split.test:
        save_table(subset(table, split.test), out / "test.csv")
    print(
        f"wrote {len(table)} rows ({len(split.labeled)} labeled, {len(split.unlabeled)} unlabeled, "
        f"{len(split.test)} test) to {out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsabl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduct", help="attribute reduct of a decision table")
    p.add_argument("--table", required=True)
    p.add_argument("--decision", required=True)
    p.add_argument("--method", choices=("greedy", "exhaustive"), default="greedy")
    p.set_defaults(func=cmd_reduct)

    p = sub.add_parser("rules", help="induce rules from a decision table")
    p.add_argument("--table", required=True)
    p.add_argument("--decision", required=True)
    p.add_argument("--negative", action="store_true", help="also induce negative rules")
    p.add_argument("--min-cer", type=_ratio, default=None)
    p.add_argument("--min-support", type=int, default=1)
    p.add_argument("--metadata", action="store_true", help="append certainty/support comments")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rules)

    p = sub.add_parser("abl", help="run the abductive training loop")
    p.add_argument("--table", type=Path, default=None, help="single table, split with --label-fraction")
    p.add_argument("--label-fraction", type=float, default=None)
    p.add_argument("--labeled", type=Path, default=None)
    p.add_argument("--unlabeled", type=Path, default=None)
    p.add_argument("--test", type=Path, default=None)
    p.add_argument("--decision", required=True)
    p.add_argument("--kb", type=Path, default=None)
    p.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    p.add_argument("--theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cer-threshold", type=_ratio, default=DEFAULT_CER_THRESHOLD)
    p.add_argument("--min-cer", type=_ratio, default=None)
    p.add_argument("--min-support", type=int, default=1)
    p.add_argument("--negative", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_abl)

    p = sub.add_parser("synth", help="write a synthetic signature dataset")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--attrs", type=int, default=11)
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--label-fraction", type=float, default=0.1)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except RsablError as exc:
        print(f"rsabl {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"rsabl {args.command}: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
