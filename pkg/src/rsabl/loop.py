"""The rough-set abductive training loop: classifier, abduction and rule processing in turn.

Each epoch predicts pseudo-labels for the unlabeled rows, revises them
against the current knowledge base, retrains the classifier on labeled plus
revised rows and runs the rule processor on the same rows.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
from typing import Callable, NamedTuple, Protocol, Sequence

import numpy as np

from .abduction import LabeledBatch, abduce, consistency_score, violation_count
from .errors import ConfigError, EmptyBatch, SchemaError
from .rules import KnowledgeBase, correct_rules, generate_rules, merge_kb, reduce_kb
from .table import DecisionTable, Schema

log = logging.getLogger(__name__)

DEFAULT_EPOCHS = 15
DEFAULT_THETA = 0.95


class Model(Protocol):
    def predict(self, rows: Sequence[Sequence[str]]) -> list[dict[str, float]]: ...


Learner = Callable[[LabeledBatch, int], Model]


class FrequencyModel:
    """Per-class attribute-value frequencies with add-one smoothing.

    A row scores each class by the product of its smoothed value frequencies
    (no class prior); classes absent from training score 0.  Missing values
    are skipped.
    """

    def __init__(self, schema: Schema, log_freq: list[dict[str, np.ndarray]], seen: np.ndarray):
        self.schema = schema
        self.labels = schema.labels
        self._log_freq = log_freq
        self._seen = seen

    def log_scores(self, rows: Sequence[Sequence[str]]) -> np.ndarray:
        n, k = len(rows), len(self.labels)
        out = np.zeros((n, k))
        out[:, ~self._seen] = -np.inf
        if not n:
            return out
        arr = np.empty((n, len(self.schema.condition_attrs)), dtype=object)
        arr[:] = [tuple(r) for r in rows]
        for j, table in enumerate(self._log_freq):
            col = arr[:, j]
            for value, logp in table.items():
                hit = col == value
                if hit.any():
                    out[hit] += logp
        return out

    def predict_proba(self, rows: Sequence[Sequence[str]]) -> np.ndarray:
        ls = self.log_scores(rows)
        if not len(ls):
            return ls
        ls = ls - ls.max(axis=1, keepdims=True)
        p = np.exp(ls)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, rows: Sequence[Sequence[str]]) -> list[dict[str, float]]:
        return [dict(zip(self.labels, map(float, p))) for p in self.predict_proba(rows)]

    def predict_labels(self, rows: Sequence[Sequence[str]]) -> list[str]:
        ls = self.log_scores(rows)
        return [self.labels[i] for i in ls.argmax(axis=1)] if len(ls) else []


def train_builtin(batch: LabeledBatch, seed: int = 0) -> FrequencyModel:
    """Fit a :class:`FrequencyModel`; deterministic, so ``seed`` is accepted but unused."""
    if not len(batch):
        raise EmptyBatch("cannot train on an empty batch")
    schema = batch.schema
    labels = schema.labels
    y = np.array([labels.index(v) for v in batch.labels])
    counts = np.bincount(y, minlength=len(labels)).astype(float)
    arr = batch.array
    log_freq = []
    for j, a in enumerate(schema.condition_attrs):
        domain = sorted(schema.value_domains[a])
        col = arr[:, j]
        table = {}
        for v in domain:
            hits = np.bincount(y[col == v], minlength=len(labels))
            table[v] = np.log((hits + 1.0) / (counts + len(domain)))
        log_freq.append(table)
    return FrequencyModel(schema, log_freq, counts > 0)


def predict_labels(model: Model, rows: Sequence[Sequence[str]]) -> list[str]:
    """Arg-max label per row; ties go to the lexicographically smaller label."""
    if hasattr(model, "predict_labels"):
        return model.predict_labels(rows)
    return [min(s, key=lambda y, s=s: (-s[y], y)) for s in model.predict(rows)]


@dataclass(frozen=True)
class AblConfig:
    epochs: int = DEFAULT_EPOCHS
    theta: float = DEFAULT_THETA
    seed: int = 0
    cer_threshold: Fraction = Fraction(4, 5)
    min_cer: Fraction | None = None
    negative: bool = True
    min_support: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.epochs, int) or self.epochs < 0:
            raise ConfigError(f"epochs must be a non-negative integer, got {self.epochs!r}")
        if not 0 <= self.theta <= 1:
            raise ConfigError(f"theta must lie in [0, 1], got {self.theta}")
        object.__setattr__(self, "cer_threshold", Fraction(self.cer_threshold))
        if not 0 <= self.cer_threshold <= 1:
            raise ConfigError("cer_threshold must lie in [0, 1]")
        if self.min_cer is not None:
            object.__setattr__(self, "min_cer", Fraction(self.min_cer))
            if not 0 <= self.min_cer <= 1:
                raise ConfigError("min_cer must lie in [0, 1]")


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    top1: float | None
    eq6_con_labeled: float
    eq6_con_revised: float | None
    eq6_notcon: float
    rule_count: int
    theta_score: float
    violation_count: int
    label_changes: int | None

    @property
    def objective(self) -> float:
        """Labeled consistency + revised consistency - normalized KB inconsistency."""
        return self.eq6_con_labeled + (self.eq6_con_revised or 0.0) - self.eq6_notcon

    def as_record(self) -> dict:
        return asdict(self)


class AblResult(NamedTuple):
    model: Model
    kb: KnowledgeBase
    history: list[EpochMetrics]


def rule_processor(
    batch: LabeledBatch,
    kb: KnowledgeBase,
    schema: Schema,
    min_cer: Fraction | None = None,
    negative: bool = True,
    min_support: int = 1,
) -> KnowledgeBase:
    """Correct, reduce, then enrich ``kb`` from the rows of ``batch``.

    Generated rules must also clear ``kb.cer_threshold``; a looser ``min_cer``
    would only emit rules the next correction pass deletes.
    """
    if not len(batch):
        raise EmptyBatch("the rule processor needs at least one row")
    if batch.schema != schema:
        raise SchemaError("batch schema does not match the table schema")
    table = DecisionTable(schema, batch.rows, batch.labels)
    kb = correct_rules(table, kb)
    kb = reduce_kb(table, kb)
    emit_at = kb.cer_threshold if min_cer is None else max(Fraction(min_cer), kb.cer_threshold)
    return merge_kb(kb, generate_rules(table, negative=negative, min_cer=emit_at, min_support=min_support))


def _violation_rate(violations: int, rows: int, rules: int) -> float:
    return violations / (rows * max(1, rules)) if rows else 0.0


def stopping_score(
    labeled: LabeledBatch,
    unlabeled: Sequence[Sequence[str]],
    model: Model,
    kb: KnowledgeBase,
) -> float:
    """Mean of labeled accuracy and one minus the normalized KB violation rate on unlabeled rows."""
    acc = consistency_score(predict_labels(model, labeled.rows), labeled.labels)
    rate = 0.0
    if len(unlabeled):
        pseudo = LabeledBatch(labeled.schema, unlabeled, predict_labels(model, unlabeled), "pseudo")
        rate = _violation_rate(violation_count(pseudo, kb), len(unlabeled), len(kb))
    return (acc + 1.0 - rate) / 2


def _accuracy(model: Model, test: LabeledBatch | None) -> float | None:
    if test is None or not len(test):
        return None
    return consistency_score(predict_labels(model, test.rows), test.labels)


def run_abl(
    labeled: LabeledBatch,
    unlabeled: Sequence[Sequence[str]],
    kb: KnowledgeBase,
    config: AblConfig = AblConfig(),
    *,
    learner: Learner = train_builtin,
    test: LabeledBatch | None = None,
) -> AblResult:
    """Train a classifier and a knowledge base jointly from labeled and unlabeled rows.

    Returns the final model, the final knowledge base and one
    :class:`EpochMetrics` record per completed epoch (epoch 0 is the
    supervised start).  The loop ends after ``config.epochs`` epochs or as
    soon as the stopping score exceeds ``config.theta``.
    """
    if not len(labeled):
        raise EmptyBatch("run_abl needs labeled data")
    schema = labeled.schema
    unlabeled = tuple(tuple(r) for r in unlabeled)
    for row in unlabeled:
        schema.check_row(row)
    if test is not None and test.schema != schema:
        raise SchemaError("test batch schema differs from the labeled schema")
    kb = KnowledgeBase(kb.rules, config.cer_threshold, kb.version)

    def process(batch: LabeledBatch, current: KnowledgeBase) -> KnowledgeBase:
        return rule_processor(batch, current, schema, config.min_cer, config.negative, config.min_support)

    def observe(epoch: int, model: Model, kb: KnowledgeBase, changes: int | None):
        pseudo_labels = predict_labels(model, unlabeled)
        pseudo = LabeledBatch(schema, unlabeled, pseudo_labels, "pseudo", _validated=True)
        revised = abduce(pseudo, kb, model.predict(unlabeled)) if unlabeled else pseudo.relabel((), "revised")
        violations = violation_count(pseudo, kb)
        record = EpochMetrics(
            epoch=epoch,
            top1=_accuracy(model, test),
            eq6_con_labeled=consistency_score(predict_labels(model, labeled.rows), labeled.labels),
            eq6_con_revised=consistency_score(revised.labels, pseudo_labels) if unlabeled else None,
            eq6_notcon=_violation_rate(violations, len(unlabeled), len(kb)),
            rule_count=len(kb),
            theta_score=stopping_score(labeled, unlabeled, model, kb),
            violation_count=violations,
            label_changes=changes,
        )
        log.info("epoch %d: %s", epoch, record)
        return record, revised

    model = learner(labeled, config.seed)
    kb = process(labeled, kb)
    record, revised = observe(0, model, kb, None)
    history = [record]
    previous: LabeledBatch | None = None
    trained_on = labeled.labels
    for epoch in range(1, config.epochs + 1):
        changes = None
        if previous is not None:
            changes = sum(a != b for a, b in zip(previous.labels, revised.labels))
        train = labeled.concat(revised)
        previous = revised
        if train.labels == trained_on:
            # Same rows and labels as last epoch: the learner is deterministic and
            # the rule processor is idempotent, so model and KB cannot change.
            record = replace(record, epoch=epoch, label_changes=changes)
        else:
            model = learner(train, config.seed)
            kb = process(train, kb)
            trained_on = train.labels
            record, revised = observe(epoch, model, kb, changes)
        history.append(record)
        if record.theta_score > config.theta:
            log.info("stopping at epoch %d: score %.4f > theta %.4f", epoch, record.theta_score, config.theta)
            break
    return AblResult(model, kb, history)
