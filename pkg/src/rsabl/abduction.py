"""Knowledge-base consistency of labels and abductive pseudo-label revision."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import LengthMismatch, SchemaError
from .rules import Descriptor, KnowledgeBase
from .table import MISSING, DecisionTable, Schema

Origin = Literal["labeled", "pseudo", "revised"]


@dataclass(frozen=True)
class LabeledBatch:
    """Attribute vectors with one label each, tagged by where the labels came from."""

    schema: Schema
    rows: tuple[tuple[str, ...], ...]
    labels: tuple[str, ...]
    origin: Origin = "labeled"
    _validated: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.rows) != len(self.labels):
            raise LengthMismatch(f"{len(self.rows)} rows but {len(self.labels)} labels")
        if not self._validated:
            for row in self.rows:
                self.schema.check_row(row)
            for label in self.labels:
                self.schema.check_label(label)

    @classmethod
    def from_table(cls, table: DecisionTable, origin: Origin = "labeled") -> "LabeledBatch":
        return cls(table.schema, table.rows, table.decisions, origin, _validated=True)

    def __len__(self) -> int:
        return len(self.rows)

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.empty((len(self.rows), len(self.schema.condition_attrs)), dtype=object)
        if self.rows:
            arr[:] = self.rows
        return arr

    def relabel(self, labels: Sequence[str], origin: Origin) -> "LabeledBatch":
        labels = tuple(labels)
        for label in labels:
            self.schema.check_label(label)
        return replace(self, labels=labels, origin=origin, _validated=True)

    def concat(self, other: "LabeledBatch") -> "LabeledBatch":
        if other.schema != self.schema:
            raise SchemaError("cannot concatenate batches with different schemas")
        return LabeledBatch(
            self.schema, self.rows + other.rows, self.labels + other.labels, self.origin, _validated=True
        )

    def to_table(self) -> DecisionTable:
        return DecisionTable(self.schema, self.rows, self.labels)


def _check_kb(schema: Schema, kb: KnowledgeBase) -> None:
    for rule in kb.rules:
        for d in rule.antecedent:
            if d.attr not in schema.condition_attrs:
                raise SchemaError(f"rule mentions attribute {d.attr!r} absent from the batch schema")
        if rule.consequent.attr != schema.decision_attr:
            raise SchemaError(f"rule concludes on {rule.consequent.attr!r}, not {schema.decision_attr!r}")


def fired(batch: LabeledBatch, kb: KnowledgeBase) -> np.ndarray:
    """Boolean matrix (rows x rules): does the rule's antecedent hold on the row?"""
    _check_kb(batch.schema, kb)
    arr = batch.array
    out = np.ones((len(batch), len(kb)), dtype=bool)
    masks: dict[Descriptor, np.ndarray] = {}
    for k, rule in enumerate(kb.rules):
        for d in rule.antecedent:
            m = masks.get(d)
            if m is None:
                col = arr[:, batch.schema.index(d.attr)]
                if d.positive:
                    m = col == d.value
                else:
                    m = (col != d.value) & (col != MISSING)
                m = masks[d] = np.asarray(m, dtype=bool)
            out[:, k] &= m
    return out


def label_violations(batch: LabeledBatch, kb: KnowledgeBase, labels: Sequence[str] | None = None) -> np.ndarray:
    """Violations each row would have under each candidate label (rows x labels)."""
    labels = batch.schema.labels if labels is None else tuple(labels)
    f = fired(batch, kb).astype(np.int64)
    # cons[k, l] = 1 when choosing label l contradicts rule k's consequent.
    cons = np.zeros((len(kb), len(labels)), dtype=np.int64)
    for k, rule in enumerate(kb.rules):
        c = rule.consequent
        for j, label in enumerate(labels):
            cons[k, j] = (label != c.value) if c.positive else (label == c.value)
    return f @ cons


def row_violations(batch: LabeledBatch, kb: KnowledgeBase) -> np.ndarray:
    labels = batch.schema.labels
    if not len(batch):
        return np.zeros(0, dtype=np.int64)
    v = label_violations(batch, kb, labels)
    idx = np.array([labels.index(y) for y in batch.labels])
    return v[np.arange(len(batch)), idx]


def violation_count(batch: LabeledBatch, kb: KnowledgeBase) -> int:
    """Number of (row, rule) pairs where the rule fires but its conclusion is false."""
    _check_kb(batch.schema, kb)
    return int(row_violations(batch, kb).sum())


def consistency_score(labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
    """Fraction of positions where the two label sequences agree."""
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(f"{len(labels_a)} vs {len(labels_b)} labels")
    if not labels_a:
        raise LengthMismatch("consistency of empty label lists is undefined")
    return sum(a == b for a, b in zip(labels_a, labels_b)) / len(labels_a)


def abduce(
    batch: LabeledBatch,
    kb: KnowledgeBase,
    scores: Sequence[Mapping[str, float]],
) -> LabeledBatch:
    """Revise each pseudo-label that contradicts the knowledge base.

    A row keeps its label when no fired rule is violated.  Otherwise it takes
    the label with the fewest violations; ties go to the higher classifier
    score, then to the lexicographically smaller label.
    """
    if len(scores) != len(batch):
        raise LengthMismatch(f"{len(scores)} score maps for {len(batch)} rows")
    labels = batch.schema.labels
    if not len(batch) or not len(kb):
        _check_kb(batch.schema, kb)
        return batch.relabel(batch.labels, "revised")
    viol = label_violations(batch, kb, labels)
    current = row_violations(batch, kb)
    revised = list(batch.labels)
    for i in np.flatnonzero(current > 0).tolist():
        s = scores[i]
        missing = [y for y in labels if y not in s]
        if missing:
            raise SchemaError(f"row {i}: no classifier score for labels {missing}")
        revised[i] = min(labels, key=lambda y, i=i: (viol[i, labels.index(y)], -s[y], y))
    return batch.relabel(revised, "revised")
