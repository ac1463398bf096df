"""Synthetic class-signature data and deterministic train/test splits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .table import DecisionTable

DECISION = "label"


def attr_names(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"a{j:0{width}d}" for j in range(n)]


def class_names(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"c{j:0{width}d}" for j in range(n)]


def make_synthetic(classes: int, attrs: int, rows: int, noise: float, seed: int) -> DecisionTable:
    """Binary attribute table: one distinct signature per class, each cell flipped with probability ``noise``."""
    if classes < 2:
        raise ConfigError("need at least two classes")
    if attrs < 1:
        raise ConfigError("need at least one attribute")
    if rows < 1:
        raise ConfigError("need at least one row")
    if not 0 <= noise < 0.5:
        raise ConfigError("noise must lie in [0, 0.5)")
    if attrs < 63 and classes > 2**attrs:
        raise ConfigError(f"{attrs} binary attributes cannot give {classes} distinct signatures")
    rng = np.random.default_rng(seed)
    signatures: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    while len(signatures) < classes:
        sig = tuple(int(b) for b in rng.integers(0, 2, attrs))
        if sig not in seen:
            seen.add(sig)
            signatures.append(sig)
    sig_arr = np.array(signatures)
    y = rng.integers(0, classes, rows)
    x = sig_arr[y] ^ (rng.random((rows, attrs)) < noise)
    names = class_names(classes)
    return DecisionTable.from_rows(
        attr_names(attrs),
        DECISION,
        (tuple(str(int(v)) for v in r) for r in x),
        (names[k] for k in y),
        value_domains={**{a: ("0", "1") for a in attr_names(attrs)}, DECISION: names},
    )


@dataclass(frozen=True)
class Split:
    labeled: tuple[int, ...]
    unlabeled: tuple[int, ...]
    test: tuple[int, ...]


def split_indices(n: int, label_fraction: float, seed: int, test_fraction: float = 0.2) -> Split:
    """Shuffle ``range(n)``, hold out a test share, then label a fraction of the rest."""
    if not 0 < label_fraction <= 1:
        raise ConfigError("label_fraction must lie in (0, 1]")
    if not 0 <= test_fraction < 1:
        raise ConfigError("test_fraction must lie in [0, 1)")
    order = np.random.default_rng([seed, 1]).permutation(n).tolist()
    n_test = int(round(n * test_fraction))
    pool = order[n_test:]
    n_lab = max(1, int(round(len(pool) * label_fraction)))
    if not pool:
        raise ConfigError("no rows left for training after the test split")
    return Split(tuple(sorted(pool[:n_lab])), tuple(sorted(pool[n_lab:])), tuple(sorted(order[:n_test])))


def subset(table: DecisionTable, idx) -> DecisionTable:
    return DecisionTable(table.schema, tuple(table.rows[i] for i in idx), tuple(table.decisions[i] for i in idx))
