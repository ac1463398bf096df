"""Decision information systems and indiscernibility partitions.

A :class:`DecisionTable` holds a finite universe of objects (dense row
indices ``0..n-1``), an ordered list of condition attributes, one decision
attribute and the value domain of every attribute.  Cell values are opaque
string tokens; ``"*"`` marks a missing condition value.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, ParseError, SchemaError, UnknownAttribute

MISSING = "*"


@dataclass(frozen=True)
class Schema:
    """Attribute names plus the value domain of each attribute.

    ``value_domains`` never contains :data:`MISSING`; a domain may be a
    superset of the values actually observed.
    """

    condition_attrs: tuple[str, ...]
    decision_attr: str
    value_domains: Mapping[str, frozenset[str]]

    def __post_init__(self) -> None:
        if not self.condition_attrs:
            raise SchemaError("at least one condition attribute is required")
        names = (*self.condition_attrs, self.decision_attr)
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate attribute names in {names}")
        missing = [a for a in names if a not in self.value_domains]
        if missing:
            raise SchemaError(f"no value domain for {missing}")
        for a in names:
            if MISSING in self.value_domains[a]:
                raise SchemaError(f"value domain of {a!r} contains the missing marker")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(sorted(self.value_domains[self.decision_attr]))

    def index(self, attr: str) -> int:
        try:
            return self.condition_attrs.index(attr)
        except ValueError:
            raise UnknownAttribute(f"unknown condition attribute {attr!r}") from None

    def check_row(self, row: Sequence[str]) -> None:
        if len(row) != len(self.condition_attrs):
            raise SchemaError(
                f"row has {len(row)} values, schema has {len(self.condition_attrs)} condition attributes"
            )
        for a, v in zip(self.condition_attrs, row):
            if v != MISSING and v not in self.value_domains[a]:
                raise SchemaError(f"value {v!r} is not in the domain of {a!r}")

    def check_label(self, label: str) -> None:
        if label not in self.value_domains[self.decision_attr]:
            raise SchemaError(f"label {label!r} is not in the decision domain")

    def extended(self, rows: Iterable[Sequence[str]]) -> "Schema":
        """Same attributes, condition domains grown by the values seen in ``rows``."""
        domains = {a: set(d) for a, d in self.value_domains.items()}
        for row in rows:
            if len(row) != len(self.condition_attrs):
                raise SchemaError(f"row has {len(row)} values, expected {len(self.condition_attrs)}")
            for a, v in zip(self.condition_attrs, row):
                if v != MISSING:
                    domains[a].add(v)
        return Schema(self.condition_attrs, self.decision_attr, {a: frozenset(d) for a, d in domains.items()})

    def merged(self, other: "Schema") -> "Schema":
        """Same attributes, domains unioned."""
        if (self.condition_attrs, self.decision_attr) != (other.condition_attrs, other.decision_attr):
            raise SchemaError("schemas disagree on attribute names")
        domains = {a: self.value_domains[a] | other.value_domains[a] for a in self.value_domains}
        return Schema(self.condition_attrs, self.decision_attr, domains)


@dataclass(frozen=True, eq=False)
class DecisionTable:
    """An immutable decision information system.

    Rows are the condition-attribute values of each object in schema order;
    ``decisions`` holds the decision value of each object.
    """

    schema: Schema
    rows: tuple[tuple[str, ...], ...]
    decisions: tuple[str, ...]
    _codes: np.ndarray = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.rows:
            raise DomainError("a decision table needs at least one object")
        if len(self.rows) != len(self.decisions):
            raise SchemaError("rows and decisions differ in length")
        for row, d in zip(self.rows, self.decisions):
            self.schema.check_row(row)
            if d == MISSING:
                raise DomainError("decision values may not be missing")
            self.schema.check_label(d)
        columns = list(zip(*self.rows)) + [self.decisions]
        codes = np.empty((len(self.rows), len(columns)), dtype=np.int64)
        for j, col in enumerate(columns):
            _, codes[:, j] = np.unique(np.asarray(col, dtype=object), return_inverse=True)
        codes.setflags(write=False)
        object.__setattr__(self, "_codes", codes)
        object.__setattr__(self, "_cache", {})

    @classmethod
    def from_rows(
        cls,
        condition_attrs: Sequence[str],
        decision_attr: str,
        rows: Iterable[Sequence[str]],
        decisions: Iterable[str],
        value_domains: Mapping[str, Iterable[str]] | None = None,
    ) -> "DecisionTable":
        """Build a table, inferring any domain not supplied from the observed values."""
        rows = tuple(tuple(str(v) for v in r) for r in rows)
        decisions = tuple(str(d) for d in decisions)
        attrs = tuple(condition_attrs)
        domains: dict[str, frozenset[str]] = {}
        given = value_domains or {}
        for j, a in enumerate(attrs):
            observed = {r[j] for r in rows if j < len(r)} - {MISSING}
            domains[a] = frozenset(given.get(a, ())) | observed
        domains[decision_attr] = frozenset(given.get(decision_attr, ())) | (set(decisions) - {MISSING})
        return cls(Schema(attrs, decision_attr, domains), rows, decisions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DecisionTable):
            return NotImplemented
        return (self.schema, self.rows, self.decisions) == (other.schema, other.rows, other.decisions)

    __hash__ = None  # type: ignore[assignment]

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def condition_attrs(self) -> tuple[str, ...]:
        return self.schema.condition_attrs

    @property
    def decision_attr(self) -> str:
        return self.schema.decision_attr

    @property
    def value_domains(self) -> Mapping[str, frozenset[str]]:
        return self.schema.value_domains

    @property
    def universe(self) -> frozenset[int]:
        return frozenset(range(len(self.rows)))

    def column_index(self, attr: str) -> int:
        """Position of ``attr`` in the code matrix (decision is last)."""
        if attr == self.decision_attr:
            return len(self.condition_attrs)
        try:
            return self.condition_attrs.index(attr)
        except ValueError:
            raise UnknownAttribute(f"unknown attribute {attr!r}") from None

    def column(self, attr: str) -> tuple[str, ...]:
        j = self.column_index(attr)
        if j == len(self.condition_attrs):
            return self.decisions
        return tuple(r[j] for r in self.rows)

    def value(self, x: int, attr: str) -> str:
        j = self.column_index(attr)
        if j == len(self.condition_attrs):
            return self.decisions[x]
        return self.rows[x][j]

    def codes(self, attrs: Iterable[str]) -> np.ndarray:
        """Integer-coded columns for ``attrs``; equal codes mean equal tokens."""
        idx = [self.column_index(a) for a in attrs]
        return self._codes[:, idx]

    def decision_classes(self) -> dict[str, frozenset[int]]:
        """Objects of each observed decision value, keyed in sorted value order."""
        out: dict[str, set[int]] = {}
        for x, d in enumerate(self.decisions):
            out.setdefault(d, set()).add(x)
        return {d: frozenset(out[d]) for d in sorted(out)}


@dataclass(frozen=True)
class Partition:
    """Equivalence classes of the indiscernibility relation over ``source_attrs``."""

    blocks: tuple[tuple[int, ...], ...]
    source_attrs: tuple[str, ...]

    def block_of(self, x: int) -> tuple[int, ...]:
        for b in self.blocks:
            if x in b:
                return b
        raise KeyError(x)


def block_ids(table: DecisionTable, attrs: Iterable[str]) -> np.ndarray:
    """Block index of every object, numbered by each block's smallest member."""
    attrs = tuple(attrs)
    key = ("ids", attrs)
    cached = table._cache.get(key)
    if cached is not None:
        return cached
    codes = table.codes(attrs)
    if codes.shape[1] == 0:
        ids = np.zeros(len(table), dtype=np.int64)
    else:
        _, first, inverse = np.unique(codes, axis=0, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(len(first))
        ids = rank[inverse.reshape(-1)]
    ids.setflags(write=False)
    table._cache[key] = ids
    return ids


def refine(ids: np.ndarray, codes: np.ndarray) -> np.ndarray:
    """Intersect the partition given by ``ids`` with one coded column."""
    width = int(codes.max()) + 1 if len(codes) else 1
    _, inverse = np.unique(ids * width + codes, return_inverse=True)
    return inverse.reshape(-1)


def partition(table: DecisionTable, attrs: Iterable[str]) -> Partition:
    """Indiscernibility classes over ``attrs``, ordered by smallest member.

    Missing values are compared as ordinary tokens, so ``"*"`` agrees only
    with ``"*"``.
    """
    attrs = tuple(attrs)
    if not attrs:
        raise UnknownAttribute("partition needs at least one attribute")
    ids = block_ids(table, attrs)
    blocks: list[list[int]] = [[] for _ in range(int(ids.max()) + 1)]
    for x, b in enumerate(ids.tolist()):
        blocks[b].append(x)
    return Partition(tuple(tuple(b) for b in blocks), attrs)


# ---------------------------------------------------------------------------
# CSV persistence


def _read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ParseError(f"no such file: {path}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc})") from None
    if '"' in text:
        raise ParseError(f"{path}: quoted fields are not supported")
    reader = csv.reader(io.StringIO(text), quoting=csv.QUOTE_NONE)
    lines = [(reader.line_num, r) for r in reader if r and any(c.strip() for c in r)]
    if not lines:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in lines[0][1]]
    if len(set(header)) != len(header):
        raise SchemaError(f"{path}: duplicate column names")
    if any(not h for h in header):
        raise ParseError(f"{path}: empty column name")
    body = []
    for lineno, r in lines[1:]:
        cells = [c.strip() for c in r]
        if len(cells) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(cells)}")
        if any(not c for c in cells):
            raise ParseError(f"{path}:{lineno}: empty cell")
        body.append(cells)
    return header, body


def load_table(path: str | Path, decision_column: str) -> DecisionTable:
    """Read a CSV decision table; row order becomes object order."""
    header, body = _read_csv(path)
    if decision_column not in header:
        raise SchemaError(f"{path}: no decision column {decision_column!r}")
    if not body:
        raise ParseError(f"{path}: no data rows")
    d = header.index(decision_column)
    attrs = [h for j, h in enumerate(header) if j != d]
    if not attrs:
        raise SchemaError(f"{path}: no condition attributes")
    rows, decisions = [], []
    for lineno, cells in enumerate(body, start=2):
        if cells[d] == MISSING:
            raise DomainError(f"{path}:{lineno}: decision value is missing")
        decisions.append(cells[d])
        rows.append([c for j, c in enumerate(cells) if j != d])
    return DecisionTable.from_rows(attrs, decision_column, rows, decisions)


def load_rows(path: str | Path, condition_attrs: Sequence[str]) -> list[tuple[str, ...]]:
    """Read the condition columns of an (optionally unlabeled) CSV."""
    header, body = _read_csv(path)
    absent = [a for a in condition_attrs if a not in header]
    if absent:
        raise SchemaError(f"{path}: missing columns {absent}")
    idx = [header.index(a) for a in condition_attrs]
    return [tuple(cells[j] for j in idx) for cells in body]


def format_csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    rows = [tuple(r) for r in rows]
    tokens = [*header, *(c for r in rows for c in r)]
    bad = [t for t in tokens if "," in t or '"' in t or "\n" in t]
    if bad:
        raise DomainError(f"tokens cannot contain commas, quotes or newlines: {bad[:3]}")
    lines = [",".join(header)]
    lines.extend(",".join(r) for r in rows)
    return "\n".join(lines) + "\n"


def save_table(table: DecisionTable, path: str | Path) -> None:
    """Write ``table`` as CSV with the decision column last."""
    header = [*table.condition_attrs, table.decision_attr]
    rows = ([*r, d] for r, d in zip(table.rows, table.decisions))
    Path(path).write_text(format_csv(header, rows), encoding="utf-8")
