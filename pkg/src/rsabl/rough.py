"""Classical rough-set operators over a :class:`~rsabl.table.DecisionTable`.

Ratios are returned as :class:`fractions.Fraction` so that comparisons such
as ``gamma(P) == gamma(C)`` are exact.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal

import numpy as np

from .errors import AttributeAlreadyInBase, CapExceeded, UnknownAttribute, UnknownObject
from .table import DecisionTable, block_ids

DEFAULT_EXHAUSTIVE_CAP = 16
CAP_ENV_VAR = "RSABL_EXHAUSTIVE_CAP"


@dataclass(frozen=True)
class RegionReport:
    pos: frozenset[int]
    neg: frozenset[int]
    bnd: frozenset[int]
    target: frozenset[int]
    attrs: tuple[str, ...]


@dataclass(frozen=True)
class ReductResult:
    attrs: tuple[str, ...]
    method: Literal["greedy", "exhaustive"]
    gamma_full: Fraction
    gamma_reduct: Fraction


def _attrs(table: DecisionTable, attrs: Iterable[str], *, allow_decision: bool = False) -> tuple[str, ...]:
    attrs = tuple(attrs)
    allowed = set(table.condition_attrs)
    if allow_decision:
        allowed.add(table.decision_attr)
    for a in attrs:
        if a not in allowed:
            raise UnknownAttribute(f"unknown condition attribute {a!r}")
    return attrs


def _mask(table: DecisionTable, objects: Iterable[int]) -> np.ndarray:
    m = np.zeros(len(table), dtype=bool)
    idx = list(objects)
    if idx:
        m[idx] = True
    return m


def _as_set(mask: np.ndarray) -> frozenset[int]:
    return frozenset(np.flatnonzero(mask).tolist())


def lower_mask(ids: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Objects whose block lies inside ``target``."""
    size = np.bincount(ids)
    inside = np.bincount(ids, weights=target, minlength=len(size))
    return (inside == size)[ids]


def upper_mask(ids: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Objects whose block meets ``target``."""
    inside = np.bincount(ids, weights=target)
    return (inside > 0)[ids]


def positive_mask(ids: np.ndarray, decision_codes: np.ndarray) -> np.ndarray:
    """Objects in decision-pure blocks of the partition ``ids``."""
    width = int(decision_codes.max()) + 1
    pairs = np.unique(ids * width + decision_codes)
    distinct = np.bincount(pairs // width, minlength=int(ids.max()) + 1)
    return (distinct == 1)[ids]


def lower_approx(table: DecisionTable, attrs: Iterable[str], target: Iterable[int]) -> frozenset[int]:
    """Union of the ``attrs``-blocks contained in ``target``."""
    ids = block_ids(table, _attrs(table, attrs, allow_decision=True))
    return _as_set(lower_mask(ids, _mask(table, target)))


def upper_approx(table: DecisionTable, attrs: Iterable[str], target: Iterable[int]) -> frozenset[int]:
    """Union of the ``attrs``-blocks that intersect ``target``."""
    ids = block_ids(table, _attrs(table, attrs, allow_decision=True))
    return _as_set(upper_mask(ids, _mask(table, target)))


def regions(table: DecisionTable, attrs: Iterable[str], target: Iterable[int]) -> RegionReport:
    attrs = _attrs(table, attrs, allow_decision=True)
    t = _mask(table, target)
    ids = block_ids(table, attrs)
    low = lower_mask(ids, t)
    up = upper_mask(ids, t)
    return RegionReport(
        pos=_as_set(low),
        neg=_as_set(~up),
        bnd=_as_set(up & ~low),
        target=_as_set(t),
        attrs=attrs,
    )


def _pos_mask(table: DecisionTable, attrs: tuple[str, ...]) -> np.ndarray:
    # Empty attribute sets have an empty positive region by convention (gamma(()) == 0).
    if not attrs:
        return np.zeros(len(table), dtype=bool)
    return positive_mask(block_ids(table, attrs), table.codes([table.decision_attr])[:, 0])


def decision_positive_region(table: DecisionTable, attrs: Iterable[str]) -> frozenset[int]:
    """POS_attrs(D): union of the lower approximations of all decision classes."""
    return _as_set(_pos_mask(table, _attrs(table, attrs)))


def gamma(table: DecisionTable, attrs: Iterable[str]) -> Fraction:
    """Quality of classification |POS_attrs(D)| / |U|; the empty set scores 0."""
    pos = _pos_mask(table, _attrs(table, attrs))
    return Fraction(int(pos.sum()), len(table))


def significance(table: DecisionTable, a: str, base: Iterable[str]) -> Fraction:
    """Gain in gamma from adding ``a`` to ``base``."""
    base = _attrs(table, base)
    _attrs(table, [a])
    if a in base:
        raise AttributeAlreadyInBase(f"{a!r} is already in the base set")
    return gamma(table, (*base, a)) - gamma(table, base)


def is_reduct(table: DecisionTable, attrs: Iterable[str]) -> bool:
    """True iff ``attrs`` keeps POS_C(D) and no member can be dropped.

    A single attribute cannot be reduced further (reducts are non-empty), so
    for singletons only the preservation test applies.
    """
    attrs = _attrs(table, attrs)
    if not attrs or len(set(attrs)) != len(attrs):
        return False
    full = _pos_mask(table, table.condition_attrs)
    if not np.array_equal(_pos_mask(table, attrs), full):
        return False
    if len(attrs) == 1:
        return True
    for a in attrs:
        rest = tuple(b for b in attrs if b != a)
        if np.array_equal(_pos_mask(table, rest), full):
            return False
    return True


def greedy_reduct(table: DecisionTable) -> ReductResult:
    """Forward selection by maximum significance, then a backward pruning pass.

    Ties are broken by attribute name.  The pruning pass removes any
    attribute whose removal keeps the positive region, so the result is a
    reduct rather than merely a superset of one.
    """
    names = sorted(table.condition_attrs)
    full = _pos_mask(table, table.condition_attrs)
    target = int(full.sum())
    chosen: list[str] = []
    current = np.zeros(len(table), dtype=bool)
    while not chosen or not np.array_equal(current, full):
        best, best_size, best_mask = None, -1, None
        for a in names:
            if a in chosen:
                continue
            m = _pos_mask(table, (*chosen, a))
            size = int(m.sum())
            if size > best_size:
                best, best_size, best_mask = a, size, m
        if best is None:
            break
        chosen.append(best)
        current = best_mask
    for a in sorted(chosen):
        rest = tuple(b for b in chosen if b != a)
        if rest and np.array_equal(_pos_mask(table, rest), full):
            chosen = list(rest)
    attrs = tuple(sorted(chosen))
    g = Fraction(target, len(table))
    return ReductResult(attrs, "greedy", g, gamma(table, attrs))


def exhaustive_cap() -> int:
    raw = os.environ.get(CAP_ENV_VAR)
    if raw is None:
        return DEFAULT_EXHAUSTIVE_CAP
    try:
        return int(raw)
    except ValueError:
        raise CapExceeded(f"{CAP_ENV_VAR} must be an integer, got {raw!r}") from None


def exhaustive_min_reduct(table: DecisionTable, cap: int | None = None) -> ReductResult:
    """Smallest attribute subset preserving POS_C(D), found by enumeration.

    Subsets are tried by size, then in lexicographic order of their sorted
    attribute names.
    """
    cap = exhaustive_cap() if cap is None else cap
    m = len(table.condition_attrs)
    if m > cap:
        raise CapExceeded(f"{m} condition attributes exceed the enumeration cap of {cap}")
    names = sorted(table.condition_attrs)
    full = _pos_mask(table, table.condition_attrs)
    g = Fraction(int(full.sum()), len(table))
    for k in range(1, m + 1):
        for combo in itertools.combinations(names, k):
            if np.array_equal(_pos_mask(table, combo), full):
                return ReductResult(combo, "exhaustive", g, g)
    raise AssertionError("the full attribute set always preserves its own positive region")


def rule_certainty(table: DecisionTable, x: int, attrs: Iterable[str]) -> Fraction:
    """|[x]_attrs ∩ [x]_D| / |[x]_attrs| for the decision rule induced by ``x``."""
    attrs = _attrs(table, attrs)
    if not 0 <= x < len(table):
        raise UnknownObject(f"object {x} is outside the universe of {len(table)} objects")
    ids = block_ids(table, attrs)
    same = ids == ids[x]
    decs = table.codes([table.decision_attr])[:, 0]
    agree = same & (decs == decs[x])
    return Fraction(int(agree.sum()), int(same.sum()))
