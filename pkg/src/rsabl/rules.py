"""Descriptor rules, knowledge bases and the three rule-processing mechanisms.

A rule ``consequent <- d1 & d2 & ...`` fires on an object when every
antecedent descriptor holds.  A positive descriptor ``a=v`` holds when the
object's value of ``a`` is ``v``; a negative descriptor ``!a=v`` holds when
the value is known and differs from ``v``.  Missing values satisfy neither.

Knowledge bases are immutable snapshots: every operation returns a new
:class:`KnowledgeBase` whose ``version`` is bumped only if its rules changed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import DomainError, ParseError, SchemaError, UnknownAttribute
from .rough import lower_mask
from .table import MISSING, DecisionTable, refine

Provenance = Literal["seeded", "generated", "corrected"]
DEFAULT_CER_THRESHOLD = Fraction(4, 5)


@dataclass(frozen=True, order=True)
class Descriptor:
    attr: str
    value: str
    positive: bool = True

    def negate(self) -> "Descriptor":
        return replace(self, positive=not self.positive)

    def holds(self, value: str) -> bool:
        if self.positive:
            return value == self.value
        return value != MISSING and value != self.value


@dataclass(frozen=True)
class Rule:
    antecedent: tuple[Descriptor, ...]
    consequent: Descriptor
    certainty: Fraction = Fraction(0)
    support_count: int = 0
    provenance: Provenance = "seeded"

    def __post_init__(self) -> None:
        ante = tuple(sorted(self.antecedent))
        if not ante:
            raise DomainError("a rule needs at least one antecedent descriptor")
        attrs = [d.attr for d in ante]
        if len(set(attrs)) != len(attrs):
            raise DomainError(f"antecedent repeats an attribute: {attrs}")
        object.__setattr__(self, "antecedent", ante)
        object.__setattr__(self, "certainty", Fraction(self.certainty))

    @property
    def key(self) -> tuple[tuple[Descriptor, ...], Descriptor]:
        return self.antecedent, self.consequent


@dataclass(frozen=True)
class KnowledgeBase:
    rules: tuple[Rule, ...] = ()
    cer_threshold: Fraction = DEFAULT_CER_THRESHOLD
    version: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "cer_threshold", Fraction(self.cer_threshold))
        if not 0 <= self.cer_threshold <= 1:
            raise DomainError("cer_threshold must lie in [0, 1]")
        keys = [r.key for r in self.rules]
        if len(set(keys)) != len(keys):
            raise DomainError("knowledge base holds duplicate rules")

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def with_rules(self, rules: Iterable[Rule]) -> "KnowledgeBase":
        """Snapshot holding ``rules``; the version moves only on a real change."""
        rules = tuple(rules)
        if rules == self.rules:
            return self
        return replace(self, rules=rules, version=self.version + 1)


# ---------------------------------------------------------------------------
# Support sets and evaluation


def _bits(mask: np.ndarray) -> int:
    return int.from_bytes(np.packbits(mask, bitorder="little").tobytes(), "little")


def _support_bits(table: DecisionTable, desc: Descriptor) -> int:
    key = ("support", desc)
    cached = table._cache.get(key)
    if cached is None:
        col = np.asarray(table.column(desc.attr), dtype=object)
        if desc.positive:
            mask = col == desc.value
        else:
            mask = (col != desc.value) & (col != MISSING)
        cached = table._cache[key] = _bits(np.asarray(mask, dtype=bool))
    return cached


def _members(bits: int) -> frozenset[int]:
    out = []
    x = 0
    while bits:
        if bits & 1:
            out.append(x)
        bits >>= 1
        x += 1
    return frozenset(out)


def support_set(table: DecisionTable, desc: Descriptor) -> frozenset[int]:
    """Objects satisfying ``desc`` (``||t||`` or, for negative descriptors, ``||¬t||``)."""
    return _members(_support_bits(table, desc))


def _antecedent_bits(table: DecisionTable, antecedent: Iterable[Descriptor]) -> int:
    bits = (1 << len(table)) - 1
    for d in antecedent:
        bits &= _support_bits(table, d)
    return bits


def _check_rule(table: DecisionTable, rule: Rule) -> None:
    for d in rule.antecedent:
        if d.attr not in table.condition_attrs:
            raise UnknownAttribute(f"rule mentions unknown condition attribute {d.attr!r}")
    if rule.consequent.attr != table.decision_attr:
        raise UnknownAttribute(
            f"rule concludes on {rule.consequent.attr!r}, table decision is {table.decision_attr!r}"
        )


def evaluate_rule(table: DecisionTable, rule: Rule) -> tuple[Fraction, int]:
    """(certainty, support_count) of ``rule`` on ``table``.

    Certainty is the share of antecedent-matching objects that also satisfy
    the consequent; a rule matching nothing scores ``(0, 0)``.
    """
    _check_rule(table, rule)
    ante = _antecedent_bits(table, rule.antecedent)
    n = ante.bit_count()
    if n == 0:
        return Fraction(0), 0
    hit = (ante & _support_bits(table, rule.consequent)).bit_count()
    return Fraction(hit, n), n


def _refreshed(table: DecisionTable, rule: Rule) -> Rule:
    cer, sup = evaluate_rule(table, rule)
    if (cer, sup) == (rule.certainty, rule.support_count):
        return rule
    return replace(rule, certainty=cer, support_count=sup)


def dedupe(rules: Iterable[Rule]) -> list[Rule]:
    """Keep one rule per (antecedent, consequent), the higher-support copy, at the first slot."""
    out: list[Rule] = []
    where: dict = {}
    for r in rules:
        i = where.get(r.key)
        if i is None:
            where[r.key] = len(out)
            out.append(r)
        elif r.support_count > out[i].support_count:
            out[i] = r
    return out


# ---------------------------------------------------------------------------
# Correction, reduction, merging


def correct_rules(table: DecisionTable, kb: KnowledgeBase) -> KnowledgeBase:
    """Re-evaluate every rule and delete those below ``kb.cer_threshold``."""
    kept = []
    for rule in kb.rules:
        rule = _refreshed(table, rule)
        if rule.certainty >= kb.cer_threshold:
            kept.append(rule)
    return kb.with_rules(kept)


def reduce_rule(table: DecisionTable, rule: Rule) -> Rule:
    """Drop antecedent descriptors that do not pay for themselves.

    Descriptors are tried in sorted order; one is dropped when the shorter
    rule keeps at least the current certainty (support can only grow).
    Passes repeat until no descriptor can go, so the result is irreducible.
    """
    _check_rule(table, rule)
    key = ("reduced", rule.key)
    cached = table._cache.get(key)
    if cached is None:
        cached = table._cache[key] = _reduce_antecedent(table, rule.antecedent, rule.consequent)
    ante, hit, n = cached
    cer = Fraction(hit, n) if n else Fraction(0)
    if ante == rule.antecedent:
        if (cer, n) == (rule.certainty, rule.support_count):
            return rule
        return replace(rule, certainty=cer, support_count=n)
    prov = rule.provenance if rule.provenance == "generated" else "corrected"
    return Rule(ante, rule.consequent, cer, n, prov)


def _reduce_antecedent(
    table: DecisionTable, antecedent: tuple[Descriptor, ...], consequent: Descriptor
) -> tuple[tuple[Descriptor, ...], int, int]:
    cons = _support_bits(table, consequent)
    full = (1 << len(table)) - 1
    ante = list(antecedent)
    bits = [_support_bits(table, d) for d in ante]
    support = full
    for b in bits:
        support &= b
    hit, n = (support & cons).bit_count(), support.bit_count()
    changed = True
    while changed and len(ante) > 1:
        changed = False
        k = len(bits)
        # suffix[i] = AND of bits[i:]
        suffix = [full] * (k + 1)
        for i in range(k - 1, -1, -1):
            suffix[i] = suffix[i + 1] & bits[i]
        prefix = full
        for i in range(k):
            s = prefix & suffix[i + 1]
            h, m = (s & cons).bit_count(), s.bit_count()
            # h/m >= hit/n, support never shrinks when a descriptor goes
            if h * n >= hit * m:
                del ante[i], bits[i]
                hit, n = h, m
                changed = True
                break
            prefix &= bits[i]
    return tuple(ante), hit, n


def reduce_kb(table: DecisionTable, kb: KnowledgeBase) -> KnowledgeBase:
    return kb.with_rules(dedupe(reduce_rule(table, r) for r in kb.rules))


def merge_kb(kb: KnowledgeBase, new_rules: Iterable[Rule]) -> KnowledgeBase:
    """Append unseen rules; a duplicate replaces its twin only with strictly higher support."""
    return kb.with_rules(dedupe([*kb.rules, *new_rules]))


# ---------------------------------------------------------------------------
# Generation


@dataclass(frozen=True)
class _Feature:
    """A coded column used as a sub-concept during per-class search."""

    attr: str
    value: str | None  # None: the attribute itself; else the indicator of ``attr != value``
    codes: np.ndarray = field(compare=False, repr=False)


def _attribute_features(table: DecisionTable) -> list[_Feature]:
    return [_Feature(a, None, table.codes([a])[:, 0]) for a in sorted(table.condition_attrs)]


def _indicator_features(table: DecisionTable) -> list[_Feature]:
    """One three-valued column per (attribute, value): 1 on ``||!a=v||``, 0 on ``||a=v||``, 2 on missing."""
    feats = []
    for a in sorted(table.condition_attrs):
        for v in sorted(table.value_domains[a]):
            neg = _members_mask(table, Descriptor(a, v, False))
            pos = _members_mask(table, Descriptor(a, v, True))
            codes = np.full(len(table), 2, dtype=np.int64)
            codes[pos] = 0
            codes[neg] = 1
            feats.append(_Feature(a, v, codes))
    return feats


def _members_mask(table: DecisionTable, desc: Descriptor) -> np.ndarray:
    bits = _support_bits(table, desc)
    raw = np.frombuffer(bits.to_bytes((len(table) + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[: len(table)].astype(bool)


def _ids(features: Sequence[_Feature], n: int) -> np.ndarray:
    ids = np.zeros(n, dtype=np.int64)
    for f in features:
        ids = refine(ids, f.codes)
    return ids


def _class_reduct(features: list[_Feature], target: np.ndarray) -> list[_Feature]:
    """Grow a feature set by maximum significance w.r.t. one decision class.

    Stops once the class's lower approximation matches the one obtained from
    all features, then prunes features whose removal keeps it.  At most one
    feature per attribute is used, so antecedents never repeat an attribute.
    """
    n = len(target)
    goal = lower_mask(_ids(features, n), target)
    goal_size = int(goal.sum())
    if goal_size == 0:
        return []
    chosen: list[_Feature] = []
    ids = np.zeros(n, dtype=np.int64)
    size = 0
    while not chosen or size < goal_size:
        used = {f.attr for f in chosen}
        best = None
        for f in features:
            if f.attr in used:
                continue
            cand = refine(ids, f.codes)
            s = int(lower_mask(cand, target).sum())
            if best is None or s > best[1]:
                best = (f, s, cand)
        if best is None:
            break
        chosen.append(best[0])
        size, ids = best[1], best[2]
    for f in list(chosen):
        rest = [g for g in chosen if g is not f]
        if rest and int(lower_mask(_ids(rest, n), target).sum()) == size:
            chosen = rest
    return chosen


def _describe(table: DecisionTable, x: int, feature: _Feature) -> Descriptor | None:
    value = table.value(x, feature.attr)
    if value == MISSING:
        return None
    if feature.value is None:
        return Descriptor(feature.attr, value)
    if value != feature.value:
        return Descriptor(feature.attr, feature.value, positive=False)
    domain = table.value_domains[feature.attr]
    if len(domain) == 2:
        # Over a two-valued domain a=v is the same support set as !a=other.
        (other,) = domain - {value}
        return Descriptor(feature.attr, other, positive=False)
    return Descriptor(feature.attr, value)


def _emit(
    table: DecisionTable,
    features: list[_Feature],
    target: np.ndarray,
    consequent: Descriptor,
    min_cer: Fraction,
    min_support: int,
) -> list[Rule]:
    ids = _ids(features, len(table))
    size = np.bincount(ids)
    inside = np.bincount(ids, weights=target, minlength=len(size)).astype(np.int64)
    missing = np.zeros(len(table), dtype=bool)
    for f in features:
        missing |= np.asarray(table.column(f.attr), dtype=object) == MISSING
    # Without missing cells a block's description matches exactly that block,
    # so its certainty is inside/size and failing blocks can be skipped early.
    passes = (inside > 0) & (inside * min_cer.denominator >= min_cer.numerator * size)
    rules = []
    seen: set[int] = set()
    described: dict[tuple, Descriptor | None] = {}
    for x in np.flatnonzero(target).tolist():
        b = int(ids[x])
        if b in seen:
            continue
        seen.add(b)
        if not passes[b] and not missing[x]:
            continue
        ante = []
        for f in features:
            memo_key = (f.attr, f.value, int(f.codes[x]))
            if memo_key not in described:
                described[memo_key] = _describe(table, x, f)
            if described[memo_key] is not None:
                ante.append(described[memo_key])
        if not ante:
            continue
        rule = _refreshed(table, Rule(tuple(ante), consequent, provenance="generated"))
        if rule.support_count >= max(1, min_support) and rule.certainty > 0 and rule.certainty >= min_cer:
            rules.append(reduce_rule(table, rule))
    return rules


def generate_rules(
    table: DecisionTable,
    negative: bool = False,
    min_cer: Fraction | float = DEFAULT_CER_THRESHOLD,
    min_support: int = 1,
) -> list[Rule]:
    """Induce rules class by class from per-class attribute reducts.

    For each decision value the search keeps adding the sub-concept with the
    largest gain in that class's lower approximation until it equals the one
    given by all condition attributes.  Every block of the resulting
    partition that meets the class yields a candidate rule; candidates with
    certainty at least ``min_cer`` are reduced and kept.

    With ``negative`` set, the same search runs once more per class against
    the complement of the class, over the negative support sets
    ``||!a=v||`` of every attribute value, and yields ``!class`` rules.
    """
    min_cer = Fraction(min_cer)
    d = table.decision_attr
    decisions = np.asarray(table.decisions, dtype=object)
    classes = sorted(set(table.decisions))
    out: list[Rule] = []
    attr_feats = _attribute_features(table)
    for label in classes:
        target = decisions == label
        chosen = _class_reduct(attr_feats, target)
        if chosen:
            out.extend(_emit(table, chosen, target, Descriptor(d, label), min_cer, min_support))
    if negative:
        ind_feats = _indicator_features(table)
        for label in classes:
            target = decisions != label
            if not target.any():
                continue
            chosen = _class_reduct(ind_feats, target)
            if chosen:
                out.extend(_emit(table, chosen, target, Descriptor(d, label, False), min_cer, min_support))
    return dedupe(out)


# ---------------------------------------------------------------------------
# Rule files

_IDENT = r"[A-Za-z_][\w.\-]*"
_TOKEN = r"[^\s&!#=<]+"
_LITERAL = re.compile(rf"^(!?)\s*({_IDENT})\s*(?:=\s*({_TOKEN}))?$")
_IDENT_RE = re.compile(rf"^{_IDENT}$")
_TOKEN_RE = re.compile(rf"^{_TOKEN}$")
_META = re.compile(r"(\w+)=(\S+)")


def _parse_literal(text: str, lineno: int) -> tuple[bool, str, str | None]:
    m = _LITERAL.match(text.strip())
    if not m:
        raise ParseError(f"line {lineno}: bad literal {text.strip()!r}")
    return m.group(1) != "!", m.group(2), m.group(3)


def parse_rule(line: str, decision_attr: str, lineno: int = 1) -> Rule:
    """Parse ``consequent <- literal & literal ...`` (no comment part).

    In the antecedent a bare ``name`` means ``name=1``.  In the consequent a
    bare ``name`` is a decision value and ``decision=value`` is also accepted.
    """
    if "<-" not in line:
        raise ParseError(f"line {lineno}: expected '<-'")
    head, body = line.split("<-", 1)
    pos, ident, value = _parse_literal(head, lineno)
    if value is None:
        consequent = Descriptor(decision_attr, ident, pos)
    elif ident == decision_attr:
        consequent = Descriptor(decision_attr, value, pos)
    else:
        raise SchemaError(f"line {lineno}: consequent must concern {decision_attr!r}, got {ident!r}")
    ante = []
    for part in body.split("&"):
        pos, ident, value = _parse_literal(part, lineno)
        ante.append(Descriptor(ident, "1" if value is None else value, pos))
    try:
        return Rule(tuple(ante), consequent)
    except DomainError as exc:
        raise ParseError(f"line {lineno}: {exc}") from None


def parse_rules(
    text: str,
    decision_attr: str,
    cer_threshold: Fraction | float | None = None,
) -> KnowledgeBase:
    """Parse a rule file into a knowledge base.

    ``# kb cer_threshold=... version=...`` and trailing
    ``# cer=... support=... provenance=...`` comments written by
    :func:`format_rules` are read back; any other comment is ignored.
    Duplicate rules are collapsed.
    """
    meta_kb: dict[str, str] = {}
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, _, comment = raw.partition("#")
        comment = comment.strip()
        if not body.strip():
            if comment.startswith("kb "):
                meta_kb.update(_META.findall(comment))
            continue
        rule = parse_rule(body, decision_attr, lineno)
        meta = dict(_META.findall(comment))
        try:
            if "cer" in meta:
                rule = replace(rule, certainty=Fraction(meta["cer"]))
            if "support" in meta:
                rule = replace(rule, support_count=int(meta["support"]))
        except ValueError:
            raise ParseError(f"line {lineno}: bad rule metadata {comment!r}") from None
        if meta.get("provenance") in ("seeded", "generated", "corrected"):
            rule = replace(rule, provenance=meta["provenance"])
        rules.append(rule)
    try:
        threshold = Fraction(meta_kb.get("cer_threshold", DEFAULT_CER_THRESHOLD))
        version = int(meta_kb.get("version", 0))
    except ValueError:
        raise ParseError("bad knowledge-base header") from None
    if cer_threshold is not None:
        threshold = Fraction(cer_threshold)
    return KnowledgeBase(tuple(dedupe(rules)), threshold, version)


def _check_token(token: str, pattern: re.Pattern) -> str:
    if not pattern.match(token):
        raise DomainError(f"{token!r} cannot be written in the rule grammar")
    return token


def format_literal(desc: Descriptor, *, consequent: bool = False) -> str:
    bang = "" if desc.positive else "!"
    if consequent:
        if _IDENT_RE.match(desc.value):
            return bang + desc.value
        return f"{bang}{_check_token(desc.attr, _IDENT_RE)}={_check_token(desc.value, _TOKEN_RE)}"
    name = _check_token(desc.attr, _IDENT_RE)
    if desc.value == "1":
        return bang + name
    return f"{bang}{name}={_check_token(desc.value, _TOKEN_RE)}"


def format_rule(rule: Rule, *, metadata: bool = False) -> str:
    text = "{} <- {}".format(
        format_literal(rule.consequent, consequent=True),
        " & ".join(format_literal(d) for d in rule.antecedent),
    )
    if metadata:
        text += f"  # cer={rule.certainty} support={rule.support_count} provenance={rule.provenance}"
    return text


def rule_sort_key(rule: Rule) -> tuple[str, str]:
    text = format_rule(rule)
    head, _, body = text.partition(" <- ")
    return head, body


def format_rules(kb: KnowledgeBase | Iterable[Rule], *, metadata: bool = True, sort: bool = False) -> str:
    """Render rules one per line; with ``metadata`` the output round-trips through :func:`parse_rules`."""
    rules = list(kb.rules if isinstance(kb, KnowledgeBase) else kb)
    if sort:
        rules.sort(key=rule_sort_key)
    lines = []
    if metadata and isinstance(kb, KnowledgeBase):
        lines.append(f"# kb cer_threshold={kb.cer_threshold} version={kb.version}")
    lines.extend(format_rule(r, metadata=metadata) for r in rules)
    return "\n".join(lines) + "\n" if lines else ""


def load_kb(path: str | Path, decision_attr: str, cer_threshold: Fraction | float | None = None) -> KnowledgeBase:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ParseError(f"no such file: {path}") from None
    return parse_rules(text, decision_attr, cer_threshold)


def save_kb(kb: KnowledgeBase, path: str | Path) -> None:
    Path(path).write_text(format_rules(kb), encoding="utf-8")
