import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_t2p
from strategies import tables
from rsabl.abduction import LabeledBatch
from rsabl.errors import ConfigError, EmptyBatch, SchemaError
from rsabl.loop import AblConfig, predict_labels, rule_processor, run_abl, stopping_score, train_builtin
from rsabl.rules import KnowledgeBase, format_rules, generate_rules, parse_rules
from rsabl.synth import make_synthetic, split_indices, subset
from rsabl.table import DecisionTable

SEED_KB = "!bat <- !flys\n!bat <- !flys & !swims\nbat <- !flys\n"


def lines(kb):
    return format_rules(kb, metadata=False).splitlines()


@pytest.fixture
def t2p_batch():
    return LabeledBatch.from_table(make_t2p())


def test_single_class_model_prefers_that_class(t2p_batch):
    bats = LabeledBatch(t2p_batch.schema, t2p_batch.rows[:2], t2p_batch.labels[:2])
    model = train_builtin(bats)
    for row in [("0", "0", "0"), ("1", "1", "1"), ("0", "1", "1")]:
        (p,) = model.predict([row])
        assert p["bat"] == max(p.values())
        assert math.isclose(sum(p.values()), 1.0)


def test_perfect_split_hand_computed():
    table = DecisionTable.from_rows(["a"], "d", [["0"], ["0"], ["1"], ["1"]], ["x", "x", "y", "y"])
    model = train_builtin(LabeledBatch.from_table(table))
    # x: P(a=0)=(2+1)/(2+2)=3/4, P(a=1)=1/4; y mirrors it
    (p0, p1) = model.predict([("0",), ("1",)])
    assert p0["x"] == pytest.approx(0.75) and p1["y"] == pytest.approx(0.75)


def test_unseen_class_scores_zero(t2p_batch):
    bats = LabeledBatch(t2p_batch.schema, t2p_batch.rows[:2], t2p_batch.labels[:2])
    (p,) = train_builtin(bats).predict([("0", "1", "1")])
    assert p["otter"] == 0 and p["bear"] == 0


def test_missing_cells_are_skipped():
    table = DecisionTable.from_rows(["a", "b"], "d", [["0", "0"], ["1", "1"]], ["x", "y"])
    model = train_builtin(LabeledBatch.from_table(table))
    (p,) = model.predict([("*", "0")])
    assert p["x"] > p["y"]


def test_train_is_deterministic(t2p_batch):
    a, b = train_builtin(t2p_batch, 3), train_builtin(t2p_batch, 3)
    rows = list(t2p_batch.rows)
    assert np.array_equal(a.predict_proba(rows), b.predict_proba(rows))


def test_train_empty_batch(t2p_batch):
    with pytest.raises(EmptyBatch):
        train_builtin(LabeledBatch(t2p_batch.schema, [], []))


def test_rule_processor_seed_kb(t2p_batch):
    kb = parse_rules(SEED_KB, "d")
    out = rule_processor(t2p_batch, kb, t2p_batch.schema)
    got = lines(out)
    assert got[0] == "!bat <- !flys"
    assert "bat <- !flys" not in got and "!bat <- !flys & !swims" not in got
    assert out.rules[0].certainty == 1
    new = [r for r in out.rules if r.provenance == "generated" and not r.consequent.positive]
    assert any(r.certainty == 1 for r in new)
    again = rule_processor(t2p_batch, out, t2p_batch.schema)
    assert again == out and again.version == out.version


def test_rule_processor_empty_kb(t2p_batch):
    out = rule_processor(t2p_batch, KnowledgeBase(), t2p_batch.schema)
    table = t2p_batch.to_table()
    assert list(out.rules) == generate_rules(table, negative=True, min_cer=out.cer_threshold)


def test_rule_processor_errors(t2p_batch):
    with pytest.raises(EmptyBatch):
        rule_processor(LabeledBatch(t2p_batch.schema, [], []), KnowledgeBase(), t2p_batch.schema)
    other = DecisionTable.from_rows(["a"], "d", [["0"]], ["x"]).schema
    with pytest.raises(SchemaError):
        rule_processor(t2p_batch, KnowledgeBase(), other)


class FixedModel:
    def __init__(self, labels, answers):
        self.labels = labels
        self.answers = answers

    def predict(self, rows):
        return [{y: float(y == self.answers[tuple(r)]) for y in self.labels} for r in rows]


def test_stopping_score_arithmetic():
    rows = [(str(i),) for i in range(10)]
    table = DecisionTable.from_rows(["a"], "d", rows, ["x"] * 9 + ["y"])
    labeled = LabeledBatch.from_table(table)
    answers = {r: "x" for r in rows}
    answers[("8",)] = "y"
    model = FixedModel(("x", "y"), answers)
    assert stopping_score(labeled, [], model, KnowledgeBase()) == pytest.approx((0.8 + 1) / 2)
    # one rule, ten unlabeled rows, one violated -> rate 0.1
    kb = parse_rules("!x <- a=0\n", "d")
    assert stopping_score(labeled, rows, model, kb) == pytest.approx((0.8 + 0.9) / 2)
    perfect = FixedModel(("x", "y"), dict(zip(rows, table.decisions)))
    assert stopping_score(labeled, rows[1:], perfect, kb) == 1


def test_config_validation():
    with pytest.raises(ConfigError):
        AblConfig(epochs=-1)
    with pytest.raises(ConfigError):
        AblConfig(theta=1.5)
    with pytest.raises(ConfigError):
        AblConfig(cer_threshold=2)
    assert AblConfig(epochs=0).epochs == 0


def test_zero_epochs(t2p_batch):
    kb = parse_rules(SEED_KB, "d")
    res = run_abl(t2p_batch, [("0", "0", "1")], kb, AblConfig(epochs=0))
    assert len(res.history) == 1
    assert res.kb == rule_processor(t2p_batch, KnowledgeBase(kb.rules), t2p_batch.schema)
    assert predict_labels(res.model, t2p_batch.rows) == predict_labels(train_builtin(t2p_batch), t2p_batch.rows)


def test_no_unlabeled_rows(t2p_batch):
    res = run_abl(t2p_batch, [], KnowledgeBase(), AblConfig(epochs=3, theta=1))
    assert res.kb == rule_processor(t2p_batch, KnowledgeBase(), t2p_batch.schema)
    assert all(r.eq6_con_revised is None for r in res.history)
    assert len({r.rule_count for r in res.history}) == 1


def test_unlabeled_rows_are_validated(t2p_batch):
    with pytest.raises(SchemaError):
        run_abl(t2p_batch, [("2", "0", "0")], KnowledgeBase())


def test_theta_stops_early(t2p_batch):
    res = run_abl(t2p_batch, [("0", "0", "1")], KnowledgeBase(), AblConfig(epochs=10, theta=0))
    assert len(res.history) == 2


def small_synthetic(seed, fraction=0.1):
    t = make_synthetic(4, 6, 300, 0.1, seed)
    sp = split_indices(len(t), fraction, seed)
    return (
        LabeledBatch.from_table(subset(t, sp.labeled)),
        [t.rows[i] for i in sp.unlabeled],
        LabeledBatch.from_table(subset(t, sp.test)),
    )


@settings(max_examples=5)
@given(st.integers(0, 1000))
def test_run_is_deterministic(seed):
    labeled, unlabeled, test = small_synthetic(seed)
    cfg = AblConfig(epochs=4, seed=seed, theta=1)
    a = run_abl(labeled, unlabeled, KnowledgeBase(), cfg, test=test)
    b = run_abl(labeled, unlabeled, KnowledgeBase(), cfg, test=test)
    assert a.history == b.history
    assert a.kb == b.kb
    assert a.history[-1].rule_count == len(a.kb)


def test_revised_training_rows_stay_valid():
    labeled, unlabeled, _ = small_synthetic(7)
    seen = []

    def learner(batch, seed):
        # LabeledBatch re-validates every row and label against the schema
        LabeledBatch(batch.schema, batch.rows, batch.labels)
        seen.append(len(batch))
        return train_builtin(batch, seed)

    run_abl(labeled, unlabeled, KnowledgeBase(), AblConfig(epochs=3, theta=1), learner=learner)
    assert seen[0] == len(labeled)
    assert all(n == len(labeled) + len(unlabeled) for n in seen[1:])


@pytest.mark.parametrize("seed", range(5))
def test_objective_weak_trend(seed):
    t = make_synthetic(10, 11, 2000, 0.1, seed)
    sp = split_indices(len(t), 0.1, seed)
    labeled = LabeledBatch.from_table(subset(t, sp.labeled))
    res = run_abl(labeled, [t.rows[i] for i in sp.unlabeled], KnowledgeBase(), AblConfig(seed=seed))
    assert res.history[-1].objective >= res.history[0].objective


@settings(max_examples=20)
@given(tables(max_rows=10))
def test_processor_fixpoint_on_random_tables(table):
    batch = LabeledBatch.from_table(table)
    once = rule_processor(batch, KnowledgeBase(), table.schema)
    twice = rule_processor(batch, once, table.schema)
    assert twice == once and twice.version == once.version


def test_cer_threshold_clamps_generation(t2p_batch):
    kb = KnowledgeBase((), Fraction(1))
    out = rule_processor(t2p_batch, kb, t2p_batch.schema, min_cer=Fraction(1, 2))
    assert all(r.certainty == 1 for r in out.rules)
