"""Rough-set rule processing and abductive semi-supervised learning."""

from .abduction import LabeledBatch, abduce, consistency_score, violation_count
from .errors import (
    AttributeAlreadyInBase,
    CapExceeded,
    ConfigError,
    DomainError,
    EmptyBatch,
    LengthMismatch,
    ParseError,
    RsablError,
    SchemaError,
    UnknownAttribute,
    UnknownObject,
)
from .loop import AblConfig, AblResult, EpochMetrics, FrequencyModel, rule_processor, run_abl, stopping_score, train_builtin
from .rough import (
    RegionReport,
    ReductResult,
    decision_positive_region,
    exhaustive_min_reduct,
    gamma,
    greedy_reduct,
    is_reduct,
    lower_approx,
    regions,
    rule_certainty,
    significance,
    upper_approx,
)
from .rules import (
    Descriptor,
    KnowledgeBase,
    Rule,
    correct_rules,
    evaluate_rule,
    format_rules,
    generate_rules,
    merge_kb,
    parse_rules,
    reduce_rule,
    support_set,
)
from .table import MISSING, DecisionTable, Partition, Schema, load_table, partition, save_table

__version__ = "0.1.0"

__all__ = [
    "abduce",
    "AblConfig",
    "AblResult",
    "AttributeAlreadyInBase",
    "CapExceeded",
    "ConfigError",
    "consistency_score",
    "correct_rules",
    "decision_positive_region",
    "DecisionTable",
    "Descriptor",
    "DomainError",
    "EmptyBatch",
    "EpochMetrics",
    "evaluate_rule",
    "exhaustive_min_reduct",
    "format_rules",
    "FrequencyModel",
    "gamma",
    "generate_rules",
    "greedy_reduct",
    "is_reduct",
    "KnowledgeBase",
    "LabeledBatch",
    "LengthMismatch",
    "load_table",
    "lower_approx",
    "merge_kb",
    "MISSING",
    "parse_rules",
    "ParseError",
    "Partition",
    "partition",
    "reduce_rule",
    "ReductResult",
    "RegionReport",
    "regions",
    "RsablError",
    "Rule",
    "rule_certainty",
    "rule_processor",
    "run_abl",
    "save_table",
    "Schema",
    "SchemaError",
    "significance",
    "stopping_score",
    "support_set",
    "train_builtin",
    "UnknownAttribute",
    "UnknownObject",
    "upper_approx",
    "violation_count",
]
