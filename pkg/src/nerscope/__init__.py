"""Bucketed, attribute-aided evaluation of named entity recognition systems."""

__version__ = "0.1.0"

from .attributes import ATTRIBUTES, Featurizer, TrainingStats, build_training_stats, span_attribute
from .bucketing import BucketPlan, Partition, assign, bucket_test_set, plan_buckets
from .corpus import ColumnSpec, Corpus, Span, Tag, decode_spans, extract_spans, parse_conll, read_conll
from .metrics import PRF, bucket_prf, micro_f1, token_bucket_accuracy
from .analysis import (
    PerformanceTensor,
    attribute_rho,
    attribute_zeta,
    build_tensor,
    comparative_diagnose,
    model_wise,
    self_diagnose,
)

__all__ = [
    "ATTRIBUTES", "BucketPlan", "ColumnSpec", "Corpus", "Featurizer", "PRF", "Partition",
    "PerformanceTensor", "Span", "Tag", "TrainingStats", "assign", "attribute_rho",
    "attribute_zeta", "bucket_prf", "bucket_test_set", "build_tensor", "build_training_stats",
    "comparative_diagnose", "decode_spans", "extract_spans", "micro_f1", "model_wise",
    "parse_conll", "plan_buckets", "read_conll", "self_diagnose", "span_attribute",
    "token_bucket_accuracy",
]
