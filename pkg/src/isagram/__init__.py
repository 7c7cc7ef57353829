"""Instruction-set identification for headerless object code.

Feature extraction (byte- and character-level n-gram TF-IDF, histogram +
endianness baselines), from-scratch classifiers, an evaluation harness, and
binary-to-text codecs, behind both a library API and the ``isagram`` CLI.
"""

from .codec import DecodeError, decode, encode, get_encoding
from .corpus import (
    Corpus,
    CorpusError,
    Document,
    SplitSpec,
    SyntheticIsaSpec,
    default_isa_specs,
    generate_synthetic,
    ingest,
    split,
    write_jsonl,
)
from .classify import ClassifierSpec, TrainedModel, fit, load_model, predict, save_model
from .evaluate import FeatureConfig, accuracy, learning_curve, run_comparison
from .ngram import extract_grams, count_subsequence
from .vectorize import (
    FeatureSchema,
    FeatureVector,
    fit_tfidf,
    hist_schema,
    simplified_endianness,
    transform_hist_endian,
    transform_matrix,
    transform_tfidf,
)

__version__ = "1.0.0"

__all__ = [
    "ClassifierSpec",
    "Corpus",
    "CorpusError",
    "DecodeError",
    "Document",
    "FeatureConfig",
    "FeatureSchema",
    "FeatureVector",
    "SplitSpec",
    "SyntheticIsaSpec",
    "TrainedModel",
    "accuracy",
    "count_subsequence",
    "decode",
    "default_isa_specs",
    "encode",
    "extract_grams",
    "fit",
    "fit_tfidf",
    "generate_synthetic",
    "get_encoding",
    "hist_schema",
    "ingest",
    "learning_curve",
    "load_model",
    "predict",
    "run_comparison",
    "save_model",
    "simplified_endianness",
    "split",
    "transform_hist_endian",
    "transform_matrix",
    "transform_tfidf",
    "write_jsonl",
]
