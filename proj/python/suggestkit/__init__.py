"""Suggested-question generation over a document corpus."""

from ._suggestkit import (
    Corpus,
    Document,
    Engine,
    QASExample,
    SuggestkitError,
    check_age_consistency,
    cosine,
    embed_local,
    fnv1a64,
    load_corpus,
    parse_suggestions,
    round_half_up_percent,
    synth_corpus,
    tokenize,
    write_corpus,
)

__all__ = [
    "Corpus",
    "Document",
    "Engine",
    "QASExample",
    "SuggestkitError",
    "check_age_consistency",
    "cosine",
    "embed_local",
    "fnv1a64",
    "load_corpus",
    "parse_suggestions",
    "round_half_up_percent",
    "synth_corpus",
    "tokenize",
    "write_corpus",
]
