"""Dataset embeddings for multi-treebank parsing, tagging and lemmatization."""

from ._core import (
    DataError,
    Error,
    EvalResult,
    NumericError,
    Sentence,
    Token,
    Treebank,
    UsageError,
    evaluate,
    parse_conllu,
    pca_project,
    read_conllu,
    run_cli,
    run_experiment,
    write_conllu,
    write_synthetic,
)

__all__ = [
    "DataError",
    "Error",
    "EvalResult",
    "NumericError",
    "Sentence",
    "Token",
    "Treebank",
    "UsageError",
    "evaluate",
    "parse_conllu",
    "pca_project",
    "read_conllu",
    "run_cli",
    "run_experiment",
    "write_conllu",
    "write_synthetic",
]
