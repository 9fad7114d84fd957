"""Tactic tree search over a toy arithmetic environment."""

from ._core import (
    RUNNING_EXAMPLE,
    MissingWeights,
    ParseError,
    ScriptParseError,
    TnnFormatError,
    apply_tactic,
    axioms,
    confidence,
    encode_goal,
    generate_corpus,
    normalize_goal,
    operator_count,
    pipeline,
    prove,
    render_script,
    replay,
    tactics,
)

__all__ = [
    "RUNNING_EXAMPLE",
    "MissingWeights",
    "ParseError",
    "ScriptParseError",
    "TnnFormatError",
    "apply_tactic",
    "axioms",
    "confidence",
    "encode_goal",
    "generate_corpus",
    "normalize_goal",
    "operator_count",
    "pipeline",
    "prove",
    "render_script",
    "replay",
    "tactics",
]
