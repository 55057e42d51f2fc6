"""Time-optimal control of a dissipative two-level system on the Bloch disk."""

import json

from ._core import (
    ClockFormSingularError,
    InfeasibleQueryError,
    ModelParams,
    ReachableSet,
    SynthesisChart,
    accessibility_dimension,
    bang_flow,
    brute_force_oracle,
    build_synthesis,
    classify_case,
    delta_A,
    delta_B,
    propagate_word,
    reachable_set,
    table_case,
    table_initial_state,
)
from ._core import compare_words as _compare_words
from ._core import selfcheck as _selfcheck

__all__ = [
    "ClockFormSingularError",
    "InfeasibleQueryError",
    "ModelParams",
    "ReachableSet",
    "SynthesisChart",
    "accessibility_dimension",
    "bang_flow",
    "brute_force_oracle",
    "build_synthesis",
    "classify_case",
    "compare_words",
    "delta_A",
    "delta_B",
    "propagate_word",
    "reachable_set",
    "selfcheck",
    "table_case",
    "table_initial_state",
]


def compare_words(x0, params, word1, word2):
    """Compare two words with common endpoints; returns the report as a dict."""
    return json.loads(_compare_words(x0, params, word1, word2))


def selfcheck():
    """Run the invariant suite over the reference cases; returns a dict."""
    return json.loads(_selfcheck())
