"""Dialect profiles: per-engine feature flags, semantics switches, and
expected-error annotations that keep the oracle from misreporting tolerated
engine rejections as bugs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Mapping, Tuple

DEFAULT_FUNCTION_WHITELIST = frozenset({"LENGTH", "ABS", "LOWER", "UPPER"})

# Error substrings tolerated per statement kind. Anything not matching one of
# these patterns is surfaced as a candidate error bug.
_COMMON_QUERY_ERRORS = ("integer overflow",)
_COMMON_DML_ERRORS = (
    "UNIQUE constraint failed",
    "NOT NULL constraint failed",
    "integer overflow",
    "datatype mismatch",
)


@dataclass(frozen=True)
class DialectProfile:
    name: str
    has_native_boolean: bool = False
    bool_sum_needs_cast: bool = False
    has_glob: bool = True
    has_collate_nocase: bool = True
    has_between_symmetric: bool = False
    div_by_zero_yields_null: bool = True
    applies_column_affinity: bool = True
    supports_partial_indexes: bool = True
    deterministic_function_whitelist: FrozenSet[str] = DEFAULT_FUNCTION_WHITELIST
    expected_error_patterns: Mapping[str, Tuple[str, ...]] = field(
        default_factory=lambda: {
            "ddl": _COMMON_DML_ERRORS,
            "dml": _COMMON_DML_ERRORS,
            "query": _COMMON_QUERY_ERRORS,
        }
    )

    def expected_errors_for(self, kind: str) -> Tuple[str, ...]:
        return tuple(self.expected_error_patterns.get(kind, ()))

    def is_whitelisted_function(self, name: str) -> bool:
        return name.upper() in self.deterministic_function_whitelist


def is_deterministic(expr, dialect: DialectProfile) -> bool:
    """True iff every function call in expr is on the dialect's whitelist.

    Used both as a generator post-check and as a reducer guard: predicates
    with nondeterministic functions would make the count comparison flaky.
    """
    from . import sqlast as A

    return all(
        dialect.is_whitelisted_function(node.name)
        for node in A.walk(expr)
        if isinstance(node, A.FunctionCall)
    )


def toy_profile() -> DialectProfile:
    """Profile of the built-in miniature engine (embedded-dialect semantics,
    plus symmetric BETWEEN since the engine consumes ASTs directly)."""
    return DialectProfile(name="toy", has_between_symmetric=True)


def sqlite_profile() -> DialectProfile:
    """Profile of the real embedded engine reached through rendered SQL."""
    return DialectProfile(name="sqlite", has_between_symmetric=False)


PROFILES = {"toy": toy_profile, "sqlite": sqlite_profile}
