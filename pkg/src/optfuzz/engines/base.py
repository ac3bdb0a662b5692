"""Executor interface shared by the miniature engine and real-engine adapters."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .. import sqlast as A
from ..values import SqlValue


class BugInjection(enum.Enum):
    """Deliberately faulty optimizer rules available in the toy engine.

    At most one is active per engine instance so that any detected
    discrepancy is attributable to a single rule.
    """

    LIKE_RANGE_SKIP = "LikeRangeSkip"
    IN_TO_EQ_AFFINITY = "InToEqAffinity"
    COMMUTE_DROPS_COLLATION = "CommuteDropsCollation"
    NULL_FILTER_AS_FALSE = "NullFilterAsFalse"
    STRING_RANGE_BOUND = "StringRangeBound"
    VALUE_CORRUPTION = "ValueCorruption"

    @classmethod
    def from_name(cls, name: str) -> "BugInjection":
        for member in cls:
            if member.value.lower() == name.lower() or member.name.lower() == name.lower():
                return member
        raise ValueError(f"unknown injection {name!r}")


@dataclass
class EngineResult:
    """Rows, a classified error, or a crash marker returned by an executor."""

    rows: Optional[List[Tuple[SqlValue, ...]]] = None
    columns: Tuple[str, ...] = ()
    error: Optional[str] = None
    crashed: bool = False

    @classmethod
    def ok(cls, rows=None, columns=()) -> "EngineResult":
        return cls(rows=rows if rows is not None else [], columns=tuple(columns))

    @classmethod
    def failure(cls, message: str) -> "EngineResult":
        return cls(error=message)

    @classmethod
    def crash(cls, message: str = "engine crashed") -> "EngineResult":
        return cls(error=message, crashed=True)

    @property
    def is_error(self) -> bool:
        return self.error is not None


class QueryTimeout(Exception):
    """Raised when a statement exceeds its execution deadline."""


class Executor:
    """One backend connection; confined to a single worker."""

    dialect_name = "abstract"

    def execute(self, stmt: A.Statement, deadline: Optional[float] = None) -> EngineResult:
        raise NotImplementedError

    def reset(self) -> None:
        """Drop all state, returning to an empty database."""
        raise NotImplementedError

    def close(self) -> None:
        pass

    def version(self) -> str:
        return self.dialect_name
