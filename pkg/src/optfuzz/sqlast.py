"""Typed AST for SQL expressions, queries and statements.

Expression nodes are immutable; rewrites build new trees. There is
deliberately no subquery node and no DISTINCT on generated queries: both
are excluded from the tested grammar because the count comparison cannot
interpret them unambiguously.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence, Tuple

from .values import SqlValue


class IsCheck(enum.Enum):
    IS_TRUE = "IS TRUE"
    IS_FALSE = "IS FALSE"
    IS_NULL = "IS NULL"
    IS_NOT_NULL = "IS NOT NULL"


class JoinKind(enum.Enum):
    INNER = "JOIN"
    LEFT = "LEFT JOIN"
    CROSS = "CROSS JOIN"


class Expression:
    """Base class for expression nodes."""

    __slots__ = ()

    def children(self) -> Tuple["Expression", ...]:
        return ()


@dataclass(frozen=True)
class Constant(Expression):
    value: SqlValue


@dataclass(frozen=True)
class ColumnRef(Expression):
    table: str
    column: str


@dataclass(frozen=True)
class Unary(Expression):
    op: str  # '-', '+', 'NOT'
    operand: Expression

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class Binary(Expression):
    op: str
    left: Expression
    right: Expression

    def children(self):
        return (self.left, self.right)


# Internal operator name for the single-element IN rewrite: equality that
# must not apply affinity conversions. Never rendered to SQL text.
EQ_NOAFFINITY = "=noaff"

COMPARISON_OPS = ("=", "<>", "<", "<=", ">", ">=")
LOGIC_OPS = ("AND", "OR")
ARITH_OPS = ("+", "-", "*", "/", "%")


@dataclass(frozen=True)
class Between(Expression):
    value: Expression
    lo: Expression
    hi: Expression
    symmetric: bool = False
    negated: bool = False

    def children(self):
        return (self.value, self.lo, self.hi)


@dataclass(frozen=True)
class InList(Expression):
    value: Expression
    candidates: Tuple[Expression, ...]
    negated: bool = False

    def children(self):
        return (self.value,) + self.candidates


@dataclass(frozen=True)
class FunctionCall(Expression):
    name: str
    args: Tuple[Expression, ...]

    def children(self):
        return self.args


@dataclass(frozen=True)
class Star(Expression):
    """`*` inside COUNT(*) or as a select-list marker."""


@dataclass(frozen=True)
class Cast(Expression):
    operand: Expression
    target_type: str

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class Collate(Expression):
    operand: Expression
    collation: str

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class PostfixIs(Expression):
    operand: Expression
    check: IsCheck

    def children(self):
        return (self.operand,)


def walk(expr: Expression) -> Iterator[Expression]:
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(node.children())


def replace_child(expr: Expression, index: int, child: Expression) -> Expression:
    """Return a copy of expr with its index-th child swapped out."""
    if isinstance(expr, Unary):
        return replace(expr, operand=child)
    if isinstance(expr, Binary):
        return replace(expr, left=child) if index == 0 else replace(expr, right=child)
    if isinstance(expr, Between):
        key = ("value", "lo", "hi")[index]
        return replace(expr, **{key: child})
    if isinstance(expr, InList):
        if index == 0:
            return replace(expr, value=child)
        cands = list(expr.candidates)
        cands[index - 1] = child
        return replace(expr, candidates=tuple(cands))
    if isinstance(expr, FunctionCall):
        args = list(expr.args)
        args[index] = child
        return replace(expr, args=tuple(args))
    if isinstance(expr, (Cast, Collate, PostfixIs)):
        return replace(expr, operand=child)
    raise ValueError(f"node {type(expr).__name__} has no children")


# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnDef:
    name: str
    declared_type: str = ""  # empty string = untyped column
    unique: bool = False
    primary_key: bool = False
    collation: Optional[str] = None


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: Tuple[ColumnDef, ...]

    def column(self, name: str) -> ColumnDef:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)


@dataclass(frozen=True)
class IndexDef:
    name: str
    table: str
    key_expressions: Tuple[Expression, ...]
    unique: bool = False
    partial_predicate: Optional[Expression] = None


@dataclass(frozen=True)
class SchemaDef:
    tables: Tuple[TableDef, ...]
    indexes: Tuple[IndexDef, ...] = ()

    def table(self, name: str) -> TableDef:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


class Statement:
    __slots__ = ()


@dataclass(frozen=True)
class CreateTable(Statement):
    table: TableDef


@dataclass(frozen=True)
class CreateIndex(Statement):
    index: IndexDef


@dataclass(frozen=True)
class Insert(Statement):
    table: str
    columns: Tuple[str, ...]
    rows: Tuple[Tuple[Expression, ...], ...]


@dataclass(frozen=True)
class Update(Statement):
    table: str
    assignments: Tuple[Tuple[str, Expression], ...]
    where: Optional[Expression] = None


@dataclass(frozen=True)
class Delete(Statement):
    table: str
    where: Optional[Expression] = None


@dataclass(frozen=True)
class JoinClause:
    kind: JoinKind
    right_table: str
    on_predicate: Optional[Expression] = None

    def __post_init__(self):
        has_on = self.on_predicate is not None
        if (self.kind is JoinKind.CROSS) == has_on:
            raise ValueError("ON predicate required exactly for non-CROSS joins")


STAR = Star()


@dataclass(frozen=True)
class SelectQuery(Statement):
    select_list: Tuple[Expression, ...]  # (STAR,) for `SELECT *`
    from_tables: Tuple[str, ...]
    joins: Tuple[JoinClause, ...] = ()
    where: Optional[Expression] = None
    group_by: Tuple[Expression, ...] = ()
    order_by: Tuple[Tuple[Expression, str], ...] = ()  # direction 'ASC'/'DESC'
    distinct: bool = False

    @property
    def is_star(self) -> bool:
        return len(self.select_list) == 1 and isinstance(self.select_list[0], Star)

    def scope_tables(self) -> Tuple[str, ...]:
        return self.from_tables + tuple(j.right_table for j in self.joins)


@dataclass(frozen=True)
class DerivedSum(Statement):
    """`SELECT SUM(count) FROM (<inner>) AS sub` — the aggregate wrapper used
    to total the per-row (or per-group) truth counts of a translated query."""

    inner: SelectQuery
    alias: str = "count"


@dataclass(frozen=True)
class Prepared:
    """A statement annotated with tolerated engine-error substrings."""

    statement: Statement
    expected_errors: Tuple[str, ...] = ()
