"""Shrinks a failing test case to a small reproducer with the same verdict
class, by delta-debugging the setup statements and structurally simplifying
the query AST. Works on ASTs only; every candidate is re-validated on a
fresh engine."""

from __future__ import annotations

import enum
import re
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

from . import sqlast as A
from .dialect import DialectProfile, is_deterministic
from .engines.base import Executor, QueryTimeout
from .oracle import (
    CountStrategy,
    EngineCrash,
    OracleVerdict,
    UnexpectedEngineError,
    VerdictKind,
    matches_expected,
    run_check,
    run_content_check,
)
from .render import UnsupportedFeature, render_statement


class VerdictClass(enum.Enum):
    DISCREPANCY = "discrepancy"
    UNEXPECTED_ERROR = "unexpected-error"
    CRASH = "crash"


class NotReproducible(Exception):
    """The unreduced test case failed its initial replay (flaky finding)."""


@dataclass(frozen=True)
class TestCase:
    setup_statements: Tuple[A.Prepared, ...]
    query: A.SelectQuery
    dialect: DialectProfile
    seed: int
    verdict_class: VerdictClass
    strategy: CountStrategy = CountStrategy.NAIVE_ITERATION
    content_mode: bool = False
    error_class: str = ""
    schema: Optional[A.SchemaDef] = None


def normalize_error(message: str) -> str:
    """Error-message class: identifiers and literals stripped so fingerprints
    survive renamed tables/constants."""
    msg = re.sub(r"'[^']*'", "'?'", message)
    msg = re.sub(r"\b[tci]\d+\b", "?", msg)
    msg = re.sub(r"-?\d+(\.\d+)?", "#", msg)
    return msg.strip()


def replay(tc: TestCase, executor: Executor, timeout: float = 10.0) -> Optional[VerdictClass]:
    """Run the test case on a fresh engine; return the observed verdict
    class, or None when nothing reproduces."""
    executor.reset()
    for prepared in tc.setup_statements:
        try:
            result = executor.execute(prepared.statement)
        except QueryTimeout:
            return None
        if result.crashed:
            return VerdictClass.CRASH if tc.verdict_class is VerdictClass.CRASH else None
        if result.is_error and matches_expected(result.error, prepared.expected_errors) is None:
            if tc.verdict_class is VerdictClass.UNEXPECTED_ERROR and (
                normalize_error(result.error) == tc.error_class
            ):
                return VerdictClass.UNEXPECTED_ERROR
            return None
    try:
        if tc.content_mode:
            if tc.schema is None:
                return None
            verdict = run_content_check(
                executor, tc.query, tc.dialect, tc.schema, timeout=timeout
            )
        else:
            verdict = run_check(
                executor, tc.query, tc.strategy, tc.dialect, timeout=timeout
            )
    except UnexpectedEngineError as e:
        if tc.verdict_class is VerdictClass.UNEXPECTED_ERROR and (
            not tc.error_class or normalize_error(e.message) == tc.error_class
        ):
            return VerdictClass.UNEXPECTED_ERROR
        return None
    except EngineCrash:
        return VerdictClass.CRASH
    except QueryTimeout:
        return None
    if verdict.kind is VerdictKind.DISCREPANCY:
        return VerdictClass.DISCREPANCY
    return None


def _rendered_length(tc: TestCase) -> int:
    total = 0
    for prepared in tc.setup_statements:
        try:
            total += len(render_statement(prepared.statement, tc.dialect))
        except UnsupportedFeature:
            total += 200
    try:
        total += len(render_statement(tc.query, tc.dialect))
    except UnsupportedFeature:
        total += 200
    return total


_SIMPLE_CONSTANTS = (None, 0, 1, "", "a")


class _Budget:
    def __init__(self, max_replays: int = 5000, max_seconds: float = 60.0):
        self.replays = 0
        self.max_replays = max_replays
        self.deadline = time.monotonic() + max_seconds

    def spend(self) -> bool:
        self.replays += 1
        return self.replays <= self.max_replays and time.monotonic() <= self.deadline

    @property
    def exhausted(self) -> bool:
        return self.replays >= self.max_replays or time.monotonic() > self.deadline


def _expression_nodes(expr: A.Expression) -> List[Tuple[Tuple[int, ...], A.Expression]]:
    out = []

    def visit(node, path):
        out.append((path, node))
        for i, child in enumerate(node.children()):
            visit(child, path + (i,))

    visit(expr, ())
    return out


def _replace_at(expr: A.Expression, path: Tuple[int, ...], new: A.Expression) -> A.Expression:
    if not path:
        return new
    i = path[0]
    child = expr.children()[i]
    return A.replace_child(expr, i, _replace_at(child, path[1:], new))


def reduce(tc: TestCase, executor_factory: Callable[[], Executor]) -> TestCase:
    """Apply reduction passes to fixpoint within the replay budget.

    Passes: statement-subset delta debugging, expression-node hoisting,
    constant simplification, DDL column/constraint pruning. The reduced case
    is guaranteed to replay to the original verdict class."""
    budget = _Budget()

    def reproduces(candidate: TestCase) -> bool:
        if budget.exhausted:
            return False
        budget.spend()
        executor = executor_factory()
        try:
            return replay(candidate, executor) is tc.verdict_class
        finally:
            executor.close()

    if not reproduces(tc):
        raise NotReproducible("test case does not replay to its verdict class")

    current = tc
    changed = True
    while changed and not budget.exhausted:
        changed = False
        for reduction_pass in (_pass_statements, _pass_query_clauses, _pass_hoist,
                               _pass_constants, _pass_ddl_pruning):
            current, pass_changed = reduction_pass(current, reproduces, budget)
            changed = changed or pass_changed
    return current


def _pass_statements(tc: TestCase, reproduces, budget) -> Tuple[TestCase, bool]:
    """Chunked delta debugging over the setup statement list."""
    statements = list(tc.setup_statements)
    changed = False
    chunk = max(1, len(statements) // 2)
    while chunk >= 1 and not budget.exhausted:
        i = 0
        while i < len(statements):
            candidate_list = statements[:i] + statements[i + chunk:]
            candidate = replace(tc, setup_statements=tuple(candidate_list))
            if reproduces(candidate):
                statements = candidate_list
                changed = True
            else:
                i += chunk
        chunk //= 2
    return replace(tc, setup_statements=tuple(statements)), changed


def _pass_query_clauses(tc: TestCase, reproduces, budget) -> Tuple[TestCase, bool]:
    """Try dropping whole optional clauses of the failing query."""
    changed = False
    q = tc.query
    for build in (
        lambda q: replace(q, order_by=()) if q.order_by else None,
        lambda q: replace(q, group_by=()) if q.group_by else None,
    ):
        simplified = build(q)
        if simplified is None:
            continue
        candidate = replace(tc, query=simplified)
        if reproduces(candidate):
            q = simplified
            changed = True
    while q.joins and not budget.exhausted:
        simplified = replace(q, joins=q.joins[:-1])
        candidate = replace(tc, query=simplified)
        if not reproduces(candidate):
            break
        q = simplified
        changed = True
    return replace(tc, query=q), changed


def _pass_hoist(tc: TestCase, reproduces, budget) -> Tuple[TestCase, bool]:
    """Replace predicate nodes by one of their children while the verdict
    survives."""
    changed = False
    q = tc.query
    if q.where is None:
        return tc, changed
    improved = True
    while improved and not budget.exhausted:
        improved = False
        for path, node in _expression_nodes(q.where):
            for child in node.children():
                new_where = _replace_at(q.where, path, child)
                candidate = replace(tc, query=replace(q, where=new_where))
                if _rendered_length(candidate) <= _rendered_length(tc) and reproduces(candidate):
                    q = replace(q, where=new_where)
                    improved = True
                    changed = True
                    break
            if improved:
                break
    return replace(tc, query=q), changed


def _pass_constants(tc: TestCase, reproduces, budget) -> Tuple[TestCase, bool]:
    """Push constants toward NULL, 0, 1, '' and 'a'."""
    changed = False
    q = tc.query
    if q.where is None:
        return tc, changed
    for path, node in _expression_nodes(q.where):
        if budget.exhausted:
            break
        if not isinstance(node, A.Constant) or node.value in _SIMPLE_CONSTANTS:
            continue
        for simple in _SIMPLE_CONSTANTS:
            new_where = _replace_at(q.where, path, A.Constant(simple))
            candidate = replace(tc, query=replace(q, where=new_where))
            if reproduces(candidate):
                q = replace(q, where=new_where)
                changed = True
                break
    return replace(tc, query=q), changed


def _strip_constraints(col: A.ColumnDef) -> A.ColumnDef:
    return replace(col, unique=False, primary_key=False, collation=None)


def _pass_ddl_pruning(tc: TestCase, reproduces, budget) -> Tuple[TestCase, bool]:
    """Drop unused columns and soften column constraints in CREATE TABLE
    statements (rewriting dependent INSERTs)."""
    changed = False
    current = tc
    for si, prepared in enumerate(current.setup_statements):
        if budget.exhausted:
            break
        stmt = prepared.statement
        if not isinstance(stmt, A.CreateTable):
            continue
        table = stmt.table
        # Constraint softening, column by column.
        for ci, col in enumerate(table.columns):
            soft = _strip_constraints(col)
            if soft == col:
                continue
            new_cols = table.columns[:ci] + (soft,) + table.columns[ci + 1:]
            candidate = _swap_table(current, si, replace(table, columns=new_cols))
            if reproduces(candidate):
                current = candidate
                table = replace(table, columns=new_cols)
                changed = True
        # Whole-column removal (kept only when nothing references it).
        for col in list(table.columns):
            if len(table.columns) <= 1:
                break
            candidate = _drop_column(current, si, table, col.name)
            if candidate is not None and reproduces(candidate):
                current = candidate
                table = _find_table(current, si)
                changed = True
    return current, changed


def _find_table(tc: TestCase, si: int) -> A.TableDef:
    stmt = tc.setup_statements[si].statement
    assert isinstance(stmt, A.CreateTable)
    return stmt.table


def _updated_schema(schema: Optional[A.SchemaDef], table: A.TableDef) -> Optional[A.SchemaDef]:
    if schema is None:
        return None
    tables = tuple(table if t.name == table.name else t for t in schema.tables)
    return replace(schema, tables=tables)


def _swap_table(tc: TestCase, si: int, table: A.TableDef) -> TestCase:
    statements = list(tc.setup_statements)
    statements[si] = replace(statements[si], statement=A.CreateTable(table))
    return replace(
        tc,
        setup_statements=tuple(statements),
        schema=_updated_schema(tc.schema, table),
    )


def _references_column(expr: Optional[A.Expression], table: str, column: str) -> bool:
    if expr is None:
        return False
    return any(
        isinstance(n, A.ColumnRef) and n.table in (table, "") and n.column == column
        for n in A.walk(expr)
    )


def _drop_column(tc: TestCase, si: int, table: A.TableDef, column: str) -> Optional[TestCase]:
    if _references_column(tc.query.where, table.name, column):
        return None
    for e in tc.query.group_by:
        if _references_column(e, table.name, column):
            return None
    for e, _ in tc.query.order_by:
        if _references_column(e, table.name, column):
            return None
    for j in tc.query.joins:
        if _references_column(j.on_predicate, table.name, column):
            return None
    new_cols = tuple(c for c in table.columns if c.name != column)
    statements: List[A.Prepared] = []
    for i, prepared in enumerate(tc.setup_statements):
        stmt = prepared.statement
        if i == si:
            statements.append(
                replace(prepared, statement=A.CreateTable(replace(table, columns=new_cols)))
            )
            continue
        if isinstance(stmt, A.Insert) and stmt.table == table.name:
            if column in stmt.columns:
                keep = [k for k, name in enumerate(stmt.columns) if name != column]
                stmt = A.Insert(
                    stmt.table,
                    tuple(stmt.columns[k] for k in keep),
                    tuple(tuple(row[k] for k in keep) for row in stmt.rows),
                )
                if not stmt.columns:
                    continue
        elif isinstance(stmt, A.CreateIndex) and stmt.index.table == table.name:
            idx = stmt.index
            uses = any(
                _references_column(e, table.name, column) for e in idx.key_expressions
            ) or _references_column(idx.partial_predicate, table.name, column)
            if uses:
                continue
        elif isinstance(stmt, (A.Update, A.Delete)) and stmt.table == table.name:
            if isinstance(stmt, A.Update) and any(c == column for c, _ in stmt.assignments):
                stmt = replace(
                    stmt,
                    assignments=tuple(a for a in stmt.assignments if a[0] != column),
                )
                if not stmt.assignments:
                    continue
            if _references_column(stmt.where, table.name, column):
                continue
        statements.append(replace(prepared, statement=stmt) if stmt is not prepared.statement else prepared)
    return replace(
        tc,
        setup_statements=tuple(statements),
        schema=_updated_schema(tc.schema, replace(table, columns=new_cols)),
    )
