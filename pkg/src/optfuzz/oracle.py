"""The metamorphic count-comparison check.

A potentially-optimized query `SELECT * FROM ... WHERE p` is translated to
its unoptimized twin `SELECT (p IS TRUE) FROM ...`; the first query's row
count must equal the number of TRUE values produced by the second. A
mismatch localizes a logic bug to one of the two evaluation paths.
"""

from __future__ import annotations

import enum
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

from . import sqlast as A
from .dialect import DialectProfile
from .engines.base import EngineResult, Executor, QueryTimeout
from .render import render_statement


class CountStrategy(enum.Enum):
    NAIVE_ITERATION = "naive"
    AGGREGATE_COUNT = "aggregate"


class VerdictKind(enum.Enum):
    CONSISTENT = "consistent"
    DISCREPANCY = "discrepancy"
    SKIPPED = "skipped"


class SkipReason(enum.Enum):
    EXPECTED_ERROR = "expected-error"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class OracleVerdict:
    kind: VerdictKind
    optimized_count: Optional[int] = None
    unoptimized_count: Optional[int] = None
    optimized_sql: str = ""
    unoptimized_sql: str = ""
    strategy: Optional[CountStrategy] = None
    seed: Optional[int] = None
    skip_reason: Optional[SkipReason] = None
    skip_pattern: str = ""
    skipped_query: str = ""
    first_difference: Optional[Tuple] = None

    @property
    def is_discrepancy(self) -> bool:
        return self.kind is VerdictKind.DISCREPANCY


class UnexpectedEngineError(Exception):
    """An engine error not covered by the dialect's expected patterns;
    a candidate error bug."""

    def __init__(self, statement_sql: str, message: str):
        super().__init__(f"{message} (statement: {statement_sql})")
        self.statement_sql = statement_sql
        self.message = message


class EngineCrash(Exception):
    def __init__(self, statement_sql: str, message: str = "engine crashed"):
        super().__init__(message)
        self.statement_sql = statement_sql
        self.message = message


def matches_expected(message: str, patterns) -> Optional[str]:
    for pattern in patterns:
        if pattern in message:
            return pattern
    return None


def translate(q: A.SelectQuery) -> A.SelectQuery:
    """Rewrite an optimized query into its unoptimized twin.

    The WHERE predicate moves into the select list as `(p IS TRUE)`; FROM
    and JOIN clauses are copied verbatim, GROUP BY is kept, ORDER BY is
    dropped (it cannot change the count)."""
    phi = q.where if q.where is not None else A.Constant(True)
    return A.SelectQuery(
        select_list=(A.PostfixIs(phi, A.IsCheck.IS_TRUE),),
        from_tables=q.from_tables,
        joins=q.joins,
        where=None,
        group_by=q.group_by,
        order_by=(),
    )


def build_optimized_count_query(q: A.SelectQuery, strategy: CountStrategy) -> A.SelectQuery:
    """Statement whose result yields the optimized query's row count.

    GROUP BY queries always use per-group COUNT(*) rows that the caller
    sums, since a bare COUNT(*) over a grouped query would count groups."""
    count_star = A.FunctionCall("COUNT", (A.STAR,))
    if q.group_by:
        return replace(q, select_list=(count_star,), order_by=())
    if strategy is CountStrategy.NAIVE_ITERATION:
        return q
    return replace(q, select_list=(count_star,), order_by=())


def build_unoptimized_sum_query(q_unopt: A.SelectQuery, dialect: DialectProfile) -> A.DerivedSum:
    """Wrap the translated query in a SUM aggregate totalling TRUE rows;
    FALSE and NULL count as zero."""
    term = q_unopt.select_list[0]
    if dialect.bool_sum_needs_cast:
        term = A.Cast(term, "INT")
    if q_unopt.group_by:
        inner = replace(q_unopt, select_list=(A.FunctionCall("SUM", (term,)),))
    else:
        inner = replace(q_unopt, select_list=(term,))
    return A.DerivedSum(inner=inner)


def _normalize_count(v) -> int:
    if v is None:
        return 0
    if isinstance(v, float):
        return int(v)
    if isinstance(v, str):
        return int(float(v))
    return int(v)


def _run_statement(
    executor: Executor,
    stmt: A.Statement,
    dialect: DialectProfile,
    deadline: Optional[float],
) -> "EngineResult | OracleVerdict":
    sql = _safe_render(stmt, dialect)
    try:
        result = executor.execute(stmt, deadline=deadline)
    except QueryTimeout:
        return OracleVerdict(
            kind=VerdictKind.SKIPPED,
            skip_reason=SkipReason.TIMEOUT,
            skipped_query=sql,
        )
    if result.crashed:
        raise EngineCrash(sql, result.error or "engine crashed")
    if result.is_error:
        pattern = matches_expected(result.error, dialect.expected_errors_for("query"))
        if pattern is None:
            raise UnexpectedEngineError(sql, result.error)
        return OracleVerdict(
            kind=VerdictKind.SKIPPED,
            skip_reason=SkipReason.EXPECTED_ERROR,
            skip_pattern=pattern,
            skipped_query=sql,
        )
    return result


def _safe_render(stmt: A.Statement, dialect: DialectProfile) -> str:
    from .render import UnsupportedFeature

    try:
        return render_statement(stmt, dialect)
    except UnsupportedFeature:
        return f"<unrenderable {type(stmt).__name__}>"


def run_check(
    executor: Executor,
    q: A.SelectQuery,
    strategy: CountStrategy,
    dialect: DialectProfile,
    timeout: Optional[float] = None,
    seed: Optional[int] = None,
) -> OracleVerdict:
    """Execute one count-comparison check against an already-populated
    database. Expected engine errors on either side skip the check (AND/OR
    short-circuiting makes error behavior asymmetric between the two
    queries); unexpected errors and crashes raise."""
    deadline = time.monotonic() + timeout if timeout else None
    opt_stmt = build_optimized_count_query(q, strategy)
    unopt_stmt = build_unoptimized_sum_query(translate(q), dialect)

    opt_result = _run_statement(executor, opt_stmt, dialect, deadline)
    if isinstance(opt_result, OracleVerdict):
        return opt_result
    if q.group_by:
        optimized_count = sum(_normalize_count(r[0]) for r in opt_result.rows)
    elif strategy is CountStrategy.NAIVE_ITERATION:
        optimized_count = len(opt_result.rows)
    else:
        optimized_count = _normalize_count(opt_result.rows[0][0]) if opt_result.rows else 0

    unopt_result = _run_statement(executor, unopt_stmt, dialect, deadline)
    if isinstance(unopt_result, OracleVerdict):
        return unopt_result
    unoptimized_count = (
        _normalize_count(unopt_result.rows[0][0]) if unopt_result.rows else 0
    )

    kind = (
        VerdictKind.CONSISTENT
        if optimized_count == unoptimized_count
        else VerdictKind.DISCREPANCY
    )
    return OracleVerdict(
        kind=kind,
        optimized_count=optimized_count,
        unoptimized_count=unoptimized_count,
        optimized_sql=_safe_render(opt_stmt, dialect),
        unoptimized_sql=_safe_render(unopt_stmt, dialect),
        strategy=strategy,
        seed=seed,
    )


def build_content_query(q: A.SelectQuery, schema: A.SchemaDef) -> A.SelectQuery:
    """Translated query for content mode: every in-scope column plus the
    predicate-truth column last."""
    phi = q.where if q.where is not None else A.Constant(True)
    columns = []
    for tname in q.scope_tables():
        for col in schema.table(tname).columns:
            columns.append(A.ColumnRef(tname, col.name))
    select = tuple(columns) + (A.PostfixIs(phi, A.IsCheck.IS_TRUE),)
    return A.SelectQuery(
        select_list=select,
        from_tables=q.from_tables,
        joins=q.joins,
        where=None,
        group_by=(),
        order_by=(),
    )


def run_content_check(
    executor: Executor,
    q: A.SelectQuery,
    dialect: DialectProfile,
    schema: A.SchemaDef,
    timeout: Optional[float] = None,
    seed: Optional[int] = None,
) -> OracleVerdict:
    """Stricter mode: compare the optimized query's rows as a multiset with
    the TRUE-flagged rows of the translated query (naive strategy only).
    GROUP BY queries are out of scope for this mode."""
    if q.group_by:
        raise ValueError("content mode does not support GROUP BY queries")
    deadline = time.monotonic() + timeout if timeout else None
    plain = replace(q, order_by=())
    content = build_content_query(q, schema)

    opt_result = _run_statement(executor, plain, dialect, deadline)
    if isinstance(opt_result, OracleVerdict):
        return opt_result
    unopt_result = _run_statement(executor, content, dialect, deadline)
    if isinstance(unopt_result, OracleVerdict):
        return unopt_result

    optimized = Counter(tuple(r) for r in opt_result.rows)
    expected = Counter(
        tuple(r[:-1]) for r in unopt_result.rows if _normalize_count(r[-1]) == 1
    )
    first_diff = None
    for row in (optimized - expected) + (expected - optimized):
        first_diff = row
        break
    kind = VerdictKind.CONSISTENT if optimized == expected else VerdictKind.DISCREPANCY
    return OracleVerdict(
        kind=kind,
        optimized_count=sum(optimized.values()),
        unoptimized_count=sum(expected.values()),
        optimized_sql=_safe_render(plain, dialect),
        unoptimized_sql=_safe_render(content, dialect),
        strategy=CountStrategy.NAIVE_ITERATION,
        seed=seed,
        first_difference=first_diff,
    )
