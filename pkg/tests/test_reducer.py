"""Test-case reduction: padding removal, verdict preservation, idempotence."""

import time

import pytest

import optfuzz.sqlast as A
from optfuzz import BugInjection, ToyEngine, toy_profile
from optfuzz.reducer import (
    NotReproducible,
    TestCase as ReducerCase,
    VerdictClass,
    normalize_error,
    reduce,
    replay,
)


def _c(v):
    return A.Constant(v)


def _p(stmt):
    return A.Prepared(stmt)


def _padded_case() -> ReducerCase:
    """A null-filter discrepancy buried under unrelated tables, rows, and
    predicate padding."""
    t0 = A.TableDef("t0", (A.ColumnDef("c0", "INT"), A.ColumnDef("c1", "TEXT")))
    t1 = A.TableDef("t1", (A.ColumnDef("c0", "INT"),))
    t2 = A.TableDef("t2", (A.ColumnDef("c0", "REAL"),))
    setup = (
        _p(A.CreateTable(t0)),
        _p(A.CreateTable(t1)),
        _p(A.CreateTable(t2)),
        _p(A.Insert("t0", ("c0", "c1"), ((_c(None), _c("pad")), (_c(1), _c("x")), (_c(7), _c("y"))))),
        _p(A.Insert("t1", ("c0",), ((_c(5),),))),
        _p(A.Insert("t2", ("c0",), ((_c(0.5),),))),
    )
    # [DERIVED] BETWEEN over a NULL bound is NULL, so the row must not
    # count; the injected rewrite keeps every not-FALSE row.
    core = A.Between(A.ColumnRef("t0", "c0"), _c(0), _c(None))
    padded = A.Binary("AND", core, A.Binary("OR", _c(True), A.Binary(">", A.ColumnRef("t0", "c1"), _c("a"))))
    q = A.SelectQuery((A.STAR,), ("t0",), (), padded)
    return ReducerCase(
        setup_statements=setup,
        query=q,
        dialect=toy_profile(),
        seed=0,
        verdict_class=VerdictClass.DISCREPANCY,
    )


def _factory():
    return ToyEngine(toy_profile(), injection=BugInjection.NULL_FILTER_AS_FALSE)


def test_reduction_shrinks_and_preserves_verdict():
    tc = _padded_case()
    start = time.monotonic()
    reduced = reduce(tc, _factory)
    assert time.monotonic() - start < 60
    assert len(reduced.setup_statements) < len(tc.setup_statements)
    # The unrelated tables must be gone; only t0 survives.
    tables = {
        s.statement.table.name
        for s in reduced.setup_statements
        if isinstance(s.statement, A.CreateTable)
    }
    assert tables == {"t0"}
    assert replay(reduced, _factory()) is VerdictClass.DISCREPANCY


def test_reduction_is_idempotent():
    reduced = reduce(_padded_case(), _factory)
    again = reduce(reduced, _factory)
    assert again == reduced


def test_non_reproducing_case_is_rejected():
    tc = _padded_case()
    with pytest.raises(NotReproducible):
        reduce(tc, lambda: ToyEngine(toy_profile()))  # no injection: consistent


def test_error_normalization_strips_identifiers_and_literals():
    a = normalize_error("no such column: t3.c9 near '5'")
    b = normalize_error("no such column: t1.c2 near '77'")
    assert a == b
