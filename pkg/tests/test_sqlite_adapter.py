"""Embedded-engine adapter: execution, error classification, timeouts, and
rendered-SQL validity."""

import pytest

import optfuzz.sqlast as A
from optfuzz import (
    GenConfig,
    SqliteExecutor,
    database_rng,
    generate_optimized_query,
    generate_schema,
    populate,
    sqlite_profile,
)
from optfuzz.engines.base import QueryTimeout
from optfuzz.render import render_statement


def _c(v):
    return A.Constant(v)


def test_basic_roundtrip():
    ex = SqliteExecutor()
    t = A.TableDef("t0", (A.ColumnDef("c0", "INT"), A.ColumnDef("c1", "TEXT")))
    assert not ex.execute(A.CreateTable(t)).is_error
    assert not ex.execute(
        A.Insert("t0", ("c0", "c1"), ((_c(1), _c("a")), (_c(2), _c("b"))))
    ).is_error
    result = ex.execute(
        A.SelectQuery((A.STAR,), ("t0",), (), A.Binary(">", A.ColumnRef("t0", "c0"), _c(1)))
    )
    assert result.rows == [(2, "b")]
    ex.close()


def test_errors_are_classified_not_raised():
    ex = SqliteExecutor()
    result = ex.execute_sql("SELECT * FROM missing_table")
    assert result.is_error and "no such table" in result.error
    result = ex.execute_sql("SELEKT 1")
    assert result.is_error and "syntax error" in result.error
    ex.close()


def test_reset_clears_state():
    ex = SqliteExecutor()
    ex.execute_sql("CREATE TABLE t0(c0)")
    ex.reset()
    assert ex.execute_sql("SELECT * FROM t0").is_error
    ex.close()


def test_timeout_raises_query_timeout():
    ex = SqliteExecutor()
    ex.execute_sql("CREATE TABLE big(n)")
    ex.execute_sql(
        "INSERT INTO big SELECT 1 FROM (SELECT 1 UNION ALL SELECT 2 UNION ALL SELECT 3 "
        "UNION ALL SELECT 4 UNION ALL SELECT 5 UNION ALL SELECT 6 UNION ALL SELECT 7 "
        "UNION ALL SELECT 8 UNION ALL SELECT 9 UNION ALL SELECT 10) a, "
        "(SELECT 1 UNION ALL SELECT 2 UNION ALL SELECT 3 UNION ALL SELECT 4 "
        "UNION ALL SELECT 5 UNION ALL SELECT 6 UNION ALL SELECT 7 UNION ALL SELECT 8 "
        "UNION ALL SELECT 9 UNION ALL SELECT 10) b"
    )
    import time

    with pytest.raises(QueryTimeout):
        ex.execute_sql(
            "SELECT COUNT(*) FROM big a, big b, big c, big d, big e",
            deadline=time.monotonic() + 0.05,
        )
    ex.close()


def test_generated_sql_is_syntactically_valid():
    """Every rendered statement either succeeds or fails with a dialect
    whitelisted runtime error — never a syntax error."""
    dialect = sqlite_profile()
    config = GenConfig(seed=3)
    issued = 0
    for db in range(20):
        rng = database_rng(3, db)
        ex = SqliteExecutor()
        schema, ddl = generate_schema(rng, config, dialect)
        for prepared in ddl + populate(rng, schema, config, dialect):
            result = ex.execute(prepared.statement)
            issued += 1
            if result.is_error:
                assert "syntax error" not in result.error, render_statement(
                    prepared.statement, dialect
                )
        for _ in range(20):
            q = generate_optimized_query(rng, schema, config, dialect)
            result = ex.execute(q)
            issued += 1
            if result.is_error:
                assert "syntax error" not in result.error, render_statement(q, dialect)
        ex.close()
    assert issued > 400
