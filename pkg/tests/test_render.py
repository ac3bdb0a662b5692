"""SQL rendering: golden strings, escaping, determinism, dialect gating."""

import pytest

import optfuzz.sqlast as A
from optfuzz import sqlite_profile, toy_profile
from optfuzz.render import UnsupportedFeature, render_expression, render_statement


def test_render_glob_filter_query():
    q = A.SelectQuery(
        (A.STAR,), ("t0",), (),
        A.Binary("GLOB", A.ColumnRef("t0", "c0"), A.Constant("-*")),
    )
    assert render_statement(q, toy_profile()) == (
        "SELECT * FROM t0 WHERE (t0.c0 GLOB '-*');"
    )


def test_render_derived_sum_form():
    q = A.SelectQuery(
        (A.PostfixIs(A.Binary(">", A.ColumnRef("t0", "c0"), A.Constant(1)), A.IsCheck.IS_TRUE),),
        ("t0",), (), None,
    )
    sql = render_statement(A.DerivedSum(q), toy_profile())
    assert sql == (
        "SELECT SUM(count) FROM (SELECT ((t0.c0 > 1) IS TRUE) AS count FROM t0) AS sub;"
    )


def test_render_string_escaping():
    assert render_expression(A.Constant("x'y"), toy_profile()) == "'x''y'"


def test_render_null_and_bools():
    assert render_expression(A.Constant(None), toy_profile()) == "NULL"
    # no native boolean type: rendered as integers
    assert render_expression(A.Constant(True), sqlite_profile()) == "1"
    assert render_expression(A.Constant(False), sqlite_profile()) == "0"


def test_render_create_table_with_constraints():
    t = A.TableDef(
        "t0",
        (
            A.ColumnDef("c0", "INT", unique=True),
            A.ColumnDef("c1", "TEXT", collation="NOCASE"),
            A.ColumnDef("c2", "", primary_key=True),
        ),
    )
    sql = render_statement(A.CreateTable(t), sqlite_profile())
    assert "c0 INT UNIQUE" in sql
    assert "COLLATE NOCASE" in sql
    assert "PRIMARY KEY" in sql


def test_render_create_index_unqualified_keys():
    idx = A.IndexDef(
        "i0", "t0", (A.ColumnRef("t0", "c0"),),
        partial_predicate=A.Binary(">", A.ColumnRef("t0", "c0"), A.Constant(0)),
    )
    sql = render_statement(A.CreateIndex(idx), sqlite_profile())
    assert sql == "CREATE INDEX i0 ON t0(c0) WHERE (c0 > 0);"


def test_render_joins_and_clauses():
    q = A.SelectQuery(
        (A.STAR,), ("t0",),
        (A.JoinClause(A.JoinKind.INNER, "t1", A.Binary("=", A.ColumnRef("t0", "c0"), A.ColumnRef("t1", "c0"))),),
        A.Constant(1),
        group_by=(A.ColumnRef("t0", "c0"),),
        order_by=((A.ColumnRef("t1", "c0"), "DESC"),),
    )
    sql = render_statement(q, toy_profile())
    assert "JOIN t1 ON (t0.c0 = t1.c0)" in sql
    assert "GROUP BY t0.c0" in sql
    assert "ORDER BY t1.c0 DESC" in sql


def test_symmetric_between_rejected_where_unsupported():
    b = A.Between(A.Constant(1), A.Constant(0), A.Constant(2), symmetric=True)
    assert "SYMMETRIC" in render_expression(b, toy_profile())
    with pytest.raises(UnsupportedFeature):
        render_expression(b, sqlite_profile())


def test_rendering_is_deterministic():
    q = A.SelectQuery(
        (A.STAR,), ("t0",), (),
        A.InList(A.Constant("1"), (A.ColumnRef("t0", "c0"), A.Constant(2)), negated=True),
    )
    assert render_statement(q, toy_profile()) == render_statement(q, toy_profile())
