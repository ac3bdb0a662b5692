"""Count-comparison oracle: translation shape, counting strategies, and
content mode."""

import optfuzz.sqlast as A
from optfuzz import CountStrategy, ToyEngine, run_check, run_content_check, toy_profile
from optfuzz.oracle import (
    VerdictKind,
    build_optimized_count_query,
    build_unoptimized_sum_query,
    translate,
)
from optfuzz.render import render_statement


def _c(v):
    return A.Constant(v)


def _query(where, **kw):
    return A.SelectQuery((A.STAR,), ("t0",), (), where, **kw)


def test_translate_moves_where_into_select_list():
    q = _query(A.Binary(">", A.ColumnRef("t0", "c0"), _c(0)))
    u = translate(q)
    assert u.where is None
    assert len(u.select_list) == 1
    probe = u.select_list[0]
    assert isinstance(probe, A.PostfixIs)
    assert probe.check is A.IsCheck.IS_TRUE
    assert probe.operand == q.where


def test_translate_drops_order_by_keeps_joins():
    q = A.SelectQuery(
        (A.STAR,),
        ("t0",),
        (A.JoinClause(A.JoinKind.INNER, "t1", A.Binary("=", A.ColumnRef("t0", "c0"), A.ColumnRef("t1", "c0"))),),
        A.Binary("<", A.ColumnRef("t1", "c0"), _c(5)),
        order_by=((A.ColumnRef("t0", "c0"), "ASC"),),
    )
    u = translate(q)
    assert u.order_by == ()
    assert u.joins == q.joins
    assert u.from_tables == q.from_tables


def test_translate_without_where_uses_constant_true():
    u = translate(_query(None))
    probe = u.select_list[0]
    assert isinstance(probe, A.PostfixIs) and probe.operand == _c(True)


def test_unoptimized_sum_sql_shape():
    dialect = toy_profile()
    q = _query(A.Binary(">", A.ColumnRef("t0", "c0"), _c(0)))
    stmt = build_unoptimized_sum_query(translate(q), dialect)
    sql = render_statement(stmt, dialect)
    assert sql.startswith("SELECT SUM(count) FROM (SELECT ")
    assert "IS TRUE) AS count FROM t0" in sql


def test_aggregate_strategy_uses_count_star():
    q = _query(A.Binary(">", A.ColumnRef("t0", "c0"), _c(0)))
    agg = build_optimized_count_query(q, CountStrategy.AGGREGATE_COUNT)
    sql = render_statement(agg, toy_profile())
    assert sql.startswith("SELECT COUNT(*) FROM t0")
    naive = build_optimized_count_query(q, CountStrategy.NAIVE_ITERATION)
    assert naive == q


def _engine_with_rows(values):
    engine = ToyEngine(toy_profile())
    t = A.TableDef("t0", (A.ColumnDef("c0", "INT"),))
    engine.execute(A.CreateTable(t))
    if values:
        engine.execute(A.Insert("t0", ("c0",), tuple((_c(v),) for v in values)))
    return engine, A.SchemaDef((t,))


def test_check_counts_true_rows_both_strategies():
    # [DERIVED] 1, NULL, 3 under c0 > 2: one TRUE, one NULL, one FALSE.
    engine, _ = _engine_with_rows([1, None, 3])
    q = _query(A.Binary(">", A.ColumnRef("t0", "c0"), _c(2)))
    for strategy in CountStrategy:
        v = run_check(engine, q, strategy, toy_profile())
        assert v.kind is VerdictKind.CONSISTENT
        assert v.optimized_count == v.unoptimized_count == 1


def test_check_on_empty_table_sum_null_counts_as_zero():
    engine, _ = _engine_with_rows([])
    q = _query(A.Binary(">", A.ColumnRef("t0", "c0"), _c(0)))
    v = run_check(engine, q, CountStrategy.AGGREGATE_COUNT, toy_profile())
    assert v.kind is VerdictKind.CONSISTENT
    assert v.optimized_count == v.unoptimized_count == 0


def test_check_group_by_totals_per_group_counts():
    # [DERIVED] values 1,1,2,NULL with c0 IS NOT NULL: groups {1:2, 2:1},
    # NULL group contributes 0 — total 3 on both sides.
    engine, _ = _engine_with_rows([1, 1, 2, None])
    q = _query(
        A.PostfixIs(A.ColumnRef("t0", "c0"), A.IsCheck.IS_NOT_NULL),
        group_by=(A.ColumnRef("t0", "c0"),),
    )
    for strategy in CountStrategy:
        v = run_check(engine, q, strategy, toy_profile())
        assert v.kind is VerdictKind.CONSISTENT
        assert v.optimized_count == 3


def test_content_check_compares_row_multisets():
    engine, schema = _engine_with_rows([1, 2, 2, 3])
    q = _query(A.Binary("<", A.ColumnRef("t0", "c0"), _c(3)))
    v = run_content_check(engine, q, toy_profile(), schema)
    assert v.kind is VerdictKind.CONSISTENT
    assert v.optimized_count == 3
