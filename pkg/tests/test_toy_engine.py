"""Toy engine: optimized pipeline equivalence, injection locality,
constraint enforcement, cross-checking against the embedded engine."""

import random

import optfuzz.sqlast as A
from optfuzz import (
    BugInjection,
    GenConfig,
    SqliteExecutor,
    ToyEngine,
    database_rng,
    generate_optimized_query,
    generate_schema,
    populate,
    sqlite_profile,
    toy_profile,
)
from optfuzz.render import render_statement
from conftest import ALL_SCENARIOS, build_engine


def _c(v):
    return A.Constant(v)


def test_optimized_pipeline_matches_naive_iteration():
    """Without injections the optimized select path must return the same
    multiset of rows as plain per-row evaluation."""
    dialect = toy_profile()
    gen = GenConfig(seed=0)
    checked = 0
    for db in range(60):
        rng = database_rng(0, db)
        engine = ToyEngine(dialect)
        schema, ddl = generate_schema(rng, gen, dialect)
        for prepared in ddl + populate(rng, schema, gen, dialect):
            engine.execute(prepared.statement)
        for _ in range(25):
            q = generate_optimized_query(rng, schema, gen, dialect)
            opt = engine.execute(q)
            naive = engine.execute_naive(q)
            if opt.is_error or naive.is_error:
                assert opt.error == naive.error or (
                    opt.is_error and naive.is_error
                ), (opt.error, naive.error)
                continue
            key = lambda rows: sorted(map(repr, rows))
            assert key(opt.rows) == key(naive.rows), render_statement(q, dialect)
            checked += 1
    assert checked > 500


def test_unique_constraint_enforced():
    engine = ToyEngine(toy_profile())
    t = A.TableDef("t0", (A.ColumnDef("c0", "INT", unique=True),))
    engine.execute(A.CreateTable(t))
    assert not engine.execute(A.Insert("t0", ("c0",), ((_c(1),),))).is_error
    dup = engine.execute(A.Insert("t0", ("c0",), ((_c(1),),)))
    assert dup.is_error and "UNIQUE" in dup.error
    # NULLs never collide
    assert not engine.execute(A.Insert("t0", ("c0",), ((_c(None),), (_c(None),)))).is_error


def test_unique_nocase_collision():
    engine = ToyEngine(toy_profile())
    t = A.TableDef("t0", (A.ColumnDef("c0", "TEXT", unique=True, collation="NOCASE"),))
    engine.execute(A.CreateTable(t))
    engine.execute(A.Insert("t0", ("c0",), ((_c("a"),),)))
    assert engine.execute(A.Insert("t0", ("c0",), ((_c("A"),),))).is_error


def test_insert_applies_column_affinity():
    engine = ToyEngine(toy_profile())
    t = A.TableDef("t0", (A.ColumnDef("c0", "INT"),))
    engine.execute(A.CreateTable(t))
    engine.execute(A.Insert("t0", ("c0",), ((_c("1"),),)))
    rows = engine.execute(A.SelectQuery((A.STAR,), ("t0",), (), None)).rows
    assert [list(r) for r in rows] == [[1]]


def test_each_injection_changes_only_its_trigger_scenario():
    """Every injection flips its own scenario's count and leaves all other
    scenarios untouched."""
    for scenario in ALL_SCENARIOS:
        for injection in list(BugInjection):
            engine = build_engine(scenario, injection=injection)
            result = engine.execute(scenario.query)
            assert not result.is_error, result.error
            expected = (
                scenario.buggy_optimized_count
                if injection is scenario.injection
                else scenario.correct_count
            )
            # value corruption preserves cardinality by design
            if injection is BugInjection.VALUE_CORRUPTION:
                expected = scenario.correct_count
            assert len(result.rows) == expected, (scenario.name, injection)


def test_value_corruption_changes_content_not_count():
    t = A.TableDef("t0", (A.ColumnDef("c0", "INT"),))
    q = A.SelectQuery((A.STAR,), ("t0",), (), None)
    rows = {}
    for injection in (None, BugInjection.VALUE_CORRUPTION):
        engine = ToyEngine(toy_profile(), injection=injection)
        engine.execute(A.CreateTable(t))
        engine.execute(A.Insert("t0", ("c0",), ((_c(7),), (_c(8),))))
        rows[injection] = engine.execute(q).rows
    assert len(rows[None]) == len(rows[BugInjection.VALUE_CORRUPTION])
    assert rows[None] != rows[BugInjection.VALUE_CORRUPTION]


def test_group_by_and_order_by():
    engine = ToyEngine(toy_profile())
    t = A.TableDef("t0", (A.ColumnDef("c0", "INT"), A.ColumnDef("c1", "INT")))
    engine.execute(A.CreateTable(t))
    engine.execute(
        A.Insert("t0", ("c0", "c1"), ((_c(1), _c(10)), (_c(1), _c(20)), (_c(2), _c(30))))
    )
    grouped = engine.execute(
        A.SelectQuery(
            (A.FunctionCall("COUNT", (A.STAR,)),), ("t0",), (), None,
            group_by=(A.ColumnRef("t0", "c0"),),
        )
    )
    assert sorted(r[0] for r in grouped.rows) == [1, 2]
    ordered = engine.execute(
        A.SelectQuery(
            (A.STAR,), ("t0",), (), None,
            order_by=((A.ColumnRef("t0", "c1"), "DESC"),),
        )
    )
    assert [r[1] for r in ordered.rows] == [30, 20, 10]


def test_toy_agrees_with_embedded_engine_on_random_statements():
    """Render generated workloads and run them on the embedded engine too;
    the row multisets of every successfully executed query must agree."""
    dialect = sqlite_profile()
    gen = GenConfig(seed=0)
    agreements = 0
    for db in range(25):
        rng = database_rng(1000, db)
        toy = ToyEngine(dialect)
        embedded = SqliteExecutor()
        schema, ddl = generate_schema(rng, gen, dialect)
        for prepared in ddl + populate(rng, schema, gen, dialect):
            rt = toy.execute(prepared.statement)
            re_ = embedded.execute(prepared.statement)
            assert rt.is_error == re_.is_error, (
                render_statement(prepared.statement, dialect), rt.error, re_.error)
        for _ in range(20):
            q = generate_optimized_query(rng, schema, gen, dialect)
            rt = toy.execute(q)
            re_ = embedded.execute(q)
            if rt.is_error or re_.is_error:
                assert rt.is_error == re_.is_error, (
                    render_statement(q, dialect), rt.error, re_.error)
                continue
            norm = lambda rows: sorted(
                repr(tuple(
                    float(v) if isinstance(v, int) and not isinstance(v, bool) else v
                    for v in r
                ))
                for r in rows
            )
            assert norm(rt.rows) == norm(re_.rows), render_statement(q, dialect)
            agreements += 1
        embedded.close()
    assert agreements > 300
