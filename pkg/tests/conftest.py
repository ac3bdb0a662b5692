"""Shared scenario builders for the regression suites.

Each scenario is a (setup statements, query, expected optimized count,
expected unoptimized count, triggering injection) bundle with known-correct
counts derived by hand from the value semantics.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import pytest

import optfuzz.sqlast as A
from optfuzz import BugInjection, ToyEngine, toy_profile


@dataclass(frozen=True)
class Scenario:
    name: str
    setup: Tuple[A.Statement, ...]
    query: A.SelectQuery
    correct_count: int
    buggy_optimized_count: int
    injection: Optional[BugInjection]


def _c(v):
    return A.Constant(v)


def glob_prefix_range_scenario() -> Scenario:
    """GLOB with a literal prefix over an indexed integer column; the faulty
    range scan skips numeric storage whose text form matches."""
    t = A.TableDef("t0", (A.ColumnDef("c0", "INT", unique=True),))
    return Scenario(
        name="glob_prefix_range",
        setup=(A.CreateTable(t), A.Insert("t0", ("c0",), ((_c(-1),),))),
        query=A.SelectQuery(
            (A.STAR,), ("t0",), (),
            A.Binary("GLOB", A.ColumnRef("t0", "c0"), _c("-*")),
        ),
        correct_count=1,
        buggy_optimized_count=0,
        injection=BugInjection.LIKE_RANGE_SKIP,
    )


def in_affinity_scenario() -> Scenario:
    """Single-element IN must not apply column affinity to the probe; the
    faulty rewrite to `=` does."""
    t = A.TableDef("t0", (A.ColumnDef("c0", "INT"),))
    return Scenario(
        name="in_affinity",
        setup=(A.CreateTable(t), A.Insert("t0", ("c0",), ((_c(1),),))),
        query=A.SelectQuery(
            (A.STAR,), ("t0",), (),
            A.InList(_c("1"), (A.ColumnRef("t0", "c0"),)),
        ),
        correct_count=0,
        buggy_optimized_count=1,
        injection=BugInjection.IN_TO_EQ_AFFINITY,
    )


def string_range_bound_scenario() -> Scenario:
    """`col < '\\n2'` on a numeric-affinity indexed column: the faulty bound
    derivation collapses a whitespace-prefixed numeric string to <= 0."""
    t = A.TableDef("t0", (A.ColumnDef("c0", "INT", unique=True),))
    return Scenario(
        name="string_range_bound",
        setup=(A.CreateTable(t), A.Insert("t0", ("c0",), ((_c(0),), (_c(1),)))),
        query=A.SelectQuery(
            (A.STAR,), ("t0",), (),
            A.Binary("<", A.ColumnRef("t0", "c0"), _c("\n2")),
        ),
        correct_count=2,
        buggy_optimized_count=1,
        injection=BugInjection.STRING_RANGE_BOUND,
    )


def collation_commute_scenario() -> Scenario:
    """Commuting `c1 <= c0` where only c0 declares NOCASE must keep the left
    column's BINARY collation in effect."""
    t = A.TableDef(
        "t0",
        (A.ColumnDef("c0", "TEXT", collation="NOCASE"), A.ColumnDef("c1", "TEXT")),
    )
    return Scenario(
        name="collation_commute",
        setup=(A.CreateTable(t), A.Insert("t0", ("c0", "c1"), ((_c("B"), _c("a")),))),
        query=A.SelectQuery(
            (A.STAR,), ("t0",), (),
            A.Binary("<=", A.ColumnRef("t0", "c1"), A.ColumnRef("t0", "c0")),
        ),
        correct_count=0,
        buggy_optimized_count=1,
        injection=BugInjection.COMMUTE_DROPS_COLLATION,
    )


def cross_product_scenario() -> Scenario:
    """2x1 comma cross product with an always-true predicate: counts 2."""
    t0 = A.TableDef("t0", (A.ColumnDef("c0", "INT"),))
    t1 = A.TableDef("t1", (A.ColumnDef("c0", "INT"),))
    return Scenario(
        name="cross_product",
        setup=(
            A.CreateTable(t0),
            A.CreateTable(t1),
            A.Insert("t0", ("c0",), ((_c(1),), (_c(2),))),
            A.Insert("t1", ("c0",), ((_c(3),),)),
        ),
        query=A.SelectQuery(
            (A.STAR,), ("t0", "t1"), (),
            A.Binary("<", A.ColumnRef("t0", "c0"), A.ColumnRef("t1", "c0")),
        ),
        correct_count=2,
        buggy_optimized_count=2,
        injection=None,
    )


def float_int_equality_scenario() -> Scenario:
    """`0.5 = c0` with integer storage 0: affinity must not round."""
    t = A.TableDef("t0", (A.ColumnDef("c0", "INT"),))
    return Scenario(
        name="float_int_equality",
        setup=(A.CreateTable(t), A.Insert("t0", ("c0",), ((_c(0),),))),
        query=A.SelectQuery(
            (A.STAR,), ("t0",), (),
            A.Binary("=", _c(0.5), A.ColumnRef("t0", "c0")),
        ),
        correct_count=0,
        buggy_optimized_count=0,
        injection=None,
    )


ALL_SCENARIOS = (
    glob_prefix_range_scenario(),
    in_affinity_scenario(),
    string_range_bound_scenario(),
    collation_commute_scenario(),
    cross_product_scenario(),
    float_int_equality_scenario(),
)


def build_engine(scenario: Scenario, injection=None) -> ToyEngine:
    engine = ToyEngine(toy_profile(), injection=injection)
    for stmt in scenario.setup:
        result = engine.execute(stmt)
        assert not result.is_error, result.error
    return engine


@pytest.fixture
def toy_engine():
    return ToyEngine(toy_profile())
