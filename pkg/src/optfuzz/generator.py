"""Seeded random generation of schemas, data and optimized queries.

Everything is driven by one `random.Random` instance per database, so an
identical (seed, config, dialect) triple reproduces the exact statement
sequence. The grammar deliberately contains no subqueries, no DISTINCT,
and only whitelisted deterministic functions; those constructs make the
count comparison ambiguous.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from . import sqlast as A
from .dialect import DialectProfile, is_deterministic
from .values import SqlValue


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_tables: int = 3
    max_columns_per_table: int = 3
    max_rows: int = 8
    max_expr_depth: int = 5
    max_joins: int = 1
    join_probability: float = 0.22
    order_by_probability: float = 0.12
    group_by_probability: float = 0.08
    update_probability: float = 0.15
    delete_probability: float = 0.1
    null_probability: float = 0.25
    # Relative weights for inner expression node kinds; comparisons and
    # logical connectives dominate because that is where planner rewrites
    # live.
    node_weights: Dict[str, float] = field(
        default_factory=lambda: {
            "comparison": 3.2,
            "logic": 2.6,
            "not": 0.7,
            "arith": 0.9,
            "concat": 0.35,
            "glob": 0.8,
            "between": 0.9,
            "in": 1.0,
            "is": 0.8,
            "function": 0.5,
            "cast": 0.35,
            "collate": 0.25,
            "leaf": 1.6,
        }
    )

    def validate(self) -> None:
        for name in ("max_tables", "max_columns_per_table", "max_expr_depth"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.max_rows < 0 or self.max_joins < 0:
            raise ValueError("max_rows and max_joins must be >= 0")
        if any(w < 0 for w in self.node_weights.values()) or not any(
            self.node_weights.values()
        ):
            raise ValueError("node weights must be nonnegative and not all zero")


# Text pool: printable ASCII plus escape-relevant characters, with
# numeric-looking and case-twin strings to exercise affinity and collation
# handling.
_TEXT_POOL = (
    "",
    "a",
    "A",
    "b",
    "B",
    "ab",
    "aB",
    "-",
    "-1",
    "0",
    "1",
    "2",
    "0.0",
    "1.5",
    "\n2",
    " 1",
    "x'y",
    "a\\b",
    "*",
)

_INT_POOL = (0, 1, -1, 2, 5, 10, -10, 100, 2**40, -(2**40))
_REAL_POOL = (0.0, 0.5, 1.0, -1.5, 1e10)

_GLOB_PATTERNS = ("-*", "a*", "A*", "*", "?", "a?", "1*", "*a", "-?*", "b*")

_DECLARED_TYPES = ("", "INT", "INTEGER", "TEXT", "REAL", "NUMERIC")

_FUNCTIONS = ("LENGTH", "ABS", "LOWER", "UPPER")


ColumnScope = Sequence[Tuple[str, A.ColumnDef]]


def random_constant(rng: random.Random, config: GenConfig) -> A.Constant:
    roll = rng.random()
    if roll < config.null_probability:
        return A.Constant(None)
    kind = rng.random()
    if kind < 0.45:
        return A.Constant(rng.choice(_INT_POOL))
    if kind < 0.6:
        return A.Constant(rng.choice(_REAL_POOL))
    return A.Constant(rng.choice(_TEXT_POOL))


def generate_schema(
    rng: random.Random, config: GenConfig, dialect: DialectProfile
) -> Tuple[A.SchemaDef, List[A.Prepared]]:
    """Random tables with optional UNIQUE/PRIMARY KEY constraints, collations
    and (partial) indexes, plus the DDL statements that reproduce them."""
    n_tables = rng.randint(1, config.max_tables)
    tables = []
    statements: List[A.Prepared] = []
    ddl_errors = dialect.expected_errors_for("ddl")
    for t in range(n_tables):
        n_cols = rng.randint(1, config.max_columns_per_table)
        cols = []
        has_pk = False
        for c in range(n_cols):
            declared = rng.choice(_DECLARED_TYPES)
            unique = rng.random() < 0.25
            primary = not has_pk and rng.random() < 0.1
            has_pk = has_pk or primary
            if primary and declared.upper() == "INTEGER":
                # An exact INTEGER PRIMARY KEY is the embedded engine's
                # rowid alias with strict insert typing; keep primary keys
                # ordinary columns instead.
                declared = "INT"
            collation = None
            if dialect.has_collate_nocase and rng.random() < 0.35:
                collation = "NOCASE"
                # A case-insensitive collation only matters on text storage.
                if rng.random() < 0.8:
                    declared = "TEXT"
            cols.append(
                A.ColumnDef(
                    name=f"c{c}",
                    declared_type=declared,
                    unique=unique and not primary,
                    primary_key=primary,
                    collation=collation,
                )
            )
        table = A.TableDef(name=f"t{t}", columns=tuple(cols))
        tables.append(table)
        statements.append(A.Prepared(A.CreateTable(table), ddl_errors))

    indexes = []
    for t, table in enumerate(tables):
        if rng.random() < 0.4:
            col = rng.choice(table.columns)
            partial = None
            if dialect.supports_partial_indexes and rng.random() < 0.2:
                partial = generate_predicate(
                    rng, [(table.name, c) for c in table.columns], 2, config, dialect
                )
            idx = A.IndexDef(
                name=f"i{len(indexes)}",
                table=table.name,
                key_expressions=(A.ColumnRef(table.name, col.name),),
                unique=rng.random() < 0.25,
                partial_predicate=partial,
            )
            indexes.append(idx)
            statements.append(A.Prepared(A.CreateIndex(idx), ddl_errors))

    return A.SchemaDef(tables=tuple(tables), indexes=tuple(indexes)), statements


def populate(
    rng: random.Random,
    schema: A.SchemaDef,
    config: GenConfig,
    dialect: DialectProfile,
) -> List[A.Prepared]:
    """INSERTs (NULL-heavy, sometimes multi-row), plus occasional UPDATE and
    DELETE statements to perturb storage state. Each statement carries the
    engine-error patterns it is allowed to fail with."""
    statements: List[A.Prepared] = []
    dml_errors = dialect.expected_errors_for("dml")
    for table in schema.tables:
        n_rows = rng.randint(0, config.max_rows)
        remaining = n_rows
        while remaining > 0:
            batch = min(remaining, rng.randint(1, 4))
            remaining -= batch
            columns = tuple(c.name for c in table.columns)
            rows = tuple(
                tuple(random_constant(rng, config) for _ in columns)
                for _ in range(batch)
            )
            statements.append(
                A.Prepared(A.Insert(table.name, columns, rows), dml_errors)
            )
        scope = [(table.name, c) for c in table.columns]
        if rng.random() < config.update_probability and table.columns:
            col = rng.choice(table.columns)
            stmt = A.Update(
                table.name,
                assignments=((col.name, random_constant(rng, config)),),
                where=generate_predicate(rng, scope, 2, config, dialect),
            )
            statements.append(A.Prepared(stmt, dml_errors))
        if rng.random() < config.delete_probability:
            stmt = A.Delete(
                table.name, where=generate_predicate(rng, scope, 2, config, dialect)
            )
            statements.append(A.Prepared(stmt, dml_errors))
    return statements


def _weighted_choice(rng: random.Random, weights: Dict[str, float], allowed) -> str:
    names = [n for n in allowed if weights.get(n, 0) > 0]
    total = sum(weights[n] for n in names)
    if not names or total <= 0:
        return "leaf"
    roll = rng.random() * total
    for name in names:
        roll -= weights[name]
        if roll <= 0:
            return name
    return names[-1]


def generate_predicate(
    rng: random.Random,
    scope: ColumnScope,
    depth: int,
    config: GenConfig,
    dialect: DialectProfile,
) -> A.Expression:
    """Random expression over the given column scope, depth-bounded,
    deterministic per rng state, free of subqueries and non-whitelisted
    functions."""

    def leaf() -> A.Expression:
        if scope and rng.random() < 0.55:
            tname, col = rng.choice(list(scope))
            return A.ColumnRef(tname, col.name)
        return random_constant(rng, config)

    def gen(d: int) -> A.Expression:
        if d <= 0:
            return leaf()
        allowed = list(config.node_weights)
        kind = _weighted_choice(rng, config.node_weights, allowed)
        if kind == "leaf":
            return leaf()
        if kind == "comparison":
            op = rng.choice(A.COMPARISON_OPS)
            # Bias toward the shapes optimizers rewrite: column-vs-constant
            # (index range scans) and column-vs-column (commuting, collation
            # resolution). The general recursive shape keeps the rest covered.
            shape = rng.random()
            if scope and shape < 0.45:
                tname, col = rng.choice(list(scope))
                # Range bounds that are numeric-looking text (optionally with
                # surrounding whitespace) stress the scan-bound derivation, so
                # feed them in at an elevated rate.
                if op in ("<", "<=", ">", ">=") and rng.random() < 0.25:
                    const = A.Constant(rng.choice(("\n2", " 1", "2", "-1", "0.0")))
                else:
                    const = random_constant(rng, config)
                return A.Binary(op, A.ColumnRef(tname, col.name), const)
            if scope and shape < 0.70:
                pairs = list(scope)
                lt, lc = rng.choice(pairs)
                rt, rc = rng.choice(pairs)
                # Comparisons resolve collation from the operands, so pairing
                # a collated column against an uncollated one on the right is
                # the interesting case; steer there when the scope allows it.
                if rng.random() < 0.6:
                    collated = [(t, c) for t, c in pairs if c.collation]
                    plain = [(t, c) for t, c in pairs if not c.collation]
                    if collated and plain:
                        lt, lc = rng.choice(plain)
                        rt, rc = rng.choice(collated)
                return A.Binary(op, A.ColumnRef(lt, lc.name), A.ColumnRef(rt, rc.name))
            return A.Binary(op, gen(d - 1), gen(d - 1))
        if kind == "logic":
            op = rng.choice(A.LOGIC_OPS)
            return A.Binary(op, gen(d - 1), gen(d - 1))
        if kind == "not":
            return A.Unary("NOT", gen(d - 1))
        if kind == "arith":
            op = rng.choice(A.ARITH_OPS)
            return A.Binary(op, gen(d - 1), gen(d - 1))
        if kind == "concat":
            return A.Binary("||", gen(d - 1), gen(d - 1))
        if kind == "glob" and dialect.has_glob:
            if scope and rng.random() < 0.6:
                tname, col = rng.choice(list(scope))
                left: A.Expression = A.ColumnRef(tname, col.name)
            else:
                left = gen(d - 1)
            return A.Binary("GLOB", left, A.Constant(rng.choice(_GLOB_PATTERNS)))
        if kind == "between":
            symmetric = dialect.has_between_symmetric and rng.random() < 0.3
            return A.Between(
                value=gen(d - 1),
                lo=gen(d - 1),
                hi=gen(d - 1),
                symmetric=symmetric,
                negated=rng.random() < 0.3,
            )
        if kind == "in":
            n = rng.randint(1, 3)
            # Candidates lean toward bare columns: `const IN (col)` is the
            # shape single-element rewrites touch.
            def candidate() -> A.Expression:
                if scope and rng.random() < 0.5:
                    tname, col = rng.choice(list(scope))
                    return A.ColumnRef(tname, col.name)
                return gen(d - 1)

            return A.InList(
                value=gen(d - 1),
                candidates=tuple(candidate() for _ in range(n)),
                negated=rng.random() < 0.25,
            )
        if kind == "is":
            check = rng.choice(list(A.IsCheck))
            return A.PostfixIs(gen(d - 1), check)
        if kind == "function":
            name = rng.choice(
                [f for f in _FUNCTIONS if dialect.is_whitelisted_function(f)]
            )
            return A.FunctionCall(name, (gen(d - 1),))
        if kind == "cast":
            return A.Cast(gen(d - 1), rng.choice(("INT", "REAL", "TEXT", "NUMERIC")))
        if kind == "collate" and dialect.has_collate_nocase:
            return A.Collate(gen(d - 1), rng.choice(("NOCASE", "BINARY")))
        return leaf()

    expr = gen(min(depth, config.max_expr_depth))
    assert is_deterministic(expr, dialect)
    return expr


def generate_optimized_query(
    rng: random.Random,
    schema: A.SchemaDef,
    config: GenConfig,
    dialect: DialectProfile,
) -> A.SelectQuery:
    """`SELECT * FROM ... [joins] WHERE p`, optionally with ORDER BY and/or
    GROUP BY; DISTINCT is never generated."""
    available = list(schema.tables)
    rng.shuffle(available)
    base = available.pop(0)
    from_tables = [base.name]
    joins: List[A.JoinClause] = []
    scope: List[Tuple[str, A.ColumnDef]] = [(base.name, c) for c in base.columns]
    n_joins = 0
    while available and n_joins < config.max_joins and rng.random() < config.join_probability:
        right = available.pop(0)
        right_scope = [(right.name, c) for c in right.columns]
        kind = rng.choice((A.JoinKind.INNER, A.JoinKind.LEFT, A.JoinKind.CROSS))
        if kind is A.JoinKind.CROSS:
            if rng.random() < 0.5:
                from_tables.append(right.name)  # comma-separated cross product
            else:
                joins.append(A.JoinClause(A.JoinKind.CROSS, right.name))
        else:
            on = generate_predicate(rng, scope + right_scope, 2, config, dialect)
            joins.append(A.JoinClause(kind, right.name, on))
        scope += right_scope
        n_joins += 1

    where = generate_predicate(rng, scope, config.max_expr_depth, config, dialect)
    group_by: Tuple[A.Expression, ...] = ()
    order_by: Tuple[Tuple[A.Expression, str], ...] = ()
    if rng.random() < config.group_by_probability:
        tname, col = rng.choice(scope)
        group_by = (A.ColumnRef(tname, col.name),)
    if rng.random() < config.order_by_probability:
        tname, col = rng.choice(scope)
        direction = rng.choice(("ASC", "DESC"))
        order_by = ((A.ColumnRef(tname, col.name), direction),)
    return A.SelectQuery(
        select_list=(A.STAR,),
        from_tables=tuple(from_tables),
        joins=tuple(joins),
        where=where,
        group_by=group_by,
        order_by=order_by,
    )


def database_rng(seed: int, database_index: int) -> random.Random:
    """Independent, reproducible stream per database iteration."""
    return random.Random(f"{seed}:{database_index}")
