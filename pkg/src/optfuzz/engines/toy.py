"""Miniature in-memory SQL engine with a naive evaluation path, a small
optimizer pipeline, and injectable optimizer bugs.

The naive path is a full scan plus per-row predicate evaluation. The
optimized path runs predicate rewrites (constant folding, single-element IN
to equality, comparison commuting) and an index-range scan before filtering.
With no injection active the two paths agree on row multisets; each
injection makes exactly one rule misbehave in a documented way.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from .. import sqlast as A
from ..dialect import DialectProfile, toy_profile
from ..values import (
    Affinity,
    SqlValue,
    apply_affinity,
    column_affinity,
    compare_total,
    parse_full_number,
    text_to_number,
)
from .base import BugInjection, EngineResult, Executor, QueryTimeout
from .evaluator import (
    EvalError,
    RowContext,
    EMPTY_CONTEXT,
    eval_expression,
    truth,
)

_DEADLINE_STRIDE = 4096


@dataclass
class _Table:
    defn: A.TableDef
    rows: List[List[SqlValue]] = field(default_factory=list)


class ToyEngine(Executor):
    dialect_name = "toy"

    def __init__(
        self,
        dialect: Optional[DialectProfile] = None,
        injection: Optional[BugInjection] = None,
    ):
        self.dialect = dialect or toy_profile()
        self.injection = injection
        self.tables: Dict[str, _Table] = {}
        self.indexes: List[A.IndexDef] = []
        self._coldefs: Dict[Tuple[str, str], A.ColumnDef] = {}
        self._ticks = 0
        self._deadline: Optional[float] = None

    # -- plumbing -----------------------------------------------------------

    def reset(self) -> None:
        self.tables.clear()
        self.indexes.clear()
        self._coldefs.clear()

    def version(self) -> str:
        return "toy-engine/1 injection=%s" % (self.injection.value if self.injection else "none")

    def _tick(self):
        self._ticks += 1
        if self._deadline is not None and self._ticks % _DEADLINE_STRIDE == 0:
            if time.monotonic() > self._deadline:
                raise QueryTimeout("toy engine deadline exceeded")

    def _context(self, values: Dict[Tuple[str, str], SqlValue]) -> RowContext:
        return RowContext(values, self._coldefs)

    # -- statement entry point ---------------------------------------------

    def execute(self, stmt: A.Statement, deadline: Optional[float] = None) -> EngineResult:
        self._deadline = deadline
        try:
            if isinstance(stmt, A.CreateTable):
                return self._create_table(stmt.table)
            if isinstance(stmt, A.CreateIndex):
                return self._create_index(stmt.index)
            if isinstance(stmt, A.Insert):
                return self._insert(stmt)
            if isinstance(stmt, A.Update):
                return self._update(stmt)
            if isinstance(stmt, A.Delete):
                return self._delete(stmt)
            if isinstance(stmt, A.SelectQuery):
                return self._select(stmt, optimized=True)
            if isinstance(stmt, A.DerivedSum):
                return self._derived_sum(stmt)
            return EngineResult.failure(f"unsupported statement {type(stmt).__name__}")
        except EvalError as e:
            return EngineResult.failure(str(e))
        finally:
            self._deadline = None

    def execute_naive(self, q: A.SelectQuery, deadline: Optional[float] = None) -> EngineResult:
        """Full-scan reference path, bypassing the optimizer entirely."""
        self._deadline = deadline
        try:
            return self._select(q, optimized=False)
        except EvalError as e:
            return EngineResult.failure(str(e))
        finally:
            self._deadline = None

    # -- DDL / DML ----------------------------------------------------------

    def _create_table(self, defn: A.TableDef) -> EngineResult:
        if defn.name in self.tables:
            return EngineResult.failure(f"table {defn.name} already exists")
        self.tables[defn.name] = _Table(defn)
        for col in defn.columns:
            self._coldefs[(defn.name, col.name)] = col
        return EngineResult.ok()

    def _create_index(self, idx: A.IndexDef) -> EngineResult:
        if idx.table not in self.tables:
            return EngineResult.failure(f"no such table: {idx.table}")
        self.indexes.append(idx)
        return EngineResult.ok()

    def _unique_columns(self, table: A.TableDef):
        """(column, partial predicate) pairs; a partial UNIQUE index only
        constrains rows satisfying its predicate."""
        uniq = [(c, None) for c in table.columns if c.unique or c.primary_key]
        for idx in self.indexes:
            if idx.unique and idx.table == table.name and len(idx.key_expressions) == 1:
                key = idx.key_expressions[0]
                if isinstance(key, A.ColumnRef):
                    uniq.append((table.column(key.column), idx.partial_predicate))
        return uniq

    def _check_unique(self, table: _Table, rows: List[List[SqlValue]]) -> Optional[str]:
        names = [c.name for c in table.defn.columns]
        coldefs = {
            (table.defn.name, c.name): c for c in table.defn.columns
        }
        for col, partial in self._unique_columns(table.defn):
            ci = names.index(col.name)
            nocase = bool(col.collation and col.collation.upper() == "NOCASE")
            seen = []
            for row in rows:
                if partial is not None:
                    ctx = RowContext(
                        {(table.defn.name, n): row[i] for i, n in enumerate(names)},
                        coldefs,
                    )
                    try:
                        if truth(eval_expression(partial, ctx, self.dialect)) is not True:
                            continue
                    except EvalError:
                        continue
                v = row[ci]
                if v is None:
                    continue  # NULLs never collide under UNIQUE
                for prev in seen:
                    if compare_total(v, prev, nocase=nocase) == 0:
                        return f"UNIQUE constraint failed: {table.defn.name}.{col.name}"
                seen.append(v)
        return None

    def _insert(self, stmt: A.Insert) -> EngineResult:
        table = self.tables.get(stmt.table)
        if table is None:
            return EngineResult.failure(f"no such table: {stmt.table}")
        names = [c.name for c in table.defn.columns]
        columns = stmt.columns or tuple(names)
        new_rows = []
        for value_exprs in stmt.rows:
            if len(value_exprs) != len(columns):
                return EngineResult.failure("values do not match columns")
            row: List[SqlValue] = [None] * len(names)
            for col_name, expr in zip(columns, value_exprs):
                if col_name not in names:
                    return EngineResult.failure(f"no such column: {col_name}")
                value = eval_expression(expr, EMPTY_CONTEXT, self.dialect)
                aff = column_affinity(table.defn.column(col_name).declared_type)
                row[names.index(col_name)] = apply_affinity(value, aff)
            new_rows.append(row)
        err = self._check_unique(table, table.rows + new_rows)
        if err:
            return EngineResult.failure(err)
        table.rows.extend(new_rows)
        return EngineResult.ok()

    def _update(self, stmt: A.Update) -> EngineResult:
        table = self.tables.get(stmt.table)
        if table is None:
            return EngineResult.failure(f"no such table: {stmt.table}")
        names = [c.name for c in table.defn.columns]
        updated = []
        for row in table.rows:
            ctx = self._context(
                {(stmt.table, n): v for n, v in zip(names, row)}
            )
            hit = stmt.where is None or truth(eval_expression(stmt.where, ctx, self.dialect)) is True
            if not hit:
                updated.append(row)
                continue
            new_row = list(row)
            for col_name, expr in stmt.assignments:
                if col_name not in names:
                    return EngineResult.failure(f"no such column: {col_name}")
                value = eval_expression(expr, ctx, self.dialect)
                aff = column_affinity(table.defn.column(col_name).declared_type)
                new_row[names.index(col_name)] = apply_affinity(value, aff)
            updated.append(new_row)
        err = self._check_unique(table, updated)
        if err:
            return EngineResult.failure(err)
        table.rows = updated
        return EngineResult.ok()

    def _delete(self, stmt: A.Delete) -> EngineResult:
        table = self.tables.get(stmt.table)
        if table is None:
            return EngineResult.failure(f"no such table: {stmt.table}")
        names = [c.name for c in table.defn.columns]
        kept = []
        for row in table.rows:
            ctx = self._context({(stmt.table, n): v for n, v in zip(names, row)})
            hit = stmt.where is None or truth(eval_expression(stmt.where, ctx, self.dialect)) is True
            if not hit:
                kept.append(row)
        table.rows = kept
        return EngineResult.ok()

    # -- SELECT -------------------------------------------------------------

    def _scope_columns(self, q: A.SelectQuery) -> List[Tuple[str, str]]:
        cols = []
        for tname in q.scope_tables():
            table = self.tables[tname]
            cols.extend((tname, c.name) for c in table.defn.columns)
        return cols

    def _table_row_values(self, tname: str, row) -> Dict[Tuple[str, str], SqlValue]:
        names = [c.name for c in self.tables[tname].defn.columns]
        return {(tname, n): v for n, v in zip(names, row)}

    def _join_rows(
        self, q: A.SelectQuery, base_rows: Optional[List[List[SqlValue]]] = None
    ) -> List[Dict[Tuple[str, str], SqlValue]]:
        for tname in q.scope_tables():
            if tname not in self.tables:
                raise EvalError("no-such-table", f"no such table: {tname}")
        first = q.from_tables[0]
        rows = base_rows if base_rows is not None else self.tables[first].rows
        combos = [self._table_row_values(first, r) for r in rows]
        for tname in q.from_tables[1:]:
            new_combos = []
            for combo in combos:
                for row in self.tables[tname].rows:
                    self._tick()
                    merged = dict(combo)
                    merged.update(self._table_row_values(tname, row))
                    new_combos.append(merged)
            combos = new_combos
        for join in q.joins:
            right = join.right_table
            right_rows = self.tables[right].rows
            null_values = {
                (right, c.name): None for c in self.tables[right].defn.columns
            }
            new_combos = []
            for combo in combos:
                matched = False
                for row in right_rows:
                    self._tick()
                    merged = dict(combo)
                    merged.update(self._table_row_values(right, row))
                    if join.kind is A.JoinKind.CROSS:
                        new_combos.append(merged)
                        continue
                    ctx = self._context(merged)
                    if truth(eval_expression(join.on_predicate, ctx, self.dialect)) is True:
                        matched = True
                        new_combos.append(merged)
                if join.kind is A.JoinKind.LEFT and not matched:
                    merged = dict(combo)
                    merged.update(null_values)
                    new_combos.append(merged)
            combos = new_combos
        return combos

    def _is_aggregate_item(self, item: A.Expression) -> bool:
        return isinstance(item, A.FunctionCall) and item.name.upper() in ("COUNT", "SUM")

    def _eval_aggregate(self, item, combos) -> SqlValue:
        name = item.name.upper()
        if name == "COUNT":
            if len(item.args) == 1 and isinstance(item.args[0], A.Star):
                return len(combos)
            n = 0
            for combo in combos:
                v = eval_expression(item.args[0], self._context(combo), self.dialect)
                if v is not None:
                    n += 1
            return n
        # SUM: NULLs are skipped; an empty or all-NULL input yields NULL.
        total = None
        for combo in combos:
            v = eval_expression(item.args[0], self._context(combo), self.dialect)
            if v is None:
                continue
            if isinstance(v, str):
                n = text_to_number(v)
                v = n if n is not None else 0
            total = v if total is None else total + v
        return total

    def _group_key(self, exprs, ctx) -> Tuple:
        key = []
        for e in exprs:
            v = eval_expression(e, ctx, self.dialect)
            if v is None:
                key.append((0, None))
            elif isinstance(v, (bool, int, float)):
                key.append((1, float(v)))
            else:
                key.append((2, v))
        return tuple(key)

    def _order_key(self, row_values):
        key = []
        for v, direction in row_values:
            rank = 0 if v is None else (1 if isinstance(v, (bool, int, float)) else 2)
            key.append((rank, v if v is not None else 0, direction))
        return key

    def _select(self, q: A.SelectQuery, optimized: bool) -> EngineResult:
        if q.distinct:
            return EngineResult.failure("DISTINCT is not supported")
        where = q.where
        base_rows = None
        keep_not_false = False
        if optimized and where is not None:
            where = self._rewrite_predicate(where)
            base_rows = self._range_scan(q, where)
            if (
                self.injection is BugInjection.NULL_FILTER_AS_FALSE
                and any(isinstance(n, A.Between) for n in A.walk(where))
            ):
                # Faulty range refinement: rows where the predicate is NULL
                # slip through the filter.
                keep_not_false = True

        combos = self._join_rows(q, base_rows=base_rows)
        if where is not None:
            filtered = []
            for combo in combos:
                self._tick()
                t = truth(eval_expression(where, self._context(combo), self.dialect))
                if t is True or (keep_not_false and t is None):
                    filtered.append(combo)
            combos = filtered

        scope_cols = self._scope_columns(q)
        has_aggregate = any(self._is_aggregate_item(i) for i in q.select_list)

        def project(item: A.Expression, group: List[dict]) -> SqlValue:
            if self._is_aggregate_item(item):
                return self._eval_aggregate(item, group)
            # Bare expressions in an aggregate context evaluate on an
            # arbitrary row of the group.
            ctx = self._context(group[0]) if group else EMPTY_CONTEXT
            return eval_expression(item, ctx, self.dialect)

        out_rows: List[Tuple[SqlValue, ...]] = []
        if q.group_by:
            groups: Dict[Tuple, List[dict]] = {}
            for combo in combos:
                key = self._group_key(q.group_by, self._context(combo))
                groups.setdefault(key, []).append(combo)
            for key in groups:
                group = groups[key]
                if q.is_star:
                    row = tuple(group[0][tc] for tc in scope_cols)
                else:
                    row = tuple(project(i, group) for i in q.select_list)
                out_rows.append(row)
        elif has_aggregate:
            row = tuple(project(i, combos) for i in q.select_list)
            out_rows.append(row)
        else:
            for combo in combos:
                self._tick()
                if q.is_star:
                    out_rows.append(tuple(combo[tc] for tc in scope_cols))
                else:
                    ctx = self._context(combo)
                    out_rows.append(
                        tuple(eval_expression(i, ctx, self.dialect) for i in q.select_list)
                    )

        if q.order_by and not has_aggregate:
            # Group order never affects cardinality; only plain row output
            # is sorted.
            if not q.group_by:
                decorated = []
                for combo, row in zip(combos, out_rows):
                    ctx = self._context(combo)
                    keys = []
                    for e, direction in q.order_by:
                        v = eval_expression(e, ctx, self.dialect)
                        keys.append((v, direction))
                    decorated.append((keys, row))
                decorated.sort(key=lambda kr: self._sort_key(kr[0]))
                out_rows = [row for _, row in decorated]

        if (
            optimized
            and self.injection is BugInjection.VALUE_CORRUPTION
            and q.is_star
            and out_rows
        ):
            out_rows[0] = (_corrupt(out_rows[0][0]),) + out_rows[0][1:]

        if q.is_star:
            columns = tuple(f"{t}.{c}" for t, c in scope_cols)
        else:
            columns = tuple(f"col{i}" for i in range(len(q.select_list)))
        return EngineResult.ok(out_rows, columns)

    def _sort_key(self, keys):
        out = []
        for v, direction in keys:
            desc = direction.upper() == "DESC"
            rank = 0 if v is None else (1 if isinstance(v, (bool, int, float)) else 2)
            if isinstance(v, (bool, int, float)) and not isinstance(v, str):
                primary = float(v) if v is not None else 0.0
                out.append((-rank if desc else rank, -primary if desc else primary, ""))
            else:
                # Text cannot be negated for DESC; sort ascending on a
                # complemented byte string instead.
                text = v if isinstance(v, str) else ""
                if desc:
                    text = bytes(255 - b for b in text.encode("utf-8", "replace")).decode(
                        "latin-1"
                    )
                out.append((-rank if desc else rank, 0.0, text))
        return out

    def _derived_sum(self, stmt: A.DerivedSum) -> EngineResult:
        inner = self._select(stmt.inner, optimized=True)
        if inner.is_error:
            return inner
        total = None
        for row in inner.rows:
            v = row[0]
            if v is None:
                continue
            if isinstance(v, str):
                n = text_to_number(v)
                v = n if n is not None else 0
            total = v if total is None else total + v
        return EngineResult.ok([(total,)], ("sum",))

    # -- optimizer pipeline -------------------------------------------------

    def _rewrite_predicate(self, expr: A.Expression) -> A.Expression:
        expr = self._fold_constants(expr)
        expr = self._rewrite_in_to_eq(expr)
        expr = self._commute_comparisons(expr)
        return expr

    def _fold_constants(self, expr: A.Expression) -> A.Expression:
        children = expr.children()
        if not children:
            return expr
        folded = expr
        for i, child in enumerate(children):
            new_child = self._fold_constants(child)
            if new_child is not child:
                folded = A.replace_child(folded, i, new_child)
        if isinstance(folded, (A.Unary, A.Binary)) and all(
            isinstance(c, A.Constant) for c in folded.children()
        ):
            if isinstance(folded, A.Binary) and folded.op in ("AND", "OR"):
                return folded  # preserve short-circuit behavior
            try:
                value = eval_expression(folded, EMPTY_CONTEXT, self.dialect)
            except EvalError:
                return folded
            return A.Constant(value)
        return folded

    def _rewrite_in_to_eq(self, expr: A.Expression) -> A.Expression:
        if isinstance(expr, A.InList) and len(expr.candidates) == 1 and not expr.negated:
            value = self._rewrite_in_to_eq(expr.value)
            cand = self._rewrite_in_to_eq(expr.candidates[0])
            if self.injection is BugInjection.IN_TO_EQ_AFFINITY:
                # Faulty rewrite: plain equality applies affinity
                # conversions that IN must not perform.
                return A.Binary("=", value, cand)
            return A.Binary(A.EQ_NOAFFINITY, value, cand)
        for i, child in enumerate(expr.children()):
            new_child = self._rewrite_in_to_eq(child)
            if new_child is not child:
                expr = A.replace_child(expr, i, new_child)
        return expr

    _COMMUTED = {"=": "=", "<>": "<>", "<": ">", "<=": ">=", ">": "<", ">=": "<="}

    def _commute_comparisons(self, expr: A.Expression) -> A.Expression:
        if (
            isinstance(expr, A.Binary)
            and expr.op in self._COMMUTED
            and isinstance(expr.left, A.ColumnRef)
            and isinstance(expr.right, A.ColumnRef)
        ):
            lcd = self._coldefs.get((expr.left.table, expr.left.column))
            rcd = self._coldefs.get((expr.right.table, expr.right.column))
            if rcd is not None and rcd.collation and not (lcd and lcd.collation):
                # Canonicalize: put the collated (index-friendly) column on
                # the left. The comparison's collation came from the old
                # left column (binary), which must be preserved explicitly.
                new_op = self._COMMUTED[expr.op]
                if self.injection is BugInjection.COMMUTE_DROPS_COLLATION:
                    return A.Binary(new_op, expr.right, expr.left)
                lcoll = (lcd.collation if lcd and lcd.collation else "BINARY")
                return A.Binary(new_op, A.Collate(expr.right, lcoll), expr.left)
        for i, child in enumerate(expr.children()):
            new_child = self._commute_comparisons(child)
            if new_child is not child:
                expr = A.replace_child(expr, i, new_child)
        return expr

    # -- index range scan ---------------------------------------------------

    def _indexed_columns(self, tname: str) -> set:
        table = self.tables.get(tname)
        if table is None:
            return set()
        cols = {c.name for c in table.defn.columns if c.unique or c.primary_key}
        for idx in self.indexes:
            if idx.table != tname or idx.partial_predicate is not None:
                continue
            key = idx.key_expressions[0]
            if isinstance(key, A.ColumnRef):
                cols.add(key.column)
        return cols

    @staticmethod
    def _conjuncts(expr: A.Expression):
        if isinstance(expr, A.Binary) and expr.op == "AND":
            yield from ToyEngine._conjuncts(expr.left)
            yield from ToyEngine._conjuncts(expr.right)
        else:
            yield expr

    def _range_scan(
        self, q: A.SelectQuery, where: A.Expression
    ) -> Optional[List[List[SqlValue]]]:
        """Pick rows of the base table via an index range when a usable
        top-level conjunct exists; None means full scan."""
        if len(q.from_tables) != 1 or q.joins:
            return None
        tname = q.from_tables[0]
        table = self.tables.get(tname)
        if table is None:
            return None
        indexed = self._indexed_columns(tname)
        if not indexed:
            return None
        for conj in self._conjuncts(where):
            scan = self._try_range_for_conjunct(conj, tname, table, indexed)
            if scan is not None:
                return scan
        return None

    def _try_range_for_conjunct(self, conj, tname, table, indexed):
        if (
            self.injection is BugInjection.LIKE_RANGE_SKIP
            and isinstance(conj, A.Binary)
            and conj.op == "GLOB"
            and isinstance(conj.left, A.ColumnRef)
            and conj.left.table == tname
            and conj.left.column in indexed
            and isinstance(conj.right, A.Constant)
            and isinstance(conj.right.value, str)
        ):
            return self._glob_range_scan(table, conj.left.column, conj.right.value)
        if not (
            isinstance(conj, A.Binary)
            and conj.op in ("=", "<", "<=", ">", ">=")
            and isinstance(conj.right, A.Constant)
        ):
            return None
        col_expr = conj.left
        # The correct commute rule wraps the probe column in an explicit
        # COLLATE; ranges over collated keys are skipped for simplicity.
        if not isinstance(col_expr, A.ColumnRef):
            return None
        if col_expr.table != tname or col_expr.column not in indexed:
            return None
        cd = self._coldefs.get((tname, col_expr.column))
        if cd is None or cd.collation:
            return None
        bound = conj.right.value
        if bound is None:
            return []  # comparison with NULL can never be TRUE
        op = conj.op
        aff = column_affinity(cd.declared_type)
        numeric_aff = aff in (Affinity.INTEGER, Affinity.NUMERIC, Affinity.REAL)
        if numeric_aff and isinstance(bound, str):
            if self.injection is BugInjection.STRING_RANGE_BOUND and op in ("<", "<="):
                # Faulty bound derivation: whitespace is not skipped when
                # converting the text bound, and the failed conversion
                # produces an inclusive upper bound of 0.
                try:
                    strict = float(bound) if bound == bound.strip() else None
                except ValueError:
                    strict = None
                lenient = text_to_number(bound)
                if strict is None and lenient is not None:
                    return self._comparison_range_scan(table, cd, "<=", 0)
            converted = parse_full_number(bound)
            if converted is None:
                # Evaluation keeps non-numeric text as text; no numeric
                # range can be derived soundly.
                return None
            bound = converted
        elif aff == Affinity.TEXT and isinstance(bound, (int, float)) and not isinstance(bound, bool):
            from ..values import cast_to_text

            bound = cast_to_text(bound)
        return self._comparison_range_scan(table, cd, op, bound)

    def _comparison_range_scan(self, table, cd, op, bound):
        ci = [c.name for c in table.defn.columns].index(cd.name)
        out = []
        for row in table.rows:
            v = row[ci]
            if v is None:
                continue
            c = compare_total(v, bound)
            ok = (
                (op == "=" and c == 0)
                or (op == "<" and c < 0)
                or (op == "<=" and c <= 0)
                or (op == ">" and c > 0)
                or (op == ">=" and c >= 0)
            )
            if ok:
                out.append(row)
        return out

    def _glob_range_scan(self, table, column, pattern):
        star = pattern.find("*")
        qmark = pattern.find("?")
        wild = min(x for x in (star, qmark) if x >= 0) if (star >= 0 or qmark >= 0) else -1
        prefix = pattern[:wild] if wild >= 0 else pattern
        if not prefix:
            return None
        # Faulty LIKE/GLOB range: scan only the text interval covering the
        # prefix; values stored as numbers sort before all text and are
        # skipped even when their text form matches the pattern.
        ci = [c.name for c in table.defn.columns].index(column)
        hi = prefix[:-1] + chr(ord(prefix[-1]) + 1)
        out = []
        for row in table.rows:
            v = row[ci]
            if not isinstance(v, str):
                continue
            if prefix <= v < hi:
                out.append(row)
        return out


def _corrupt(v: SqlValue) -> SqlValue:
    """Cardinality-preserving value corruption (injection ValueCorruption)."""
    if v is None:
        return 0
    if isinstance(v, bool):
        return not v
    if isinstance(v, int):
        return v + 1 if v < 2**62 else v - 1
    if isinstance(v, float):
        return v + 1.0
    return v + "\x01"
