"""Deterministic AST-to-SQL rendering.

Every compound expression is parenthesized so operator precedence never
depends on dialect defaults; strings are single-quoted with quote doubling.
"""

from __future__ import annotations

from typing import Optional

from . import sqlast as A
from .dialect import DialectProfile
from .values import SqlValue, format_number


class UnsupportedFeature(Exception):
    """Raised when a statement uses a construct the dialect forbids."""


def render_value(value: SqlValue, dialect: DialectProfile) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, bool):
        if dialect.has_native_boolean:
            return "TRUE" if value else "FALSE"
        return "1" if value else "0"
    if isinstance(value, (int, float)):
        return format_number(value)
    return "'" + value.replace("'", "''") + "'"


def render_expression(expr: A.Expression, dialect: DialectProfile) -> str:
    r = lambda e: render_expression(e, dialect)
    if isinstance(expr, A.Constant):
        return render_value(expr.value, dialect)
    if isinstance(expr, A.ColumnRef):
        # An empty table part means the reference is rendered bare, as
        # required inside CREATE INDEX key and WHERE expressions.
        if not expr.table:
            return expr.column
        return f"{expr.table}.{expr.column}"
    if isinstance(expr, A.Star):
        return "*"
    if isinstance(expr, A.Unary):
        op = expr.op
        sep = " " if op == "NOT" else ""
        return f"({op}{sep}{r(expr.operand)})"
    if isinstance(expr, A.Binary):
        op = expr.op
        if op == A.EQ_NOAFFINITY:
            raise UnsupportedFeature("internal no-affinity equality has no SQL form")
        if op == "GLOB" and not dialect.has_glob:
            raise UnsupportedFeature("GLOB not supported by dialect " + dialect.name)
        return f"({r(expr.left)} {op} {r(expr.right)})"
    if isinstance(expr, A.Between):
        if expr.symmetric and not dialect.has_between_symmetric:
            raise UnsupportedFeature("BETWEEN SYMMETRIC not supported by " + dialect.name)
        kw = "BETWEEN"
        if expr.negated:
            kw = "NOT " + kw
        if expr.symmetric:
            kw += " SYMMETRIC"
        return f"({r(expr.value)} {kw} {r(expr.lo)} AND {r(expr.hi)})"
    if isinstance(expr, A.InList):
        kw = "NOT IN" if expr.negated else "IN"
        items = ", ".join(r(c) for c in expr.candidates)
        return f"({r(expr.value)} {kw} ({items}))"
    if isinstance(expr, A.FunctionCall):
        args = ", ".join(r(a) for a in expr.args)
        return f"{expr.name}({args})"
    if isinstance(expr, A.Cast):
        return f"CAST({r(expr.operand)} AS {expr.target_type})"
    if isinstance(expr, A.Collate):
        if expr.collation.upper() == "NOCASE" and not dialect.has_collate_nocase:
            raise UnsupportedFeature("COLLATE NOCASE not supported by " + dialect.name)
        return f"({r(expr.operand)} COLLATE {expr.collation})"
    if isinstance(expr, A.PostfixIs):
        return f"({r(expr.operand)} {expr.check.value})"
    raise UnsupportedFeature(f"cannot render {type(expr).__name__}")


def _unqualify(expr: A.Expression) -> A.Expression:
    """Strip table qualifiers; CREATE INDEX expressions must use bare names."""
    if isinstance(expr, A.ColumnRef):
        return A.ColumnRef("", expr.column)
    out = expr
    for i, child in enumerate(expr.children()):
        new_child = _unqualify(child)
        if new_child is not child:
            out = A.replace_child(out, i, new_child)
    return out


def _render_column_def(col: A.ColumnDef, dialect: DialectProfile) -> str:
    parts = [col.name]
    if col.declared_type:
        parts.append(col.declared_type)
    if col.primary_key:
        parts.append("PRIMARY KEY")
    elif col.unique:
        parts.append("UNIQUE")
    if col.collation:
        if col.collation.upper() == "NOCASE" and not dialect.has_collate_nocase:
            raise UnsupportedFeature("COLLATE NOCASE not supported by " + dialect.name)
        parts.append(f"COLLATE {col.collation}")
    return " ".join(parts)


def _render_select(q: A.SelectQuery, dialect: DialectProfile, alias_first: Optional[str] = None) -> str:
    items = []
    for i, item in enumerate(q.select_list):
        text = render_expression(item, dialect)
        if i == 0 and alias_first is not None:
            text += f" AS {alias_first}"
        items.append(text)
    sql = "SELECT "
    if q.distinct:
        sql += "DISTINCT "
    sql += ", ".join(items)
    sql += " FROM " + ", ".join(q.from_tables)
    for join in q.joins:
        sql += f" {join.kind.value} {join.right_table}"
        if join.on_predicate is not None:
            sql += " ON " + render_expression(join.on_predicate, dialect)
    if q.where is not None:
        sql += " WHERE " + render_expression(q.where, dialect)
    if q.group_by:
        sql += " GROUP BY " + ", ".join(render_expression(e, dialect) for e in q.group_by)
    if q.order_by:
        terms = ", ".join(
            f"{render_expression(e, dialect)} {direction}" for e, direction in q.order_by
        )
        sql += " ORDER BY " + terms
    return sql


def render_statement(stmt: A.Statement, dialect: DialectProfile) -> str:
    if isinstance(stmt, A.CreateTable):
        cols = ", ".join(_render_column_def(c, dialect) for c in stmt.table.columns)
        return f"CREATE TABLE {stmt.table.name}({cols});"
    if isinstance(stmt, A.CreateIndex):
        idx = stmt.index
        uniq = "UNIQUE " if idx.unique else ""
        keys = ", ".join(
            render_expression(_unqualify(e), dialect) for e in idx.key_expressions
        )
        sql = f"CREATE {uniq}INDEX {idx.name} ON {idx.table}({keys})"
        if idx.partial_predicate is not None:
            if not dialect.supports_partial_indexes:
                raise UnsupportedFeature("partial indexes not supported by " + dialect.name)
            sql += " WHERE " + render_expression(_unqualify(idx.partial_predicate), dialect)
        return sql + ";"
    if isinstance(stmt, A.Insert):
        cols = f"({', '.join(stmt.columns)})" if stmt.columns else ""
        rows = ", ".join(
            "(" + ", ".join(render_expression(v, dialect) for v in row) + ")"
            for row in stmt.rows
        )
        return f"INSERT INTO {stmt.table}{cols} VALUES {rows};"
    if isinstance(stmt, A.Update):
        sets = ", ".join(
            f"{col} = {render_expression(e, dialect)}" for col, e in stmt.assignments
        )
        sql = f"UPDATE {stmt.table} SET {sets}"
        if stmt.where is not None:
            sql += " WHERE " + render_expression(stmt.where, dialect)
        return sql + ";"
    if isinstance(stmt, A.Delete):
        sql = f"DELETE FROM {stmt.table}"
        if stmt.where is not None:
            sql += " WHERE " + render_expression(stmt.where, dialect)
        return sql + ";"
    if isinstance(stmt, A.SelectQuery):
        if isinstance(stmt.where, A.Expression) or stmt.where is None:
            return _render_select(stmt, dialect) + ";"
    if isinstance(stmt, A.DerivedSum):
        inner = _render_select(stmt.inner, dialect, alias_first=stmt.alias)
        return f"SELECT SUM({stmt.alias}) FROM ({inner}) AS sub;"
    raise UnsupportedFeature(f"cannot render {type(stmt).__name__}")
