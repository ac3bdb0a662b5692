"""Reference expression evaluation: three-valued logic, NULL-propagating
comparisons, affinity-aware coercions, and collation resolution.

This is the per-row semantics shared by the miniature engine's full-scan
path. It is deliberately straightforward tree interpretation: the point is
to be an unoptimized reference, not to be fast.
"""

from __future__ import annotations

import math
import re
from functools import lru_cache
from typing import Optional

from .. import sqlast as A
from ..dialect import DialectProfile
from ..values import (
    Affinity,
    INT64_MAX,
    INT64_MIN,
    SqlValue,
    cast_to_text,
    column_affinity,
    compare_total,
    normalize_bool,
    parse_full_number,
    text_to_number,
)


class EvalError(Exception):
    def __init__(self, kind: str, message: str = ""):
        super().__init__(message or kind)
        self.kind = kind


class RowContext:
    """Resolves column references and column metadata for one (joined) row."""

    def __init__(self, values=None, column_defs=None):
        self._values = values or {}
        self._column_defs = column_defs or {}

    def value(self, table: str, column: str) -> SqlValue:
        try:
            return self._values[table, column]
        except KeyError:
            raise EvalError("unresolved-column", f"{table}.{column}")

    def column_def(self, table: str, column: str) -> Optional[A.ColumnDef]:
        return self._column_defs.get((table, column))


EMPTY_CONTEXT = RowContext()

_TRUTH_NULL = None


def truth(v: SqlValue) -> Optional[bool]:
    """Boolean interpretation of a value: numeric zero and unparseable text
    are false; NULL stays NULL."""
    if v is None:
        return None
    v = normalize_bool(v)
    if isinstance(v, (int, float)):
        return v != 0
    n = text_to_number(v)
    return bool(n) if n is not None else False


def _bool_result(b) -> SqlValue:
    if b is None:
        return None
    return 1 if b else 0


def _to_number(v: SqlValue):
    """Numeric coercion used by arithmetic: text falls back to 0."""
    if v is None:
        return None
    v = normalize_bool(v)
    if isinstance(v, (int, float)):
        return v
    n = text_to_number(v)
    return n if n is not None else 0


def _check_int64(n: int) -> int:
    if n < INT64_MIN or n > INT64_MAX:
        raise EvalError("integer overflow", "integer overflow")
    return n


def _saturate_int64(x) -> int:
    """Integer conversion with saturation at the signed 64-bit bounds."""
    if isinstance(x, float):
        if x >= INT64_MAX:
            return INT64_MAX
        if x <= INT64_MIN:
            return INT64_MIN
        return int(x)
    return x


def _int_or_float(n: int):
    """Arithmetic results outside the signed 64-bit range fall back to
    floating point, mirroring the embedded engine."""
    if n < INT64_MIN or n > INT64_MAX:
        return float(n)
    return n


def _side_affinity(expr: A.Expression, ctx: RowContext) -> Optional[Affinity]:
    """Comparison affinity of one operand; None means the operand is a plain
    expression with no affinity at all (distinct from a typeless column's
    BLOB affinity — only true no-affinity operands pick up TEXT affinity
    from the other side)."""
    while isinstance(expr, A.Collate):
        expr = expr.operand
    if isinstance(expr, A.ColumnRef):
        cd = ctx.column_def(expr.table, expr.column)
        if cd is not None:
            return column_affinity(cd.declared_type)
        return None
    if isinstance(expr, A.Cast):
        return column_affinity(expr.target_type or "NUMERIC")
    return None


def _explicit_collation(expr: A.Expression) -> Optional[str]:
    if isinstance(expr, A.Collate):
        return expr.collation.upper()
    return None


def _column_collation(expr: A.Expression, ctx: RowContext) -> Optional[str]:
    # A column always supplies a collation: its declared one, or BINARY.
    # This matters when the other operand carries NOCASE; the left column's
    # implicit BINARY takes precedence.
    if isinstance(expr, A.ColumnRef):
        cd = ctx.column_def(expr.table, expr.column)
        if cd is not None:
            return cd.collation.upper() if cd.collation else "BINARY"
    return None


def effective_collation(left: A.Expression, right: A.Expression, ctx: RowContext) -> str:
    """Explicit COLLATE wins (leftmost first), then the left operand's column
    collation (a column without one counts as BINARY), then the right's,
    else binary."""
    for coll in (
        _explicit_collation(left),
        _explicit_collation(right),
        _column_collation(left, ctx),
        _column_collation(right, ctx),
    ):
        if coll:
            return coll
    return "BINARY"


def _one_sided_coerce(v, aff: Affinity):
    """Apply one operand's affinity to the other side's value (IN-operator
    comparison rule)."""
    if aff in (Affinity.INTEGER, Affinity.REAL, Affinity.NUMERIC) and isinstance(v, str):
        n = parse_full_number(v)
        return n if n is not None else v
    if aff == Affinity.TEXT and isinstance(v, (int, float)) and not isinstance(v, bool):
        return cast_to_text(v)
    return v


def _coerce_for_comparison(lv, rv, laff: Affinity, raff: Affinity):
    """Apply comparison-time affinity conversion: a numeric-affinity side
    converts a well-formed numeric text operand on the other side (text
    that is not a full numeric literal stays text); a text-affinity side
    converts a number to text."""
    numeric = (Affinity.INTEGER, Affinity.REAL, Affinity.NUMERIC)

    def num_coerce(v):
        if isinstance(v, str):
            n = parse_full_number(v)
            return n if n is not None else v
        return v

    if laff in numeric and raff not in numeric and isinstance(rv, str):
        rv = num_coerce(rv)
    elif raff in numeric and laff not in numeric and isinstance(lv, str):
        lv = num_coerce(lv)
    elif (
        laff is Affinity.TEXT
        and raff is None
        and isinstance(rv, (int, float))
        and not isinstance(rv, bool)
    ):
        rv = cast_to_text(rv)
    elif (
        raff is Affinity.TEXT
        and laff is None
        and isinstance(lv, (int, float))
        and not isinstance(lv, bool)
    ):
        lv = cast_to_text(lv)
    return lv, rv


_COMPARE_RESULT = {
    "=": lambda c: c == 0,
    "<>": lambda c: c != 0,
    "<": lambda c: c < 0,
    "<=": lambda c: c <= 0,
    ">": lambda c: c > 0,
    ">=": lambda c: c >= 0,
}


def compare_values(
    op: str,
    lv: SqlValue,
    rv: SqlValue,
    collation: str,
    laff: Affinity = Affinity.BLOB,
    raff: Affinity = Affinity.BLOB,
    apply_affinity: bool = True,
) -> SqlValue:
    if lv is None or rv is None:
        return None
    lv, rv = normalize_bool(lv), normalize_bool(rv)
    if apply_affinity:
        lv, rv = _coerce_for_comparison(lv, rv, laff, raff)
    c = compare_total(lv, rv, nocase=(collation == "NOCASE"))
    return _bool_result(_COMPARE_RESULT[op](c))


@lru_cache(maxsize=512)
def _glob_regex(pattern: str):
    out = []
    for ch in pattern:
        if ch == "*":
            out.append(".*")
        elif ch == "?":
            out.append(".")
        else:
            out.append(re.escape(ch))
    return re.compile("".join(out) + r"\Z", re.DOTALL)


def glob_match(value: SqlValue, pattern: SqlValue) -> SqlValue:
    v = cast_to_text(value)
    p = cast_to_text(pattern)
    if v is None or p is None:
        return None
    return _bool_result(_glob_regex(p).match(v) is not None)


def _and3(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def _or3(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def _cast_value(v: SqlValue, target: str, dialect: DialectProfile) -> SqlValue:
    if v is None:
        return None
    v = normalize_bool(v)
    t = target.upper()
    aff = column_affinity(t if t else "NUMERIC")
    if aff == Affinity.INTEGER or t in ("INT", "INTEGER"):
        if isinstance(v, str):
            n = text_to_number(v)
            v = n if n is not None else 0
        if isinstance(v, float):
            return _saturate_int64(v)
        return v
    if aff == Affinity.REAL:
        if isinstance(v, str):
            n = text_to_number(v)
            return float(n) if n is not None else 0.0
        return float(v)
    if aff == Affinity.TEXT:
        return cast_to_text(v)
    if aff == Affinity.NUMERIC:
        # No-op for numbers; text converts to integer when lossless, else
        # real, else 0.
        if isinstance(v, str):
            n = text_to_number(v)
            if n is None:
                return 0
            if isinstance(n, float) and n.is_integer() and INT64_MIN <= n <= INT64_MAX:
                return int(n)
            return n
        return v
    return v


def _call_function(name: str, args, dialect: DialectProfile) -> SqlValue:
    fname = name.upper()
    if fname == "LENGTH":
        (v,) = args
        t = cast_to_text(v)
        return None if t is None else len(t)
    if fname == "ABS":
        (v,) = args
        if v is None:
            return None
        # Text arguments always coerce to REAL, even when integral.
        if isinstance(v, str):
            n = text_to_number(v)
            return abs(float(n)) if n is not None else 0.0
        n = normalize_bool(v)
        if isinstance(n, int):
            return _check_int64(abs(n))
        return abs(n)
    if fname in ("LOWER", "UPPER"):
        (v,) = args
        t = cast_to_text(v)
        if t is None:
            return None
        return t.lower() if fname == "LOWER" else t.upper()
    raise EvalError("unknown-function", name)


def eval_expression(
    expr: A.Expression, ctx: RowContext, dialect: DialectProfile
) -> SqlValue:
    e = eval_expression
    if isinstance(expr, A.Constant):
        return normalize_bool(expr.value)
    if isinstance(expr, A.ColumnRef):
        return ctx.value(expr.table, expr.column)
    if isinstance(expr, A.Collate):
        return e(expr.operand, ctx, dialect)
    if isinstance(expr, A.Unary):
        v = e(expr.operand, ctx, dialect)
        if expr.op == "NOT":
            t = truth(v)
            return _bool_result(None if t is None else not t)
        n = _to_number(v)
        if n is None:
            return None
        if expr.op == "-":
            return _int_or_float(-n) if isinstance(n, int) else -n
        return n
    if isinstance(expr, A.Binary):
        op = expr.op
        if op in ("AND", "OR"):
            lt = truth(e(expr.left, ctx, dialect))
            # Short-circuit like a real engine would; an error on the right
            # side is suppressed when the left side already decides.
            if op == "AND" and lt is False:
                return 0
            if op == "OR" and lt is True:
                return 1
            rt = truth(e(expr.right, ctx, dialect))
            return _bool_result(_and3(lt, rt) if op == "AND" else _or3(lt, rt))
        lv = e(expr.left, ctx, dialect)
        rv = e(expr.right, ctx, dialect)
        if op in A.COMPARISON_OPS or op == A.EQ_NOAFFINITY:
            coll = effective_collation(expr.left, expr.right, ctx)
            if op == A.EQ_NOAFFINITY:
                # Equality with IN semantics: only the left operand's
                # affinity converts the right value, and only the left
                # operand's collation applies.
                coll = (
                    _explicit_collation(expr.left)
                    or _column_collation(expr.left, ctx)
                    or "BINARY"
                )
                laff = _side_affinity(expr.left, ctx)
                return compare_values(
                    "=", lv, _one_sided_coerce(rv, laff), coll, apply_affinity=False
                )
            return compare_values(
                op,
                lv,
                rv,
                coll,
                _side_affinity(expr.left, ctx),
                _side_affinity(expr.right, ctx),
                apply_affinity=dialect.applies_column_affinity,
            )
        if op == "||":
            lt, rt = cast_to_text(lv), cast_to_text(rv)
            if lt is None or rt is None:
                return None
            return lt + rt
        if op == "GLOB":
            return glob_match(lv, rv)
        ln, rn = _to_number(lv), _to_number(rv)
        if ln is None or rn is None:
            return None
        if op == "+":
            r = ln + rn
        elif op == "-":
            r = ln - rn
        elif op == "*":
            r = ln * rn
        elif op == "/":
            if rn == 0:
                if dialect.div_by_zero_yields_null:
                    return None
                raise EvalError("division by zero", "division by zero")
            if isinstance(ln, int) and isinstance(rn, int):
                q = abs(ln) // abs(rn)
                r = q if (ln >= 0) == (rn >= 0) else -q
            else:
                r = ln / rn
        elif op == "%":
            # Operands are converted to 64-bit integers first (saturating,
            # like an integer cast); remainder takes the dividend's sign.
            if isinstance(ln, float) and math.isnan(ln):
                return None
            if isinstance(rn, float) and math.isnan(rn):
                return None
            ln, rn = _saturate_int64(ln), _saturate_int64(rn)
            if rn == 0:
                if dialect.div_by_zero_yields_null:
                    return None
                raise EvalError("division by zero", "modulo by zero")
            r = int(math.fmod(ln, rn))
        else:
            raise EvalError("unknown-operator", op)
        if isinstance(r, int):
            return _int_or_float(r)
        return r
    if isinstance(expr, A.Between):
        coll_lo = effective_collation(expr.value, expr.lo, ctx)
        coll_hi = effective_collation(expr.value, expr.hi, ctx)
        v = e(expr.value, ctx, dialect)
        lo = e(expr.lo, ctx, dialect)
        hi = e(expr.hi, ctx, dialect)
        vaff = _side_affinity(expr.value, ctx)
        loaff = _side_affinity(expr.lo, ctx)
        hiaff = _side_affinity(expr.hi, ctx)
        aff = dialect.applies_column_affinity

        def rng(low, lowaff, high, highaff):
            ge = truth(compare_values(">=", v, low, coll_lo, vaff, lowaff, aff))
            le = truth(compare_values("<=", v, high, coll_hi, vaff, highaff, aff))
            return _and3(ge, le)

        result = rng(lo, loaff, hi, hiaff)
        if expr.symmetric:
            result = _or3(result, rng(hi, hiaff, lo, loaff))
        if expr.negated:
            result = None if result is None else not result
        return _bool_result(result)
    if isinstance(expr, A.InList):
        v = e(expr.value, ctx, dialect)
        found = False
        saw_null = False
        laff = _side_affinity(expr.value, ctx)
        # IN uses only the left operand's collation; a candidate's column
        # collation never applies (unlike a binary comparison).
        coll = _explicit_collation(expr.value) or _column_collation(expr.value, ctx) or "BINARY"
        for cand in expr.candidates:
            cv = e(cand, ctx, dialect)
            # IN applies only the left operand's affinity to each candidate;
            # a candidate column's own affinity never converts the probe.
            eq = compare_values(
                "=", v, _one_sided_coerce(cv, laff), coll, apply_affinity=False
            )
            if eq is None:
                saw_null = True
            elif eq:
                found = True
                break
        if found:
            result = not expr.negated
        elif saw_null or v is None:
            result = None
        else:
            result = expr.negated
        return _bool_result(result)
    if isinstance(expr, A.FunctionCall):
        args = [e(a, ctx, dialect) for a in expr.args]
        return _call_function(expr.name, args, dialect)
    if isinstance(expr, A.Cast):
        return _cast_value(e(expr.operand, ctx, dialect), expr.target_type, dialect)
    if isinstance(expr, A.PostfixIs):
        v = e(expr.operand, ctx, dialect)
        check = expr.check
        if check is A.IsCheck.IS_NULL:
            return _bool_result(v is None)
        if check is A.IsCheck.IS_NOT_NULL:
            return _bool_result(v is not None)
        t = truth(v)
        if check is A.IsCheck.IS_TRUE:
            return _bool_result(t is True)
        return _bool_result(t is False)
    raise EvalError("unsupported-node", type(expr).__name__)
