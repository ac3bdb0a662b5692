"""SQL value model: NULL, integers, reals, text, booleans, and type affinity.

Values are represented with plain Python objects: ``None`` for NULL,
``int``/``float`` for numbers, ``str`` for text and ``bool`` for booleans
(only meaningful in dialects with a native boolean type; elsewhere they
are normalized to 0/1 integers).
"""

from __future__ import annotations

import enum
import re
from typing import Optional, Union

_NUMERIC_LITERAL = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")

SqlValue = Union[None, bool, int, float, str]

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class Affinity(enum.Enum):
    INTEGER = "INTEGER"
    TEXT = "TEXT"
    REAL = "REAL"
    NUMERIC = "NUMERIC"
    BLOB = "BLOB"


def column_affinity(declared_type: str) -> Affinity:
    """Map a declared column type to its affinity class.

    Follows the substring rules of the emulated embedded dialect: an empty
    declared type yields BLOB (no affinity); unrecognized types fall back
    to NUMERIC.
    """
    t = declared_type.upper()
    if not t:
        return Affinity.BLOB
    if "INT" in t:
        return Affinity.INTEGER
    if "CHAR" in t or "CLOB" in t or "TEXT" in t:
        return Affinity.TEXT
    if "BLOB" in t:
        return Affinity.BLOB
    if "REAL" in t or "FLOA" in t or "DOUB" in t:
        return Affinity.REAL
    return Affinity.NUMERIC


def is_numeric(v: SqlValue) -> bool:
    return isinstance(v, (bool, int, float))


def normalize_bool(v: SqlValue) -> SqlValue:
    """Booleans collapse to 0/1 integers in dialects without native booleans."""
    if isinstance(v, bool):
        return 1 if v else 0
    return v


def text_to_number(text: str) -> Optional[Union[int, float]]:
    """Lenient text-to-number conversion used by affinity coercion.

    Accepts leading/trailing whitespace and a numeric *prefix* (the rest of
    the string is ignored), mirroring the embedded dialect. Returns None when
    no numeric prefix exists.
    """
    s = text.strip()
    if not s:
        return None
    i = 0
    n = len(s)
    if s[i] in "+-":
        i += 1
    start_digits = i
    while i < n and s[i].isdigit():
        i += 1
    int_end = i
    is_float = False
    if i < n and s[i] == ".":
        is_float = True
        i += 1
        while i < n and s[i].isdigit():
            i += 1
    if i < n and s[i] in "eE" and i > start_digits:
        j = i + 1
        if j < n and s[j] in "+-":
            j += 1
        if j < n and s[j].isdigit():
            is_float = True
            i = j
            while i < n and s[i].isdigit():
                i += 1
    if int_end == start_digits and not is_float:
        return None
    prefix = s[:i]
    try:
        if is_float:
            return float(prefix)
        value = int(prefix)
    except ValueError:
        return None
    if value < INT64_MIN or value > INT64_MAX:
        return float(prefix)
    return value


def parse_full_number(text: str) -> Optional[Union[int, float]]:
    """Strict text-to-number conversion used by affinity: the entire string
    (ignoring surrounding whitespace) must be a well-formed numeric literal."""
    s = text.strip()
    if not _NUMERIC_LITERAL.fullmatch(s):
        return None
    return text_to_number(s)


def apply_affinity(value: SqlValue, affinity: Affinity) -> SqlValue:
    """Coerce a value according to a column's affinity, as done on storage."""
    value = normalize_bool(value)
    if value is None or affinity == Affinity.BLOB:
        return value
    if affinity in (Affinity.INTEGER, Affinity.NUMERIC):
        if isinstance(value, str):
            # Only well-formed numeric literals convert; other text is
            # stored as-is.
            n = parse_full_number(value)
            if n is None:
                return value
            value = n
        if isinstance(value, float) and value.is_integer() and INT64_MIN <= value <= INT64_MAX:
            return int(value)
        return value
    if affinity == Affinity.REAL:
        if isinstance(value, str):
            n = parse_full_number(value)
            return value if n is None else float(n)
        return float(value)
    if affinity == Affinity.TEXT:
        if isinstance(value, (int, float)):
            return format_number(value)
        return value
    return value


def format_number(n: Union[int, float]) -> str:
    """Render a number the way the engine casts it to text."""
    if isinstance(n, bool):
        n = int(n)
    if isinstance(n, int):
        return str(n)
    if n != n:  # NaN is not representable; callers avoid producing it
        return "NULL"
    if n == int(n) and abs(n) < 1e15:
        return "%.1f" % n
    return repr(n)


def cast_to_text(v: SqlValue) -> Optional[str]:
    if v is None:
        return None
    if isinstance(v, str):
        return v
    return format_number(normalize_bool(v))


# Total cross-type ordering: NULL < numbers < text.
_TYPE_RANK_NULL = 0
_TYPE_RANK_NUM = 1
_TYPE_RANK_TEXT = 2


def type_rank(v: SqlValue) -> int:
    if v is None:
        return _TYPE_RANK_NULL
    if isinstance(v, (bool, int, float)):
        return _TYPE_RANK_NUM
    return _TYPE_RANK_TEXT


def compare_total(a: SqlValue, b: SqlValue, nocase: bool = False) -> int:
    """Three-way comparison in the engine's total storage order.

    NULLs sort first, numbers next (numerically), text last (byte order, or
    case-folded under NOCASE). Used for index ordering and value comparison
    once NULL propagation has been handled by the caller.
    """
    ra, rb = type_rank(a), type_rank(b)
    if ra != rb:
        return -1 if ra < rb else 1
    if ra == _TYPE_RANK_NULL:
        return 0
    if ra == _TYPE_RANK_NUM:
        a = normalize_bool(a)
        b = normalize_bool(b)
        if a == b:
            return 0
        return -1 if a < b else 1
    assert isinstance(a, str) and isinstance(b, str)
    if nocase:
        a, b = a.lower(), b.lower()
    if a == b:
        return 0
    return -1 if a < b else 1
