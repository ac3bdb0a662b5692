"""Value model: affinity rules, text-to-number coercion, total ordering."""

import pytest

from optfuzz.values import (
    Affinity,
    apply_affinity,
    cast_to_text,
    column_affinity,
    compare_total,
    text_to_number,
)


@pytest.mark.parametrize(
    "declared, expected",
    [
        ("INT", Affinity.INTEGER),
        ("INTEGER", Affinity.INTEGER),
        ("BIGINT", Affinity.INTEGER),
        ("TEXT", Affinity.TEXT),
        ("VARCHAR(20)", Affinity.TEXT),
        ("CLOB", Affinity.TEXT),
        ("BLOB", Affinity.BLOB),
        ("", Affinity.BLOB),
        ("REAL", Affinity.REAL),
        ("DOUBLE", Affinity.REAL),
        ("FLOAT", Affinity.REAL),
        ("NUMERIC", Affinity.NUMERIC),
        ("DECIMAL(10,5)", Affinity.NUMERIC),
        ("DATETIME", Affinity.NUMERIC),
        ("STRING", Affinity.NUMERIC),  # no rule matches -> numeric
    ],
)
def test_column_affinity(declared, expected):
    assert column_affinity(declared) is expected


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1", 1),
        ("-1", -1),
        (" 1", 1),
        ("\n2", 2),
        ("\t 3 ", 3),
        ("1.5", 1.5),
        ("2e2", 200.0),
        ("1x", 1),  # numeric prefix
        ("1.5abc", 1.5),
        ("-", None),
        ("a", None),
        ("", None),
    ],
)
def test_text_to_number_lenient(text, expected):
    assert text_to_number(text) == expected


def test_apply_affinity_integer_lossless_only():
    assert apply_affinity("1", Affinity.INTEGER) == 1
    assert apply_affinity("1.0", Affinity.INTEGER) == 1
    # lossy conversions keep text storage
    assert apply_affinity("1x", Affinity.INTEGER) == "1x"
    assert apply_affinity("a", Affinity.INTEGER) == "a"
    assert apply_affinity(1.0, Affinity.INTEGER) == 1
    assert apply_affinity(1.5, Affinity.INTEGER) == 1.5


def test_apply_affinity_text_converts_numbers():
    assert apply_affinity(1, Affinity.TEXT) == "1"
    assert apply_affinity(1.5, Affinity.TEXT) == "1.5"
    assert apply_affinity(None, Affinity.TEXT) is None


def test_apply_affinity_blob_keeps_everything():
    for v in (1, 1.5, "a", None):
        assert apply_affinity(v, Affinity.BLOB) == v or (
            v is None and apply_affinity(v, Affinity.BLOB) is None
        )


def test_cast_to_text_formats():
    assert cast_to_text(1) == "1"
    assert cast_to_text(-1) == "-1"
    assert cast_to_text(1.0) == "1.0"
    assert cast_to_text(0.5) == "0.5"


def test_total_order_null_below_numbers_below_text():
    assert compare_total(None, -(10**30)) < 0
    assert compare_total(5, "") < 0
    assert compare_total("", 10**18) > 0
    assert compare_total(None, "") < 0


def test_total_order_numbers_mixed_int_float():
    assert compare_total(1, 1.0) == 0
    assert compare_total(0.5, 1) < 0
    assert compare_total(2, 1.5) > 0


def test_total_order_text_binary_vs_nocase():
    assert compare_total("a", "B") > 0  # binary: 'a' (97) > 'B' (66)
    assert compare_total("a", "B", nocase=True) < 0
    assert compare_total("A", "a", nocase=True) == 0


def test_compare_no_cross_type_coercion():
    # total order compares by type rank; no text/number coercion here
    assert compare_total(1, "1") < 0
