"""Differential fuzzer for SQL query-optimizer correctness.

The core idea: given a filter query `SELECT * FROM ... WHERE p`, build a
second query that evaluates `(p IS TRUE)` for every row without giving the
optimizer a WHERE clause to rewrite, and compare the optimized row count
against the sum of per-row truth values. Any mismatch is an optimizer bug.
"""

from .campaign import (
    CampaignConfig,
    CampaignSummary,
    Finding,
    FindingKind,
    fingerprint,
    run_campaign,
    write_report,
)
from .dialect import DialectProfile, sqlite_profile, toy_profile
from .engines.base import BugInjection, EngineResult, Executor, QueryTimeout
from .engines.sqlite_adapter import SqliteExecutor
from .engines.toy import ToyEngine
from .generator import (
    GenConfig,
    database_rng,
    generate_optimized_query,
    generate_schema,
    populate,
)
from .oracle import (
    CountStrategy,
    OracleVerdict,
    VerdictKind,
    run_check,
    run_content_check,
    translate,
)
from .reducer import TestCase, VerdictClass, reduce, replay

__all__ = [
    "BugInjection",
    "CampaignConfig",
    "CampaignSummary",
    "CountStrategy",
    "DialectProfile",
    "EngineResult",
    "Executor",
    "Finding",
    "FindingKind",
    "GenConfig",
    "OracleVerdict",
    "QueryTimeout",
    "SqliteExecutor",
    "TestCase",
    "ToyEngine",
    "VerdictClass",
    "VerdictKind",
    "database_rng",
    "fingerprint",
    "generate_optimized_query",
    "generate_schema",
    "populate",
    "reduce",
    "replay",
    "run_campaign",
    "run_check",
    "run_content_check",
    "sqlite_profile",
    "toy_profile",
    "translate",
    "write_report",
]

__version__ = "0.1.0"
