"""Campaign orchestration: the generate/check loop, finding reduction,
fingerprint deduplication, reproducer persistence and summary reporting."""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import os
import pickle
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

from . import sqlast as A
from .dialect import DialectProfile, sqlite_profile, toy_profile
from .engines.base import BugInjection, Executor
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
    EngineCrash,
    OracleVerdict,
    SkipReason,
    UnexpectedEngineError,
    VerdictKind,
    matches_expected,
    run_check,
    run_content_check,
)
from .reducer import NotReproducible, TestCase, VerdictClass, normalize_error, reduce
from .render import UnsupportedFeature, render_statement


class FindingKind(enum.Enum):
    OPTIMIZATION_BUG = "optimization-bug"
    ERROR_BUG = "error-bug"
    CRASH_BUG = "crash-bug"
    HANG = "hang"


@dataclass
class Finding:
    kind: FindingKind
    test_case: TestCase
    verdict: Optional[OracleVerdict] = None
    error_message: str = ""
    raw_test_case: Optional[TestCase] = None
    created_at: float = field(default_factory=time.time)
    fingerprint: str = ""


@dataclass(frozen=True)
class CampaignConfig:
    backend: str = "toy"  # 'toy' or 'sqlite'
    injection: Optional[BugInjection] = None
    oracle_mode: str = "count"  # 'count' or 'content'
    seed: int = 0
    queries_per_database: int = 50
    num_databases: int = 10
    workers: int = 1
    output_dir: Optional[str] = None
    per_query_timeout_ms: int = 10_000
    gen: GenConfig = field(default_factory=GenConfig)
    stop_after_findings: Optional[int] = None
    max_seconds: Optional[float] = None
    reduce_findings: bool = True
    database_path: Optional[str] = None

    def validate(self) -> None:
        if self.backend not in ("toy", "sqlite"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.injection is not None and self.backend != "toy":
            raise ValueError("bug injection requires the toy backend")
        if self.oracle_mode not in ("count", "content"):
            raise ValueError(f"unknown oracle mode {self.oracle_mode!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self.gen.validate()


@dataclass
class CampaignSummary:
    checks_run: int = 0
    consistent: int = 0
    discrepancies: int = 0
    skipped_expected_errors: int = 0
    skipped_timeouts: int = 0
    error_bugs: int = 0
    crash_bugs: int = 0
    statements_issued: int = 0
    statement_syntax_errors: int = 0
    unique_findings: int = 0
    fingerprints: List[str] = field(default_factory=list)
    elapsed_seconds: float = 0.0

    @property
    def throughput(self) -> float:
        return self.checks_run / self.elapsed_seconds if self.elapsed_seconds else 0.0

    def merge(self, other: "CampaignSummary") -> None:
        self.checks_run += other.checks_run
        self.consistent += other.consistent
        self.discrepancies += other.discrepancies
        self.skipped_expected_errors += other.skipped_expected_errors
        self.skipped_timeouts += other.skipped_timeouts
        self.error_bugs += other.error_bugs
        self.crash_bugs += other.crash_bugs
        self.statements_issued += other.statements_issued
        self.statement_syntax_errors += other.statement_syntax_errors

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["throughput_checks_per_s"] = round(self.throughput, 1)
        return d


def make_executor(config: CampaignConfig, worker: int = 0) -> Executor:
    if config.backend == "toy":
        return ToyEngine(toy_profile(), injection=config.injection)
    path = config.database_path or ":memory:"
    if path != ":memory:" and config.workers > 1:
        base, ext = os.path.splitext(path)
        path = f"{base}.w{worker}{ext}"
    return SqliteExecutor(path)


def dialect_for(config: CampaignConfig) -> DialectProfile:
    return toy_profile() if config.backend == "toy" else sqlite_profile()


# ---------------------------------------------------------------------------
# Fingerprinting
# ---------------------------------------------------------------------------


def _operator_multiset(expr: Optional[A.Expression]) -> List[str]:
    if expr is None:
        return []
    ops = []
    for node in A.walk(expr):
        if isinstance(node, A.Binary):
            ops.append(f"binary:{node.op}")
        elif isinstance(node, A.Unary):
            ops.append(f"unary:{node.op}")
        elif isinstance(node, A.Between):
            ops.append("between" + (":sym" if node.symmetric else ""))
        elif isinstance(node, A.InList):
            ops.append("in")
        elif isinstance(node, A.FunctionCall):
            ops.append(f"fn:{node.name.upper()}")
        elif isinstance(node, A.Cast):
            ops.append("cast")
        elif isinstance(node, A.Collate):
            ops.append("collate")
        elif isinstance(node, A.PostfixIs):
            ops.append(f"is:{node.check.name}")
    return sorted(ops)


def fingerprint(finding: Finding, injection: Optional[BugInjection] = None) -> str:
    """Stable identity of a (reduced) finding: kind, the failing predicate's
    operator-kind multiset, the error-message class, and the active injection.
    Insensitive to identifiers and constant values."""
    key = {
        "kind": finding.kind.value,
        "ops": _operator_multiset(finding.test_case.query.where),
        "error": finding.test_case.error_class,
        "injection": injection.value if injection else "",
    }
    blob = json.dumps(key, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------


def _render_or_comment(stmt: A.Statement, dialect: DialectProfile) -> str:
    try:
        return render_statement(stmt, dialect)
    except UnsupportedFeature as e:
        return f"-- unrenderable statement: {e}"


def write_report(finding: Finding, output_dir: str, config: CampaignConfig) -> str:
    """Persist one finding under `<output_dir>/<fingerprint>/`; duplicate
    fingerprints only bump the occurrence counter."""
    assert finding.fingerprint
    directory = os.path.join(output_dir, finding.fingerprint)
    meta_path = os.path.join(directory, "meta.json")
    if os.path.isdir(directory):
        with open(meta_path) as f:
            meta = json.load(f)
        meta["occurrences"] += 1
        meta["last_seen"] = time.time()
        with open(meta_path, "w") as f:
            json.dump(meta, f, indent=2)
        return directory
    os.makedirs(directory)
    tc = finding.test_case
    dialect = tc.dialect
    lines = [_render_or_comment(p.statement, dialect) for p in tc.setup_statements]
    verdict = finding.verdict
    if verdict is not None and verdict.optimized_sql:
        lines.append(verdict.optimized_sql)
        lines.append(verdict.unoptimized_sql)
        lines.append(
            f"-- optimized={verdict.optimized_count} unoptimized={verdict.unoptimized_count}"
        )
    else:
        lines.append(_render_or_comment(tc.query, dialect))
        if finding.error_message:
            lines.append(f"-- error: {finding.error_message}")
    with open(os.path.join(directory, "reproduce.sql"), "w") as f:
        f.write("\n".join(lines) + "\n")
    with open(os.path.join(directory, "testcase.pkl"), "wb") as f:
        pickle.dump(finding, f)
    meta = {
        "kind": finding.kind.value,
        "fingerprint": finding.fingerprint,
        "seed": tc.seed,
        "dialect": dialect.name,
        "backend": config.backend,
        "injection": config.injection.value if config.injection else None,
        "oracle_mode": config.oracle_mode,
        "strategy": tc.strategy.value,
        "optimized_count": verdict.optimized_count if verdict else None,
        "unoptimized_count": verdict.unoptimized_count if verdict else None,
        "error_class": tc.error_class,
        "error_message": finding.error_message,
        "engine_version": _engine_version(config),
        "occurrences": 1,
        "created_at": finding.created_at,
        "last_seen": finding.created_at,
        "config": {
            "seed": config.seed,
            "queries_per_database": config.queries_per_database,
            "num_databases": config.num_databases,
            "backend": config.backend,
        },
    }
    with open(meta_path, "w") as f:
        json.dump(meta, f, indent=2)
    if finding.raw_test_case is not None:
        raw_dir = os.path.join(output_dir, "raw")
        os.makedirs(raw_dir, exist_ok=True)
        raw = finding.raw_test_case
        raw_lines = [_render_or_comment(p.statement, dialect) for p in raw.setup_statements]
        raw_lines.append(_render_or_comment(raw.query, dialect))
        with open(os.path.join(raw_dir, f"{finding.fingerprint}.sql"), "w") as f:
            f.write("\n".join(raw_lines) + "\n")
    return directory


def _engine_version(config: CampaignConfig) -> str:
    executor = make_executor(config)
    try:
        return executor.version()
    finally:
        executor.close()


# ---------------------------------------------------------------------------
# The campaign loop
# ---------------------------------------------------------------------------


def _run_database_iteration(
    config: CampaignConfig, db_index: int, worker: int = 0
) -> Tuple[CampaignSummary, List[Finding]]:
    dialect = dialect_for(config)
    gen = replace(config.gen, seed=config.seed)
    if config.oracle_mode == "content":
        gen = replace(gen, group_by_probability=0.0)
    rng = database_rng(config.seed, db_index)
    executor = make_executor(config, worker)
    summary = CampaignSummary()
    findings: List[Finding] = []
    timeout = config.per_query_timeout_ms / 1000.0
    try:
        executor.reset()
        schema, ddl = generate_schema(rng, gen, dialect)
        dml = populate(rng, schema, gen, dialect)
        setup = ddl + dml
        executed_setup: List[A.Prepared] = []
        for prepared in setup:
            result = executor.execute(prepared.statement)
            summary.statements_issued += 1
            executed_setup.append(prepared)
            if result.is_error:
                if "syntax error" in (result.error or ""):
                    summary.statement_syntax_errors += 1
                if matches_expected(result.error, prepared.expected_errors) is None:
                    summary.error_bugs += 1
                    tc = TestCase(
                        setup_statements=tuple(executed_setup),
                        query=A.SelectQuery(
                            (A.STAR,), (schema.tables[0].name,), (), None
                        ),
                        dialect=dialect,
                        seed=config.seed,
                        verdict_class=VerdictClass.UNEXPECTED_ERROR,
                        error_class=normalize_error(result.error),
                        schema=schema,
                    )
                    findings.append(
                        Finding(FindingKind.ERROR_BUG, tc, error_message=result.error)
                    )
        for check_index in range(config.queries_per_database):
            q = generate_optimized_query(rng, schema, gen, dialect)
            strategy = (
                CountStrategy.NAIVE_ITERATION
                if check_index % 2 == 0
                else CountStrategy.AGGREGATE_COUNT
            )
            summary.checks_run += 1
            summary.statements_issued += 2
            try:
                if config.oracle_mode == "content":
                    verdict = run_content_check(
                        executor, q, dialect, schema, timeout=timeout, seed=config.seed
                    )
                else:
                    verdict = run_check(
                        executor, q, strategy, dialect, timeout=timeout, seed=config.seed
                    )
            except UnexpectedEngineError as e:
                if "syntax error" in e.message:
                    summary.statement_syntax_errors += 1
                summary.error_bugs += 1
                findings.append(
                    Finding(
                        FindingKind.ERROR_BUG,
                        _test_case(config, setup, q, strategy, schema, dialect,
                                   VerdictClass.UNEXPECTED_ERROR, e.message),
                        error_message=e.message,
                    )
                )
                continue
            except EngineCrash as e:
                summary.crash_bugs += 1
                findings.append(
                    Finding(
                        FindingKind.CRASH_BUG,
                        _test_case(config, setup, q, strategy, schema, dialect,
                                   VerdictClass.CRASH, e.message),
                        error_message=e.message,
                    )
                )
                continue
            if verdict.kind is VerdictKind.CONSISTENT:
                summary.consistent += 1
            elif verdict.kind is VerdictKind.SKIPPED:
                if verdict.skip_reason is SkipReason.TIMEOUT:
                    summary.skipped_timeouts += 1
                    findings.append(
                        Finding(
                            FindingKind.HANG,
                            _test_case(config, setup, q, strategy, schema, dialect,
                                       VerdictClass.DISCREPANCY, ""),
                            verdict=verdict,
                        )
                    )
                else:
                    summary.skipped_expected_errors += 1
            else:
                summary.discrepancies += 1
                findings.append(
                    Finding(
                        FindingKind.OPTIMIZATION_BUG,
                        _test_case(config, setup, q, strategy, schema, dialect,
                                   VerdictClass.DISCREPANCY, ""),
                        verdict=verdict,
                    )
                )
            if (
                config.stop_after_findings is not None
                and len(findings) >= config.stop_after_findings
            ):
                break
    finally:
        executor.close()
    return summary, findings


def _test_case(config, setup, q, strategy, schema, dialect, verdict_class, error_message):
    return TestCase(
        setup_statements=tuple(setup),
        query=q,
        dialect=dialect,
        seed=config.seed,
        verdict_class=verdict_class,
        strategy=strategy,
        content_mode=(config.oracle_mode == "content"),
        error_class=normalize_error(error_message) if error_message else "",
        schema=schema,
    )


def _finalize_finding(finding: Finding, config: CampaignConfig) -> Optional[Finding]:
    """Reduce, refresh the verdict on the reduced case, and fingerprint."""
    if finding.kind is not FindingKind.HANG and config.reduce_findings:
        factory = lambda: make_executor(config)
        try:
            reduced = reduce(finding.test_case, factory)
        except NotReproducible:
            return None
        finding.raw_test_case = finding.test_case
        finding.test_case = reduced
        if finding.kind is FindingKind.OPTIMIZATION_BUG:
            executor = factory()
            try:
                executor.reset()
                for prepared in reduced.setup_statements:
                    executor.execute(prepared.statement)
                if reduced.content_mode and reduced.schema is not None:
                    finding.verdict = run_content_check(
                        executor, reduced.query, reduced.dialect, reduced.schema
                    )
                else:
                    finding.verdict = run_check(
                        executor, reduced.query, reduced.strategy, reduced.dialect
                    )
            except (UnexpectedEngineError, EngineCrash):
                pass
            finally:
                executor.close()
    finding.fingerprint = fingerprint(finding, config.injection)
    return finding


def run_campaign(config: CampaignConfig) -> CampaignSummary:
    config.validate()
    started = time.monotonic()
    total = CampaignSummary()
    seen: Dict[str, Finding] = {}
    if config.output_dir:
        os.makedirs(config.output_dir, exist_ok=True)

    def sink(findings: List[Finding]) -> None:
        for finding in findings:
            finalized = _finalize_finding(finding, config)
            if finalized is None:
                continue
            if finalized.fingerprint not in seen:
                seen[finalized.fingerprint] = finalized
            if config.output_dir:
                write_report(finalized, config.output_dir, config)

    # Iterate lazily: num_databases may be huge when max_seconds or
    # stop_after_findings bounds the campaign instead.
    db_indices = range(config.num_databases)
    if config.workers > 1:
        import collections
        import concurrent.futures

        window = config.workers * 4
        pending = collections.deque()
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as pool:
            it = iter(db_indices)
            stopped = False
            while pending or not stopped:
                while not stopped and len(pending) < window:
                    i = next(it, None)
                    if i is None:
                        stopped = True
                        break
                    pending.append(
                        pool.submit(_run_database_iteration, config, i, i % config.workers)
                    )
                if not pending:
                    break
                summary, findings = pending.popleft().result()
                total.merge(summary)
                sink(findings)
                if _should_stop(config, started, seen):
                    for f in pending:
                        f.cancel()
                    break
    else:
        for i in db_indices:
            summary, findings = _run_database_iteration(config, i)
            total.merge(summary)
            sink(findings)
            if _should_stop(config, started, seen):
                break

    total.unique_findings = len(seen)
    total.fingerprints = sorted(seen)
    total.elapsed_seconds = time.monotonic() - started
    return total


def _should_stop(config: CampaignConfig, started: float, seen) -> bool:
    if config.stop_after_findings is not None and len(seen) >= config.stop_after_findings:
        return True
    if config.max_seconds is not None and time.monotonic() - started > config.max_seconds:
        return True
    return False


def replay_report_dir(output_dir: str) -> List[Tuple[str, bool]]:
    """Replay every persisted finding on a fresh engine; returns
    (fingerprint, reproduced) pairs."""
    from .reducer import replay

    results = []
    for name in sorted(os.listdir(output_dir)):
        pkl = os.path.join(output_dir, name, "testcase.pkl")
        if not os.path.isfile(pkl):
            continue
        with open(pkl, "rb") as f:
            finding: Finding = pickle.load(f)
        meta_path = os.path.join(output_dir, name, "meta.json")
        with open(meta_path) as f:
            meta = json.load(f)
        injection = (
            BugInjection.from_name(meta["injection"]) if meta.get("injection") else None
        )
        cfg = CampaignConfig(backend=meta.get("backend", "toy"), injection=injection)
        executor = make_executor(cfg)
        try:
            observed = replay(finding.test_case, executor)
        finally:
            executor.close()
        results.append((name, observed is finding.test_case.verdict_class))
    return results
