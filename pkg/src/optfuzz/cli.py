"""Command-line entry point for running fuzzing campaigns and replaying
persisted findings."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from typing import Dict, List, Optional

from .campaign import CampaignConfig, replay_report_dir, run_campaign
from .engines.base import BugInjection
from .generator import GenConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optfuzz",
        description=(
            "Differential fuzzer for SQL optimizer correctness: compares the "
            "row count of an optimized filter query against an unoptimized "
            "per-row predicate evaluation of the same query."
        ),
    )
    parser.add_argument("--backend", choices=["toy", "sqlite"], default=None,
                        help="engine under test (default: toy)")
    parser.add_argument("--inject", default=None, metavar="NAME",
                        help="activate a named toy-engine bug injection "
                             "(e.g. LikeRangeSkip); toy backend only")
    parser.add_argument("--oracle", choices=["count", "content"], default=None,
                        help="comparison mode: row counts or full row multisets")
    parser.add_argument("--seed", type=int, default=None, help="campaign seed")
    parser.add_argument("--queries", type=int, default=None,
                        help="checks per generated database")
    parser.add_argument("--databases", type=int, default=None,
                        help="number of generated databases")
    parser.add_argument("--workers", type=int, default=None,
                        help="parallel worker processes")
    parser.add_argument("--timeout-ms", type=int, default=None,
                        help="per-query timeout in milliseconds")
    parser.add_argument("--max-seconds", type=float, default=None,
                        help="stop starting new databases after this wall-clock budget")
    parser.add_argument("--config", metavar="FILE", default=None,
                        help="key=value config file (flags override it)")
    parser.add_argument("--out", metavar="DIR", default=None,
                        help="directory for deduplicated finding reports")
    parser.add_argument("--replay", metavar="DIR", default=None,
                        help="replay all findings persisted under DIR and exit")
    return parser


_INT_KEYS = {"seed", "queries", "databases", "workers", "timeout_ms"}
_FLOAT_KEYS = {"max_seconds"}


def load_config_file(path: str) -> Dict[str, object]:
    """Parse a `key=value` per-line file; '#' starts a comment."""
    values: Dict[str, object] = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            else:
                values[key] = value
    return values


def resolve_config(args: argparse.Namespace) -> CampaignConfig:
    """Defaults, overridden by the config file, overridden by flags."""
    merged: Dict[str, object] = {}
    if args.config:
        merged.update(load_config_file(args.config))
    for key in ("backend", "inject", "oracle", "seed", "queries", "databases",
                "workers", "timeout_ms", "max_seconds", "out"):
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    injection = None
    if merged.get("inject"):
        injection = BugInjection.from_name(str(merged["inject"]))
    return CampaignConfig(
        backend=str(merged.get("backend", "toy")),
        injection=injection,
        oracle_mode=str(merged.get("oracle", "count")),
        seed=int(merged.get("seed", 0)),
        queries_per_database=int(merged.get("queries", 50)),
        num_databases=int(merged.get("databases", 10)),
        workers=int(merged.get("workers", 1)),
        per_query_timeout_ms=int(merged.get("timeout_ms", 10_000)),
        max_seconds=(float(merged["max_seconds"]) if "max_seconds" in merged else None),
        output_dir=(str(merged["out"]) if merged.get("out") else None),
        gen=GenConfig(),
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.replay:
        results = replay_report_dir(args.replay)
        failures = [name for name, ok in results if not ok]
        for name, ok in results:
            print(f"{'REPRODUCED' if ok else 'LOST':10s} {name}")
        print(f"{len(results) - len(failures)}/{len(results)} findings reproduced")
        return 1 if failures else 0
    try:
        config = resolve_config(args)
        config.validate()
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    summary = run_campaign(config)
    print(json.dumps(summary.to_dict(), indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
