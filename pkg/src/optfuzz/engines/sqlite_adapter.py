"""Adapter to the real embedded SQL engine (sqlite3), driven by rendered SQL.

Runs in-process with one connection per worker. Driver-level failures become
classified Error results with the raw message preserved; the progress
handler enforces per-statement deadlines.
"""

from __future__ import annotations

import sqlite3
import time
from typing import Optional

from .. import sqlast as A
from ..dialect import DialectProfile, sqlite_profile
from ..render import UnsupportedFeature, render_statement
from .base import EngineResult, Executor, QueryTimeout


class SqliteExecutor(Executor):
    dialect_name = "sqlite"

    def __init__(self, path: str = ":memory:", dialect: Optional[DialectProfile] = None):
        self.path = path
        self.dialect = dialect or sqlite_profile()
        self._connect()

    def _connect(self):
        self.conn = sqlite3.connect(self.path)
        self.conn.isolation_level = None  # autocommit; statements stand alone

    def reset(self) -> None:
        self.conn.close()
        if self.path != ":memory:":
            import os

            try:
                os.remove(self.path)
            except OSError:
                pass
        self._connect()

    def close(self) -> None:
        self.conn.close()

    def version(self) -> str:
        return f"sqlite/{sqlite3.sqlite_version}"

    def execute(self, stmt: A.Statement, deadline: Optional[float] = None) -> EngineResult:
        try:
            sql = render_statement(stmt, self.dialect)
        except UnsupportedFeature as e:
            return EngineResult.failure(f"unsupported feature: {e}")
        return self.execute_sql(sql, deadline)

    def execute_sql(self, sql: str, deadline: Optional[float] = None) -> EngineResult:
        timed_out = False
        if deadline is not None:

            def on_progress():
                nonlocal timed_out
                if time.monotonic() > deadline:
                    timed_out = True
                    return 1
                return 0

            self.conn.set_progress_handler(on_progress, 10_000)
        try:
            cur = self.conn.execute(sql)
            columns = tuple(d[0] for d in cur.description) if cur.description else ()
            rows = [tuple(r) for r in cur.fetchall()]
            return EngineResult.ok(rows, columns)
        except sqlite3.OperationalError as e:
            if timed_out or "interrupted" in str(e):
                raise QueryTimeout(sql) from e
            return EngineResult.failure(str(e))
        except sqlite3.Error as e:
            return EngineResult.failure(str(e))
        finally:
            if deadline is not None:
                self.conn.set_progress_handler(None, 0)
