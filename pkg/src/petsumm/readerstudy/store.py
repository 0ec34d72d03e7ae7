"""SQLite persistence for review sessions.

One connection per operation with WAL mode, so concurrent readers are
safe; every write commits before the caller gets its acknowledgment.
The audit table is append-only: resubmissions replace the assessment
row but never touch history.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from contextlib import contextmanager
from pathlib import Path

_SCHEMA = """
CREATE TABLE IF NOT EXISTS cases (
    case_id TEXT PRIMARY KEY,
    findings TEXT NOT NULL,
    indications TEXT NOT NULL,
    impression TEXT NOT NULL,
    origin TEXT NOT NULL CHECK (origin IN ('original', 'generated')),
    style_owner TEXT NOT NULL,
    source_report_id TEXT
);
CREATE TABLE IF NOT EXISTS sessions (
    session_id TEXT PRIMARY KEY,
    reader_id TEXT NOT NULL,
    case_order TEXT NOT NULL,
    cursor INTEGER NOT NULL DEFAULT 0,
    seed INTEGER NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS assessments (
    session_id TEXT NOT NULL,
    case_id TEXT NOT NULL,
    reader_id TEXT NOT NULL,
    scores TEXT NOT NULL,
    utility INTEGER NOT NULL,
    comment TEXT,
    submitted_at TEXT NOT NULL,
    PRIMARY KEY (session_id, case_id)
);
CREATE TABLE IF NOT EXISTS audit_log (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    session_id TEXT NOT NULL,
    case_id TEXT NOT NULL,
    reader_id TEXT NOT NULL,
    action TEXT NOT NULL,
    payload TEXT NOT NULL,
    at TEXT NOT NULL
);
"""


class StudyStore:
    def __init__(self, path):
        self.path = str(path)
        if self.path != ":memory:":
            Path(self.path).parent.mkdir(parents=True, exist_ok=True)
            with self._connect() as conn:
                conn.executescript(_SCHEMA)
        else:
            # a :memory: database vanishes per connection; keep one open
            # and serialize access since HTTP servers hop threads
            self._memory_conn = sqlite3.connect(":memory:",
                                                check_same_thread=False)
            self._memory_conn.row_factory = sqlite3.Row
            self._memory_conn.executescript(_SCHEMA)
            self._memory_lock = threading.Lock()

    @contextmanager
    def _connect(self):
        if self.path == ":memory:":
            with self._memory_lock:
                yield self._memory_conn
                self._memory_conn.commit()
            return
        conn = sqlite3.connect(self.path, timeout=30.0)
        conn.row_factory = sqlite3.Row
        conn.execute("PRAGMA journal_mode=WAL")
        conn.execute("PRAGMA foreign_keys=ON")
        try:
            with conn:
                yield conn
        finally:
            conn.close()

    # -- cases -------------------------------------------------------
    def upsert_cases(self, rows: list[dict]) -> None:
        with self._connect() as conn:
            conn.executemany(
                "INSERT OR REPLACE INTO cases VALUES "
                "(:case_id, :findings, :indications, :impression, :origin,"
                " :style_owner, :source_report_id)", rows)

    def case(self, case_id: str) -> dict | None:
        with self._connect() as conn:
            row = conn.execute("SELECT * FROM cases WHERE case_id = ?",
                               (case_id,)).fetchone()
        return dict(row) if row else None

    def all_cases(self) -> list[dict]:
        with self._connect() as conn:
            rows = conn.execute(
                "SELECT * FROM cases ORDER BY case_id").fetchall()
        return [dict(r) for r in rows]

    # -- sessions ----------------------------------------------------
    def create_session(self, session_id: str, reader_id: str,
                       case_order: list[str], seed: int,
                       created_at: str) -> None:
        with self._connect() as conn:
            conn.execute(
                "INSERT INTO sessions VALUES (?, ?, ?, 0, ?, ?)",
                (session_id, reader_id, json.dumps(case_order), seed,
                 created_at))

    def session(self, session_id: str) -> dict | None:
        with self._connect() as conn:
            row = conn.execute("SELECT * FROM sessions WHERE session_id = ?",
                               (session_id,)).fetchone()
        if row is None:
            return None
        out = dict(row)
        out["case_order"] = json.loads(out["case_order"])
        return out

    def set_cursor(self, session_id: str, cursor: int) -> None:
        with self._connect() as conn:
            conn.execute("UPDATE sessions SET cursor = ? WHERE session_id = ?",
                         (cursor, session_id))

    # -- assessments -------------------------------------------------
    def upsert_assessment(self, session_id: str, case_id: str, reader_id: str,
                          scores: dict, utility: int, comment: str | None,
                          submitted_at: str, cursor: int | None) -> bool:
        """Store the assessment, log the submission, optionally advance
        the cursor, all in one transaction. Returns True on replace."""
        with self._connect() as conn:
            existing = conn.execute(
                "SELECT 1 FROM assessments WHERE session_id = ? AND case_id = ?",
                (session_id, case_id)).fetchone()
            conn.execute(
                "INSERT OR REPLACE INTO assessments VALUES (?, ?, ?, ?, ?, ?, ?)",
                (session_id, case_id, reader_id, json.dumps(scores), utility,
                 comment, submitted_at))
            conn.execute(
                "INSERT INTO audit_log (session_id, case_id, reader_id, action,"
                " payload, at) VALUES (?, ?, ?, ?, ?, ?)",
                (session_id, case_id, reader_id,
                 "resubmit" if existing else "submit",
                 json.dumps({"scores": scores, "utility": utility,
                             "comment": comment}),
                 submitted_at))
            if cursor is not None:
                conn.execute(
                    "UPDATE sessions SET cursor = ? WHERE session_id = ?",
                    (cursor, session_id))
        return bool(existing)

    def assessments(self, session_id: str | None = None) -> list[dict]:
        query = "SELECT * FROM assessments"
        args: tuple = ()
        if session_id is not None:
            query += " WHERE session_id = ?"
            args = (session_id,)
        with self._connect() as conn:
            rows = conn.execute(query + " ORDER BY session_id, case_id",
                                args).fetchall()
        out = []
        for row in rows:
            d = dict(row)
            d["scores"] = json.loads(d["scores"])
            out.append(d)
        return out

    def audit_entries(self, session_id: str, case_id: str | None = None) -> list[dict]:
        query = "SELECT * FROM audit_log WHERE session_id = ?"
        args: list = [session_id]
        if case_id is not None:
            query += " AND case_id = ?"
            args.append(case_id)
        with self._connect() as conn:
            rows = conn.execute(query + " ORDER BY id", args).fetchall()
        return [dict(r) for r in rows]
