"""Durable single-file store for users, sessions, reset tokens, and tasks.

Backed by sqlite (WAL journal, full synchronous), guarded by one lock so
writes are serialized per the storage contract; acknowledged writes have
been committed before the call returns. The file is tagged with an
application id and a schema version checked on open.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from pathlib import Path
from typing import IO, Iterable

from .errors import NotFound, PersistError, UsernameTaken
from .records import (
    SafetyTag,
    TaskRecord,
    TaskState,
    UserRecord,
    ms_from_utc,
    utc_from_ms,
)

APPLICATION_ID = 0x53475256  # "SGRV"
SCHEMA_VERSION = 1

_SCHEMA = """
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS users (
    user_id INTEGER PRIMARY KEY AUTOINCREMENT,
    username TEXT NOT NULL UNIQUE,
    password_hash BLOB NOT NULL,
    salt BLOB NOT NULL,
    created_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    token TEXT PRIMARY KEY,
    user_id INTEGER NOT NULL REFERENCES users(user_id),
    expires_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS reset_tokens (
    token TEXT PRIMARY KEY,
    user_id INTEGER NOT NULL REFERENCES users(user_id),
    expires_at INTEGER NOT NULL,
    used INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS tasks (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    id TEXT NOT NULL UNIQUE,
    owner INTEGER NOT NULL,
    category TEXT NOT NULL,
    submitted_at INTEGER NOT NULL,
    state TEXT NOT NULL,
    safety TEXT NOT NULL,
    input_ref TEXT NOT NULL,
    result_ref TEXT,
    error TEXT
);
CREATE INDEX IF NOT EXISTS idx_tasks_owner ON tasks(owner, submitted_at DESC);
"""


class Store:
    """Thread-safe persistence layer. All methods may be called from any
    thread; mutations are serialized by an internal lock."""

    def __init__(self, path: str | Path) -> None:
        self._path = Path(path)
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(str(self._path), check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._conn.execute("PRAGMA synchronous=FULL")
        self._conn.execute("PRAGMA foreign_keys=ON")
        self._init_schema()

    def _init_schema(self) -> None:
        with self._lock:
            (app_id,) = self._conn.execute("PRAGMA application_id").fetchone()
            is_new = not self._conn.execute(
                "SELECT name FROM sqlite_master WHERE type='table' AND name='meta'"
            ).fetchone()
            if is_new:
                self._conn.execute(f"PRAGMA application_id = {APPLICATION_ID}")
                self._conn.executescript(_SCHEMA)
                self._conn.execute(
                    "INSERT OR REPLACE INTO meta (key, value) VALUES (?, ?)",
                    ("schema_version", str(SCHEMA_VERSION)),
                )
                self._conn.commit()
                return
            if app_id != APPLICATION_ID:
                raise PersistError(f"not a segserve store: application_id={app_id:#x}")
            row = self._conn.execute(
                "SELECT value FROM meta WHERE key='schema_version'"
            ).fetchone()
            if row is None or int(row[0]) != SCHEMA_VERSION:
                raise PersistError(f"unsupported store schema version: {row}")

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- users ---------------------------------------------------------

    def create_user(
        self, username: str, password_hash: bytes, salt: bytes, created_at_ms: int
    ) -> UserRecord:
        with self._lock:
            try:
                cur = self._conn.execute(
                    "INSERT INTO users (username, password_hash, salt, created_at) "
                    "VALUES (?, ?, ?, ?)",
                    (username, password_hash, salt, created_at_ms),
                )
                self._conn.commit()
            except sqlite3.IntegrityError:
                self._conn.rollback()
                raise UsernameTaken(f"username {username!r} already exists")
            except sqlite3.Error as exc:
                self._conn.rollback()
                raise PersistError(f"user insert failed: {exc}") from exc
            return UserRecord(
                user_id=cur.lastrowid,
                username=username,
                password_hash=password_hash,
                salt=salt,
                created_at=utc_from_ms(created_at_ms),
            )

    def get_user_by_name(self, username: str) -> UserRecord | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT user_id, username, password_hash, salt, created_at "
                "FROM users WHERE username = ?",
                (username,),
            ).fetchone()
        return self._user_from_row(row)

    def get_user(self, user_id: int) -> UserRecord | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT user_id, username, password_hash, salt, created_at "
                "FROM users WHERE user_id = ?",
                (user_id,),
            ).fetchone()
        return self._user_from_row(row)

    @staticmethod
    def _user_from_row(row) -> UserRecord | None:
        if row is None:
            return None
        return UserRecord(
            user_id=row[0],
            username=row[1],
            password_hash=bytes(row[2]),
            salt=bytes(row[3]),
            created_at=utc_from_ms(row[4]),
        )

    def update_password(
        self, user_id: int, password_hash: bytes, salt: bytes
    ) -> None:
        with self._lock:
            cur = self._conn.execute(
                "UPDATE users SET password_hash = ?, salt = ? WHERE user_id = ?",
                (password_hash, salt, user_id),
            )
            self._conn.commit()
            if cur.rowcount == 0:
                raise NotFound(f"no user {user_id}")

    def count_users(self) -> int:
        with self._lock:
            (n,) = self._conn.execute("SELECT COUNT(*) FROM users").fetchone()
        return int(n)

    # -- sessions ------------------------------------------------------

    def put_session(self, token: str, user_id: int, expires_at_ms: int) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO sessions (token, user_id, expires_at) VALUES (?, ?, ?)",
                (token, user_id, expires_at_ms),
            )
            self._conn.commit()

    def get_session(self, token: str) -> tuple[int, int] | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT user_id, expires_at FROM sessions WHERE token = ?",
                (token,),
            ).fetchone()
        return (row[0], row[1]) if row else None

    def delete_sessions(self, user_id: int) -> None:
        with self._lock:
            self._conn.execute("DELETE FROM sessions WHERE user_id = ?", (user_id,))
            self._conn.commit()

    # -- reset tokens ----------------------------------------------------

    def put_reset(self, token: str, user_id: int, expires_at_ms: int) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO reset_tokens (token, user_id, expires_at) "
                "VALUES (?, ?, ?)",
                (token, user_id, expires_at_ms),
            )
            self._conn.commit()

    def take_reset(self, token: str) -> tuple[int, int] | None:
        """Atomically consume an unused reset token.

        Returns (user_id, expires_at_ms) and marks it used, or None when the
        token is unknown or already spent.
        """
        with self._lock:
            row = self._conn.execute(
                "SELECT user_id, expires_at, used FROM reset_tokens WHERE token = ?",
                (token,),
            ).fetchone()
            if row is None or row[2]:
                return None
            self._conn.execute(
                "UPDATE reset_tokens SET used = 1 WHERE token = ?", (token,)
            )
            self._conn.commit()
            return (row[0], row[1])

    # -- tasks -----------------------------------------------------------

    def persist_task(self, record: TaskRecord) -> None:
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT INTO tasks (id, owner, category, submitted_at, state, "
                    "safety, input_ref, result_ref, error) "
                    "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                    (
                        record.id,
                        record.owner,
                        record.category,
                        ms_from_utc(record.submitted_at),
                        record.state.value,
                        record.safety.value,
                        record.input_ref,
                        record.result_ref,
                        record.error,
                    ),
                )
                self._conn.commit()
            except sqlite3.Error as exc:
                self._conn.rollback()
                raise PersistError(f"task insert failed: {exc}") from exc

    def load_task(self, task_id: str) -> TaskRecord:
        with self._lock:
            row = self._conn.execute(
                "SELECT id, owner, category, submitted_at, state, safety, "
                "input_ref, result_ref, error FROM tasks WHERE id = ?",
                (task_id,),
            ).fetchone()
        if row is None:
            raise NotFound(f"no task {task_id}")
        return self._task_from_row(row)

    @staticmethod
    def _task_from_row(row) -> TaskRecord:
        return TaskRecord(
            id=row[0],
            owner=row[1],
            category=row[2],
            submitted_at=utc_from_ms(row[3]),
            state=TaskState(row[4]),
            safety=SafetyTag(row[5]),
            input_ref=row[6],
            result_ref=row[7],
            error=row[8],
        )

    def update_task_state(
        self,
        task_id: str,
        *,
        state: TaskState | None = None,
        safety: SafetyTag | None = None,
        result_ref: str | None = None,
        error: str | None = None,
        expected_state: TaskState | None = None,
    ) -> bool:
        """Atomically update task fields in one transaction.

        With ``expected_state`` set, the update applies only if the stored
        state matches (compare-and-set); returns whether a row changed.
        """
        sets, args = [], []
        for column, value in (
            ("state", state.value if state else None),
            ("safety", safety.value if safety else None),
            ("result_ref", result_ref),
            ("error", error),
        ):
            if value is not None:
                sets.append(f"{column} = ?")
                args.append(value)
        if not sets:
            raise PersistError("update_task_state called with nothing to update")
        sql = f"UPDATE tasks SET {', '.join(sets)} WHERE id = ?"
        args.append(task_id)
        if expected_state is not None:
            sql += " AND state = ?"
            args.append(expected_state.value)
        with self._lock:
            try:
                cur = self._conn.execute(sql, args)
                self._conn.commit()
            except sqlite3.Error as exc:
                self._conn.rollback()
                raise PersistError(f"task update failed: {exc}") from exc
            if cur.rowcount == 0 and expected_state is None:
                raise NotFound(f"no task {task_id}")
            return cur.rowcount > 0

    def list_tasks(self, owner: int) -> list[TaskRecord]:
        """The owner's tasks, newest first."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT id, owner, category, submitted_at, state, safety, "
                "input_ref, result_ref, error FROM tasks WHERE owner = ? "
                "ORDER BY submitted_at DESC, seq DESC",
                (owner,),
            ).fetchall()
        return [self._task_from_row(r) for r in rows]

    def all_tasks(self) -> list[TaskRecord]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT id, owner, category, submitted_at, state, safety, "
                "input_ref, result_ref, error FROM tasks ORDER BY seq"
            ).fetchall()
        return [self._task_from_row(r) for r in rows]

    def all_users(self) -> list[UserRecord]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT user_id, username, password_hash, salt, created_at "
                "FROM users ORDER BY user_id"
            ).fetchall()
        return [self._user_from_row(r) for r in rows]

    # -- debugging dump --------------------------------------------------

    def export_jsonl(self, fp: IO[str]) -> int:
        """Dump users and tasks as line-delimited JSON; returns line count."""
        n = 0
        for user in self.all_users():
            fp.write(json.dumps({
                "kind": "user",
                "user_id": user.user_id,
                "username": user.username,
                "password_hash": user.password_hash.hex(),
                "salt": user.salt.hex(),
                "created_at": ms_from_utc(user.created_at),
            }) + "\n")
            n += 1
        for task in self.all_tasks():
            fp.write(json.dumps({
                "kind": "task",
                "id": task.id,
                "owner": task.owner,
                "category": task.category,
                "submitted_at": ms_from_utc(task.submitted_at),
                "state": task.state.value,
                "safety": task.safety.value,
                "input_ref": task.input_ref,
                "result_ref": task.result_ref,
                "error": task.error,
            }) + "\n")
            n += 1
        return n

    def import_jsonl(self, lines: Iterable[str]) -> int:
        n = 0
        for line in lines:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            kind = obj.get("kind")
            if kind == "user":
                # Raw insert so user ids (referenced by tasks) survive.
                with self._lock:
                    try:
                        self._conn.execute(
                            "INSERT INTO users (user_id, username, password_hash, "
                            "salt, created_at) VALUES (?, ?, ?, ?, ?)",
                            (
                                obj["user_id"],
                                obj["username"],
                                bytes.fromhex(obj["password_hash"]),
                                bytes.fromhex(obj["salt"]),
                                obj["created_at"],
                            ),
                        )
                        self._conn.commit()
                    except sqlite3.IntegrityError as exc:
                        self._conn.rollback()
                        raise PersistError(f"user import collision: {exc}") from exc
            elif kind == "task":
                self.persist_task(TaskRecord(
                    id=obj["id"],
                    owner=obj["owner"],
                    category=obj["category"],
                    submitted_at=utc_from_ms(obj["submitted_at"]),
                    state=TaskState(obj["state"]),
                    safety=SafetyTag(obj["safety"]),
                    input_ref=obj["input_ref"],
                    result_ref=obj.get("result_ref"),
                    error=obj.get("error"),
                ))
            else:
                raise PersistError(f"unknown dump record kind {kind!r}")
            n += 1
        return n
