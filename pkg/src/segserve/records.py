"""Persistent record types shared by storage, auth, and the orchestrator."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from datetime import datetime, timezone

SEGMENTATION_CATEGORIES = ("brain_tumor", "kidney", "kidney_tumor")
DIAGNOSIS_CATEGORY = "dual_modal"
ALL_CATEGORIES = SEGMENTATION_CATEGORIES + (DIAGNOSIS_CATEGORY,)


class TaskState(str, enum.Enum):
    WAITING = "waiting"
    QUEUED = "queued"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


class SafetyTag(str, enum.Enum):
    UNSAFE = "unsafe"
    SAFE = "safe"


# The only legal task-state moves; terminal states have no successors.
LEGAL_TRANSITIONS: dict[TaskState, frozenset[TaskState]] = {
    TaskState.WAITING: frozenset({TaskState.QUEUED}),
    TaskState.QUEUED: frozenset({TaskState.RUNNING}),
    TaskState.RUNNING: frozenset({TaskState.DONE, TaskState.FAILED}),
    TaskState.DONE: frozenset(),
    TaskState.FAILED: frozenset(),
}


def can_transition(src: TaskState, dst: TaskState) -> bool:
    return dst in LEGAL_TRANSITIONS[src]


def utc_from_ms(ms: int) -> datetime:
    return datetime.fromtimestamp(ms / 1000.0, tz=timezone.utc)


def ms_from_utc(dt: datetime) -> int:
    return int(dt.timestamp() * 1000)


@dataclass(frozen=True)
class UserRecord:
    user_id: int
    username: str
    password_hash: bytes
    salt: bytes
    created_at: datetime


@dataclass(frozen=True)
class SessionToken:
    token: str
    user_id: int
    expires_at: datetime


@dataclass(frozen=True)
class ResetToken:
    token: str
    user_id: int
    expires_at: datetime


@dataclass(frozen=True)
class TaskRecord:
    id: str
    owner: int
    category: str
    submitted_at: datetime
    state: TaskState
    safety: SafetyTag
    input_ref: str
    result_ref: str | None = None
    error: str | None = None

    def with_changes(self, **changes) -> "TaskRecord":
        return replace(self, **changes)
