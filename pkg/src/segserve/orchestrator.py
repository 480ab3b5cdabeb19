"""Task orchestration: UUID submission, two-stage queue admission, worker
execution, and safety-tag gating of results.

Accepted tasks join an unbounded waiting list; a single assignment step
moves them head-first into a bounded execution queue whenever there is room,
and workers consume that queue. A task's result becomes readable only after
its artifact bytes and a zero-length ``SAFE`` sentinel are fully on disk and
the record has been flipped to Done + Safe, closing the partial-read race.
"""

from __future__ import annotations

import logging
import threading
import uuid
from collections import deque
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from .errors import (
    IllegalTransition,
    InvalidCategory,
    InvalidInput,
    NotFound,
    PersistError,
    ResultNotReady,
    SegServeError,
)
from .records import (
    ALL_CATEGORIES,
    SafetyTag,
    TaskRecord,
    TaskState,
)
from .storage import Store

SAFE_SENTINEL = "SAFE"

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Artifact:
    filename: str
    payload: bytes


PipelineFn = Callable[[TaskRecord, Path], list[Artifact]]
ArtifactWriter = Callable[[Path, Sequence[Artifact]], None]


def write_artifacts(result_dir: Path, artifacts: Sequence[Artifact]) -> None:
    """Default artifact writer: plain files inside the task's result dir."""
    result_dir.mkdir(parents=True, exist_ok=True)
    for artifact in artifacts:
        (result_dir / artifact.filename).write_bytes(artifact.payload)


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


class QueueSet:
    """The two-stage admission structure.

    ``waiting`` is an unbounded FIFO of accepted task ids; ``execution`` is
    a bounded FIFO holding at most ``capacity`` ids. An id lives in at most
    one of the two.
    """

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise InvalidInput("queue capacity must be >= 1")
        self.capacity = capacity
        self.waiting: deque[str] = deque()
        self.execution: deque[str] = deque()

    def has_room(self) -> bool:
        return len(self.execution) < self.capacity

    def admit(self) -> list[str]:
        """Move ids head-first from waiting to execution while room lasts."""
        moved = []
        while self.waiting and self.has_room():
            tid = self.waiting.popleft()
            self.execution.append(tid)
            moved.append(tid)
        return moved


class Orchestrator:
    """Shared mutable queue state behind one condition variable.

    Any number of threads may submit or query; one assignment loop feeds the
    execution queue and ``workers`` worker loops drain it. ``start()`` spawns
    those loops; the step methods (``assignment_step``, ``run_next``) are
    also callable directly for single-threaded use and tests.
    """

    def __init__(
        self,
        store: Store,
        data_root: str | Path,
        pipeline: PipelineFn,
        *,
        capacity: int = 4,
        categories: Sequence[str] = ALL_CATEGORIES,
        clock: Callable[[], datetime] = _utc_now,
        artifact_writer: ArtifactWriter = write_artifacts,
    ) -> None:
        self._store = store
        self._root = Path(data_root)
        self._pipeline = pipeline
        self._categories = tuple(categories)
        self._clock = clock
        self._artifact_writer = artifact_writer
        self._cond = threading.Condition()
        self._queues = QueueSet(capacity)
        self._stop = False
        self._inflight = 0
        self._threads: list[threading.Thread] = []
        self._submission_log: list[str] = []
        self._admission_log: list[str] = []
        (self._root / "inputs").mkdir(parents=True, exist_ok=True)
        (self._root / "results").mkdir(parents=True, exist_ok=True)

    # -- input staging ---------------------------------------------------

    def store_input(self, payload: bytes, filename: str) -> str:
        """Persist an upload and return its input_ref (relative path)."""
        ref_dir = self._root / "inputs" / uuid.uuid4().hex
        ref_dir.mkdir(parents=True)
        (ref_dir / filename).write_bytes(payload)
        return str((ref_dir / filename).relative_to(self._root))

    def store_input_dir(self, files: dict[str, bytes]) -> str:
        """Persist a multi-file input (e.g. a dual-modal pair); the ref is
        the directory."""
        ref_dir = self._root / "inputs" / uuid.uuid4().hex
        ref_dir.mkdir(parents=True)
        for name, payload in files.items():
            (ref_dir / name).write_bytes(payload)
        return str(ref_dir.relative_to(self._root))

    def input_path(self, record: TaskRecord) -> Path:
        return self._root / record.input_ref

    def result_dir(self, task_id: str) -> Path:
        return self._root / "results" / task_id

    # -- protocol operations ----------------------------------------------

    def submit(self, owner: int, category: str, input_ref: str) -> str:
        """Create a Waiting/Unsafe task and enqueue it for assignment."""
        if category not in self._categories:
            raise InvalidCategory(
                f"unknown category {category!r}; expected one of "
                f"{', '.join(self._categories)}"
            )
        task_id = str(uuid.uuid4())
        record = TaskRecord(
            id=task_id,
            owner=owner,
            category=category,
            submitted_at=self._clock(),
            state=TaskState.WAITING,
            safety=SafetyTag.UNSAFE,
            input_ref=input_ref,
        )
        with self._cond:
            # Persist before the task becomes runnable; queue order under
            # the lock defines submission order.
            self._store.persist_task(record)
            self._queues.waiting.append(task_id)
            self._submission_log.append(task_id)
            self._cond.notify_all()
        return task_id

    def assignment_step(self) -> int:
        """Admit waiting tasks head-first while the execution queue has
        room; admitted tasks move Waiting -> Queued."""
        with self._cond:
            moved = self._queues.admit()
            for tid in moved:
                if not self._store.update_task_state(
                    tid, state=TaskState.QUEUED,
                    expected_state=TaskState.WAITING,
                ):
                    raise IllegalTransition(f"task {tid} was not Waiting")
                self._admission_log.append(tid)
            if moved:
                self._cond.notify_all()
            return len(moved)

    def run_next(self, worker: str = "worker") -> str | None:
        """Dequeue and execute one task; returns its id, or None when the
        execution queue is empty."""
        with self._cond:
            if not self._queues.execution:
                return None
            task_id = self._queues.execution.popleft()
            self._inflight += 1
            self._cond.notify_all()  # vacancy may unblock assignment
        try:
            if not self._store.update_task_state(
                task_id, state=TaskState.RUNNING,
                expected_state=TaskState.QUEUED,
            ):
                raise IllegalTransition(f"task {task_id} was not Queued")

            record = self._store.load_task(task_id)
            try:
                artifacts = self._pipeline(record, self.input_path(record))
            except Exception as exc:  # noqa: BLE001 - any failure fails the task
                self.fail(task_id, f"{type(exc).__name__}: {exc}")
                return task_id
            try:
                self.complete(task_id, artifacts)
            except (PersistError, OSError):
                pass  # complete() already marked the task Failed
            return task_id
        finally:
            with self._cond:
                self._inflight -= 1
                self._cond.notify_all()

    def complete(self, task_id: str, artifacts: Sequence[Artifact]) -> None:
        """Persist the result, then Done, then Safe — strictly in that order.

        Any write failure leaves the task Failed with safety still Unsafe,
        so a partial result can never be served.
        """
        record = self._store.load_task(task_id)
        if record.state is not TaskState.RUNNING:
            raise IllegalTransition(
                f"complete() requires Running, task {task_id} is "
                f"{record.state.value}"
            )
        result_dir = self.result_dir(task_id)
        try:
            self._artifact_writer(result_dir, artifacts)
            (result_dir / SAFE_SENTINEL).write_bytes(b"")
        except OSError as exc:
            self._mark_failed(task_id, f"result write failed: {exc}")
            raise PersistError(f"result write failed: {exc}") from exc
        if not self._store.update_task_state(
            task_id,
            state=TaskState.DONE,
            result_ref=str(result_dir.relative_to(self._root)),
            expected_state=TaskState.RUNNING,
        ):
            raise IllegalTransition(f"task {task_id} left Running concurrently")
        self._store.update_task_state(task_id, safety=SafetyTag.SAFE)

    def fail(self, task_id: str, reason: str) -> None:
        record = self._store.load_task(task_id)
        if record.state is not TaskState.RUNNING:
            raise IllegalTransition(
                f"fail() requires Running, task {task_id} is {record.state.value}"
            )
        self._mark_failed(task_id, reason)

    def _mark_failed(self, task_id: str, reason: str) -> None:
        if not self._store.update_task_state(
            task_id,
            state=TaskState.FAILED,
            error=reason,
            expected_state=TaskState.RUNNING,
        ):
            raise IllegalTransition(f"task {task_id} left Running concurrently")

    def query_status(self, task_id: str) -> TaskRecord:
        """Read-only snapshot; raises NotFound for unknown ids."""
        return self._store.load_task(task_id)

    def list_tasks(self, owner: int) -> list[TaskRecord]:
        return self._store.list_tasks(owner)

    def open_result(self, task_id: str) -> tuple[str, bytes]:
        """The result artifact, served only when Done and Safe."""
        record = self._store.load_task(task_id)
        if record.state is not TaskState.DONE or record.safety is not SafetyTag.SAFE:
            raise ResultNotReady(
                f"task {task_id} is {record.state.value}/{record.safety.value}"
            )
        result_dir = self.result_dir(task_id)
        if not (result_dir / SAFE_SENTINEL).exists():
            raise ResultNotReady(f"task {task_id} result is missing its sentinel")
        files = sorted(
            p for p in result_dir.iterdir() if p.name != SAFE_SENTINEL
        )
        if not files:
            raise ResultNotReady(f"task {task_id} has no artifact")
        return files[0].name, files[0].read_bytes()

    # -- background loops --------------------------------------------------

    def start(self, workers: int = 1) -> None:
        if self._threads:
            raise SegServeError("orchestrator already started")
        if workers < 1:
            raise InvalidInput("need at least one worker")
        self._stop = False
        assigner = threading.Thread(
            target=self._assignment_loop, name="segserve-assigner", daemon=True
        )
        self._threads.append(assigner)
        for i in range(workers):
            self._threads.append(threading.Thread(
                target=self._worker_loop,
                name=f"segserve-worker-{i}",
                daemon=True,
            ))
        for t in self._threads:
            t.start()

    def stop(self) -> None:
        with self._cond:
            self._stop = True
            self._cond.notify_all()
        for t in self._threads:
            t.join(timeout=30)
        self._threads.clear()

    def _assignment_loop(self) -> None:
        while True:
            with self._cond:
                while not self._stop and not (
                    self._queues.waiting and self._queues.has_room()
                ):
                    self._cond.wait()
                if self._stop:
                    return
            try:
                self.assignment_step()
            except Exception:  # noqa: BLE001 - the loop must outlive one bad step
                logger.exception("assignment step failed")

    def _worker_loop(self) -> None:
        while True:
            with self._cond:
                while not self._stop and not self._queues.execution:
                    self._cond.wait()
                if self._stop:
                    return
            try:
                self.run_next()
            except Exception:  # noqa: BLE001 - the loop must outlive one bad task
                logger.exception("worker step failed")

    # -- observability -----------------------------------------------------

    def queue_lengths(self) -> tuple[int, int]:
        with self._cond:
            return len(self._queues.waiting), len(self._queues.execution)

    def submission_order(self) -> tuple[str, ...]:
        with self._cond:
            return tuple(self._submission_log)

    def admission_order(self) -> tuple[str, ...]:
        with self._cond:
            return tuple(self._admission_log)

    def wait_idle(self, timeout: float = 60.0) -> bool:
        """Block until both queues are empty and no task is mid-execution."""
        with self._cond:
            return self._cond.wait_for(
                lambda: not self._queues.waiting
                and not self._queues.execution
                and self._inflight == 0,
                timeout=timeout,
            )
