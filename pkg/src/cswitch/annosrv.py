"""HTTP annotation service: task assignment, rating storage, agreement.

Each generation collects ratings from up to ``n_required`` distinct
evaluators; an evaluator never sees the same generation twice. Accepted
ratings go to an append-only journal that is replayed on startup, so the
in-memory index is a pure function of the journal.
"""

from __future__ import annotations

import itertools
import json
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .corpus import GenerationRecord, ParallelRecord, RatingRecord
from .errors import (
    ConflictError,
    InsufficientDataError,
    LeaseExpiredError,
    UnknownEvaluatorError,
    ValidationError,
)
from .metrics import AgreementResult, krippendorff_alpha

TASK_STATES = ("open", "assigned", "done")


@dataclass
class AnnotationTask:
    task_id: str
    generation_id: str
    text_l1: str
    text_l2: str
    text_cs: str
    assigned_to: str
    state: str = "assigned"
    expires_at: float = 0.0

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "generation_id": self.generation_id,
            "text_l1": self.text_l1,
            "text_l2": self.text_l2,
            "text_cs": self.text_cs,
            "assigned_to": self.assigned_to,
            "state": self.state,
            "expires_at": self.expires_at,
        }


class AnnotationStore:
    """Task queue and rating store; all mutation happens under one lock."""

    def __init__(
        self,
        generations: Iterable[GenerationRecord],
        originals: Mapping[str, ParallelRecord],
        evaluators: Iterable[str],
        n_required: int = 3,
        lease_seconds: float = 1800.0,
        journal_path: str | Path | None = None,
        clock: Callable[[], float] = time.time,
    ):
        self._generations = list(generations)
        self._originals = dict(originals)
        self._evaluators = set(evaluators)
        if not self._evaluators:
            raise ValidationError("at least one evaluator must be registered")
        self._n_required = n_required
        self._lease_seconds = lease_seconds
        self._journal_path = Path(journal_path) if journal_path else None
        self._clock = clock
        self._lock = threading.Lock()
        self._task_counter = itertools.count(1)
        self._tasks: dict[str, AnnotationTask] = {}
        self._ratings: dict[tuple[str, str], RatingRecord] = {}
        self._rating_order: list[RatingRecord] = []
        for gen in self._generations:
            if gen.input_id not in self._originals:
                raise ValidationError(
                    f"generation {gen.id!r} references unknown input {gen.input_id!r}"
                )
        if self._journal_path and self._journal_path.exists():
            self._replay_journal()

    def _replay_journal(self) -> None:
        with self._journal_path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValidationError(
                        f"{self._journal_path}:{line_no}: corrupt journal line"
                    ) from exc
                if event.get("event") != "rating":
                    continue
                record = RatingRecord.from_json_dict(event["record"])
                self._index_rating(record)

    def _index_rating(self, record: RatingRecord) -> None:
        key = (record.generation_id, record.evaluator_id)
        if key in self._ratings:
            raise ConflictError(
                f"evaluator {record.evaluator_id!r} already rated {record.generation_id!r}"
            )
        self._ratings[key] = record
        self._rating_order.append(record)

    def _append_journal(self, record: RatingRecord) -> None:
        if self._journal_path is None:
            return
        with self._journal_path.open("a", encoding="utf-8") as fh:
            fh.write(
                json.dumps({"event": "rating", "record": record.to_json_dict()}, ensure_ascii=False)
                + "\n"
            )
            fh.flush()

    def _active_leases(self, now: float) -> dict[str, list[AnnotationTask]]:
        by_gen: dict[str, list[AnnotationTask]] = {}
        for task in self._tasks.values():
            if task.state == "assigned" and task.expires_at > now:
                by_gen.setdefault(task.generation_id, []).append(task)
        return by_gen

    def next_task(self, evaluator_id: str) -> AnnotationTask | None:
        """Lease the next generation this evaluator may still rate.

        Re-requesting while holding an unexpired lease returns that same
        task, so a reloading client does not burn extra leases.
        """
        with self._lock:
            if evaluator_id not in self._evaluators:
                raise UnknownEvaluatorError(f"unknown evaluator {evaluator_id!r}")
            now = self._clock()
            leases = self._active_leases(now)
            for tasks in leases.values():
                for task in tasks:
                    if task.assigned_to == evaluator_id:
                        return task
            rated_counts: dict[str, int] = {}
            for gid, _ in self._ratings:
                rated_counts[gid] = rated_counts.get(gid, 0) + 1
            for gen in self._generations:
                if (gen.id, evaluator_id) in self._ratings:
                    continue
                active = leases.get(gen.id, [])
                if any(t.assigned_to == evaluator_id for t in active):
                    continue
                if rated_counts.get(gen.id, 0) + len(active) >= self._n_required:
                    continue
                original = self._originals[gen.input_id]
                task = AnnotationTask(
                    task_id=f"task-{next(self._task_counter)}",
                    generation_id=gen.id,
                    text_l1=original.text_l1,
                    text_l2=original.text_l2,
                    text_cs=gen.text_cs,
                    assigned_to=evaluator_id,
                    state="assigned",
                    expires_at=now + self._lease_seconds,
                )
                self._tasks[task.task_id] = task
                return task
            return None

    def submit_rating(
        self, task_id: str, evaluator_id: str, accuracy: int, fluency: int
    ) -> RatingRecord:
        with self._lock:
            if evaluator_id not in self._evaluators:
                raise UnknownEvaluatorError(f"unknown evaluator {evaluator_id!r}")
            for name, value in (("accuracy", accuracy), ("fluency", fluency)):
                if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 3:
                    raise ValidationError(f"{name}={value!r} outside the 1..3 rubric")
            task = self._tasks.get(task_id)
            if task is None:
                raise ValidationError(f"unknown task {task_id!r}")
            if task.assigned_to != evaluator_id:
                raise ConflictError(f"task {task_id!r} is not assigned to {evaluator_id!r}")
            if task.state == "done":
                raise ConflictError(f"task {task_id!r} already submitted")
            now = self._clock()
            if task.expires_at <= now:
                raise LeaseExpiredError(f"lease on task {task_id!r} expired")
            if (task.generation_id, evaluator_id) in self._ratings:
                raise ConflictError(
                    f"evaluator {evaluator_id!r} already rated {task.generation_id!r}"
                )
            record = RatingRecord(
                generation_id=task.generation_id,
                evaluator_id=evaluator_id,
                accuracy=accuracy,
                fluency=fluency,
                timestamp=datetime.fromtimestamp(now, tz=timezone.utc).isoformat(),
            )
            self._append_journal(record)
            self._index_rating(record)
            task.state = "done"
            return record

    def export_ratings(
        self, generation_id: str | None = None, evaluator_id: str | None = None
    ) -> list[RatingRecord]:
        with self._lock:
            out = list(self._rating_order)
        if generation_id is not None:
            out = [r for r in out if r.generation_id == generation_id]
        if evaluator_id is not None:
            out = [r for r in out if r.evaluator_id == evaluator_id]
        return out

    def agreement_report(self) -> dict[str, AgreementResult]:
        """Krippendorff's alpha over the current store, per dimension."""
        with self._lock:
            records = list(self._rating_order)
        if not records:
            raise InsufficientDataError("no ratings stored")
        items = sorted({r.generation_id for r in records})
        evaluators = sorted({r.evaluator_id for r in records})
        item_idx = {g: k for k, g in enumerate(items)}
        eval_idx = {e: k for k, e in enumerate(evaluators)}
        report = {}
        for dimension in ("accuracy", "fluency"):
            matrix: list[list[float | None]] = [
                [None] * len(items) for _ in evaluators
            ]
            for r in records:
                matrix[eval_idx[r.evaluator_id]][item_idx[r.generation_id]] = float(
                    getattr(r, dimension)
                )
            report[dimension] = krippendorff_alpha(
                matrix, level="ordinal", dimension=dimension
            )
        return report


def _error_response(status: int, exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": str(exc)})


def create_app(store: AnnotationStore) -> FastAPI:
    """HTTP facade: GET /task, POST /rating, GET /export, GET /agreement."""
    app = FastAPI(title="cswitch annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/task")
    def get_task(evaluator: str = ""):
        try:
            task = store.next_task(evaluator)
        except UnknownEvaluatorError as exc:
            return _error_response(401, exc)
        return {"task": task.to_json_dict() if task else None}

    @app.post("/rating")
    async def post_rating(request: Request):
        try:
            payload = await request.json()
        except Exception as exc:
            return _error_response(400, exc)
        if not isinstance(payload, dict):
            return _error_response(400, ValidationError("body must be a JSON object"))
        try:
            record = store.submit_rating(
                task_id=payload.get("task_id", ""),
                evaluator_id=payload.get("evaluator_id", ""),
                accuracy=payload.get("accuracy"),
                fluency=payload.get("fluency"),
            )
        except UnknownEvaluatorError as exc:
            return _error_response(401, exc)
        except (ConflictError, LeaseExpiredError) as exc:
            return _error_response(409, exc)
        except ValidationError as exc:
            return _error_response(400, exc)
        return record.to_json_dict()

    @app.get("/export")
    def export(generation_id: str | None = None, evaluator_id: str | None = None):
        return [
            r.to_json_dict()
            for r in store.export_ratings(generation_id=generation_id, evaluator_id=evaluator_id)
        ]

    @app.get("/agreement")
    def agreement():
        try:
            report = store.agreement_report()
        except InsufficientDataError as exc:
            return _error_response(400, exc)
        return {dim: {"dimension": res.dimension, "alpha": res.alpha} for dim, res in report.items()}

    return app


def run_server(store: AnnotationStore, host: str = "127.0.0.1", port: int = 8787) -> None:
    import uvicorn

    uvicorn.run(create_app(store), host=host, port=port, log_level="warning")
