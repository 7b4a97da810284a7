"""HTTP service for the interactive analysis loop.

Datasets are uploaded once, cached in memory, and persisted to a data
directory under a content-hash id (re-uploading the same bytes is
idempotent and a restart reloads the same ids). Shift tasks run on a small
thread pool off the request path; clients poll the task index or the
individual handle and fetch the result when the state reaches "done".

All JSON bodies are produced by the serialize module, so they match the CLI
exports byte for byte.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, File, Request, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from starlette.concurrency import run_in_threadpool

from . import serialize
from .errors import (
    DemandFlowError,
    DuplicateRecordError,
    EmptyDatasetError,
    FormatError,
    LocationConflictError,
    PeriodError,
    StreamError,
)
from .ingest import Dataset, ValidationReport, build_dataset, parse_consumption_csv, parse_iso_date
from .shift import (
    DEFAULT_ARROW_MIN_MAGNITUDE,
    DEFAULT_ARROW_STRIDE,
    DEFAULT_GRID_CELLS,
    DEFAULT_WINDOWS,
    DONE,
    FAILED,
    PENDING,
    RUNNING,
    ShiftTask,
    run_task,
    validate_task,
)
from .spatial import hexbin_demand
from .temporal import (
    BANDS,
    FULL_DAY,
    GRANULARITIES,
    RATIO_KINDS,
    TimePeriod,
    aux_lines,
    daily_series,
    meter_stats,
    ratio_series,
)

logger = logging.getLogger(__name__)

DEFAULT_QUEUE_SIZE = 16
DEFAULT_HEX_SIZE = 500.0


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: str = "demandflow-data"
    queue_size: int = DEFAULT_QUEUE_SIZE
    workers: int = 2
    grid_cells: int = DEFAULT_GRID_CELLS
    windows: tuple[int, int] = DEFAULT_WINDOWS
    arrow_stride: int = DEFAULT_ARROW_STRIDE
    arrow_min_magnitude: float = DEFAULT_ARROW_MIN_MAGNITUDE


class QueueFullError(Exception):
    """Raised when pending + running tasks already fill the queue."""


def dataset_id(raw: bytes) -> str:
    """Content-hash id; identical bytes always map to the same dataset."""
    return hashlib.sha256(raw).hexdigest()[:16]


@dataclass
class _StoreEntry:
    dataset: Dataset
    report: ValidationReport


class DatasetStore:
    """In-memory dataset cache persisted as raw CSVs in a directory."""

    def __init__(self, data_dir):
        self._dir = Path(data_dir)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._entries: dict[str, _StoreEntry] = {}
        for path in sorted(self._dir.glob("*.csv")):
            raw = path.read_bytes()
            try:
                records, report = parse_consumption_csv(raw)
                entry = _StoreEntry(build_dataset(records), report)
            except DemandFlowError as exc:
                logger.warning("skipping persisted dataset %s: %s", path.name, exc)
                continue
            self._entries[dataset_id(raw)] = entry

    def add(self, raw: bytes) -> tuple[str, _StoreEntry, bool]:
        """Parse, build, persist; returns (id, entry, created). Idempotent."""
        did = dataset_id(raw)
        with self._lock:
            existing = self._entries.get(did)
        if existing is not None:
            return did, existing, False
        records, report = parse_consumption_csv(raw)
        entry = _StoreEntry(build_dataset(records), report)
        (self._dir / f"{did}.csv").write_bytes(raw)
        with self._lock:
            self._entries[did] = entry
        return did, entry, True

    def get(self, did: str) -> _StoreEntry | None:
        with self._lock:
            return self._entries.get(did)


class TaskRecord:
    __slots__ = (
        "id",
        "dataset_id",
        "task",
        "submitted_at",
        "completed_at",
        "error",
        "result",
        "result_bytes",
        "badges",
    )

    def __init__(self, rid: str, did: str, task: ShiftTask, submitted_at: str):
        self.id = rid
        self.dataset_id = did
        self.task = task
        self.submitted_at = submitted_at
        self.completed_at = None
        self.error = None
        self.result = None
        self.result_bytes = None
        self.badges = None


def _now_iso() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat()


class TaskRegistry:
    """Bounded registry of shift tasks and their results.

    Admission counts pending plus running tasks against the queue size.
    Results are retained for the process lifetime. Observable state is
    derived under the lock and never regresses: a task whose worker has
    flipped the state but not yet recorded the result/error still reads as
    "running" until the record is complete.
    """

    def __init__(self, executor: ThreadPoolExecutor, config: ServiceConfig):
        self._executor = executor
        self._config = config
        self._lock = threading.Lock()
        self._records: dict[str, TaskRecord] = {}
        self._order: list[str] = []
        self._counter = 0

    def submit(self, did: str, dataset: Dataset, task: ShiftTask) -> TaskRecord:
        with self._lock:
            active = sum(
                1
                for rid in self._order
                if self._observable_state(self._records[rid]) in (PENDING, RUNNING)
            )
            if active >= self._config.queue_size:
                raise QueueFullError(
                    f"{active} task(s) already queued (limit {self._config.queue_size})"
                )
            self._counter += 1
            record = TaskRecord(f"task-{self._counter:04d}", did, task, _now_iso())
            self._records[record.id] = record
            self._order.append(record.id)
        self._executor.submit(self._execute, record, dataset)
        return record

    def _execute(self, record: TaskRecord, dataset: Dataset) -> None:
        cfg = self._config
        try:
            result = run_task(
                record.task,
                dataset,
                windows=cfg.windows,
                arrow_stride=cfg.arrow_stride,
                arrow_min_magnitude=cfg.arrow_min_magnitude,
            )
            body = serialize.dumps(serialize.result_json(result, dataset.origin_lonlat))
            badges = serialize.badge_json(result)
            with self._lock:
                record.result = result
                record.result_bytes = body
                record.badges = badges
                record.completed_at = _now_iso()
        except Exception as exc:
            with self._lock:
                record.error = str(exc)
                record.completed_at = _now_iso()

    @staticmethod
    def _observable_state(record: TaskRecord) -> str:
        state = record.task.state
        if state == DONE and record.result_bytes is None:
            return RUNNING
        if state == FAILED and record.completed_at is None:
            return RUNNING
        return state

    def get(self, rid: str) -> TaskRecord | None:
        with self._lock:
            return self._records.get(rid)

    def handle_json(self, record: TaskRecord, with_badges: bool = False) -> dict:
        with self._lock:
            state = self._observable_state(record)
            body = {
                "id": record.id,
                "dataset_id": record.dataset_id,
                "state": state,
                "submitted_at": record.submitted_at,
                "completed_at": record.completed_at if state in (DONE, FAILED) else None,
                "error": record.error if state == FAILED else None,
            }
            if with_badges and state == DONE:
                body["badges"] = record.badges
        return body

    def index_json(self) -> dict:
        with self._lock:
            newest_first = [self._records[rid] for rid in reversed(self._order)]
        return {"tasks": [self.handle_json(r, with_badges=True) for r in newest_first]}

    def result_response(self, record: TaskRecord) -> tuple[int, bytes | None, str | None]:
        """(status, body bytes if done, error text if failed)."""
        with self._lock:
            state = self._observable_state(record)
            if state == DONE:
                return 200, record.result_bytes, None
            if state == FAILED:
                return 410, None, record.error
            return 409, None, state


def _json_response(payload, status: int = 200) -> Response:
    return Response(
        content=serialize.dumps(payload),
        status_code=status,
        media_type="application/json",
    )


def _error(status: int, message: str, **extra) -> Response:
    return _json_response({"error": message, **extra}, status)


def _parse_period(dataset: Dataset, start: str | None, end: str | None, band: str):
    """Resolve optional start/end/band query params against the dataset range.

    Returns a TimePeriod or an error Response ready to send.
    """
    first, last = dataset.date_range
    if start is None:
        day0 = first
    else:
        day0 = parse_iso_date(start)
        if day0 is None:
            return _error(400, f"invalid start date {start!r} (expected YYYY-MM-DD)")
    if end is None:
        day1 = last
    else:
        day1 = parse_iso_date(end)
        if day1 is None:
            return _error(400, f"invalid end date {end!r} (expected YYYY-MM-DD)")
    if band not in BANDS:
        return _error(400, f"unknown band {band!r}")
    try:
        period = TimePeriod(day0, day1, band)
    except PeriodError as exc:
        return _error(400, str(exc))
    if period.start < first or period.end > last:
        return _error(
            400,
            f"period {period.start.isoformat()}..{period.end.isoformat()} outside "
            f"dataset range {first.isoformat()}..{last.isoformat()}",
        )
    return period


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    cfg = config or ServiceConfig()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.executor = ThreadPoolExecutor(
            max_workers=cfg.workers, thread_name_prefix="shift-task"
        )
        app.state.store = DatasetStore(cfg.data_dir)
        app.state.registry = TaskRegistry(app.state.executor, cfg)
        yield
        # Drain running tasks before the process exits.
        app.state.executor.shutdown(wait=True)

    app = FastAPI(title="demandflow", lifespan=lifespan)
    # The web UI may be served from a different origin than the API; nothing
    # here is credentialed, so a blanket allow is safe.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/api/datasets")
    async def upload_dataset(file: UploadFile = File(...)):
        raw = await file.read()
        try:
            did, entry, created = await run_in_threadpool(app.state.store.add, raw)
        except (StreamError, FormatError) as exc:
            return _error(400, str(exc))
        except EmptyDatasetError as exc:
            return _error(422, str(exc), report=serialize.report_json(exc.report))
        except (DuplicateRecordError, LocationConflictError) as exc:
            return _error(422, str(exc))
        first, last = entry.dataset.date_range
        payload = {
            "dataset_id": did,
            "report": serialize.report_json(entry.report),
            "summary": {
                "record_count": entry.dataset.record_count,
                "household_count": len(entry.dataset.household_ids),
                "start": first.isoformat(),
                "end": last.isoformat(),
            },
        }
        return _json_response(payload, 201 if created else 200)

    @app.get("/api/datasets/{did}/series")
    def get_series(did: str, granularity: str | None = None, ratio: str | None = None):
        entry = app.state.store.get(did)
        if entry is None:
            return _error(404, f"unknown dataset {did!r}")
        if granularity is not None and granularity not in GRANULARITIES:
            return _error(400, f"unknown granularity {granularity!r}")
        if ratio is not None and ratio not in RATIO_KINDS:
            return _error(400, f"unknown ratio kind {ratio!r}")
        series = daily_series(entry.dataset)
        aux = aux_lines(series, granularity) if granularity is not None else None
        ratio_payload = (ratio, ratio_series(series, ratio)) if ratio is not None else None
        return _json_response(serialize.series_json(series, aux, ratio_payload))

    @app.get("/api/datasets/{did}/hexbin")
    def get_hexbin(
        did: str,
        start: str | None = None,
        end: str | None = None,
        band: str = FULL_DAY,
        size: str | None = None,
    ):
        entry = app.state.store.get(did)
        if entry is None:
            return _error(404, f"unknown dataset {did!r}")
        if size is None:
            hex_size = DEFAULT_HEX_SIZE
        else:
            try:
                hex_size = float(size)
            except ValueError:
                return _error(400, f"invalid size {size!r}")
        if not hex_size > 0:
            return _error(400, f"size must be positive, got {hex_size}")
        period = _parse_period(entry.dataset, start, end, band)
        if isinstance(period, Response):
            return period
        cells = hexbin_demand(entry.dataset, period, hex_size)
        return _json_response(
            serialize.hexbin_json(cells, period, hex_size, entry.dataset.origin_lonlat)
        )

    @app.get("/api/datasets/{did}/meter")
    def get_meter(did: str, start: str | None = None, end: str | None = None):
        entry = app.state.store.get(did)
        if entry is None:
            return _error(404, f"unknown dataset {did!r}")
        period = _parse_period(entry.dataset, start, end, FULL_DAY)
        if isinstance(period, Response):
            return period
        stats = meter_stats(entry.dataset, period)
        return _json_response(serialize.meter_json(stats, period))

    @app.post("/api/datasets/{did}/tasks")
    async def submit_task(did: str, request: Request):
        entry = app.state.store.get(did)
        if entry is None:
            return _error(404, f"unknown dataset {did!r}")
        try:
            body = json.loads(await request.body())
        except (json.JSONDecodeError, UnicodeDecodeError):
            return _error(400, "request body is not valid JSON")
        try:
            task = serialize.task_from_json(body)
            if task.grid is None and "grid_cells" not in body:
                task.grid_cells = cfg.grid_cells
            validate_task(task, entry.dataset)
        except DemandFlowError as exc:
            return _error(400, str(exc))
        try:
            record = app.state.registry.submit(did, entry.dataset, task)
        except QueueFullError as exc:
            return _error(429, str(exc))
        return _json_response(app.state.registry.handle_json(record), 202)

    @app.get("/api/tasks")
    def list_tasks():
        return _json_response(app.state.registry.index_json())

    @app.get("/api/tasks/{tid}")
    def get_task(tid: str):
        record = app.state.registry.get(tid)
        if record is None:
            return _error(404, f"unknown task {tid!r}")
        return _json_response(app.state.registry.handle_json(record))

    @app.get("/api/tasks/{tid}/result")
    def get_result(tid: str):
        record = app.state.registry.get(tid)
        if record is None:
            return _error(404, f"unknown task {tid!r}")
        status, body, detail = app.state.registry.result_response(record)
        if status == 200:
            return Response(content=body, media_type="application/json")
        if status == 410:
            return _error(410, f"task failed: {detail}")
        return _error(409, f"task is {detail}, result not ready")

    return app
