"""Shared fixtures for exercising the HTTP service contract.

The golden files under tests/golden/ pin exact response bytes (timestamps
masked). Regenerate with UPDATE_GOLDENS=1 after an intentional wire change
and review the diff.
"""

import os
import re
import threading
import time
from contextlib import contextmanager
from pathlib import Path

from fastapi.testclient import TestClient

from demandflow.service import ServiceConfig, create_app

GOLDEN_DIR = Path(__file__).parent / "golden"

_TS = re.compile(rb'"(submitted_at|completed_at)":"[^"]+"')

GOOD_CSV = b"""household_id,date,pap_r,pap_r1,pap_r2,lon,lat
H1,2019-07-01,10.5,7.5,3.0,121.500,31.200
H2,2019-07-01,8.0,5.0,3.0,121.520,31.200
H3,2019-07-01,6.5,4.0,2.5,121.500,31.215
H4,2019-07-01,9.0,6.0,3.0,121.520,31.215
H1,2019-07-02,4.0,2.5,1.5,121.500,31.200
H2,2019-07-02,12.0,8.0,4.0,121.520,31.200
H3,2019-07-02,7.0,4.5,2.5,121.500,31.215
H4,2019-07-02,10.0,7.0,3.0,121.520,31.215
H1,2019-07-03,11.0,7.0,4.0,121.500,31.200
H2,2019-07-03,6.0,3.5,2.5,121.520,31.200
H3,2019-07-03,9.5,6.5,3.0,121.500,31.215
H4,2019-07-03,5.0,3.0,2.0,121.520,31.215
H1,2019-07-04,7.5,5.0,2.5,121.500,31.200
H2,2019-07-04,9.0,5.5,3.5,121.520,31.200
H3,2019-07-04,8.0,5.0,3.0,121.500,31.215
H4,2019-07-04,12.5,8.5,4.0,121.520,31.215
"""

# Day 2019-07-03 has no records, so a task over it fails at compute time.
GAPPY_CSV = b"""household_id,date,pap_r,pap_r1,pap_r2,lon,lat
H1,2019-07-01,10.0,7.0,3.0,121.500,31.200
H2,2019-07-01,8.0,5.0,3.0,121.520,31.215
H1,2019-07-02,9.0,6.0,3.0,121.500,31.200
H2,2019-07-02,7.0,4.0,3.0,121.520,31.215
H1,2019-07-04,6.0,4.0,2.0,121.500,31.200
H2,2019-07-04,5.0,3.0,2.0,121.520,31.215
"""

BAD_HEADER_CSV = b"id,when,how_much\nH1,2019-07-01,10\n"

ALL_REJECTED_CSV = b"""household_id,date,pap_r,pap_r1,pap_r2,lon,lat
H1,not-a-date,10,7,3,121.5,31.2
H2,2019-07-01,-5,1,1,121.5,31.2
H3,2019-07-01,10,7,3,200.0,31.2
"""

DUPLICATE_CSV = b"""household_id,date,pap_r,pap_r1,pap_r2,lon,lat
H1,2019-07-01,10,7,3,121.5,31.2
H1,2019-07-01,10,7,3,121.5,31.2
"""

CONFLICT_CSV = b"""household_id,date,pap_r,pap_r1,pap_r2,lon,lat
H1,2019-07-01,10,7,3,121.5,31.2
H1,2019-07-02,9,6,3,121.9,31.2
"""

LIFECYCLE_TASK = {
    "kind": "regular_split",
    "start": "2019-07-01",
    "end": "2019-07-04",
    "split_count": 2,
}


def normalize(body: bytes) -> bytes:
    return _TS.sub(rb'"\1":"<TS>"', body)


def check_golden(name: str, body: bytes) -> None:
    data = normalize(body)
    path = GOLDEN_DIR / name
    if os.environ.get("UPDATE_GOLDENS"):
        path.parent.mkdir(exist_ok=True)
        path.write_bytes(data)
        return
    assert path.exists(), f"golden file {name} is missing; run with UPDATE_GOLDENS=1"
    expected = path.read_bytes()
    assert data == expected, (
        f"response does not match golden {name}\n"
        f"expected: {expected[:300]!r}...\n"
        f"got:      {data[:300]!r}..."
    )


def make_client(tmp_path, **overrides) -> TestClient:
    settings = dict(
        data_dir=str(tmp_path / "datasets"),
        queue_size=4,
        workers=2,
        grid_cells=8,
        windows=(2, 2),
    )
    settings.update(overrides)
    return TestClient(create_app(ServiceConfig(**settings)))


def upload(client: TestClient, raw: bytes, filename: str = "data.csv"):
    return client.post("/api/datasets", files={"file": (filename, raw, "text/csv")})


def wait_task(client: TestClient, tid: str, timeout: float = 30.0) -> dict:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        body = client.get(f"/api/tasks/{tid}").json()
        if body["state"] in ("done", "failed"):
            return body
        time.sleep(0.01)
    raise AssertionError(f"task {tid} still {body['state']} after {timeout}s")


@contextmanager
def gated_tasks():
    """Hold submitted tasks at the door until `release` is set.

    The wrapper blocks before the real run starts, so gated tasks stay
    observably pending; `started` fires when the worker picks one up.
    """
    import demandflow.service as service

    real = service.run_task
    started = threading.Event()
    release = threading.Event()

    def gated(task, dataset, **kwargs):
        started.set()
        if not release.wait(timeout=30):
            raise RuntimeError("task gate never released")
        return real(task, dataset, **kwargs)

    service.run_task = gated
    try:
        yield started, release
    finally:
        release.set()
        service.run_task = real


def assert_upload_contract(client: TestClient) -> str:
    """201 on first upload, 200 with identical body on re-upload, 400/422
    on the malformed corpora. Returns the good dataset's id."""
    first = upload(client, GOOD_CSV)
    assert first.status_code == 201, first.content
    check_golden("upload_created.json", first.content)
    did = first.json()["dataset_id"]

    again = upload(client, GOOD_CSV)
    assert again.status_code == 200
    assert again.content == first.content

    bad = upload(client, BAD_HEADER_CSV)
    assert bad.status_code == 400
    check_golden("upload_bad_header.json", bad.content)

    empty = upload(client, ALL_REJECTED_CSV)
    assert empty.status_code == 422
    check_golden("upload_all_rejected.json", empty.content)
    assert empty.json()["report"]["accepted_count"] == 0

    dup = upload(client, DUPLICATE_CSV)
    assert dup.status_code == 422
    check_golden("upload_duplicate.json", dup.content)

    conflict = upload(client, CONFLICT_CSV)
    assert conflict.status_code == 422
    check_golden("upload_conflict.json", conflict.content)
    return did


def assert_views_contract(client: TestClient, did: str) -> None:
    """Read endpoints: 200 goldens plus their 400/404 rejections."""
    series = client.get(f"/api/datasets/{did}/series")
    assert series.status_code == 200
    check_golden("series_plain.json", series.content)

    decorated = client.get(
        f"/api/datasets/{did}/series",
        params={"granularity": "monthly", "ratio": "peak_to_valley"},
    )
    assert decorated.status_code == 200
    check_golden("series_monthly_ratio.json", decorated.content)

    hexbin = client.get(f"/api/datasets/{did}/hexbin")
    assert hexbin.status_code == 200
    check_golden("hexbin_full.json", hexbin.content)

    hexbin_peak = client.get(
        f"/api/datasets/{did}/hexbin",
        params={"start": "2019-07-01", "end": "2019-07-02", "band": "peak_window"},
    )
    assert hexbin_peak.status_code == 200
    check_golden("hexbin_peak.json", hexbin_peak.content)

    meter = client.get(f"/api/datasets/{did}/meter")
    assert meter.status_code == 200
    check_golden("meter_full.json", meter.content)

    missing = client.get("/api/datasets/feedfacedeadbeef/series")
    assert missing.status_code == 404
    check_golden("series_404.json", missing.content)

    bad_gran = client.get(f"/api/datasets/{did}/series", params={"granularity": "weekly"})
    assert bad_gran.status_code == 400
    check_golden("series_bad_granularity.json", bad_gran.content)

    bad_ratio = client.get(f"/api/datasets/{did}/series", params={"ratio": "peak_to_sky"})
    assert bad_ratio.status_code == 400

    bad_size = client.get(f"/api/datasets/{did}/hexbin", params={"size": "wide"})
    assert bad_size.status_code == 400
    check_golden("hexbin_bad_size.json", bad_size.content)

    zero_size = client.get(f"/api/datasets/{did}/hexbin", params={"size": "0"})
    assert zero_size.status_code == 400

    bad_band = client.get(f"/api/datasets/{did}/hexbin", params={"band": "brunch"})
    assert bad_band.status_code == 400
    check_golden("hexbin_bad_band.json", bad_band.content)

    outside = client.get(
        f"/api/datasets/{did}/hexbin",
        params={"start": "2019-06-01", "end": "2019-07-02"},
    )
    assert outside.status_code == 400
    check_golden("hexbin_outside_range.json", outside.content)

    inverted = client.get(
        f"/api/datasets/{did}/hexbin",
        params={"start": "2019-07-03", "end": "2019-07-01"},
    )
    assert inverted.status_code == 400


def assert_task_rejections_contract(client: TestClient, did: str) -> None:
    not_json = client.post(
        f"/api/datasets/{did}/tasks",
        content=b"{nope",
        headers={"content-type": "application/json"},
    )
    assert not_json.status_code == 400
    check_golden("task_not_json.json", not_json.content)

    bad_body = client.post(f"/api/datasets/{did}/tasks", json={"kind": "sideways"})
    assert bad_body.status_code == 400
    check_golden("task_bad_kind.json", bad_body.content)

    outside = client.post(
        f"/api/datasets/{did}/tasks",
        json={"kind": "peak_valley", "start": "2019-01-01", "end": "2019-07-02"},
    )
    assert outside.status_code == 400

    wrong_dataset = client.post(
        "/api/datasets/feedfacedeadbeef/tasks", json=LIFECYCLE_TASK
    )
    assert wrong_dataset.status_code == 404
    check_golden("task_dataset_404.json", wrong_dataset.content)

    unknown_task = client.get("/api/tasks/task-9999")
    assert unknown_task.status_code == 404
    check_golden("task_handle_404.json", unknown_task.content)

    unknown_result = client.get("/api/tasks/task-9999/result")
    assert unknown_result.status_code == 404
    check_golden("task_result_404.json", unknown_result.content)


def assert_lifecycle_contract(client: TestClient, did: str) -> bytes:
    """Submit the same task twice on a fresh app: both finish, results are
    bit-identical, index carries badges. Returns the result bytes."""
    accepted = client.post(f"/api/datasets/{did}/tasks", json=LIFECYCLE_TASK)
    assert accepted.status_code == 202, accepted.content
    tid = accepted.json()["id"]
    assert tid == "task-0001"

    handle = wait_task(client, tid)
    assert handle["state"] == "done"
    handle_raw = client.get(f"/api/tasks/{tid}")
    check_golden("task_handle_done.json", handle_raw.content)

    result = client.get(f"/api/tasks/{tid}/result")
    assert result.status_code == 200
    check_golden("task_result_done.json", result.content)

    duplicate = client.post(f"/api/datasets/{did}/tasks", json=LIFECYCLE_TASK)
    assert duplicate.status_code == 202
    tid2 = duplicate.json()["id"]
    assert tid2 == "task-0002"
    wait_task(client, tid2)
    result2 = client.get(f"/api/tasks/{tid2}/result")
    assert result2.status_code == 200
    assert result2.content == result.content

    index = client.get("/api/tasks")
    assert index.status_code == 200
    check_golden("task_index_done.json", index.content)
    entries = index.json()["tasks"]
    assert [e["id"] for e in entries] == ["task-0002", "task-0001"]
    for entry in entries:
        assert entry["state"] == "done"
        assert entry["badges"], "done task entries carry window badges"
    return result.content


def assert_gated_contract(client: TestClient, did: str, started, release) -> None:
    """With the worker held at the door: 202 pending, 409 on result,
    429 once the queue is full."""
    accepted = client.post(f"/api/datasets/{did}/tasks", json=LIFECYCLE_TASK)
    assert accepted.status_code == 202
    assert accepted.json()["state"] == "pending"
    check_golden("task_accepted_pending.json", accepted.content)
    tid = accepted.json()["id"]
    assert started.wait(timeout=10)

    early = client.get(f"/api/tasks/{tid}/result")
    assert early.status_code == 409
    check_golden("task_result_409.json", early.content)

    overflow = client.post(f"/api/datasets/{did}/tasks", json=LIFECYCLE_TASK)
    assert overflow.status_code == 429
    check_golden("task_429.json", overflow.content)

    release.set()
    handle = wait_task(client, tid)
    assert handle["state"] == "done"
    assert client.get(f"/api/tasks/{tid}/result").status_code == 200


def assert_failure_contract(client: TestClient) -> None:
    """A task over an empty day inside the range fails and yields 410."""
    did = upload(client, GAPPY_CSV).json()["dataset_id"]
    body = {
        "kind": "multi_period",
        "periods": [
            {"start": "2019-07-01", "end": "2019-07-01"},
            {"start": "2019-07-03", "end": "2019-07-03"},
        ],
    }
    accepted = client.post(f"/api/datasets/{did}/tasks", json=body)
    assert accepted.status_code == 202, accepted.content
    tid = accepted.json()["id"]
    handle = wait_task(client, tid)
    assert handle["state"] == "failed"
    assert handle["error"]
    handle_raw = client.get(f"/api/tasks/{tid}")
    check_golden("task_handle_failed.json", handle_raw.content)

    gone = client.get(f"/api/tasks/{tid}/result")
    assert gone.status_code == 410
    check_golden("task_result_410.json", gone.content)
