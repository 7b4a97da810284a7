"""
The analysis loop over HTTP
===========================

Runs the service on a loopback port, uploads a dataset, submits a
peak-valley shift task, polls the index until its badge shows up, and
fetches the result. Everything a web client does, minus the pixels.
"""

import datetime as dt
import io
import json
import socket
import tempfile
import threading
import time
import urllib.request

import numpy as np
import uvicorn

from demandflow.service import ServiceConfig, create_app

# --- synth data: nights are busy downtown, days in the industrial park ------

rng = np.random.default_rng(4)
first_day = dt.date(2019, 7, 1)
out = io.StringIO()
out.write("household_id,date,pap_r,pap_r1,pap_r2,lon,lat\n")
for h in range(200):
    downtown = h < 100
    c_lon, c_lat = (121.48, 31.21) if downtown else (121.52, 31.24)
    lon = c_lon + rng.normal(0, 0.004)
    lat = c_lat + rng.normal(0, 0.003)
    for d in range(14):
        day = first_day + dt.timedelta(days=d)
        total = round(rng.uniform(6, 14) * 4) / 4
        peak_share = 0.25 if downtown else 0.8
        peak = round(total * peak_share * 4) / 4
        out.write(
            f"H{h:03d},{day.isoformat()},{total},{peak},{total - peak},"
            f"{lon:.6f},{lat:.6f}\n"
        )
csv_bytes = out.getvalue().encode()

# --- start the service on a free port ---------------------------------------

sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
sock.bind(("127.0.0.1", 0))
port = sock.getsockname()[1]
base = f"http://127.0.0.1:{port}"

app = create_app(ServiceConfig(data_dir=tempfile.mkdtemp(), grid_cells=64, windows=(4, 4)))
server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
thread = threading.Thread(target=server.run, kwargs={"sockets": [sock]}, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.02)
print(f"service listening on {base}")


def call(method, path, body=None, content_type=None):
    request = urllib.request.Request(base + path, data=body, method=method)
    if content_type:
        request.add_header("Content-Type", content_type)
    try:
        with urllib.request.urlopen(request) as response:
            return response.status, json.loads(response.read())
    except urllib.error.HTTPError as error:
        return error.code, json.loads(error.read())


# --- upload (multipart, as a browser form would send it) ---------------------

boundary = "demandflowdemo"
part = (
    f"--{boundary}\r\n"
    f'Content-Disposition: form-data; name="file"; filename="meters.csv"\r\n'
    f"Content-Type: text/csv\r\n\r\n"
).encode() + csv_bytes + f"\r\n--{boundary}--\r\n".encode()
status, uploaded = call("POST", "/api/datasets", part, f"multipart/form-data; boundary={boundary}")
print(f"upload: HTTP {status}, dataset {uploaded['dataset_id']}, "
      f"{uploaded['summary']['record_count']} records")
did = uploaded["dataset_id"]

# --- submit a peak-valley task and watch the index ---------------------------

task_body = json.dumps({
    "kind": "peak_valley",
    "start": uploaded["summary"]["start"],
    "end": uploaded["summary"]["end"],
}).encode()
status, handle = call("POST", f"/api/datasets/{did}/tasks", task_body, "application/json")
print(f"task {handle['id']} accepted: HTTP {status}, state {handle['state']}")

while True:
    _, index = call("GET", "/api/tasks")
    entry = next(t for t in index["tasks"] if t["id"] == handle["id"])
    if entry["state"] in ("done", "failed"):
        break
    time.sleep(0.05)
print(f"index shows {entry['state']}; badge carries "
      f"{len(entry['badges'][0]['signed_change'])} window values")

# --- fetch the result ---------------------------------------------------------

status, result = call("GET", f"/api/tasks/{handle['id']}/result")
[pair] = result["pairs"]
windows = pair["windows"]
gain = max(windows, key=lambda w: w["signed_change"])
loss = min(windows, key=lambda w: w["signed_change"])
print(f"result: HTTP {status}, {len(pair['arrows']['features'])} arrows")
print(f"peak->valley shift: window ({gain['i']},{gain['j']}) gains "
      f"{gain['signed_change']:+.1f} kWh, window ({loss['i']},{loss['j']}) "
      f"loses {loss['signed_change']:+.1f} kWh")
print("(the valley field is denser downtown, so that is where the flow points)")

server.should_exit = True
thread.join(timeout=5)
