"""Command-line interface: validate data, export series, compute shifts,
and run the HTTP service.

Exports are the exact bytes the service would return for the same request
(no trailing newline), so files written here can be diffed against API
responses directly. Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import socket
import sys
from pathlib import Path

from . import serialize
from .errors import DemandFlowError
from .ingest import build_dataset, parse_consumption_csv, parse_iso_date, DEFAULT_CONSISTENCY_TOL
from .shift import (
    DEFAULT_ARROW_MIN_MAGNITUDE,
    DEFAULT_ARROW_STRIDE,
    DEFAULT_GRID_CELLS,
    MULTI_PERIOD,
    TASK_KINDS,
    ShiftTask,
    run_task,
)
from .temporal import BANDS, FULL_DAY, GRANULARITIES, RATIO_KINDS, TimePeriod, aux_lines, daily_series, ratio_series


def _date_arg(text: str):
    day = parse_iso_date(text)
    if day is None:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}")
    return day


def _bandwidth_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected \"auto\" or meters, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("bandwidth must be positive")
    return value


def _period_arg(text: str) -> TimePeriod:
    """START:END or START:END:band, dates as YYYY-MM-DD."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError(f"expected START:END[:band], got {text!r}")
    start = parse_iso_date(parts[0])
    end = parse_iso_date(parts[1])
    if start is None or end is None:
        raise argparse.ArgumentTypeError(f"bad dates in {text!r} (expected YYYY-MM-DD)")
    band = parts[2] if len(parts) == 3 else FULL_DAY
    if band not in BANDS:
        raise argparse.ArgumentTypeError(f"unknown band {band!r}")
    try:
        return TimePeriod(start, end, band)
    except DemandFlowError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _listen_arg(text: str):
    host, sep, port_text = text.rpartition(":")
    if not sep or not host:
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad port in {text!r}") from None
    return host, port


def _emit(data: bytes, path: str | None) -> None:
    if path:
        Path(path).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()


def _load(path: str, strict: bool = False, tol: float = DEFAULT_CONSISTENCY_TOL):
    raw = Path(path).read_bytes()
    return parse_consumption_csv(raw, strict=strict, consistency_tol=tol)


def _cmd_ingest(args) -> int:
    records, report = _load(args.csv, strict=args.strict, tol=args.consistency_tol)
    _emit(serialize.dumps(serialize.report_json(report)), None)
    build_dataset(records)
    if args.strict and report.rejected:
        return 1
    return 0


def _cmd_series(args) -> int:
    records, _ = _load(args.csv)
    dataset = build_dataset(records)
    series = daily_series(dataset)
    aux = aux_lines(series, args.granularity) if args.granularity else None
    ratio = (args.ratio, ratio_series(series, args.ratio)) if args.ratio else None
    _emit(serialize.dumps(serialize.series_json(series, aux, ratio)), args.output)
    return 0


def _cmd_shift(args) -> int:
    records, _ = _load(args.csv)
    dataset = build_dataset(records)
    base = None
    if args.kind != MULTI_PERIOD:
        if args.start is None or args.end is None:
            raise DemandFlowError(f"{args.kind} needs --start and --end")
        base = TimePeriod(args.start, args.end, args.band)
    task = ShiftTask(
        kind=args.kind,
        base_period=base,
        split_count=args.split,
        periods=tuple(args.period or ()),
        grid_cells=args.grid,
        bandwidth=args.bandwidth,
    )
    result = run_task(
        task,
        dataset,
        windows=(args.windows, args.windows),
        arrow_stride=args.stride,
        arrow_min_magnitude=args.min_magnitude,
        rate_per_day=args.rate_per_day,
    )
    _emit(serialize.dumps(serialize.result_json(result, dataset.origin_lonlat)), args.output)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    host, port = args.listen
    config = ServiceConfig(
        data_dir=args.data_dir,
        queue_size=args.queue_size,
        workers=args.workers,
        grid_cells=args.grid,
        windows=(args.windows, args.windows),
    )
    app = create_app(config)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, port))
    except OSError as exc:
        sock.close()
        print(f"error: cannot listen on {host}:{port}: {exc}", file=sys.stderr)
        return 1
    server = uvicorn.Server(uvicorn.Config(app, host=host, port=port, log_level="info"))
    server.run(sockets=[sock])
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demandflow",
        description="Spatiotemporal energy demand analytics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a consumption CSV")
    p.add_argument("csv")
    p.add_argument("--strict", action="store_true", help="reject rows failing the peak+valley consistency check")
    p.add_argument("--consistency-tol", type=float, default=DEFAULT_CONSISTENCY_TOL)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("series", help="export daily demand series")
    p.add_argument("csv")
    p.add_argument("--granularity", choices=GRANULARITIES)
    p.add_argument("--ratio", choices=RATIO_KINDS)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_series)

    p = sub.add_parser("shift", help="compute a demand-shift analysis")
    p.add_argument("csv")
    p.add_argument("--kind", choices=TASK_KINDS, required=True)
    p.add_argument("--start", type=_date_arg)
    p.add_argument("--end", type=_date_arg)
    p.add_argument("--band", choices=BANDS, default=FULL_DAY)
    p.add_argument("--split", type=int, help="sub-period count for regular_split")
    p.add_argument(
        "--period",
        action="append",
        type=_period_arg,
        help="START:END[:band]; repeat for multi_period",
    )
    p.add_argument("--grid", type=int, default=DEFAULT_GRID_CELLS, help="cells per grid axis")
    p.add_argument("--bandwidth", type=_bandwidth_arg, default="auto", help='"auto" or meters')
    p.add_argument("--windows", type=int, default=8, help="windows per axis")
    p.add_argument("--stride", type=int, default=DEFAULT_ARROW_STRIDE)
    p.add_argument("--min-magnitude", type=float, default=DEFAULT_ARROW_MIN_MAGNITUDE)
    p.add_argument("--rate-per-day", action="store_true", help="divide changes by the period gap in days")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_shift)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument(
        "--listen",
        type=_listen_arg,
        default=os.environ.get("DEMANDFLOW_LISTEN", "127.0.0.1:8000"),
        help="HOST:PORT",
    )
    p.add_argument("--data-dir", default=os.environ.get("DEMANDFLOW_DATA_DIR", "demandflow-data"))
    p.add_argument("--queue-size", type=int, default=16)
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--grid", type=int, default=DEFAULT_GRID_CELLS)
    p.add_argument("--windows", type=int, default=8)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if isinstance(getattr(args, "listen", None), str):
        args.listen = _listen_arg(args.listen)
    try:
        return args.func(args)
    except DemandFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
