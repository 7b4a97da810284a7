import json
import shutil
import socket
import subprocess
import sys

import pytest

from demandflow.cli import main
import service_utils as su

INCONSISTENT_CSV = b"""household_id,date,pap_r,pap_r1,pap_r2,lon,lat
H1,2019-07-01,10.0,5.0,3.0,121.5,31.2
H2,2019-07-01,8.0,5.0,3.0,121.51,31.21
"""


@pytest.fixture()
def good_csv(tmp_path):
    path = tmp_path / "good.csv"
    path.write_bytes(su.GOOD_CSV)
    return str(path)


def write_csv(tmp_path, raw, name="data.csv"):
    path = tmp_path / name
    path.write_bytes(raw)
    return str(path)


class TestIngest:
    def test_valid_file_exit_zero(self, good_csv, capsysbinary):
        assert main(["ingest", good_csv]) == 0
        report = json.loads(capsysbinary.readouterr().out)
        assert report["accepted_count"] == 16
        assert report["rejected"] == []

    def test_inconsistent_row_warns_by_default(self, tmp_path, capsysbinary):
        path = write_csv(tmp_path, INCONSISTENT_CSV)
        assert main(["ingest", path]) == 0
        report = json.loads(capsysbinary.readouterr().out)
        assert report["accepted_count"] == 2
        assert len(report["warnings"]) == 1

    def test_strict_rejects_and_fails(self, tmp_path, capsysbinary):
        path = write_csv(tmp_path, INCONSISTENT_CSV)
        assert main(["ingest", path, "--strict"]) == 1
        report = json.loads(capsysbinary.readouterr().out)
        assert report["accepted_count"] == 1
        assert len(report["rejected"]) == 1

    def test_bad_header_exit_one(self, tmp_path, capsysbinary):
        path = write_csv(tmp_path, su.BAD_HEADER_CSV)
        assert main(["ingest", path]) == 1
        assert b"error:" in capsysbinary.readouterr().err

    def test_all_rows_rejected_exit_one(self, tmp_path, capsysbinary):
        path = write_csv(tmp_path, su.ALL_REJECTED_CSV)
        assert main(["ingest", path]) == 1
        captured = capsysbinary.readouterr()
        assert b"error:" in captured.err

    def test_missing_file_exit_one(self, tmp_path, capsysbinary):
        assert main(["ingest", str(tmp_path / "absent.csv")]) == 1
        assert b"error:" in capsysbinary.readouterr().err


class TestSeries:
    def test_plain_series_matches_service_bytes(self, good_csv, tmp_path):
        out = tmp_path / "series.json"
        assert main(["series", good_csv, "-o", str(out)]) == 0
        assert out.read_bytes() == (su.GOLDEN_DIR / "series_plain.json").read_bytes()

    def test_decorated_series_matches_service_bytes(self, good_csv, tmp_path):
        out = tmp_path / "series.json"
        code = main(
            [
                "series",
                good_csv,
                "--granularity",
                "monthly",
                "--ratio",
                "peak_to_valley",
                "-o",
                str(out),
            ]
        )
        assert code == 0
        assert out.read_bytes() == (su.GOLDEN_DIR / "series_monthly_ratio.json").read_bytes()

    def test_unknown_granularity_usage_error(self, good_csv):
        with pytest.raises(SystemExit) as excinfo:
            main(["series", good_csv, "--granularity", "weekly"])
        assert excinfo.value.code == 2


class TestShift:
    def test_output_byte_equal_to_service_result(self, good_csv, tmp_path):
        out = tmp_path / "shift.json"
        code = main(
            [
                "shift",
                good_csv,
                "--kind",
                "regular_split",
                "--start",
                "2019-07-01",
                "--end",
                "2019-07-04",
                "--split",
                "2",
                "--grid",
                "8",
                "--windows",
                "2",
                "-o",
                str(out),
            ]
        )
        assert code == 0
        assert out.read_bytes() == (su.GOLDEN_DIR / "task_result_done.json").read_bytes()

    def test_multi_period_via_repeated_flags(self, good_csv, capsysbinary):
        code = main(
            [
                "shift",
                good_csv,
                "--kind",
                "multi_period",
                "--period",
                "2019-07-01:2019-07-02",
                "--period",
                "2019-07-03:2019-07-04",
                "--grid",
                "8",
                "--windows",
                "2",
            ]
        )
        assert code == 0
        body = json.loads(capsysbinary.readouterr().out)
        assert len(body["pairs"]) == 1

    def test_peak_valley_needs_period(self, good_csv, capsysbinary):
        assert main(["shift", good_csv, "--kind", "peak_valley"]) == 1
        assert b"--start" in capsysbinary.readouterr().err

    def test_band_mismatch_detected(self, good_csv, capsysbinary):
        code = main(
            [
                "shift",
                good_csv,
                "--kind",
                "regular_split",
                "--start",
                "2019-07-01",
                "--end",
                "2019-07-04",
                "--grid",
                "8",
            ]
        )
        # missing --split is a task definition problem, not a usage one
        assert code == 1
        assert b"error:" in capsysbinary.readouterr().err

    @pytest.mark.parametrize(
        "argv",
        [
            ["shift", "x.csv"],  # --kind required
            ["shift", "x.csv", "--kind", "diagonal"],
            ["shift", "x.csv", "--kind", "peak_valley", "--start", "07/01/2019", "--end", "2019-07-02"],
            ["shift", "x.csv", "--kind", "peak_valley", "--bandwidth", "-5"],
            ["shift", "x.csv", "--kind", "multi_period", "--period", "2019-07-01"],
            ["shift", "x.csv", "--kind", "multi_period", "--period", "2019-07-01:2019-07-02:brunch"],
        ],
    )
    def test_usage_errors_exit_two(self, argv):
        with pytest.raises(SystemExit) as excinfo:
            main(argv)
        assert excinfo.value.code == 2


class TestServe:
    def test_occupied_port_exit_one(self, tmp_path, capsysbinary):
        blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        try:
            code = main(
                [
                    "serve",
                    "--listen",
                    f"127.0.0.1:{port}",
                    "--data-dir",
                    str(tmp_path / "data"),
                ]
            )
        finally:
            blocker.close()
        assert code == 1
        assert b"cannot listen" in capsysbinary.readouterr().err

    def test_bad_listen_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["serve", "--listen", "nowhere"])
        assert excinfo.value.code == 2


class TestEntryPoint:
    def test_module_invocation(self, good_csv):
        proc = subprocess.run(
            [sys.executable, "-m", "demandflow.cli", "ingest", good_csv],
            capture_output=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["accepted_count"] == 16

    def test_installed_script(self, good_csv):
        exe = shutil.which("demandflow")
        if exe is None:
            pytest.skip("console script not on PATH")
        proc = subprocess.run([exe, "ingest", good_csv], capture_output=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["accepted_count"] == 16
