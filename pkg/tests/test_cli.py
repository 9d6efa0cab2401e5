import json
import math
import shutil
import subprocess

import pytest

from cabfare import mesh_index
from cabfare.cli import run
from cabfare.geo import GeoPoint, MeshSpec
from cabfare.store import TripStore
from cabfare.synth import make_trips, write_trips_csv

from conftest import FIXTURE_BBOX

BBOX_ARG = "40.70,-74.02,40.76,-73.95"
SPEC = MeshSpec(bbox=FIXTURE_BBOX, cell_size=100.0)

PROVIDER_CONFIG = {
    "kind": "emulator",
    "rate_card": {"base_usd": 2.0, "per_mile_usd": 1.75, "per_min_usd": 0.35,
                  "min_fare_usd": 7.0, "booking_fee_usd": 2.0,
                  "avg_speed_mph": 12.0, "range_spread": 0.1},
}


def _point_at(x_m, y_m, spec=SPEC):
    lat = spec.bbox.south_west.lat + math.degrees(y_m / spec.earth_radius)
    lon = spec.bbox.south_west.lon + math.degrees(
        x_m / (spec.earth_radius * spec.ref_cos))
    return GeoPoint(lat, lon)


@pytest.fixture
def workdir(tmp_path):
    """CSV corpus, provider config, and a known single-trip corpus."""
    write_trips_csv(make_trips(120, seed=3), tmp_path / "trips.csv")

    p, d = _point_at(55.0, 55.0), _point_at(1000.0, 1000.0)
    known = TripStore.from_degrees([p.lat], [p.lon], [d.lat], [d.lon], [14.30],
                                   pickup_ts=[1357030000], dropoff_ts=[1357030600])
    write_trips_csv(known, tmp_path / "known.csv")

    (tmp_path / "provider.json").write_text(json.dumps(PROVIDER_CONFIG))
    return tmp_path


def _ingest(workdir, src="trips.csv", out="trips.bin", extra=()):
    return run(["ingest", "--input", str(workdir / src),
                "--out", str(workdir / out), *extra])


class TestIngestCommand:
    def test_writes_store_and_report(self, workdir, capsys):
        code = _ingest(workdir, extra=["--report", str(workdir / "report.json")])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["rows_read"] == 120
        assert report["rows_kept"] == len(TripStore.load(workdir / "trips.bin"))
        assert json.loads((workdir / "report.json").read_text()) == report

    def test_missing_input_exits_3(self, workdir):
        assert _ingest(workdir, src="absent.csv") == 3

    def test_unresolvable_schema_exits_2(self, workdir):
        (workdir / "schema.json").write_text(
            json.dumps({"pickup_latitude": "no_such_column"}))
        code = _ingest(workdir, extra=["--schema", str(workdir / "schema.json")])
        assert code == 2

    def test_fares_without_join_key_exits_1(self, workdir):
        code = _ingest(workdir, extra=["--fares", str(workdir / "trips.csv")])
        assert code == 1

    def test_bad_bbox_exits_1(self, workdir):
        assert _ingest(workdir, extra=["--bbox", "1,2,3"]) == 1


class TestBuildIndexCommand:
    def _build(self, workdir, out, extra=()):
        return run(["build-index", "--records", str(workdir / "trips.bin"),
                    "--cell-size", "100", "--out", str(workdir / out), *extra])

    def test_index_round_trip(self, workdir):
        assert _ingest(workdir) == 0
        assert self._build(workdir, "index.bin") == 0
        idx = mesh_index.load(workdir / "index.bin")
        assert len(idx) == len(TripStore.load(workdir / "trips.bin"))

    def test_built_at_makes_output_reproducible(self, workdir):
        assert _ingest(workdir) == 0
        self._build(workdir, "a.bin", ["--built-at", "1700000000"])
        self._build(workdir, "b.bin", ["--built-at", "1700000000"])
        assert (workdir / "a.bin").read_bytes() == (workdir / "b.bin").read_bytes()

    def test_source_date_epoch_env(self, workdir, monkeypatch):
        assert _ingest(workdir) == 0
        self._build(workdir, "a.bin", ["--built-at", "1700000000"])
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
        self._build(workdir, "env.bin")
        assert (workdir / "a.bin").read_bytes() == (workdir / "env.bin").read_bytes()

    def test_missing_records_exits_3(self, workdir):
        assert self._build(workdir, "index.bin") == 3


class TestQueryCommand:
    def _prepare(self, workdir):
        assert _ingest(workdir, src="known.csv", out="known.bin",
                       extra=["--bbox", BBOX_ARG]) == 0
        assert run(["build-index", "--records", str(workdir / "known.bin"),
                    "--cell-size", "100", "--bbox", BBOX_ARG,
                    "--out", str(workdir / "known.idx")]) == 0

    def _query(self, workdir, origin, dest):
        return run(["query", "--index", str(workdir / "known.idx"),
                    "--olat", str(origin.lat), "--olon", str(origin.lon),
                    "--dlat", str(dest.lat), "--dlon", str(dest.lon),
                    "--provider-config", str(workdir / "provider.json")])

    def test_known_comparison(self, workdir, capsys):
        self._prepare(workdir)
        capsys.readouterr()
        assert self._query(workdir, _point_at(50.0, 50.0),
                           _point_at(1000.0, 1000.0)) == 0
        out = json.loads(capsys.readouterr().out)
        # 0.83 mi is under the emulator minimum: point 9.00, spread 10%
        assert out == {"cheaper": "UBER", "delta_usd": -5.30,
                       "dest_gap_m": out["dest_gap_m"], "matched_trip": 0,
                       "ring_used": 1, "uber_usd": 9.0, "yellow_usd": 14.3}
        assert out["dest_gap_m"] <= 0.1

    def test_no_trips_near_origin_exits_2(self, workdir):
        self._prepare(workdir)
        far = _point_at(5000.0, 5000.0)
        assert self._query(workdir, far, far) == 2

    def test_missing_index_exits_3(self, workdir):
        assert run(["query", "--index", str(workdir / "absent.idx"),
                    "--olat", "40.72", "--olon", "-73.99",
                    "--dlat", "40.73", "--dlon", "-73.98",
                    "--provider-config", str(workdir / "provider.json")]) == 3


class TestStatsCommand:
    def _pipeline(self, workdir):
        assert _ingest(workdir) == 0
        assert run(["build-index", "--records", str(workdir / "trips.bin"),
                    "--cell-size", "100",
                    "--out", str(workdir / "index.bin")]) == 0

    def _stats(self, workdir, out_dir, extra=()):
        return run(["stats", "--index", str(workdir / "index.bin"),
                    "--provider-config", str(workdir / "provider.json"),
                    "--out-dir", str(workdir / out_dir),
                    "--trace-sample", "0.5", *extra])

    def test_outputs_and_stdout_summary(self, workdir, capsys):
        self._pipeline(workdir)
        capsys.readouterr()
        assert self._stats(workdir, "stats") == 0
        stdout_summary = json.loads(capsys.readouterr().out)
        on_disk = json.loads((workdir / "stats" / "summary.json").read_text())
        assert stdout_summary == on_disk
        for name in ("distributions.csv", "median_curve.csv", "distances.csv",
                     "raster.csv", "trace_points.csv"):
            assert (workdir / "stats" / name).exists()
        assert on_disk["counts"]["pairs"] > 0

    def test_seeded_runs_identical(self, workdir):
        self._pipeline(workdir)
        assert self._stats(workdir, "s1", ["--sample", "0.5", "--seed", "7"]) == 0
        assert self._stats(workdir, "s2", ["--sample", "0.5", "--seed", "7"]) == 0
        for f1 in sorted((workdir / "s1").iterdir()):
            assert f1.read_bytes() == (workdir / "s2" / f1.name).read_bytes()

    def test_threads_flag_accepted(self, workdir):
        self._pipeline(workdir)
        assert run(["--threads", "2", "stats",
                    "--index", str(workdir / "index.bin"),
                    "--provider-config", str(workdir / "provider.json"),
                    "--out-dir", str(workdir / "t2")]) == 0


class TestUsage:
    def test_no_subcommand_exits_1(self):
        assert run([]) == 1

    def test_unknown_subcommand_exits_1(self):
        assert run(["frobnicate"]) == 1

    def test_missing_required_flag_exits_1(self):
        assert run(["ingest", "--out", "x.bin"]) == 1

    def test_help_exits_0(self, capsys):
        assert run(["--help"]) == 0
        assert "ingest" in capsys.readouterr().out

    @pytest.mark.skipif(shutil.which("cabfare") is None,
                        reason="console script not on PATH")
    def test_console_script(self):
        proc = subprocess.run(["cabfare", "--help"], capture_output=True)
        assert proc.returncode == 0
