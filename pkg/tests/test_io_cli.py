import csv
import gzip
import json
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from frechet_cpd import InputError, NumericalError
from frechet_cpd import cli
from frechet_cpd.io import parse_timestamp, read_edge_list, report_schema

FIXTURES = Path(__file__).parent / "fixtures"
EDGES = FIXTURES / "two_regime_edges.csv"


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def run(argv, capsys=None):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr() if capsys else None
    return code, out


class TestLoader:
    def test_reads_fixture(self):
        events = read_edge_list(EDGES)
        assert len(events) == sum(1 for _ in open(EDGES)) - 1
        assert events[0].timestamp == 0 and events[0].weight == 1.0

    def test_wrong_column_count_names_line(self, tmp_path):
        p = write(tmp_path / "e.csv", "timestamp,src,dst,weight\n0,a,b,1\n1,a,b\n")
        with pytest.raises(InputError, match=r"e\.csv:3: expected 4 columns, got 3"):
            read_edge_list(p)

    def test_bad_weight_names_line(self, tmp_path):
        p = write(tmp_path / "e.csv", "timestamp,src,dst,weight\n0,a,b,1\n1,a,b,heavy\n")
        with pytest.raises(InputError, match=":3:"):
            read_edge_list(p)

    def test_negative_weight_names_line(self, tmp_path):
        p = write(tmp_path / "e.csv", "timestamp,src,dst,weight\n0,a,b,-1\n")
        with pytest.raises(InputError, match=":2:"):
            read_edge_list(p)

    def test_missing_header_column(self, tmp_path):
        p = write(tmp_path / "e.csv", "time,src,dst\n0,a,b\n")
        with pytest.raises(InputError, match="header"):
            read_edge_list(p)

    def test_empty_and_header_only(self, tmp_path):
        with pytest.raises(InputError, match="no events"):
            read_edge_list(write(tmp_path / "a.csv", ""))
        with pytest.raises(InputError, match="no events"):
            read_edge_list(write(tmp_path / "b.csv", "timestamp,src,dst\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="not found"):
            read_edge_list(tmp_path / "nope.csv")

    def test_tsv_gzip_iso(self, tmp_path):
        p = tmp_path / "e.tsv.gz"
        with gzip.open(p, "wt", encoding="utf-8") as fh:
            fh.write("timestamp\tsrc\tdst\n2004-04-15T07:56:00Z\tu1\tu2\n2004-04-16T09:00:00Z\tu2\tu3\n")
        events = read_edge_list(p)
        assert events[0].timestamp == datetime(2004, 4, 15, 7, 56, tzinfo=timezone.utc)
        assert [e.weight for e in events] == [1.0, 1.0]

    def test_parse_timestamp(self):
        assert parse_timestamp("12") == 12
        assert parse_timestamp("1.5") == 1.5
        assert parse_timestamp("2000-08-23") == datetime(2000, 8, 23)
        with pytest.raises(InputError):
            parse_timestamp("yesterday")


class TestDetect:
    def test_report_validates_and_finds_change(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, io = run(["detect", "--input", EDGES, "--window", 1, "--alpha", 0.01, "--output", out], capsys)
        assert code == 0
        doc = json.loads(out.read_text())
        jsonschema.validate(doc, report_schema())
        assert [cp["index"] for cp in doc["change_points"]] == [20]
        assert doc["config"]["eps"] is None and doc["config"]["eps_relative"] == 1e-8
        assert "index 20" in io.out and "tau=0.5000" in io.out

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            assert run(["detect", "--input", EDGES, "--window", 1, "--seed", 5, "--output", path])[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_csv_output(self, tmp_path):
        out = tmp_path / "r.csv"
        args = ["detect", "--input", EDGES, "--window", 1, "--output", out, "--output-format", "csv"]
        assert run(args)[0] == 0
        rows = list(csv.DictReader(out.open()))
        assert rows[0].keys() == {"segment_lo", "segment_hi", "k", "u", "nT", "threshold"}
        assert rows[0]["segment_lo"] == "0" and rows[0]["segment_hi"] == "40"

    def test_brownian_and_epsilon_flags(self, tmp_path):
        out = tmp_path / "r.json"
        args = ["detect", "--input", EDGES, "--window", 1, "--method", "brownian-mc", "--epsilon", 1e-3,
                "--no-curves", "--output", out]
        assert run(args)[0] == 0
        doc = json.loads(out.read_text())
        jsonschema.validate(doc, report_schema())
        assert "curves" not in doc and doc["config"]["method"] == "brownian_mc" and doc["config"]["eps"] == 1e-3

    def test_empty_input_exit_2(self, tmp_path, capsys):
        p = write(tmp_path / "e.csv", "timestamp,src,dst\n")
        code, io = run(["detect", "--input", p, "--window", 1, "--output", tmp_path / "r.json"], capsys)
        assert code == 2 and "no events" in io.err
        assert not (tmp_path / "r.json").exists()

    def test_malformed_exit_2(self, tmp_path, capsys):
        p = write(tmp_path / "e.csv", "timestamp,src,dst\n0,a\n")
        code, io = run(["detect", "--input", p, "--window", 1, "--output", tmp_path / "r.json"], capsys)
        assert code == 2 and ":2:" in io.err

    def test_invalid_config_exit_2(self, tmp_path, capsys):
        code, io = run(["detect", "--input", EDGES, "--window", 1, "--alpha", 2, "--output", tmp_path / "r"], capsys)
        assert code == 2 and "alpha" in io.err

    def test_numerical_error_exit_3(self, tmp_path, monkeypatch, capsys):
        def boom(*args, **kwargs):
            raise NumericalError("eigendecomposition failed (snapshot 3)")

        monkeypatch.setattr(cli, "log_laplacians", boom)
        code, io = run(["detect", "--input", EDGES, "--window", 1, "--output", tmp_path / "r.json"], capsys)
        assert code == 3 and "snapshot 3" in io.err

    def test_log_cache(self, tmp_path):
        out, cache = tmp_path / "r.json", tmp_path / "logs.npy"
        ref = tmp_path / "ref.json"
        assert run(["detect", "--input", EDGES, "--window", 1, "--output", ref])[0] == 0
        assert run(["detect", "--input", EDGES, "--window", 1, "--log-cache", cache, "--output", out])[0] == 0
        assert np.load(cache).shape == (40, 16, 16)
        assert out.read_bytes() == ref.read_bytes()

    def test_datetime_bucket_start(self, tmp_path):
        lines = ["timestamp,src,dst"]
        for day in range(30):
            hub = "a" if day < 15 else "b"
            for leaf in "cdefg":
                lines.append(f"2001-01-{day + 1:02d}T10:00:00,{hub},{leaf}")
        p = write(tmp_path / "e.csv", "\n".join(lines) + "\n")
        out = tmp_path / "r.json"
        assert run(["detect", "--input", p, "--window", "1d", "--output", out])[0] == 0
        doc = json.loads(out.read_text())
        jsonschema.validate(doc, report_schema())
        assert [cp["index"] for cp in doc["change_points"]] == [15]
        assert doc["change_points"][0]["bucket_start"] == "2001-01-16T10:00:00"


class TestCurve:
    def test_row_count_and_peak(self, tmp_path, capsys):
        out = tmp_path / "c.csv"
        code, io = run(["curve", "--input", EDGES, "--window", 1, "--output", out], capsys)
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 40 - 2 * 4 + 1
        values = np.array([float(r["nT"]) for r in rows])
        assert int(rows[int(values.argmax())]["k"]) == 20
        assert "k = 20" in io.out

    def test_constant_network_zero_curve(self, tmp_path):
        lines = ["timestamp,src,dst,weight"] + [f"{t},a,b,2" for t in range(20)] + [f"{t},b,c,1" for t in range(20)]
        p = write(tmp_path / "e.csv", "\n".join(lines) + "\n")
        out = tmp_path / "c.csv"
        assert run(["curve", "--input", p, "--window", 1, "--output", out, "--c", 0.2])[0] == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 20 - 2 * 4 + 1
        assert all(float(r["nT"]) == 0.0 for r in rows)


class TestSimulate:
    def scenario(self, tmp_path, regimes, seed=0):
        return write(tmp_path / "s.json", json.dumps({"node_count": 20, "seed": seed, "regimes": regimes}))

    def test_single_regime_truth(self, tmp_path):
        cfg = self.scenario(tmp_path, [{"num_blocks": 2, "duration": 10}])
        out = tmp_path / "e.csv"
        assert run(["simulate", "--config", cfg, "--output", out])[0] == 0
        truth = json.loads((tmp_path / "e.csv.truth.json").read_text())
        assert truth["change_points"] == [] and truth["n"] == 10

    def test_two_regime_truth_and_determinism(self, tmp_path):
        cfg = self.scenario(tmp_path, [{"num_blocks": 2, "duration": 60}, {"num_blocks": 4, "duration": 60}])
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(["simulate", "--config", cfg, "--output", a, "--truth", tmp_path / "t.json"])[0] == 0
        assert run(["simulate", "--config", cfg, "--output", b])[0] == 0
        assert json.loads((tmp_path / "t.json").read_text())["change_points"] == [60]
        assert a.read_bytes() == b.read_bytes()

    def test_invalid_scenario_exit_2(self, tmp_path, capsys):
        cfg = self.scenario(tmp_path, [{"num_blocks": 2, "duration": 0}])
        code, io = run(["simulate", "--config", cfg, "--output", tmp_path / "e.csv"], capsys)
        assert code == 2 and "duration" in io.err
        bad = write(tmp_path / "bad.json", "{not json")
        assert run(["simulate", "--config", bad, "--output", tmp_path / "e.csv"])[0] == 2
        assert run(["simulate", "--config", tmp_path / "missing.json", "--output", tmp_path / "e.csv"])[0] == 2

    def test_round_trip_recovers_changes(self, tmp_path):
        regimes = [
            {"num_blocks": 2, "duration": 40, "p_in": 0.6, "p_out": 0.1},
            {"num_blocks": 4, "duration": 40, "p_in": 0.6, "p_out": 0.1},
            {"num_blocks": 4, "duration": 40, "p_in": 0.6, "p_out": 0.25},
        ]
        cfg = self.scenario(tmp_path, regimes, seed=2)
        edges, report = tmp_path / "e.csv", tmp_path / "r.json"
        assert run(["simulate", "--config", cfg, "--output", edges])[0] == 0
        assert run(["detect", "--input", edges, "--window", 1, "--alpha", 0.01, "--output", report])[0] == 0
        truth = json.loads((tmp_path / "e.csv.truth.json").read_text())["change_points"]
        found = [cp["index"] for cp in json.loads(report.read_text())["change_points"]]
        assert len(found) == len(truth) == 2
        assert all(abs(f - t) <= 5 for f, t in zip(found, truth))
