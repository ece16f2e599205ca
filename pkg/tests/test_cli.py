import json
import re
import subprocess
import sys

import pytest

from anisokernel import cli


@pytest.fixture
def run(tmp_path, capsys):
    cache = tmp_path / "cache"

    def _run(*args, out="out"):
        code = cli.main([*args, "--out", str(tmp_path / out), "--cache-dir", str(cache)])
        return code, capsys.readouterr()

    _run.tmp = tmp_path
    _run.cache = cache
    return _run


def read(path):
    return path.read_bytes()


class TestParsing:
    def test_a_log(self):
        ns = cli.parse_args(["sweep", "--a-log", "0.01", "0.1", "3"])
        assert cli.config_dict(ns)["a_values"] == pytest.approx([0.01, 0.1 ** 1.5, 0.1])

    def test_bad_a_log(self, run):
        assert run("sweep", "--a-log", "0.1", "0.01", "3")[0] == cli.EXIT_CONFIG
        assert run("sweep", "--a-log", "0.01", "0.1", "1")[0] == cli.EXIT_CONFIG

    def test_bad_tol(self, run):
        assert run("bounds", "--tol", "0")[0] == cli.EXIT_CONFIG

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# sweep settings\nt = 3\na-log = 0.01 0.1 4\nsector = odd\n")
        d = cli.config_dict(cli.parse_args(["sweep", "--config", str(cfg)]))
        assert d["t"] == 3.0 and d["sector"] == "odd" and len(d["a_values"]) == 4
        d = cli.config_dict(cli.parse_args(["sweep", "--config", str(cfg), "--t", "1",
                                            "--a", "0.02", "0.03"]))
        assert d["t"] == 1.0 and d["a_values"] == [0.02, 0.03] and d["sector"] == "odd"

    def test_config_errors(self, tmp_path, run):
        bad = tmp_path / "bad.cfg"
        bad.write_text("nonsense = 1\n")
        assert run("sweep", "--config", str(bad))[0] == cli.EXIT_CONFIG
        bad.write_text("t = abc\n")
        assert run("sweep", "--config", str(bad))[0] == cli.EXIT_CONFIG
        assert run("sweep", "--config", str(tmp_path / "missing.cfg"))[0] == cli.EXIT_CONFIG


class TestBounds:
    def test_json_and_cache_replay(self, run):
        code, cap = run("bounds", "--a", "0.01")
        assert code == 0 and "cache hit" not in cap.err
        path = run.tmp / "out" / "bounds.json"
        first = read(path)
        res = json.loads(first)
        assert res["summary"]["sandwich_ok"] is True
        assert res["schema_version"] == cli.SCHEMA_VERSION
        assert res["code_version"] == cli.CODE_VERSION and res["config"]["a_values"] == [0.01]
        code, cap = run("bounds", "--a", "0.01")
        assert code == 0 and "cache hit" in cap.err
        assert read(path) == first


class TestCache:
    CFG = {"command": "tc", "a_values": [0.01], "tol": 1e-10}

    def test_key_sensitivity(self, monkeypatch):
        k = cli.cache_key(self.CFG)
        assert cli.cache_key(dict(self.CFG)) == k
        assert cli.cache_key({**self.CFG, "tol": 1e-9}) != k
        assert cli.cache_key(self.CFG, parallel=True) != k
        monkeypatch.setattr(cli, "CODE_VERSION", "anisokernel-9.9.9")
        assert cli.cache_key(self.CFG) != k

    def test_tolerance_miss(self, run):
        run("sweep", "--a", "0.05", "--format", "csv")
        code, cap = run("sweep", "--a", "0.05", "--format", "csv", "--tol", "1e-9")
        assert code == 0 and "cache hit" not in cap.err
        assert len(list(run.cache.glob("*.json"))) == 2

    def test_corrupt_entry(self, run):
        run("sweep", "--a", "0.05")
        (entry,) = run.cache.glob("*.json")
        entry.write_text("{not json")
        with pytest.warns(RuntimeWarning, match="corrupt"):
            code, cap = run("sweep", "--a", "0.05")
        assert code == 0 and "cache hit" not in cap.err
        json.loads(entry.read_text())

    def test_no_stray_temp_files(self, run):
        run("sweep", "--a", "0.05")
        assert [p.name for p in run.cache.iterdir() if p.name.startswith(".")] == []


class TestOutputs:
    def test_tc_columns(self, run):
        assert run("tc", "--a", "0.02", "--format", "csv")[0] == 0
        lines = (run.tmp / "out" / "tc.csv").read_text().splitlines()
        assert lines[0].startswith("# code_version=" + cli.CODE_VERSION)
        assert lines[1].startswith("# config=")
        assert lines[2] == "a,tau,residual,iterations,lower_cap,upper_cap"
        assert len(lines) == 4

    def test_empty_sweep(self, run):
        assert run("sweep", "--format", "csv")[0] == 0
        lines = (run.tmp / "out" / "sweep.csv").read_text().splitlines()
        assert [l for l in lines if not l.startswith("#")] == ["a,deficiency"]

    def test_svg_structure(self, run):
        assert run("sweep", "--a-log", "0.02", "0.1", "5", "--plot")[0] == 0
        svg = (run.tmp / "out" / "sweep.svg").read_text()
        assert svg.count('class="marker"') == 5
        # t = 2: the two reference slopes coincide
        assert svg.count('class="ref-slope"') == 1
        assert cli.CODE_VERSION in svg
        res = json.loads((run.tmp / "out" / "sweep.json").read_text())
        assert res["summary"]["fit"]["exponent"] > 0

    def test_svg_deterministic(self):
        pts = [(0.01, 0.2), (0.02, 0.25), (0.04, 0.3)]
        assert cli.to_svg(pts, [0.4, 0.5]) == cli.to_svg(pts, [0.4, 0.5])
        assert cli.to_svg(pts, [0.4, 0.5]).count('class="ref-slope"') == 2

    def test_spectrum(self, run):
        assert run("spectrum", "--a", "0.05", "--sector", "odd", "--format", "csv")[0] == 0
        rows = (run.tmp / "out" / "spectrum.csv").read_text().splitlines()[3:]
        assert len(rows) == 3 and rows[0].startswith("0,0.44")

    def test_unwritable_output(self, run):
        blocker = run.tmp / "file"
        blocker.write_text("x")
        assert run("sweep", "--no-cache", out="file/sub")[0] == cli.EXIT_COMPUTE


class TestExitCodes:
    def test_compute_error(self, run):
        assert run("spectrum", "--a", "0")[0] == cli.EXIT_COMPUTE

    def test_invariant_failure(self, run, monkeypatch):
        monkeypatch.setitem(cli.RUNNERS, "sweep", lambda cfg, w: ([], {}, False))
        assert run("sweep", "--no-cache")[0] == cli.EXIT_INVARIANT

    def test_module_entry(self):
        out = subprocess.run([sys.executable, "-m", "anisokernel", "--version"],
                             capture_output=True, text=True)
        assert out.returncode == 0 and cli.CODE_VERSION in out.stdout


class TestUncertainty:
    def test_small_suite(self, run):
        code, _ = run("uncertainty", "--trials", "40", "--seed", "7", "--format", "csv")
        assert code == 0
        text = (run.tmp / "out" / "uncertainty.csv").read_text()
        assert re.search(r"^up_violations,0$", text, re.M)
        assert re.search(r"^sinc_lambda0,0\.57258", text, re.M)

    def test_parallel_matches_serial(self, run):
        run("uncertainty", "--trials", "30", "--seed", "3", out="s")
        run("uncertainty", "--trials", "30", "--seed", "3", "--workers", "2", out="p")
        s = json.loads((run.tmp / "s" / "uncertainty.json").read_text())
        p = json.loads((run.tmp / "p" / "uncertainty.json").read_text())
        assert s["rows"] == p["rows"]
        assert len(list(run.cache.glob("*.json"))) == 2
