import csv
import io
import json
import subprocess
import sys

import pytest

from ratiolab import cli, eulerprod
from ratiolab.data import cache_path, level_one_family, save_family


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


class TestExitCodes:
    def test_predict_unweighted(self):
        code, out, _ = invoke("predict", "--k", "12", "--mode", "unweighted", "--phi", "fejer:1")
        assert code == 0
        res = json.loads(out)
        row = res["results"][0]
        assert row["m_phi"] is None and row["secondary_sum"] is not None
        assert res["config"]["k"] == 12 and res["config"]["phi"] == "fejer:1"

    def test_bad_arguments_exit_one(self):
        code, _, err = invoke("predict", "--k", "12", "--mode", "sideways")
        assert code == 1
        assert json.loads(err)["error"] == "ConfigError"
        code, _, err = invoke("predict", "--k", "13")
        assert code == 1 and json.loads(err)["error"] == "DomainError"

    def test_missing_family_exit_one(self):
        code, _, err = invoke("ntside", "--k", "12", "--N", "11")
        assert code == 1 and "family" in json.loads(err)["message"]

    def test_suite_failure_exit_two(self, monkeypatch):
        monkeypatch.setattr(eulerprod, "per_prime_identity_gap", lambda p, u: 1.0)
        code, out, _ = invoke("identities")
        assert code == 2
        rows = json.loads(out)["results"]
        assert [r["check"] for r in rows if not r["passed"]] == ["per_prime_factorisation"]

    def test_identities_pass(self):
        code, out, _ = invoke("identities", "--seed", "3")
        assert code == 0
        assert all(r["passed"] for r in json.loads(out)["results"])

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "ratiolab", "mertens", "--y", "1000", "--skip-m-phi"],
                              capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0
        assert proc.stdout.startswith("y,product,")


class TestConfig:
    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"k": 16, "mode": "unweighted", "phi": "fejer:1"}))
        code, out, _ = invoke("predict", "--config", str(cfg), "--k", "12")
        assert code == 0
        res = json.loads(out)["results"][0]
        assert res["k"] == 12 and res["mode"] == "unweighted" and res["phi"] == "fejer:1"

    def test_config_supplies_required(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"k": 16, "mode": "unweighted"}))
        code, out, _ = invoke("predict", "--config", str(cfg))
        assert code == 0 and json.loads(out)["results"][0]["k"] == 16

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kk": 16}))
        code, _, err = invoke("predict", "--config", str(cfg), "--k", "12")
        assert code == 1 and "kk" in json.loads(err)["message"]


class TestOutput:
    def test_deterministic(self):
        args = ("hyps", "--x", "1000,10000", "--c", "1,3")
        first, second = invoke(*args), invoke(*args)
        assert first == second
        rows = list(csv.DictReader(io.StringIO(first[1])))
        assert {r["c"] for r in rows} == {"1", "3"}
        assert json.loads(first[2])["config"]["c"] == [1, 3]

    def test_output_file_and_plot_data(self, tmp_path):
        out = tmp_path / "m.csv"
        plots = tmp_path / "plots"
        code, stdout, _ = invoke("mertens", "--y", "100,1000", "--skip-m-phi", "-o", str(out),
                                 "--emit-plot-data", str(plots))
        assert code == 0 and stdout == ""
        assert json.loads((tmp_path / "m.csv.config.json").read_text())["y"] == [100, 1000]
        lines = (plots / "product_log_y.tsv").read_text().splitlines()
        assert lines[0] == "x\ty" and len(lines) == 3
        assert float(lines[1].split("\t")[0]) == 100

    def test_json_format_switch(self):
        code, out, err = invoke("mertens", "--y", "100", "--skip-m-phi", "--format", "json")
        assert code == 0 and err == ""
        assert json.loads(out)["results"][0]["y"] == 100


class TestCommands:
    def test_ntside_from_family_file(self, tmp_path):
        path = save_family(level_one_family(12, 200), tmp_path / "1_12.nf")
        code, out, _ = invoke("ntside", "--k", "12", "--phi", "fejer:1", "--family", str(path))
        assert code == 0
        row = json.loads(out)["results"][0]
        assert row["s1"] is not None and row["side"] == "number_theory"

    def test_compare_unweighted(self):
        code, out, _ = invoke("compare", "--k-sweep", "12,16", "--mode", "unweighted", "--phi", "fejer:0.5")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [int(r["k"]) for r in rows] == [12, 16]
        assert "secondary_model" in rows[0] and "exponent_vs_k" in rows[0]

    def test_petersson_suite(self):
        code, out, _ = invoke("petersson", "--k", "12,16", "--max-mn", "6")
        assert code == 0
        assert all(r["passed"] for r in json.loads(out)["results"])

    def test_fetch_from_cache(self, tmp_path):
        save_family(level_one_family(12, 100), cache_path(tmp_path, "remote-v1", 1, 12))
        code, out, _ = invoke("fetch", "--level", "1", "--weight", "12", "--cache-dir", str(tmp_path))
        assert code == 0
        assert json.loads(out)["results"][0]["from_cache"] is True
        code, _, err = invoke("fetch", "--level", "1", "--weight", "16", "--cache-dir", str(tmp_path))
        assert code == 1 and json.loads(err)["error"] == "NetworkError"
