import json

import pytest

from phylonetsim.cli import main


def run_to_file(tmp_path, name, argv):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, out.read_bytes()


class TestAnalyze:
    def test_json_structure(self, tmp_path):
        code, raw = run_to_file(
            tmp_path,
            "a.json",
            ["analyze", "--alpha", "1", "--beta", "1", "--mu", "1", "--samples", "2000", "--seed", "7"],
        )
        assert code == 0
        doc = json.loads(raw)
        assert doc["schema_version"] == 1
        a = doc["analysis"]
        assert a["expected_M"]["value"] == pytest.approx(0.7182818284590452, abs=1e-9)
        assert a["extinction_probability"]["value"] == 1.0
        assert a["malthusian_rate"]["value"] < 0
        assert a["tilt"]["zeta"] > 1.0
        for key in ("method", "error"):
            assert key in a["expected_M"] or key in ("method",)
        assert "EUstar" in a["crt_constants"]

    def test_supercritical_summary(self, tmp_path):
        code, raw = run_to_file(
            tmp_path,
            "b.json",
            ["analyze", "--alpha", "0.2", "--beta", "0.2", "--mu", "0.2", "--samples", "2000", "--seed", "7"],
        )
        doc = json.loads(raw)
        a = doc["analysis"]
        assert a["expected_M"]["value"] == pytest.approx(5.696526364103064, abs=1e-8)
        assert 0.23851 <= a["extinction_probability"]["value"] <= 0.34
        assert a["malthusian_rate"]["value"] > 0

    def test_byte_identical_reruns(self, tmp_path):
        argv = ["analyze", "--alpha", "1", "--beta", "1", "--mu", "1", "--samples", "1500", "--seed", "11"]
        _, raw1 = run_to_file(tmp_path, "r1.json", argv)
        _, raw2 = run_to_file(tmp_path, "r2.json", argv)
        assert raw1 == raw2


class TestGfunTable:
    def test_csv_monotone_gap(self, tmp_path):
        code, raw = run_to_file(
            tmp_path,
            "g.csv",
            [
                "gfun-table", "--alpha", "1", "--beta", "1", "--mu", "1",
                "--depths", "4,8,16", "--z-steps", "6", "--format", "csv",
            ],
        )
        assert code == 0
        lines = raw.decode().splitlines()
        assert lines[0] == "depth,z,lower,upper,gap,sup_gap,gap_majorant"
        rows = [ln.split(",") for ln in lines[1:]]
        assert len(rows) == 3 * 6
        sup_by_depth = {int(r[0]): float(r[5]) for r in rows}
        assert sup_by_depth[4] > sup_by_depth[8] > sup_by_depth[16]
        for r in rows:
            assert float(r[2]) <= float(r[3])  # lower <= upper
            assert float(r[5]) <= float(r[6]) + 1e-15  # sup gap below majorant

    def test_bounds_meet_at_one(self, tmp_path):
        _, raw = run_to_file(
            tmp_path,
            "g2.json",
            ["gfun-table", "--alpha", "0.2", "--beta", "0.2", "--mu", "0.2", "--depths", "30"],
        )
        doc = json.loads(raw)
        rows = doc["gfun_table"][0]["rows"]
        assert all(0.0 <= r["lower"] <= r["upper"] <= 1.0 for r in rows)
        last = rows[-1]
        assert last["z"] == 1.0
        assert last["upper"] - last["lower"] <= 1e-9


class TestSimulate:
    def test_network_json(self, tmp_path):
        code, raw = run_to_file(
            tmp_path,
            "n.json",
            ["simulate", "--alpha", "1", "--beta", "1", "--mu", "1", "--n", "6", "--seed", "5", "--count", "2"],
        )
        assert code == 0
        doc = json.loads(raw)
        assert len(doc["networks"]) == 2
        net = doc["networks"][0]
        assert set(net) == {"tree", "decorations", "glue"}
        assert len(net["decorations"]) == 6

    def test_trajectory_kind(self, tmp_path):
        _, raw = run_to_file(
            tmp_path,
            "t.json",
            ["simulate", "--kind", "trajectory", "--alpha", "1", "--beta", "1", "--mu", "1", "--n", "1", "--seed", "5", "--count", "3"],
        )
        doc = json.loads(raw)
        assert len(doc["trajectories"]) == 3
        tr = doc["trajectories"][0]
        assert set(tr) == {"initial_state", "start_time", "events"}
        assert all(kind in "BDCM" for _, kind in tr["events"])

    def test_newick_output(self, tmp_path):
        _, raw = run_to_file(
            tmp_path,
            "n.nwk",
            ["simulate", "--alpha", "1", "--beta", "1", "--mu", "1", "--n", "4", "--seed", "5", "--format", "newick"],
        )
        text = raw.decode().strip()
        assert text.endswith(";") and text.count("(") == text.count(")")

    def test_edge_csv_output(self, tmp_path):
        _, raw = run_to_file(
            tmp_path,
            "n.csv",
            ["simulate", "--alpha", "1", "--beta", "1", "--mu", "1", "--n", "4", "--seed", "5", "--format", "csv"],
        )
        assert raw.decode().splitlines()[0] == "source,target,weight,source_time,target_time"


class TestContour:
    def test_csv_grid(self, tmp_path):
        code, raw = run_to_file(
            tmp_path,
            "c.csv",
            ["contour", "--alpha", "1", "--beta", "1", "--mu", "1", "--n", "20", "--seed", "9", "--grid", "128", "--format", "csv"],
        )
        assert code == 0
        lines = raw.decode().splitlines()
        assert lines[0] == "t,h"
        assert len(lines) == 129
        t0, h0 = lines[1].split(",")
        assert float(t0) == 0.0 and float(h0) == 0.0


class TestLocalBall:
    def test_json_shape(self, tmp_path):
        code, raw = run_to_file(
            tmp_path,
            "lb.json",
            ["local-ball", "--alpha", "1", "--beta", "1", "--mu", "1", "--seed", "13", "--r", "2"],
        )
        assert code == 0
        doc = json.loads(raw)["local_ball"]
        assert doc["r"] == 2
        assert len(doc["spine_ids"]) == 2
        focal = doc["vertices"][doc["focal_id"]]
        assert focal["role"] == "focal"
        assert len(focal["decoration"]["mutation_points"]) == focal["outdegree"]


class TestVerifyCommand:
    def test_model_suite_passes(self, tmp_path):
        code, raw = run_to_file(
            tmp_path,
            "v.json",
            ["verify", "--suite", "model", "--alpha", "1", "--beta", "1", "--mu", "1", "--seed", "42", "--scale", "0.05"],
        )
        assert code == 0
        doc = json.loads(raw)
        assert doc["passed"] is True
        assert all(set(c) >= {"name", "passed", "statistic", "threshold"} for c in doc["checks"])

    def test_worker_count_invariance(self, tmp_path):
        base = [
            "verify", "--suite", "crt", "--alpha", "1", "--beta", "1", "--mu", "1",
            "--seed", "4", "--n", "60", "--replicates", "24", "--samples", "4000",
        ]
        _, raw1 = run_to_file(tmp_path, "w1.json", base + ["--workers", "1"])
        _, raw2 = run_to_file(tmp_path, "w2.json", base + ["--workers", "3"])
        assert raw1 == raw2

    def test_unknown_suite_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            main(["verify", "--suite", "nonsense"])
        assert err.value.code == 2


class TestConfigFile:
    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("alpha=0.2\nbeta=0.2\nmu=0.2\nseed=3\n")
        _, raw = run_to_file(
            tmp_path, "cfg.json", ["analyze", "--config", str(cfg), "--mu", "1.0", "--samples", "1000"]
        )
        doc = json.loads(raw)
        assert doc["config"]["alpha"] == 0.2
        assert doc["config"]["mu"] == 1.0  # flag wins

    def test_bad_config_line(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("alpha 0.2\n")
        code = main(["analyze", "--config", str(cfg)])
        assert code == 2


class TestExitCodes:
    def test_numeric_failure_maps_to_3(self, monkeypatch, tmp_path):
        from phylonetsim import cli
        from phylonetsim.errors import NumericalFailure

        def boom(*a, **k):
            raise NumericalFailure("synthetic")

        monkeypatch.setattr(cli.analytics, "expected_M", boom)
        code = main(["analyze", "--alpha", "1", "--beta", "1", "--mu", "1"])
        assert code == 3
