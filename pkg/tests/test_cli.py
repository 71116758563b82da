import json
import math

import jsonschema
import numpy as np
import pytest

from gwgl.cli import SCHEMAS, run


def _run_ok(argv):
    code = run(argv)
    assert code == 0, "command failed: %s" % " ".join(argv)


def _generate(tmp_path, name="d.csv", seed=7, n=30, sizes="1,3", q=0.2):
    data = str(tmp_path / name)
    groups = str(tmp_path / (name + ".groups.json"))
    _run_ok(["generate", "--seed", str(seed), "--sizes", sizes, "--snr", "1",
             "--q", str(q), "--n", str(n), "-o", data,
             "--groups-out", groups])
    return data, groups


class TestGenerate:
    def test_deterministic_and_schema(self, tmp_path):
        a = str(tmp_path / "a.csv")
        b = str(tmp_path / "b.csv")
        argv = ["generate", "--seed", "7", "--sizes", "1,3", "--snr", "1",
                "--q", "0.2", "--n", "25"]
        _run_ok(argv + ["-o", a])
        _run_ok(argv + ["-o", b])
        assert open(a, "rb").read() == open(b, "rb").read()
        meta = json.load(open(a + ".meta.json"))
        jsonschema.validate(meta, SCHEMAS["generate"])

    def test_bad_sizes_exit_usage(self, tmp_path):
        code = run(["generate", "--sizes", "one,two", "--snr", "1",
                    "-o", str(tmp_path / "x.csv")])
        assert code == 2


class TestCluster:
    def test_groups_and_diagnostics_schemas(self, tmp_path):
        data, _ = _generate(tmp_path, sizes="3,3", q=0.0)
        out = str(tmp_path / "g.json")
        diag = str(tmp_path / "diag.json")
        _run_ok(["cluster", "--data", data, "--clusters", "2", "--seed", "0",
                 "-o", out, "--diagnostics-out", diag])
        jsonschema.validate(json.load(open(out)), SCHEMAS["groups"])
        jsonschema.validate(json.load(open(diag)),
                            SCHEMAS["cluster-diagnostics"])

    def test_deterministic(self, tmp_path):
        data, _ = _generate(tmp_path, sizes="3,3", q=0.0)
        a = str(tmp_path / "a.json")
        b = str(tmp_path / "b.json")
        for out in (a, b):
            _run_ok(["cluster", "--data", data, "--clusters", "auto",
                     "--seed", "3", "-o", out])
        assert open(a, "rb").read() == open(b, "rb").read()


class TestFitEvaluate:
    def test_fit_schema_and_determinism(self, tmp_path):
        data, groups = _generate(tmp_path)
        a = str(tmp_path / "f1.json")
        b = str(tmp_path / "f2.json")
        argv = ["fit", "--model", "gwgl-lr", "--data", data, "--groups",
                groups, "--epsilon", "0.05", "--seed", "1"]
        _run_ok(argv + ["-o", a])
        _run_ok(argv + ["-o", b])
        assert open(a, "rb").read() == open(b, "rb").read()
        jsonschema.validate(json.load(open(a)), SCHEMAS["fit"])

    def test_missing_data_file_named(self, tmp_path, capsys):
        code = run(["fit", "--model", "gwgl-lr", "--data",
                    str(tmp_path / "missing.csv"), "--epsilon", "0.1",
                    "--groups", "g.json", "-o", str(tmp_path / "f.json")])
        assert code == 2
        assert "missing.csv" in capsys.readouterr().err

    def test_requires_groups_or_auto_cluster(self, tmp_path):
        data, _ = _generate(tmp_path)
        code = run(["fit", "--model", "gwgl-lr", "--data", data, "--epsilon",
                    "0.1", "-o", str(tmp_path / "f.json")])
        assert code == 2

    def test_evaluate_reproduces_training_objective(self, tmp_path):
        data, groups = _generate(tmp_path)
        fit_path = str(tmp_path / "fit.json")
        eval_path = str(tmp_path / "eval.json")
        _run_ok(["fit", "--model", "gwgl-lr", "--data", data, "--groups",
                 groups, "--epsilon", "0.08", "--seed", "2", "-o", fit_path])
        _run_ok(["evaluate", "--data", data, "--fit", fit_path, "--groups",
                 groups, "-o", eval_path])
        fit = json.load(open(fit_path))
        ev = json.load(open(eval_path))
        jsonschema.validate(ev, SCHEMAS["evaluate"])
        assert ev["objective"] == fit["objective"]

    def test_latent_overlap_model(self, tmp_path):
        data, _ = _generate(tmp_path, sizes="2,2", q=0.0)
        groups = str(tmp_path / "overlap.json")
        with open(groups, "w") as fh:
            json.dump({"p": 4, "groups": [[0, 1, 2], [2, 3]],
                       "overlapping": True}, fh)
        out = str(tmp_path / "fit.json")
        _run_ok(["fit", "--model", "latent-overlap", "--data", data,
                 "--groups", groups, "--epsilon", "0.05", "--loss", "lad",
                 "-o", out])
        fit = json.load(open(out))
        jsonschema.validate(fit, SCHEMAS["fit"])
        assert "latent" in fit

    def test_gwgl_lg_on_binary_data(self, tmp_path):
        path = tmp_path / "bin.csv"
        rng = np.random.default_rng(0)
        rows = ["a,b,y"]
        for _ in range(24):
            x1, x2 = rng.standard_normal(2)
            label = 1 if x1 + 0.5 * x2 + 0.3 * rng.standard_normal() > 0 else 0
            rows.append("%r,%r,%d" % (float(x1), float(x2), label))
        path.write_text("\n".join(rows) + "\n")
        groups = tmp_path / "g.json"
        groups.write_text(json.dumps({"p": 2, "groups": [[0], [1]],
                                      "overlapping": False}))
        out = str(tmp_path / "fit.json")
        _run_ok(["fit", "--model", "gwgl-lg", "--data", str(path), "--groups",
                 str(groups), "--epsilon", "0.02", "-o", out])
        assert json.load(open(out))["loss"] == "logloss"


class TestTuneCli:
    def test_report_schema_and_determinism(self, tmp_path):
        data, groups = _generate(tmp_path, n=40)
        a = str(tmp_path / "t1.json")
        b = str(tmp_path / "t2.json")
        argv = ["tune", "--model", "glasso-l2", "--data", data, "--groups",
                groups, "--seed", "4", "--grid-size", "6", "--tol", "1e-6",
                "--max-iters", "3000"]
        _run_ok(argv + ["-o", a])
        _run_ok(argv + ["-o", b])
        assert open(a, "rb").read() == open(b, "rb").read()
        jsonschema.validate(json.load(open(a)), SCHEMAS["tune"])


class TestOracleCheckCli:
    def test_mixture_reports_expected_ratio(self, tmp_path):
        out = str(tmp_path / "mix.json")
        _run_ok(["oracle-check", "mixture", "--q", "0.2", "--seed", "1",
                 "--trials", "10", "-o", out])
        report = json.load(open(out))
        jsonschema.validate(report, SCHEMAS["oracle-check"])
        assert report["passed"]
        assert report["expected_ratio"] == 4.0
        assert abs(report["ratio"] - 4.0) <= 1e-9

    def test_dual_norm_and_dro_bound(self, tmp_path):
        for which, trials in (("dual-norm", 50), ("dro-bound", 20)):
            out = str(tmp_path / (which + ".json"))
            _run_ok(["oracle-check", which, "--seed", "2", "--trials",
                     str(trials), "-o", out])
            report = json.load(open(out))
            jsonschema.validate(report, SCHEMAS["oracle-check"])
            assert report["passed"]

    def test_grouping_check(self, tmp_path):
        out = str(tmp_path / "grouping.json")
        _run_ok(["oracle-check", "grouping", "--seed", "0", "--n-fits", "4",
                 "-o", out])
        report = json.load(open(out))
        jsonschema.validate(report, SCHEMAS["oracle-check"])
        assert report["passed"]

    def test_deterministic(self, tmp_path):
        a = str(tmp_path / "a.json")
        b = str(tmp_path / "b.json")
        for out in (a, b):
            _run_ok(["oracle-check", "mixture", "--seed", "5", "--trials",
                     "5", "-o", out])
        assert open(a, "rb").read() == open(b, "rb").read()


class TestSweepCli:
    def test_small_sweep_table_and_determinism(self, tmp_path):
        a = str(tmp_path / "a.csv")
        b = str(tmp_path / "b.csv")
        summary = str(tmp_path / "s.json")
        argv = ["sweep", "--axis", "snr", "--points", "2", "--n-datasets",
                "2", "--n", "40", "--n-test", "20", "--grid-size", "8",
                "--seed", "3", "--summary-out", summary]
        _run_ok(argv + ["-o", a])
        _run_ok(argv + ["-o", b])
        assert open(a, "rb").read() == open(b, "rb").read()
        jsonschema.validate(json.load(open(summary)),
                            SCHEMAS["sweep-summary"])
        lines = open(a).read().strip().split("\n")
        assert lines[0] == "axis,axis_value,dataset,method,mad,rr,rte,pve"
        # 2 points x 2 datasets x 4 method rows
        assert len(lines) == 1 + 16
        methods = {line.split(",")[3] for line in lines[1:]}
        assert methods == {"gwgl-lr", "glasso-l2", "ideal", "null"}

    def test_rho_axis(self, tmp_path):
        out = str(tmp_path / "rho.csv")
        _run_ok(["sweep", "--axis", "rho", "--points", "2", "--n-datasets",
                 "1", "--n", "40", "--n-test", "10", "--grid-size", "5",
                 "--seed", "1", "-o", out])
        first = open(out).read().strip().split("\n")[1]
        assert first.startswith("rho,")


class TestUsageErrors:
    def test_unknown_subcommand(self):
        assert run(["frobnicate"]) == 2

    def test_unknown_flag(self):
        assert run(["generate", "--no-such-flag", "-o", "x"]) == 2
