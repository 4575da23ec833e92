import json
import subprocess
import sys

import numpy as np
import pytest

from cascadelab.analytic import pivotal_and_cascade_fractions
from cascadelab.degree_model import DegreeDistribution
from cascadelab.harness import ConfigError, parse_config, run
from cascadelab.harness.cli import main
from cascadelab.harness.compare import GridMismatch, compare
from cascadelab.harness.figures import figure
from cascadelab.harness.runner import fmt, write_outputs
from cascadelab.rng import replica_rng


def cfg_dict(**kw):
    d = {
        "model": {
            "degree": {"kind": "poisson", "lambda": 5.0},
            "threshold": {"kind": "proportional", "q": 0.15},
            "seed": {"kind": "pivotal_pair"},
        },
        "n": 10,
        "replicas": 1,
        "rng_seed": 7,
    }
    d.update(kw)
    return d


def write_cfg(tmp_path, d, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(d, indent=2))
    return str(path)


AGGREGATE_HEADER = (
    "point,n,replicas,failed,mean_fraction,stderr_fraction,ci_low,ci_high,mean_pivotal,"
    "mean_largest_inactive,mean_rounds,cascade_frequency,analytic_fraction,analytic_gamma,condition_holds"
)
SWEEP_HEADER = AGGREGATE_HEADER.replace("point,", "point,lambda,", 1)
REPLICA_HEADER = (
    "point,replica,final_fraction,pivotal_fraction,largest_inactive_fraction,seed_fraction,"
    "rounds,period,global_cascade,failed"
)
ANALYTIC_HEADER = "root,fraction,gamma,s,condition_holds,qc,hypothesis_ok,residual"
FIGURE_HEADERS = {
    "cascade_window": ["lambda", "gamma", "s", "condition_holds"],
    "qc_curve": ["lambda", "qc"],
    "coexistence": ["lambda", "giant", "s", "inactive_giant", "criterion", "coexists"],
    "alpha_c": ["lambda", "alpha_c", "final_below", "final_above", "s_alpha0"],
    "seed_response": ["lambda", "alpha", "fraction", "verified"],
    "trials": ["lambda", "mean_trials", "stderr_trials", "censored_fraction", "s"],
}


class TestFormat:
    def test_twelve_digits(self):
        assert fmt(1 / 3) == "0.333333333333"
        assert fmt(True) == "1" and fmt(False) == "0"
        assert fmt(float("nan")) == "nan"
        assert fmt(None) == ""
        assert fmt(3) == "3"


class TestRun:
    def test_deterministic_bytes(self, tmp_path):
        path = write_cfg(tmp_path, cfg_dict())
        outs = []
        for i in range(2):
            out = tmp_path / f"o{i}.csv"
            assert main(["simulate", "--config", path, "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_worker_count_does_not_change_output(self, tmp_path):
        d = cfg_dict(n=500, replicas=6, output={"per_replica": True})
        path = write_cfg(tmp_path, d)
        got = []
        for threads in (1, 2):
            out = tmp_path / f"t{threads}.csv"
            assert main(["simulate", "--config", path, "--out", str(out), "--threads", str(threads)]) == 0
            got.append((out.read_bytes(), out.with_suffix(".replicas.csv").read_bytes()))
        assert got[0] == got[1]

    def test_sweep_rows(self):
        cfg = parse_config(json.dumps(cfg_dict(n=50, sweep={"parameter": "lambda", "lo": 1, "hi": 8, "steps": 20})))
        res = run(cfg)
        header, rows = res.aggregate_table()
        assert len(rows) == 20
        assert [r[1] for r in rows] == pytest.approx(np.linspace(1, 8, 20).tolist())

    def test_summary_invariants(self):
        cfg = parse_config(json.dumps(cfg_dict(n=300, replicas=8)))
        s = run(cfg).summaries[0]
        assert np.all((s.final_fractions >= 0) & (s.final_fractions <= 1))
        lo, hi = s.ci
        assert hi - s.mean == pytest.approx(1.96 * s.stderr)
        assert s.mean - lo == pytest.approx(1.96 * s.stderr)

    def test_failed_replica_recorded_and_run_continues(self, tmp_path, capsys):
        # a simple 4-regular graph on 3 vertices does not exist
        d = cfg_dict(n=3, replicas=2, simple=True)
        d["model"]["degree"] = {"kind": "regular", "r": 4}
        out = tmp_path / "fail.csv"
        assert main(["simulate", "--config", write_cfg(tmp_path, d), "--out", str(out)]) == 1
        meta = json.loads(out.with_suffix(".meta.json").read_text())
        assert len(meta["failed_replicas"]) == 2
        assert out.read_text().splitlines()[1].split(",")[3] == "2"
        assert "failed" in capsys.readouterr().err

    def test_metadata_records_seed(self, tmp_path):
        cfg = parse_config(json.dumps(cfg_dict(rng_seed=123)))
        out = tmp_path / "m.csv"
        write_outputs(run(cfg), str(out))
        meta = json.loads(out.with_suffix(".meta.json").read_text())
        assert meta["rng_seed"] == 123 and "Philox" in meta["rng"]


class TestRngIndependence:
    def test_first_draws_unique(self):
        seen = set()
        for j in range(10_000):
            seen.add(tuple(replica_rng(2024, 0, j).integers(0, 2**63, size=4).tolist()))
        assert len(seen) == 10_000


class TestGoldenHeaders:
    def test_aggregate_and_replica(self):
        res = run(parse_config(json.dumps(cfg_dict(n=20, replicas=2))))
        assert res.csv().splitlines()[0] == AGGREGATE_HEADER
        assert res.replica_csv().splitlines()[0] == REPLICA_HEADER

    def test_sweep(self):
        res = run(parse_config(json.dumps(cfg_dict(n=20, sweep={"parameter": "lambda", "lo": 2, "hi": 3, "steps": 2}))))
        assert res.csv().splitlines()[0] == SWEEP_HEADER

    def test_analytic(self, tmp_path, capsys):
        assert main(["analytic", "--config", write_cfg(tmp_path, cfg_dict())]) == 0
        assert capsys.readouterr().out.splitlines()[0] == ANALYTIC_HEADER

    @pytest.mark.parametrize("name", sorted(FIGURE_HEADERS))
    def test_figures(self, name):
        opts = {"steps": 3}
        if name == "trials":
            opts.update(n=200, replicas=2)
        if name == "seed_response":
            opts = {"lambdas": [3.0], "steps": 3}
        header, rows = figure(name, **opts)
        assert header == FIGURE_HEADERS[name]
        assert rows and all(len(r) == len(header) for r in rows)


class TestConfigErrors:
    def test_missing_field_reports_line(self, tmp_path, capsys):
        d = cfg_dict()
        del d["model"]["threshold"]
        assert main(["analytic", "--config", write_cfg(tmp_path, d)]) == 2
        assert "threshold" in capsys.readouterr().err

    def test_bad_value_reports_field_and_line(self):
        text = json.dumps(cfg_dict(replicas=0), indent=2)
        with pytest.raises(ConfigError) as e:
            parse_config(text)
        assert e.value.field == "replicas"
        assert e.value.line == next(i + 1 for i, s in enumerate(text.splitlines()) if '"replicas"' in s)

    def test_bad_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "n": 10,\n  "model": {\n}')
        assert main(["analytic", "--config", str(path)]) == 2
        assert "line" in capsys.readouterr().err

    @pytest.mark.parametrize("sweep", [
        {"parameter": "beta", "lo": 1, "hi": 2, "steps": 2},
        {"parameter": "lambda", "lo": 1, "hi": float("inf"), "steps": 2},
        {"parameter": "lambda", "lo": 2, "hi": 1, "steps": 2},
    ])
    def test_bad_sweep(self, sweep):
        with pytest.raises(ConfigError):
            parse_config(json.dumps(cfg_dict(sweep=sweep)))

    def test_unknown_figure(self, capsys):
        assert main(["figure", "nonsense"]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 2

    def test_global_overrides(self, tmp_path):
        out = tmp_path / "o.csv"
        path = write_cfg(tmp_path, cfg_dict())
        assert main(["simulate", "--config", path, "--n", "40", "--replicas", "3", "--seed", "9", "--out", str(out)]) == 0
        row = out.read_text().splitlines()[1].split(",")
        assert row[1] == "40" and row[2] == "3"
        assert json.loads(out.with_suffix(".meta.json").read_text())["rng_seed"] == 9


class TestCompare:
    def _sweep_csv(self, tmp_path, n, replicas, name):
        d = cfg_dict(n=n, replicas=replicas, sweep={"parameter": "lambda", "lo": 2.0, "hi": 6.0, "steps": 5})
        out = tmp_path / name
        assert main(["pivotal", "--config", write_cfg(tmp_path, d, name + ".json"), "--out", str(out)]) == 0
        return out

    def _analytic_csv(self, tmp_path, tolerance=None):
        rows = ["lambda,analytic_fraction" + (",tolerance" if tolerance is not None else "")]
        for lam in np.linspace(2.0, 6.0, 5):
            s = pivotal_and_cascade_fractions(DegreeDistribution.poisson(lam), 0.15).s_fraction
            rows.append(f"{fmt(lam)},{fmt(s)}" + (f",{tolerance}" if tolerance is not None else ""))
        path = tmp_path / "analytic.csv"
        path.write_text("\n".join(rows) + "\n")
        return path

    def test_identical_files(self, tmp_path):
        a = self._analytic_csv(tmp_path)
        rep = compare(a, a)
        assert rep.max_deviation == 0.0 and rep.passed

    def test_grid_mismatch_lists_points(self, tmp_path):
        a = self._analytic_csv(tmp_path)
        b = tmp_path / "b.csv"
        b.write_text("lambda,analytic_fraction\n2,0.5\n9.5,0.1\n")
        with pytest.raises(GridMismatch) as e:
            compare(a, b)
        assert 9.5 in e.value.extra and 3.0 in e.value.missing

    def test_tolerance_column(self, tmp_path):
        a = self._analytic_csv(tmp_path, tolerance=1e-9)
        b = tmp_path / "b.csv"
        b.write_text(a.read_text().replace("lambda,analytic_fraction,tolerance", "lambda,analytic_fraction,x"))
        lines = b.read_text().splitlines()
        lam, val, _ = lines[1].split(",")
        lines[1] = f"{lam},{float(val) + 1e-6},0"
        b.write_text("\n".join(lines) + "\n")
        assert not compare(a, b).passed
        assert compare(a, b, tolerance=1.0).passed is False  # column wins over the default

    def test_finite_size_deviation_shrinks(self, tmp_path):
        a = self._analytic_csv(tmp_path)
        small = self._sweep_csv(tmp_path, 1_000, 30, "small.csv")
        large = self._sweep_csv(tmp_path, 100_000, 30, "large.csv")
        d_small = compare(a, small, simulated_column="mean_fraction").max_deviation
        d_large = compare(a, large, simulated_column="mean_fraction").max_deviation
        assert d_large < d_small

    def test_cli_exit_codes(self, tmp_path, capsys):
        a = self._analytic_csv(tmp_path)
        assert main(["compare", str(a), str(a)]) == 0
        b = tmp_path / "b.csv"
        b.write_text("lambda,analytic_fraction\n2,0.5\n")
        assert main(["compare", str(a), str(b)]) == 2


class TestFigures:
    def test_cascade_window_gamma_below_s(self):
        header, rows = figure("cascade_window", q=0.15, lo=0.5, hi=9.0, steps=60)
        g, s = header.index("gamma"), header.index("s")
        assert all(r[g] <= r[s] + 1e-12 for r in rows)
        assert any(r[s] > 0 for r in rows) and any(r[s] == 0 for r in rows)

    def test_qc_curve_powerlaw(self):
        header, rows = figure("qc_curve", family="powerlaw", steps=5)
        assert header[:2] == ["gamma", "lambda"]

    def test_alpha_c_two_regimes(self):
        header, rows = figure("alpha_c", q=0.3, lo=1.7, hi=4.0, steps=12)
        a = np.array([r[header.index("alpha_c")] for r in rows], dtype=float)
        assert np.all(np.isfinite(a)) and np.all(a > 0)
        i = int(np.argmin(a))
        assert 0 < i < a.size - 1


class TestCli:
    def test_all_subcommands(self, tmp_path):
        path = write_cfg(tmp_path, cfg_dict(n=200, replicas=2))
        small = write_cfg(tmp_path, {
            "model": {"degree": {"kind": "poisson", "lambda": 3.0},
                      "threshold": {"kind": "proportional", "q": 0.3}},
            "n": 200, "replicas": 2,
        }, "q3.json")
        cases = [
            ["analytic", "--config", path],
            ["simulate", "--config", path],
            ["sweep", "--config", path, "--param", "q", "--lo", "0.1", "--hi", "0.2", "--steps", "2"],
            ["pivotal", "--config", path],
            ["seedsize", "--config", small],
            ["coexist", "--config", path],
            ["figure", "qc_curve", "--steps", "3"],
        ]
        for i, argv in enumerate(cases):
            out = tmp_path / f"c{i}.csv"
            assert main(argv + ["--out", str(out)]) == 0, argv
            lines = out.read_text().splitlines()
            assert len(lines) >= 2 and "," in lines[0]
        assert main(["compare", str(tmp_path / "c6.csv"), str(tmp_path / "c6.csv"), "--key", "lambda",
                     "--analytic-column", "qc"]) == 0

    def test_sweep_needs_all_flags(self, tmp_path):
        assert main(["sweep", "--config", write_cfg(tmp_path, cfg_dict()), "--param", "q"]) == 2

    def test_seedsize_simulate(self, tmp_path, capsys):
        path = write_cfg(tmp_path, {
            "model": {"degree": {"kind": "poisson", "lambda": 3.0},
                      "threshold": {"kind": "proportional", "q": 0.3}},
            "n": 2000, "replicas": 2,
        })
        assert main(["seedsize", "--config", path, "--simulate"]) == 0
        header, row = capsys.readouterr().out.splitlines()[:2]
        assert "sim_above" in header.split(",")

    def test_module_entry_point(self):
        r = subprocess.run([sys.executable, "-m", "cascadelab", "figure", "qc_curve", "--steps", "2"],
                           capture_output=True, text=True, check=True)
        assert r.stdout.startswith("lambda,qc\n")


@pytest.mark.slow
def test_pivotal_pair_mean_matches_analytic():
    cfg = parse_config(json.dumps(cfg_dict(n=100_000, replicas=50, rng_seed=5)))
    s = run(cfg).summaries[0]
    expected = pivotal_and_cascade_fractions(DegreeDistribution.poisson(5.0), 0.15).s_fraction
    assert s.analytic["analytic_fraction"] == pytest.approx(expected)
    assert abs(s.mean - expected) <= 0.01


def test_compare_undefined_points(tmp_path):
    a = tmp_path / "a.csv"
    a.write_text("lambda,qc\n1,nan\n2,0.25\n")
    b = tmp_path / "b.csv"
    b.write_text("lambda,qc\n1,0.5\n2,0.25\n")
    assert compare(a, a, analytic_column="qc").max_deviation == 0.0
    rep = compare(a, b, analytic_column="qc")
    assert np.isnan(rep.max_deviation) and not rep.passed
