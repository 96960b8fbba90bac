import json
from pathlib import Path

import numpy as np

from irsopt.cli import apply_axis, load_sweep_spec, main
from irsopt.config import load_config

from conftest import CONFIG_DIR

DESK = str(CONFIG_DIR / "desk.cfg")


def _run(*argv):
    return main(list(argv))


def _optimize(tmp_path, *extra, design="er", seed="7", iters="30"):
    out = tmp_path / "run"
    code = _run("optimize", "--cfg", DESK, "--design", design, "--seed", seed,
                "--iters", iters, "--samples-per-iter", "4",
                "--out", str(out), *extra)
    assert code == 0
    return out


class TestOptimize:
    def test_writes_design_trace_and_figure(self, tmp_path):
        out = _optimize(tmp_path)
        assert (out / "design.json").exists()
        assert (out / "trace.csv").exists()
        assert (out / "trace.png").exists()
        d = json.loads((out / "design.json").read_text())
        assert d["kind"] == "er"
        assert d["meta"]["seed"] == 7
        assert d["meta"]["config_digest"] == load_config(DESK).digest()
        header = (out / "trace.csv").read_text().splitlines()[0]
        assert header == "t,c0,c1_norm,step_size,movement"

    def test_no_figures_flag(self, tmp_path):
        out = tmp_path / "nofig"
        code = _run("optimize", "--cfg", DESK, "--design", "er", "--iters", "5",
                    "--out", str(out), "--no-figures")
        assert code == 0
        assert not (out / "trace.png").exists()

    def test_deterministic_rerun(self, tmp_path):
        a = _optimize(tmp_path / "a")
        b = _optimize(tmp_path / "b")
        assert (a / "design.json").read_bytes() == (b / "design.json").read_bytes()
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()

    def test_gp2_matches_er_on_errorless_config(self, tmp_path):
        src = Path(DESK).read_text()
        zero = tmp_path / "zero.cfg"
        zero.write_text(src.replace("err_std_cascaded = 0.05", "err_std_cascaded = 0.0")
                        .replace("err_std_direct = 0.05", "err_std_direct = 0.0"))
        outs = {}
        for tag in ("er", "gp2"):
            out = tmp_path / tag
            assert _run("optimize", "--cfg", str(zero), "--design", tag,
                        "--seed", "3", "--iters", "40", "--out", str(out),
                        "--no-figures") == 0
            d = json.loads((out / "design.json").read_text())
            flat = np.asarray(d["v_re_im"])
            outs[tag] = flat[0::2] + 1j * flat[1::2]
        assert np.max(np.abs(outs["er"] - outs["gp2"])) < 1e-6

    def test_missing_config_exits_2(self, tmp_path, capsys):
        assert _run("optimize", "--cfg", str(tmp_path / "nope.cfg"),
                    "--design", "er", "--out", str(tmp_path)) == 2

    def test_baseline_designs(self, tmp_path):
        for tag in ("b1", "b4"):
            out = _optimize(tmp_path / tag, design=tag, iters="10")
            d = json.loads((out / "design.json").read_text())
            assert d["kind"] == tag
            assert d["rate_kind"] == "gp1"


class TestEvaluate:
    def test_report_and_csv(self, tmp_path):
        out = _optimize(tmp_path, design="gp1")
        rep_dir = tmp_path / "rep"
        code = _run("evaluate", str(out / "design.json"), "--cfg", DESK,
                    "--slots", "300", "--seed", "11", "--out", str(rep_dir))
        assert code == 0
        rep = json.loads((rep_dir / "report.json").read_text())
        assert rep["scenario"] == "both"
        assert rep["seed"] == 11
        assert rep["num_slots"] == 300
        assert (rep_dir / "reports.csv").exists()

    def test_same_seed_identical_reports(self, tmp_path):
        out = _optimize(tmp_path, design="er")
        reps = []
        for sub in ("r1", "r2"):
            rep_dir = tmp_path / sub
            assert _run("evaluate", str(out / "design.json"), "--cfg", DESK,
                        "--slots", "200", "--seed", "5", "--out", str(rep_dir)) == 0
            reps.append((rep_dir / "report.json").read_bytes())
        assert reps[0] == reps[1]

    def test_zero_slots_exits_2(self, tmp_path):
        out = _optimize(tmp_path)
        assert _run("evaluate", str(out / "design.json"), "--cfg", DESK,
                    "--slots", "0", "--out", str(tmp_path)) == 2

    def test_dimension_mismatch_exits_3(self, tmp_path):
        out = _optimize(tmp_path)
        smaller = tmp_path / "small.cfg"
        smaller.write_text(Path(DESK).read_text()
                           .replace("[irs]\nrows = 4\ncols = 4", "[irs]\nrows = 2\ncols = 2"))
        assert _run("evaluate", str(out / "design.json"), "--cfg", str(smaller),
                    "--slots", "100", "--out", str(tmp_path)) == 3

    def test_malformed_design_file_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert _run("evaluate", str(bad), "--cfg", DESK, "--slots", "100",
                    "--out", str(tmp_path)) == 2

    def test_goodput_of_rateless_design_exits_2(self, tmp_path):
        out = _optimize(tmp_path, design="er")
        assert _run("evaluate", str(out / "design.json"), "--cfg", DESK,
                    "--slots", "100", "--scenario", "goodput",
                    "--out", str(tmp_path)) == 2


class TestSweep:
    def _spec(self, tmp_path, **overrides):
        spec = {
            "cfg": DESK, "scenario": "ergodic", "axis": "irs_size",
            "values": [2], "designs": ["b1"], "slots": 60, "iters": 5,
            "samples_per_iter": 2, "seed": 1,
        }
        spec.update(overrides)
        p = tmp_path / "spec.json"
        p.write_text(json.dumps(spec))
        return p

    def test_singleton_sweep(self, tmp_path):
        p = self._spec(tmp_path)
        out = tmp_path / "out"
        assert _run("sweep", "--spec", str(p), "--out", str(out)) == 0
        csv = (out / "ergodic_irs_size.csv").read_text().splitlines()
        assert csv[0] == "axis_value,b1,b1_se"
        assert len(csv) == 2
        assert (out / "ergodic_irs_size.png").exists()
        man = json.loads((out / "ergodic_irs_size_manifest.json").read_text())
        assert man["cells"][0]["status"] == "ok"

    def test_cell_rerun_reproduces(self, tmp_path):
        from irsopt.cli import _run_cell
        p = self._spec(tmp_path, designs=["b2"], values=[3], iters=8)
        spec = load_sweep_spec(str(p))
        out = tmp_path / "out"
        assert _run("sweep", "--spec", str(p), "--out", str(out)) == 0
        man = json.loads((out / "ergodic_irs_size_manifest.json").read_text())
        cell = man["cells"][0]
        redo = _run_cell({"cfg_path": DESK, "spec": spec, "value": 3,
                          "design": "b2", "opt_seed": cell["opt_seed"],
                          "eval_seed": cell["eval_seed"]})
        assert redo["value"] == cell["value"]
        assert redo["se"] == cell["se"]

    def test_goodput_scenario_and_parallel(self, tmp_path):
        p = self._spec(tmp_path, scenario="goodput", designs=["gp1", "b1"],
                       values=[2, 3], slots=50)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert _run("sweep", "--spec", str(p), "--out", str(out1)) == 0
        assert _run("sweep", "--spec", str(p), "--out", str(out2), "--jobs", "3") == 0
        assert (out1 / "goodput_irs_size.csv").read_bytes() == \
            (out2 / "goodput_irs_size.csv").read_bytes()

    def test_failed_cell_recorded_but_sweep_continues(self, tmp_path):
        # er design has no rate rule: its goodput cells fail, b1's succeed
        p = self._spec(tmp_path, scenario="goodput", designs=["er", "b1"])
        out = tmp_path / "out"
        assert _run("sweep", "--spec", str(p), "--out", str(out)) == 0
        man = json.loads((out / "goodput_irs_size_manifest.json").read_text())
        statuses = {c["design"]: c["status"] for c in man["cells"]}
        assert statuses["b1"] == "ok"
        assert statuses["er"].startswith("error")
        rows = (out / "goodput_irs_size.csv").read_text().splitlines()[1]
        assert rows.split(",")[1] == ""  # empty cell for the failed design

    def test_spec_validation(self, tmp_path):
        p = self._spec(tmp_path, axis="bogus")
        assert _run("sweep", "--spec", str(p), "--out", str(tmp_path)) == 2
        p = self._spec(tmp_path, values=[])
        assert _run("sweep", "--spec", str(p), "--out", str(tmp_path)) == 2
        p = self._spec(tmp_path, designs=["zz"])
        assert _run("sweep", "--spec", str(p), "--out", str(tmp_path)) == 2

    def test_shipped_spec_loads(self):
        spec = load_sweep_spec(str(CONFIG_DIR / "sweep_irs_size.json"))
        assert spec["axis"] == "irs_size"


class TestApplyAxis:
    def test_each_axis(self):
        cfg = load_config(DESK)
        assert apply_axis(cfg, "irs_size", 6, {}).irs_array.size == 36
        c = apply_axis(cfg, "rician", 5.0, {})
        assert c.rician_bs_irs[0] == 5.0 and c.rician_irs_user == 5.0
        assert c.rician_bs_irs[1] == cfg.rician_bs_irs[1]
        c = apply_axis(cfg, "err_std", 0.2, {})
        assert c.err_std_cascaded == 0.2 and c.err_std_direct == 0.2
        c = apply_axis(cfg, "dist_user", 400.0, {})
        assert c.alpha_direct[0] < cfg.alpha_direct[0] or True  # recomputed
        assert c.alpha_bs_irs == cfg.alpha_bs_irs
        c2 = apply_axis(cfg, "dist_irs", 250.0, {})
        assert c2.alpha_direct == cfg.alpha_direct

    def test_dist_user_monotone_gain(self):
        cfg = load_config(DESK)
        near = apply_axis(cfg, "dist_user", 350.0, {})
        far = apply_axis(cfg, "dist_user", 500.0, {})
        assert far.alpha_direct[0] < near.alpha_direct[0]
