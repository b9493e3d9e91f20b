"""In-process tests of the command-line front end and its exit codes."""

import numpy as np
import pytest

from packdiag.cli import main
from packdiag.fusion import DetectorParams
from packdiag.io import (
    read_dataset,
    read_params,
    write_dataset,
    write_params,
    write_scenario,
)
from packdiag.pack import FaultSpec, SimConfig, simulate
from packdiag.pipeline import Telemetry


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    """Shared directory with a normal dataset, a fault dataset, and params."""
    root = tmp_path_factory.mktemp("cli")
    normal = Telemetry.from_frames(simulate(SimConfig(duration=260.0,
                                                      rng_seed=9)))
    write_dataset(root / "normal.csv", normal)
    fault_cfg = SimConfig(duration=260.0, rng_seed=10,
                          fault=FaultSpec(fault_cell=11, r_short=10.0,
                                          onset=150.0))
    write_dataset(root / "fault.csv", Telemetry.from_frames(simulate(fault_cfg)))
    write_params(root / "short.params", DetectorParams(train_len=60))
    write_params(root / "mid.params", DetectorParams(train_len=120))
    return root


class TestSimulateCommand:
    def test_writes_dataset_and_reports_split(self, tmp_path, capsys):
        cfg_path = tmp_path / "run.scenario"
        write_scenario(cfg_path, SimConfig(duration=40.0, rng_seed=3,
                                           fault=FaultSpec(fault_cell=7,
                                                           r_short=10.0,
                                                           onset=25.0)))
        out = tmp_path / "run.csv"
        assert main(["simulate", str(cfg_path), "--out", str(out)]) == 0
        tele = read_dataset(out)
        assert tele.n_frames == 40
        assert int((tele.labels == 1).sum()) == 15
        printed = capsys.readouterr().out
        assert "40 frames: 25 normal, 15 abnormal" in printed

    def test_same_seed_is_byte_identical(self, tmp_path):
        cfg_path = tmp_path / "run.scenario"
        write_scenario(cfg_path, SimConfig(duration=30.0, rng_seed=3))
        a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
        assert main(["simulate", str(cfg_path), "--out", str(a)]) == 0
        assert main(["simulate", str(cfg_path), "--out", str(b)]) == 0
        assert main(["simulate", str(cfg_path), "--out", str(c),
                     "--seed", "4"]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.read_bytes() != c.read_bytes()

    def test_seed_flag_overrides_config_seed(self, tmp_path):
        cfg_a, cfg_b = tmp_path / "a.scenario", tmp_path / "b.scenario"
        write_scenario(cfg_a, SimConfig(duration=30.0, rng_seed=3))
        write_scenario(cfg_b, SimConfig(duration=30.0, rng_seed=99))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["simulate", str(cfg_a), "--out", str(a),
                     "--seed", "42"]) == 0
        assert main(["simulate", str(cfg_b), "--out", str(b),
                     "--seed", "42"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_zero_duration_is_config_error(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.scenario"
        cfg_path.write_text("duration = 0.0\n")
        assert main(["simulate", str(cfg_path),
                     "--out", str(tmp_path / "x.csv")]) == 2
        assert capsys.readouterr().err != ""

    def test_unknown_config_key_named(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.scenario"
        cfg_path.write_text("duration = 40.0\nwhoosh = 1\n")
        assert main(["simulate", str(cfg_path),
                     "--out", str(tmp_path / "x.csv")]) == 2
        assert "whoosh" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert main(["simulate", str(tmp_path / "absent.scenario"),
                     "--out", str(tmp_path / "x.csv")]) == 2


class TestFitCommand:
    def test_defaults_without_optimization(self, work, tmp_path):
        out = tmp_path / "fit.params"
        assert main(["fit", "--normal", str(work / "normal.csv"),
                     "--train-len", "60", "--out", str(out)]) == 0
        params = read_params(out)
        assert params.window == 27
        assert params.alpha == (0.216, 0.573, 0.211)
        assert params.beta == 0.99
        assert params.calibrated
        assert params.h_r is not None and params.h_r > 0

    def test_beta_passthrough(self, work, tmp_path):
        out = tmp_path / "fit.params"
        assert main(["fit", "--normal", str(work / "normal.csv"),
                     "--train-len", "60", "--beta", "0.95",
                     "--out", str(out)]) == 0
        assert read_params(out).beta == 0.95

    def test_optimize_without_fault_data_is_config_error(self, work, tmp_path,
                                                         capsys):
        ret = main(["fit", "--normal", str(work / "normal.csv"),
                    "--train-len", "60", "--optimize",
                    "--out", str(tmp_path / "x.params")])
        assert ret == 2
        assert "fault" in capsys.readouterr().err

    def test_optimize_is_deterministic_per_seed(self, work, tmp_path):
        args = ["fit", "--normal", str(work / "normal.csv"),
                "--fault", str(work / "fault.csv"),
                "--train-len", "60", "--optimize", "--seed", "7",
                "--population", "6", "--generations", "2"]
        a, b = tmp_path / "a.params", tmp_path / "b.params"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        fitted = read_params(a)
        assert fitted.calibrated
        assert abs(sum(fitted.alpha) - 1.0) <= 1e-9


class TestDetectCommand:
    def test_trace_layout_and_warmup_rows(self, work, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        assert main(["detect", str(work / "normal.csv"),
                     "--params", str(work / "short.params"),
                     "--out", str(trace)]) == 0
        lines = trace.read_text().splitlines()
        assert lines[0] == "t,h_d,h_s,h_t,H,H_r,alarm"
        assert len(lines) == 261
        first = lines[1].split(",")
        assert first[1:5] == ["", "", "", ""]       # warm-up: empty entropies
        assert first[6] == "0"                      # warm-up: no alarm
        filled = lines[27].split(",")               # first full-window row
        assert all(field != "" for field in filled)
        assert len({row.split(",")[5] for row in lines[1:]}) == 1  # constant H_r
        assert "t_f=" in capsys.readouterr().out

    def test_normal_alarm_rate_low(self, work, tmp_path):
        trace = tmp_path / "trace.csv"
        assert main(["detect", str(work / "normal.csv"),
                     "--params", str(work / "mid.params"),
                     "--out", str(trace)]) == 0
        rows = [line.split(",") for line in trace.read_text().splitlines()[1:]]
        usable = [r for r in rows if r[1] != ""]
        alarms = sum(int(r[6]) for r in usable)
        assert alarms / len(usable) <= 0.02

    def test_fault_trace_detects_after_onset(self, work, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        assert main(["detect", str(work / "fault.csv"),
                     "--params", str(work / "short.params"),
                     "--out", str(trace)]) == 0
        printed = capsys.readouterr().out
        t_f = [tok for tok in printed.split() if tok.startswith("t_f=")][0]
        rows = [line.split(",") for line in trace.read_text().splitlines()[1:]]
        post = [r for r in rows if r[1] != "" and float(r[0]) > 150.0
                and r[6] == "1"]
        assert post, "no alarm after the fault onset"
        assert float(post[0][0]) > 150.0
        assert t_f != "t_f=none"

    def test_no_refit_uses_stored_calibration(self, work, tmp_path):
        fitted = tmp_path / "fitted.params"
        assert main(["fit", "--normal", str(work / "normal.csv"),
                     "--train-len", "60", "--out", str(fitted)]) == 0
        stored = read_params(fitted)
        trace = tmp_path / "trace.csv"
        assert main(["detect", str(work / "normal.csv"),
                     "--params", str(fitted), "--out", str(trace),
                     "--no-refit"]) == 0
        h_r_field = trace.read_text().splitlines()[1].split(",")[5]
        assert float(h_r_field) == pytest.approx(stored.h_r, abs=1e-9)

    def test_no_refit_requires_calibrated_params(self, work, tmp_path):
        ret = main(["detect", str(work / "normal.csv"),
                    "--params", str(work / "short.params"),
                    "--out", str(tmp_path / "t.csv"), "--no-refit"])
        assert ret == 2

    def test_malformed_row_names_line_and_exits_4(self, work, tmp_path,
                                                  capsys):
        broken = tmp_path / "broken.csv"
        lines = (work / "normal.csv").read_text().splitlines()
        lines[4] = lines[4] + ",0.5"
        broken.write_text("\n".join(lines) + "\n")
        ret = main(["detect", str(broken),
                    "--params", str(work / "short.params"),
                    "--out", str(tmp_path / "t.csv")])
        assert ret == 4
        assert "line 5" in capsys.readouterr().err


class TestLocalizeCommand:
    def test_prints_serial_and_writes_contributions(self, work, tmp_path,
                                                    capsys):
        contrib = tmp_path / "contrib.csv"
        assert main(["localize", str(work / "fault.csv"),
                     "--params", str(work / "short.params"),
                     "--tf", "180", "--out", str(contrib)]) == 0
        printed = capsys.readouterr().out
        assert printed.splitlines()[0] == "#11"
        lines = contrib.read_text().splitlines()
        assert lines[0] == "cell,serial,x,y,C"
        assert len(lines) == 25
        values = [float(line.split(",")[4]) for line in lines[1:]]
        assert int(np.argmax(values)) + 1 == 11

    def test_early_alarm_instant_is_config_error(self, work, tmp_path):
        ret = main(["localize", str(work / "fault.csv"),
                    "--params", str(work / "short.params"),
                    "--tf", "5", "--out", str(tmp_path / "c.csv")])
        assert ret == 2

    def test_off_grid_instant_is_config_error(self, work, tmp_path):
        ret = main(["localize", str(work / "fault.csv"),
                    "--params", str(work / "short.params"),
                    "--tf", "180.25", "--out", str(tmp_path / "c.csv")])
        assert ret == 2

    def test_repeat_runs_identical(self, work, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert main(["localize", str(work / "fault.csv"),
                         "--params", str(work / "short.params"),
                         "--tf", "180", "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("scen")
    for idx, cell in ((1, 11), (2, 4)):
        write_scenario(root / f"sc{idx:02d}.scenario",
                       SimConfig(duration=160.0, rng_seed=30 + idx,
                                 fault=FaultSpec(fault_cell=cell,
                                                 r_short=10.0,
                                                 onset=90.0)))
    return root


class TestBenchmarkCommand:
    def test_report_shape_and_exit_code(self, work, scenario_dir, tmp_path,
                                        capsys):
        report = tmp_path / "report.csv"
        ret = main(["benchmark", str(scenario_dir),
                    "--params", str(work / "short.params"),
                    "--out", str(report)])
        assert ret in (0, 5)
        lines = report.read_text().splitlines()
        header = "scenario,add_s,adr_pct,far_pct,estimated_cell,true_cell,match,status"
        assert lines[0] == header
        rows = [line for line in lines[1:] if line and not line.startswith("#")]
        assert len(rows) == 2
        for row in rows:
            fields = row.split(",")
            assert len(fields) == 8
            assert fields[5] in ("11", "4")
            assert fields[6] in ("yes", "no")
            assert fields[7] in ("ok", "FAILED")
            if fields[6] == "yes":
                assert fields[4] == fields[5]
        # two tiny scenarios cannot clear the nine-scenario thresholds
        assert ret == 5
        assert "target" in capsys.readouterr().out

    def test_deterministic_report(self, work, scenario_dir, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            main(["benchmark", str(scenario_dir),
                  "--params", str(work / "short.params"),
                  "--out", str(out)])
        assert a.read_bytes() == b.read_bytes()

    def test_missing_directory_is_config_error(self, work, tmp_path):
        ret = main(["benchmark", str(tmp_path / "nowhere"),
                    "--params", str(work / "short.params"),
                    "--out", str(tmp_path / "r.csv")])
        assert ret == 2
