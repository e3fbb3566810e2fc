import json
from dataclasses import replace

import pytest

import tilapia_mpc.experiment as exp
from tilapia_mpc.cli import main
from tilapia_mpc.costs import CostSettings
from tilapia_mpc.errors import ConfigError, SolverError
from tilapia_mpc.experiment import (COLUMNS, TRAJECTORY_COLUMNS, horizon_sweep, load_config,
                                    noise_comparison, read_csv_rows, read_report_csv,
                                    run_experiment, write_report_csv)
from tilapia_mpc.growth import GrowthParams

SHORT = {"duration": 3, "timing": False}


def short(**kw):
    return load_config(env={}, overrides={**SHORT, **kw})


class TestConfig:
    def test_defaults_reproduce_parameter_tables(self):
        cfg = load_config(env={})
        g = cfg.growth
        assert (g.m_exp, g.n_exp, g.b_assim, g.a_frac, g.h_coef) == (0.67, 0.81, 0.62, 0.53, 0.8)
        assert (g.k_min, g.j_coef, g.kappa) == (0.00133, 0.0132, 4.6)
        assert (g.T_min, g.T_opt, g.T_max) == (24.0, 33.0, 40.0)
        assert (g.UIA_crit, g.UIA_max, g.DO_min, g.DO_crit) == (0.06, 1.4, 0.3, 1.0)
        assert g.R_frac == 0.1 and g == GrowthParams()
        e = cfg.costs.economic
        assert (cfg.costs.tracking.lam, e.alpha, e.P_s, e.P_f) == (0.1, 100.0, 1.2, 0.4)
        assert (e.beta1, e.beta2, e.P_e, e.c_p, e.L, e.m_w, e.P_max) == (
            0.1, 0.1, 0.14, 4.2, 454.0, 1.0, 0.102)
        assert cfg.costs == CostSettings()
        assert (cfg.horizon.N, cfg.horizon.N_o, cfg.horizon.epsilon) == (3, 3, 1.0)
        assert (cfg.farm.n_fish, cfg.farm.w0, cfg.duration) == (1000, 20.0, 90.0)

    def test_unknown_section(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"optimiser": {}}))
        with pytest.raises(ConfigError):
            load_config(path, env={})

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            load_config(env={}, overrides={"growth": {"zeta": 1.0}})

    def test_file_then_env_then_overrides(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"duration": 10, "farm": {"n_fish": 10}}))
        env = {"TILAPIA_MPC__FARM__N_FISH": "20", "TILAPIA_MPC__COSTS__P_F": "0.5",
               "OTHER": "x"}
        cfg = load_config(path, env=env, overrides={"duration": 5})
        assert (cfg.duration, cfg.farm.n_fish, cfg.costs.economic.P_f) == (5.0, 20, 0.5)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{")
        with pytest.raises(ConfigError):
            load_config(path, env={})

    @pytest.mark.parametrize("over", [{"controllers": ["mpc9"]}, {"duration": 2.5},
                                      {"workers": 0}, {"horizon": {"N": 0}},
                                      {"bounds": {"lower": [0, 30, 0.3], "upper": [1, 25, 8]}}])
    def test_invalid_values(self, over):
        with pytest.raises(ConfigError):
            load_config(env={}, overrides=over)

    def test_with_horizon(self):
        cfg = load_config(env={}).with_horizon(5)
        assert cfg.horizon.N == cfg.horizon.N_o == cfg.costs.terminal.N_o == 5


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    reports = run_experiment(short(), out)
    return out, reports


class TestRunExperiment:
    def test_files(self, run_dir):
        out, reports = run_dir
        names = sorted(p.name for p in out.iterdir())
        assert names == ["comparison.csv", "report.json", "trajectory_mpc1.csv",
                         "trajectory_mpc2.csv", "trajectory_mpc3.csv"]
        assert [r.controller for r in reports] == ["mpc1", "mpc2", "mpc3"]

    def test_comparison_schema_and_roundtrip(self, run_dir):
        out, reports = run_dir
        header = (out / "comparison.csv").read_text().splitlines()[0]
        assert header.split(",") == COLUMNS
        assert read_report_csv(out / "comparison.csv") == reports

    def test_trajectory(self, run_dir):
        rows = read_csv_rows(run_dir[0] / "trajectory_mpc1.csv")
        assert list(rows[0]) == TRAJECTORY_COLUMNS
        assert len(rows) == 4 and rows[-1]["f"] is None
        assert rows[0]["w_g"] == rows[0]["w_ref_g"] == 20.0

    def test_report_json(self, run_dir):
        data = json.loads((run_dir[0] / "report.json").read_text())
        assert data["config"]["duration"] == 3.0 and len(data["runs"]) == 3

    def test_byte_identical_repeat(self, run_dir, tmp_path):
        run_experiment(short(), tmp_path)
        for p in run_dir[0].iterdir():
            assert (tmp_path / p.name).read_bytes() == p.read_bytes(), p.name

    def test_no_partial_output_on_failure(self, tmp_path, monkeypatch):
        real = exp.run_closed_loop

        def failing(w0, duration, controller, *args):
            if controller.name == "mpc3":
                raise SolverError("forced", step=1)
            return real(w0, duration, controller, *args)
        monkeypatch.setattr(exp, "run_closed_loop", failing)
        with pytest.raises(SolverError, match="step 1"):
            run_experiment(short(), tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_csv_none_roundtrip(self, run_dir, tmp_path):
        rep = run_dir[1][0]
        rep = replace(rep, fcr=None, noise_db=None)
        write_report_csv(tmp_path / "r.csv", [rep])
        assert read_report_csv(tmp_path / "r.csv") == [rep]


class TestSweepAndNoise:
    def test_sweep_rows(self, tmp_path):
        rows = horizon_sweep(short(duration=2), [1], 1, tmp_path)
        assert [(r["controller"], r["N"]) for r in rows] == [("mpc1", 1), ("mpc2", 1),
                                                            ("mpc3", 1)]
        assert len(read_csv_rows(tmp_path / "sweep.csv")) == 3

    def test_sweep_rejects_bad_horizon(self, tmp_path):
        with pytest.raises(ConfigError):
            horizon_sweep(short(), [0], 1, tmp_path)

    def test_noise_rows(self, tmp_path):
        rows, deltas = noise_comparison(short(duration=2), 50.0, [4], tmp_path)
        assert len(rows) == 6 and len(deltas) == 3
        assert [r["noise_db"] for r in rows] == [None, 50.0] * 3
        csv_rows = read_csv_rows(tmp_path / "noise.csv")
        assert [r["seed"] for r in csv_rows] == [4] * 6
        assert (tmp_path / "noise_deltas.csv").exists()


class TestCli:
    def test_run(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("TILAPIA_MPC__DURATION", raising=False)
        code = main(["run", "--out", str(tmp_path), "--duration", "2", "--controllers", "mpc2"])
        assert code == 0
        assert (tmp_path / "comparison.csv").exists()
        assert "mpc2" in capsys.readouterr().out

    def test_config_error(self, tmp_path):
        assert main(["run", "--out", str(tmp_path), "--controllers", "mpc9"]) == 2

    def test_bad_arguments(self):
        assert main(["fly"]) == 2

    def test_solver_error(self, tmp_path, monkeypatch):
        import tilapia_mpc.cli as cli

        def boom(cfg):
            raise SolverError("forced", step=0)
        monkeypatch.setattr(cli, "run_experiment", boom)
        assert main(["run", "--out", str(tmp_path)]) == 3

    def test_io_error(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code = main(["run", "--out", str(blocker / "sub"), "--duration", "1",
                     "--controllers", "mpc2"])
        assert code == 4
