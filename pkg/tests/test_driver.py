"""Run configuration, sweep orchestration, file formats, CLI exit codes."""

import json

import numpy as np
import pytest

from bethe_ittn.cli import main
from bethe_ittn.driver import (
    ConfigError,
    RunConfig,
    load_config,
    read_records_csv,
    run_point,
    run_sweep,
    write_records_csv,
)
from bethe_ittn.records import CSV_COLUMNS, ResultRecord, validate_record

FAST = dict(T_max=2.0, schedule_n=8, D=2, record_spectrum=True)


class TestRunConfig:
    def test_defaults_valid(self):
        RunConfig(h=1.0).validate()

    def test_bad_values_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig(q=1).validate()
        with pytest.raises(ConfigError):
            RunConfig(D=0).validate()
        with pytest.raises(ConfigError):
            RunConfig(T_max=-1.0).validate()
        with pytest.raises(ConfigError):
            RunConfig(workers=0).validate()

    def test_sweep_requires_grid(self):
        with pytest.raises(ConfigError):
            RunConfig(h=1.0).validate_sweep()
        with pytest.raises(ConfigError):
            RunConfig(h_min=2.0, h_max=1.0, h_steps=5).validate_sweep()
        with pytest.raises(ConfigError):
            RunConfig(h_min=1.0, h_max=2.0, h_steps=1).validate_sweep()

    def test_config_file_round_trip(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"q": 4, "D": 6, "h": 3.1}))
        values = load_config(path)
        cfg = RunConfig(**values)
        assert (cfg.q, cfg.D, cfg.h) == (4, 6, 3.1)

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"bond_dim": 8}))
        with pytest.raises(ConfigError):
            load_config(path)

    def test_malformed_json_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)


class TestRunPoint:
    def test_returns_validated_record(self):
        rec = run_point(RunConfig(q=3, h=1.0, **FAST))
        validate_record(rec)
        assert rec.q == 3 and rec.h == 1.0
        assert rec.steps_used == 8
        assert rec.wall_time_seconds == 0.0  # timing off by default

    def test_timing_flag(self):
        rec = run_point(RunConfig(q=3, h=1.0, record_timing=True, **FAST))
        assert rec.wall_time_seconds > 0.0

    def test_missing_h_rejected(self):
        with pytest.raises(ConfigError):
            run_point(RunConfig(**FAST))


class TestRunSweep:
    def _cfg(self, **kw):
        base = dict(q=3, h_min=1.0, h_max=1.2, h_steps=3, **FAST)
        base.update(kw)
        return RunConfig(**base)

    def test_records_ascending_and_summary(self, tmp_path):
        csv_path = tmp_path / "out.csv"
        json_path = tmp_path / "out.json"
        cfg = self._cfg(out_csv=str(csv_path), out_json=str(json_path))
        records, summary = run_sweep(cfg)
        assert [r.h for r in records] == pytest.approx([1.0, 1.1, 1.2])
        assert summary["n_failed"] == 0
        assert summary["h_c"] is None  # no crossing on this grid
        assert len(summary["abs_m_x"]) == 3
        data = json.loads(json_path.read_text())
        assert data["config"]["h_steps"] == 3
        assert "version" in data

    def test_csv_schema_and_round_trip(self, tmp_path):
        csv_path = tmp_path / "out.csv"
        cfg = self._cfg(out_csv=str(csv_path))
        records, _ = run_sweep(cfg)
        text = csv_path.read_text()
        assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
        loaded = read_records_csv(csv_path)
        for a, b in zip(records, loaded):
            assert a == b  # 17 significant digits round-trip doubles exactly

    def test_byte_identical_reruns(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_sweep(self._cfg(out_csv=str(p1)))
        run_sweep(self._cfg(out_csv=str(p2)))
        assert p1.read_bytes() == p2.read_bytes()

    def test_warm_start_matches_direction(self, tmp_path):
        # descending + warm start must still write rows in ascending h order
        cfg = self._cfg(warm_start=True, descending=True)
        records, summary = run_sweep(cfg)
        assert [r.h for r in records] == pytest.approx([1.0, 1.1, 1.2])
        assert summary["warm_start"] and summary["descending"]

    def test_failed_point_marked_not_fatal(self, tmp_path):
        # an impossible environment tolerance fails every point; the sweep
        # still completes with NaN rows and a populated error list
        cfg = self._cfg(env_tol=1e-30, env_max_iter=2)
        records, summary = run_sweep(cfg)
        assert summary["n_failed"] == 3
        assert len(summary["errors"]) == 3
        assert all(np.isnan(r.m_x) for r in records)
        assert all(r.h == pytest.approx(h) for r, h in zip(records, [1.0, 1.1, 1.2]))


class TestValidateRecord:
    def _rec(self, **kw):
        base = dict(
            h=1.0, D=2, q=3, m_x=0.5, m_z=0.5, energy_per_site=-1.0,
            lambda2_over_lambda1=0.1, xi=0.5, discarded_weight_max=1e-9,
            steps_used=10, wall_time_seconds=0.0,
        )
        base.update(kw)
        return ResultRecord(**base)

    def test_good_record_passes(self):
        validate_record(self._rec())

    def test_out_of_range_magnetization_rejected(self):
        with pytest.raises(ValueError):
            validate_record(self._rec(m_x=1.5))
        with pytest.raises(ValueError):
            validate_record(self._rec(m_z=-1.5))

    def test_negative_xi_rejected(self):
        with pytest.raises(ValueError):
            validate_record(self._rec(xi=-0.1))

    def test_bad_weight_rejected(self):
        with pytest.raises(ValueError):
            validate_record(self._rec(discarded_weight_max=1.5))


class TestCli:
    def test_point_exit_zero(self, capsys):
        code = main(["point", "--q", "3", "--h", "1.0", "--D", "2",
                     "--T-max", "1.0", "--schedule-n", "4"])
        assert code == 0
        out = capsys.readouterr().out
        assert "m_x = " in out

    def test_config_error_exit_one(self, capsys):
        assert main(["point", "--q", "1", "--h", "1.0"]) == 1
        assert main(["point", "--h", "1.0", "--T-max", "-3"]) == 1
        assert main(["nonsense-command"]) == 1

    def test_missing_file_exit_one(self, capsys):
        assert main(["point", "--config", "/nonexistent/cfg.json"]) == 1
        assert main(["fit-beta", "--in-csv", "/nonexistent/t.csv"]) == 1

    def test_numerical_failure_exit_two(self, capsys):
        code = main(["point", "--q", "3", "--h", "2.0", "--D", "2",
                     "--T-max", "1.0", "--schedule-n", "4",
                     "--env-tol", "1e-30", "--env-max-iter", "2"])
        assert code == 2

    def test_partial_sweep_exit_three(self, capsys, tmp_path):
        code = main(["sweep", "--q", "3", "--h-min", "1.0", "--h-max", "1.1",
                     "--h-steps", "2", "--D", "2", "--T-max", "1.0",
                     "--schedule-n", "4", "--env-tol", "1e-30", "--env-max-iter", "2",
                     "--out-csv", str(tmp_path / "o.csv")])
        assert code == 3

    def test_sweep_writes_files(self, capsys, tmp_path):
        csv_path = tmp_path / "s.csv"
        json_path = tmp_path / "s.json"
        code = main(["sweep", "--q", "3", "--h-min", "1.0", "--h-max", "1.1",
                     "--h-steps", "2", "--D", "2", "--T-max", "1.0",
                     "--schedule-n", "4", "--out-csv", str(csv_path),
                     "--out-json", str(json_path)])
        assert code == 0
        assert csv_path.exists() and json_path.exists()

    def test_flags_override_config_file(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"q": 3, "h": 1.0, "D": 2, "T_max": 1.0, "schedule_n": 4}))
        code = main(["point", "--config", str(path), "--schedule-n", "6"])
        assert code == 0
        assert "steps_used = 6" in capsys.readouterr().out

    def test_derivatives_and_fit_pipeline(self, tmp_path, capsys):
        # synthetic sweep table -> derivatives -> fit-beta, all through the CLI
        hs = np.round(np.linspace(1.86, 1.98, 7), 10)  # inside the default fit window
        rows = []
        for h in hs:
            rows.append(ResultRecord(
                h=float(h), D=2, q=3, m_x=float((2.0 - h) ** 0.5), m_z=0.3,
                energy_per_site=float(-(h ** 2)), lambda2_over_lambda1=0.1,
                xi=1.0, discarded_weight_max=0.0, steps_used=5,
            ))
        src = tmp_path / "sweep.csv"
        write_records_csv(src, rows)

        out = tmp_path / "deriv.csv"
        assert main(["derivatives", "--in-csv", str(src), "--out-csv", str(out)]) == 0
        header = out.read_text().splitlines()[0]
        assert header == "h,energy_per_site,d1,d2"

        assert main(["fit-beta", "--in-csv", str(src), "--h-c", "2.0"]) == 0
        beta_line = [l for l in capsys.readouterr().out.splitlines() if l.startswith("beta")][0]
        assert float(beta_line.split("=")[1]) == pytest.approx(0.5, abs=1e-9)

    def test_selftest_command_runs(self, capsys):
        # seed 0 must pass every oracle check
        assert main(["selftest"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out

    def test_verify_canonical_roundtrip(self, tmp_path, capsys):
        from bethe_ittn.canonical import CanonicalState, save_canonical

        lam = np.array([1.0])
        g0 = np.full((1, 1), np.cos(0.4))
        g1 = np.full((1, 1), np.sin(0.4))
        cs = CanonicalState(q=2, D=1, gammas=(g0, g1), lam=lam)
        path = tmp_path / "canon.txt"
        save_canonical(cs, path)
        assert main(["verify-canonical", "--in", str(path)]) == 0

        bad = CanonicalState(q=2, D=1, gammas=(g0, g1), lam=np.array([0.9]))
        save_canonical(bad, path)
        assert main(["verify-canonical", "--in", str(path)]) == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["--version"])
        assert exc_info.value.code == 0
