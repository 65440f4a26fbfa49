import datetime as dt
import json
from pathlib import Path

import numpy as np
import pytest

from shipcast.cli import main as cli_main
from shipcast.ingest import DataError
from shipcast.pipeline import (
    PipelineConfig,
    StageError,
    SyntheticSpec,
    _OutputTracker,
    build_instance,
    emit_forecast_csv,
    load_config,
    run_pipeline,
    select_model,
)
from shipcast.series import Forecast, MetricReport, WeeklySeries

REPO = Path(__file__).resolve().parent.parent
DATA = REPO / "data" / "synthetic_transactions.csv"
MONDAY = dt.date(2020, 1, 6)


def fast_synthetic_config(out_dir: str, seed: int = 3) -> PipelineConfig:
    cfg = PipelineConfig()
    cfg.data_path = None
    cfg.synthetic = SyntheticSpec(length=72, trend_slope=0.5, base=60.0,
                                  seasonals=((4, 8.0),), noise_sd=1.0, seed=5)
    cfg.train_len = 68
    cfg.mstl_periods = (4,)
    cfg.max_epochs = 40
    cfg.patience = 40
    cfg.seed = seed
    cfg.out_dir = out_dir
    return cfg


class TestConfigFile:
    def test_load_committed_config(self):
        cfg = load_config(REPO / "configs" / "synthetic_pipeline.ini")
        assert cfg.data_path == "data/synthetic_transactions.csv"
        assert cfg.train_len == 158
        assert cfg.capacities["Standard Class"] == 1200
        assert cfg.min_fast_share == 0.10
        assert cfg.fast_modes == ("First Class", "Same Day")

    def test_from_eda_markers(self):
        cfg = load_config(REPO / "configs" / "eda_driven_pipeline.ini")
        assert cfg.delivery_days is None
        assert cfg.unit_costs is None
        assert cfg.capacities is None

    def test_unknown_key_rejected(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[forecast]\nhorizont = 4\n")
        with pytest.raises(DataError, match="horizont"):
            load_config(bad)

    def test_unknown_section_rejected(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[forecasting]\nhorizon = 4\n")
        with pytest.raises(DataError):
            load_config(bad)

    def test_policy_params_cannot_come_from_eda(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[data]\npath = x.csv\n[ilp]\nbudget = from_eda\n")
        with pytest.raises(DataError, match="policy"):
            load_config(bad)

    def test_missing_file_rejected(self):
        with pytest.raises(DataError):
            load_config("/nonexistent/config.ini")

    def test_needs_data_or_synthetic(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[forecast]\nhorizon = 4\n")
        with pytest.raises(DataError, match="synthetic"):
            load_config(bad)


class TestSelection:
    def make(self, **smapes):
        return {
            label: MetricReport(label, mae=10.0, smape=s) for label, s in smapes.items()
        }

    def test_lowest_smape_wins(self):
        metrics = self.make(mstl=60.0, nbeats=25.0, nhits=30.0)
        assert select_model(metrics) == "nbeats"

    def test_smape_tie_broken_by_mae(self):
        metrics = self.make(mstl=20.0, nbeats=20.0, nhits=30.0)
        metrics["mstl"] = MetricReport("mstl", mae=5.0, smape=20.0)
        assert select_model(metrics) == "mstl"

    def test_full_tie_uses_label_order(self):
        metrics = self.make(nhits=20.0, nbeats=20.0, mstl=20.0)
        assert select_model(metrics) == "mstl"


class TestBuildInstance:
    def test_pinned_defaults(self):
        cfg = PipelineConfig()
        inst = build_instance(cfg, 1918, None, None)
        assert inst.total_demand == 1918
        by_id = {m.id: m for m in inst.modes}
        assert by_id["Same Day"].avg_delivery_days == 1.0
        assert by_id["Standard Class"].capacity == 1200
        assert by_id["First Class"].is_fast

    def test_from_eda_requires_data(self):
        cfg = PipelineConfig()
        cfg.delivery_days = None
        with pytest.raises(DataError):
            build_instance(cfg, 100, None, None)

    def test_eda_capacity_proxy(self):
        from shipcast.ingest import extract_mode_stats, parse_transactions

        records, _ = parse_transactions(DATA.read_bytes())
        stats = extract_mode_stats(records)
        cfg = PipelineConfig()
        cfg.capacities = None
        cfg.capacity_headroom = 1.25
        inst = build_instance(cfg, 1000, stats, records)
        share = {s.mode: s.volume_share for s in stats}
        for m in inst.modes:
            assert m.capacity == round(share[m.id] * 1000 * 1.25)
        assert sum(m.capacity for m in inst.modes) >= 1000


class TestEmitForecastCsv:
    def make_forecasts(self, labels):
        return {
            label: Forecast(label, np.array([1.5, 2.5, 3.5, 4.5]) + i, MONDAY)
            for i, label in enumerate(labels)
        }

    def test_four_rows_plus_header(self):
        test = WeeklySeries(MONDAY, np.array([10.0, 11.0, 12.0, 13.0]))
        text, warnings = emit_forecast_csv(test, self.make_forecasts(["mstl", "nbeats", "nhits"]))
        lines = text.strip().splitlines()
        assert lines[0] == "week,actual,mstl,nbeats,nhits"
        assert len(lines) == 5
        assert warnings == []

    def test_missing_model_column_omitted_with_warning(self):
        test = WeeklySeries(MONDAY, np.array([10.0, 11.0, 12.0, 13.0]))
        text, warnings = emit_forecast_csv(test, self.make_forecasts(["mstl", "nhits"]))
        assert text.splitlines()[0] == "week,actual,mstl,nhits"
        assert any("nbeats" in w for w in warnings)

    def test_round_trip_six_decimals(self):
        test = WeeklySeries(MONDAY, np.array([10.123456789, 11.0, 12.0, 13.0]))
        fcs = self.make_forecasts(["mstl"])
        text, _ = emit_forecast_csv(test, fcs)
        row = text.strip().splitlines()[1].split(",")
        assert float(row[1]) == pytest.approx(10.123456789, abs=1e-6)
        assert float(row[2]) == pytest.approx(1.5, abs=1e-6)


class TestOutputTracker:
    def test_rollback_removes_written_files(self, tmp_path):
        tracker = _OutputTracker(tmp_path / "out")
        tracker.write("a.txt", "hello")
        tracker.write("b.txt", "world")
        assert (tmp_path / "out" / "a.txt").exists()
        tracker.rollback()
        assert not (tmp_path / "out" / "a.txt").exists()
        assert not (tmp_path / "out" / "b.txt").exists()

    def test_write_is_atomic_no_temp_left_behind(self, tmp_path):
        tracker = _OutputTracker(tmp_path)
        tracker.write("x.json", "{}")
        leftovers = [p for p in tmp_path.iterdir() if p.name.startswith(".x.json")]
        assert leftovers == []


class TestRunPipeline:
    def test_synthetic_run_produces_bundle(self, tmp_path):
        cfg = fast_synthetic_config(str(tmp_path / "out"))
        report = run_pipeline(cfg)
        out = tmp_path / "out"
        for name in ("report.json", "forecast_comparison.csv", "weekly_series.csv", "instance.json"):
            assert (out / name).exists()
        doc = report.doc
        assert doc["schema_version"] == 1
        assert doc["seed"] == 3
        assert doc["selected_model"] in ("mstl", "nbeats", "nhits")
        assert doc["total_demand"] == round(sum(doc["forecast"]["values"]))
        assert len(doc["config_hash"]) == 16

    def test_deterministic_reports(self, tmp_path):
        r1 = run_pipeline(fast_synthetic_config(str(tmp_path / "a")))
        r2 = run_pipeline(fast_synthetic_config(str(tmp_path / "b")))
        assert (tmp_path / "a" / "report.json").read_bytes() == (
            tmp_path / "b" / "report.json"
        ).read_bytes()
        assert r1.to_json() == r2.to_json()

    def test_seed_changes_report(self, tmp_path):
        r1 = run_pipeline(fast_synthetic_config(str(tmp_path / "a"), seed=3))
        r2 = run_pipeline(fast_synthetic_config(str(tmp_path / "b"), seed=4))
        assert r1.doc["config_hash"] != r2.doc["config_hash"]

    def test_stage_error_names_stage(self, tmp_path):
        cfg = fast_synthetic_config(str(tmp_path / "out"))
        cfg.unit_costs = {"Only Mode": 1.0}  # inconsistent with delivery_days
        with pytest.raises(StageError, match="optimize"):
            run_pipeline(cfg)
        assert not (tmp_path / "out" / "report.json").exists()

    def test_infeasible_allocation_reported_not_raised(self, tmp_path):
        cfg = fast_synthetic_config(str(tmp_path / "out"))
        cfg.capacities = {k: 1 for k in cfg.capacities}  # demand cannot fit
        report = run_pipeline(cfg)
        assert report.doc["allocation"]["status"] == "infeasible"
        assert "capacity" in report.doc["allocation"]["binding_constraints"]
        assert report.doc["warnings"]

    def test_dataset_end_to_end(self, tmp_path):
        cfg = PipelineConfig()
        cfg.data_path = str(DATA)
        cfg.max_epochs = 25
        cfg.patience = 25
        cfg.seed = 11
        report = run_pipeline(cfg, out_dir=tmp_path / "out")
        doc = report.doc
        assert doc["ingest"]["rows_read"] == 8847
        assert doc["series"]["weeks"] == 162
        assert doc["series"]["train_weeks"] == 158
        assert set(doc["metrics"]) == {"mstl", "nbeats", "nhits"}
        assert doc["allocation"]["status"] == "optimal"
        plan = doc["allocation"]["plan"]
        assert plan["feasible"] is True
        assert sum(plan["x"].values()) == doc["total_demand"]


class TestCli:
    def test_pipeline_exit_zero(self, tmp_path, monkeypatch):
        monkeypatch.chdir(REPO)  # config points at the repo-relative dataset
        code = cli_main(
            ["--config", str(REPO / "configs" / "synthetic_pipeline.ini"),
             "--out", str(tmp_path / "o"), "--seed", "2", "pipeline"]
        )
        assert code == 0
        assert (tmp_path / "o" / "report.json").exists()

    def test_optimize_reference_instance(self, tmp_path):
        code = cli_main(
            ["optimize", "--instance", str(REPO / "configs" / "reference_instance.json"),
             "--out", str(tmp_path)]
        )
        assert code == 0
        doc = json.loads((tmp_path / "plan.json").read_text())
        assert doc["objective"] == 5032.0

    def test_optimize_infeasible_exit_two(self, tmp_path):
        instance = json.loads((REPO / "configs" / "reference_instance.json").read_text())
        instance["D_total"] = 9000
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(instance))
        code = cli_main(["optimize", "--instance", str(path), "--out", str(tmp_path)])
        assert code == 2
        doc = json.loads((tmp_path / "plan.json").read_text())
        assert doc["status"] == "infeasible"

    def test_usage_error_exit_one(self, capsys):
        assert cli_main(["no-such-command"]) == 1
        assert cli_main(["optimize"]) == 1  # missing --instance

    def test_missing_data_exit_three(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[data]\npath = /nonexistent.csv\n")
        code = cli_main(["--config", str(cfg), "--out", str(tmp_path), "ingest"])
        assert code == 3

    def test_compare_baselines(self, tmp_path):
        code = cli_main(
            ["compare-baselines", "--instance",
             str(REPO / "configs" / "reference_instance.json"), "--out", str(tmp_path)]
        )
        assert code == 0
        doc = json.loads((tmp_path / "baseline_comparison.json").read_text())
        assert doc["optimal"]["objective"] == 5032.0
        assert doc["all_standard"]["objective"] == 7672.0
        assert doc["uniform"]["objective"] == 4793.0
        assert doc["all_standard"]["feasible"] is False

    def test_ingest_and_eda_subcommands(self, tmp_path, monkeypatch):
        monkeypatch.chdir(REPO)  # the no-config default data path is relative
        assert cli_main(["--out", str(tmp_path / "i"), "ingest"]) == 0
        series_csv = (tmp_path / "i" / "weekly_series.csv").read_text()
        assert series_csv.splitlines()[0] == "iso_week_start,quantity"
        assert cli_main(["--out", str(tmp_path / "e"), "eda"]) == 0
        stats = json.loads((tmp_path / "e" / "mode_stats.json").read_text())
        assert len(stats) == 4

    def test_forecast_subcommand_mstl_only(self, tmp_path, monkeypatch):
        monkeypatch.chdir(REPO)
        code = cli_main(["--out", str(tmp_path), "forecast", "--model", "mstl"])
        assert code == 0
        doc = json.loads((tmp_path / "forecast_metrics.json").read_text())
        assert set(doc["metrics"]) == {"mstl"}

    def test_forecast_save_and_reload_model(self, tmp_path, monkeypatch):
        monkeypatch.chdir(REPO)
        train_cfg = tmp_path / "fast.ini"
        train_cfg.write_text(
            "[data]\npath = data/synthetic_transactions.csv\n"
            "[forecast]\nmax_epochs = 5\npatience = 5\nseed = 3\n"
        )
        code = cli_main(
            ["--config", str(train_cfg), "--out", str(tmp_path / "a"),
             "forecast", "--model", "nhits", "--save-model", "model.json"]
        )
        assert code == 0
        code = cli_main(
            ["--config", str(train_cfg), "--out", str(tmp_path / "b"),
             "forecast", "--load-model", str(tmp_path / "a" / "model.json")]
        )
        assert code == 0
        first = json.loads((tmp_path / "a" / "forecast_metrics.json").read_text())
        second = json.loads((tmp_path / "b" / "forecast_metrics.json").read_text())
        assert second["metrics"]["nhits"] == first["metrics"]["nhits"]
