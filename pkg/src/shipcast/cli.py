"""Command-line interface.

Exit codes: 0 success, 1 usage/configuration error, 2 infeasible
optimization, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .ingest import DataError, aggregate_weekly, extract_mode_stats, parse_transactions, temporal_split
from .mstl import MstlParams, mstl_forecast
from .nbeats import NBeatsModel, forecast_series, nbeats_train
from .nhits import NhitsModel, nhits_train
from .pipeline import (
    PipelineConfig,
    StageError,
    emit_forecast_csv,
    load_config,
    run_pipeline,
    select_model,
)
from .series import evaluate_forecast
from .shipping import ShippingInstance, allocate, baseline_all_standard, baseline_uniform

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_DATA = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 instead of argparse's default 2
        self.print_usage(sys.stderr)
        raise SystemExit(_fail(f"error: {message}"))


def _fail(message: str, code: int = EXIT_USAGE) -> int:
    print(message, file=sys.stderr)
    return code


def _write(out_dir: Path, name: str, text: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text, encoding="utf-8")
    print(f"wrote {out_dir / name}")


def _effective_config(args) -> PipelineConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = PipelineConfig(data_path=str(Path("data/synthetic_transactions.csv")))
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    return cfg


def _load_ingested(cfg: PipelineConfig):
    if cfg.data_path is None:
        raise DataError("this subcommand needs a [data] path in the config")
    data = Path(cfg.data_path).read_bytes()
    records, report = parse_transactions(data, cfg.schema)
    if not records:
        raise DataError("no usable transactions in input")
    series = aggregate_weekly(records, cfg.week_anchor)
    if cfg.drop_trailing_weeks:
        series = series.drop_trailing(cfg.drop_trailing_weeks)
    return records, report, series


def cmd_ingest(args) -> int:
    cfg = _effective_config(args)
    records, report, series = _load_ingested(cfg)
    out = Path(cfg.out_dir)
    _write(out, "weekly_series.csv", series.to_csv())
    _write(out, "ingest_report.json", json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_eda(args) -> int:
    cfg = _effective_config(args)
    records, _report, _series = _load_ingested(cfg)
    stats = extract_mode_stats(records)
    doc = [
        {
            "mode": s.mode,
            "mean_delivery_days": s.mean_delivery_days,
            "order_count": s.order_count,
            "volume_share": s.volume_share,
        }
        for s in stats
    ]
    _write(Path(cfg.out_dir), "mode_stats.json", json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def _load_saved_model(path: Path):
    text = path.read_text()
    meta = json.loads(text).get("meta", {})
    blocks = meta.get("blocks") or [{}]
    if blocks[0].get("type") == "nhits":
        return NhitsModel.from_json(text)
    return NBeatsModel.from_json(text)


def cmd_forecast(args) -> int:
    cfg = _effective_config(args)
    _records, _report, series = _load_ingested(cfg)
    train, test = temporal_split(series, cfg.train_len)
    fc_cfg = cfg.forecast_config()
    wanted = ("mstl", "nbeats", "nhits") if args.model == "all" else (args.model,)

    forecasts = {}
    saved_model = None
    if args.load_model:
        # evaluate a previously trained model instead of training anew
        model = _load_saved_model(Path(args.load_model))
        forecasts[model.label] = forecast_series(model, train)
        wanted = ()
    if "mstl" in wanted:
        forecasts["mstl"] = mstl_forecast(train, cfg.mstl_periods, MstlParams(), fc_cfg)
    if "nbeats" in wanted:
        model, _ = nbeats_train(
            train, fc_cfg, cfg.train_config(1), architecture=cfg.nbeats_architecture
        )
        forecasts["nbeats"] = forecast_series(model, train)
        saved_model = model
    if "nhits" in wanted:
        model, _ = nhits_train(train, fc_cfg, cfg.train_config(2))
        forecasts["nhits"] = forecast_series(model, train)
        saved_model = model

    actual = test.values[: cfg.horizon]
    metrics = {
        label: evaluate_forecast(label, actual, fc.values[: len(actual)])
        for label, fc in forecasts.items()
    }
    out = Path(cfg.out_dir)
    csv_text, _warn = emit_forecast_csv(test, forecasts)
    _write(out, "forecast_comparison.csv", csv_text)
    doc = {
        "metrics": {k: {"mae": m.mae, "smape": m.smape} for k, m in metrics.items()},
        "selected_model": select_model(metrics),
    }
    _write(out, "forecast_metrics.json", json.dumps(doc, indent=2, sort_keys=True))
    if args.save_model and saved_model is not None:
        _write(out, args.save_model, saved_model.to_json())
    return EXIT_OK


def cmd_optimize(args) -> int:
    instance = ShippingInstance.from_json(Path(args.instance).read_text())
    result = allocate(instance)
    out = Path(args.out if args.out is not None else "out")
    if result.status != "optimal":
        doc = {
            "status": "infeasible",
            "binding_constraints": list(result.binding_constraints),
        }
        _write(out, "plan.json", json.dumps(doc, indent=2, sort_keys=True))
        print(
            "infeasible: binding constraints "
            + ", ".join(result.binding_constraints),
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    _write(out, "plan.json", result.plan.to_json())
    return EXIT_OK


def cmd_compare_baselines(args) -> int:
    instance = ShippingInstance.from_json(Path(args.instance).read_text())
    result = allocate(instance)
    doc = {
        "optimal": None
        if result.plan is None
        else json.loads(result.plan.to_json()),
        "optimal_status": result.status,
        "all_standard": json.loads(baseline_all_standard(instance).to_json()),
        "uniform": json.loads(baseline_uniform(instance).to_json()),
    }
    out = Path(args.out if args.out is not None else "out")
    _write(out, "baseline_comparison.json", json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK if result.status == "optimal" else EXIT_INFEASIBLE


def cmd_pipeline(args) -> int:
    cfg = _effective_config(args)
    report = run_pipeline(cfg)
    print(f"report written to {Path(cfg.out_dir) / 'report.json'}")
    if report.doc["allocation"]["status"] != "optimal":
        return EXIT_INFEASIBLE
    return EXIT_OK


def _add_globals(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """The global flags work before or after the subcommand. Subcommand
    copies default to SUPPRESS so an omitted flag there does not clobber a
    value parsed at the top level."""
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument(
        "--config", metavar="PATH", default=default, help="INI pipeline configuration"
    )
    parser.add_argument(
        "--seed", type=int, metavar="N", default=default, help="override the master seed"
    )
    parser.add_argument(
        "--out", metavar="DIR", default=default, help="override the output directory"
    )


def build_parser() -> _Parser:
    parser = _Parser(
        prog="shipcast",
        description=(
            "Weekly demand forecasting (MSTL, N-BEATS, N-HiTS) feeding an "
            "integer shipping-mode allocation optimizer."
        ),
    )
    parser.add_argument("--version", action="version", version=f"shipcast {__version__}")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        _add_globals(p, suppress=True)
        return p

    add_command("ingest", "parse transactions, write the weekly series")
    add_command("eda", "write per-mode operational statistics")

    p_fc = add_command("forecast", "train and evaluate forecasting models")
    p_fc.add_argument(
        "--model",
        choices=("mstl", "nbeats", "nhits", "all"),
        default="all",
    )
    p_fc.add_argument(
        "--save-model",
        metavar="NAME",
        help="also write the trained neural model parameters (JSON)",
    )
    p_fc.add_argument(
        "--load-model",
        metavar="PATH",
        help="evaluate a saved model JSON instead of training",
    )

    p_opt = add_command("optimize", "solve a shipping instance JSON")
    p_opt.add_argument("--instance", required=True, metavar="PATH")

    p_cmp = add_command("compare-baselines", "optimal plan vs heuristic baselines")
    p_cmp.add_argument("--instance", required=True, metavar="PATH")

    add_command("pipeline", "run the full pipeline end to end")
    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "eda": cmd_eda,
    "forecast": cmd_forecast,
    "optimize": cmd_optimize,
    "compare-baselines": cmd_compare_baselines,
    "pipeline": cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except DataError as exc:
        return _fail(f"data error: {exc}", EXIT_DATA)
    except FileNotFoundError as exc:
        return _fail(f"data error: {exc}", EXIT_DATA)
    except StageError as exc:
        if isinstance(exc.cause, DataError | FileNotFoundError):
            return _fail(f"data error: {exc}", EXIT_DATA)
        return _fail(str(exc), EXIT_USAGE)
    except ValueError as exc:
        return _fail(f"error: {exc}", EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
