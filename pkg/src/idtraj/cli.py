"""Command-line interface: ``idtraj <subcommand> ...``.

Exit status is 0 on success, 1 on a runtime failure (one JSON line on
stderr) and 2 on a usage or configuration error.
"""

import argparse
import dataclasses
import datetime as dt
import json
import logging
import sys
from pathlib import Path

from . import backtest as bt
from .errors import ConfigError, IdtrajError
from .marketdata import (
    SyntheticConfig,
    generate_synthetic_market,
    ingest,
    load_store,
    render_trades,
    save_store,
    write_raw_csvs,
)
from .models import MODEL_IDS

log = logging.getLogger("idtraj")

SYNTH_KEYS = ("n_days", "n_products", "hours", "burn_in", "logit_coefs", "mu_coefs",
              "sigma_coefs", "price_smooth", "step_smooth", "nu", "fixed_pi", "fixed_sigma",
              "start_day")


class UsageError(Exception):
    pass


def _parse_overrides(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"override {item!r} is not KEY=VALUE")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except ValueError:
            value = raw
        out[key.strip()] = value
    return out


def _read_config(path):
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file {path} not found") from None
    except ValueError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    return doc


def _check_keys(d, allowed, what):
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise UsageError(f"unknown {what} keys: {', '.join(unknown)}")


def _synth_config(d):
    _check_keys(d, SYNTH_KEYS, "synth")
    d = dict(d)
    if "start_day" in d:
        d["start_day"] = dt.date.fromisoformat(str(d["start_day"]))
    for key in ("hours", "mu_coefs", "price_smooth", "step_smooth"):
        if d.get(key) is not None:
            d[key] = tuple(d[key])
    try:
        return SyntheticConfig(**d)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def cmd_synth(args):
    conf = _read_config(args.config)
    conf.update(_parse_overrides(args.overrides))
    if args.days is not None:
        conf["n_days"] = args.days
    if args.products is not None:
        conf["n_products"] = args.products
    seed = args.seed if args.seed is not None else conf.pop("seed", 0)
    cfg = _synth_config(conf)
    store, truth = generate_synthetic_market(cfg, seed)
    out = Path(args.out)
    save_store(store, out, {"source": "synthetic", "seed": seed})
    doc = {"seed": seed, "hours": list(store.hours), "truth": truth.to_dict()}
    (out / "truth.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if args.raw:
        write_raw_csvs(store, render_trades(store), out / "raw")
    print(f"wrote {len(store.hours)} products x {store.n_days()} days to {out}")
    return 0


def cmd_ingest(args):
    store = ingest(args.trades, args.da, args.fundamentals)
    save_store(store, args.out, {"source": "ingest"})
    print(f"ingested {len(store.hours)} products, {store.n_days()} days into {args.out}")
    return 0


def cmd_backtest(args):
    conf = _read_config(args.config)
    conf.update(_parse_overrides(args.overrides))
    for key, val in (("seed", args.seed), ("jobs", args.jobs), ("stride", args.stride)):
        if val is not None:
            conf[key] = val
    if args.models is not None:
        conf["models"] = [m.strip() for m in args.models.split(",") if m.strip()]
    data = args.data or conf.pop("data", None)
    if data is None:
        raise UsageError("backtest needs --data (a grid store directory)")
    _check_keys(conf, bt.BacktestConfig.field_names(), "backtest")
    config = bt.BacktestConfig.from_dict(conf)
    store, _ = load_store(data)
    summary = bt.run(config, store, args.out)
    _print_summary(summary)
    return 0


def _print_summary(summary):
    for r in summary:
        if r.get("n"):
            print(f"{r['model']:16s} n={r['n']:4d} ES={r['es']:.4f} CRPS={r['crps']:.4f}")
        else:
            print(f"{r['model']:16s} no forecasts")


def cmd_evaluate(args):
    _print_summary(bt.evaluate(args.out))
    return 0


def cmd_dm(args):
    res = bt.dm(args.out, losses=(args.loss,), lag=args.lag)
    if args.loss not in res:
        raise IdtrajError("too few complete days for a DM test (need 30)")
    print(f"wrote {Path(args.out) / 'dm' / (args.loss + '_pvalues.csv')}")
    return 0


def cmd_copula(args):
    base = args.model
    if base not in MODEL_IDS:
        raise UsageError(f"unknown model {base!r}")
    for row in bt.copula_experiment(args.out, base):
        print(f"{row['copula']:20s} ES={row['es']:.4f} CRPS={row['crps']:.4f} DSS={row['dss']:.4f}")
    return 0


def cmd_report(args):
    print(f"wrote reports to {bt.report(args.out)}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="idtraj",
        description="Probabilistic price-path forecasting for continuous intraday markets.",
    )
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", required=True)

    s = sub.add_parser("synth", help="generate a synthetic market with known ground truth")
    s.add_argument("--out", required=True, help="output grid-store directory")
    s.add_argument("--days", type=int, help="number of days")
    s.add_argument("--products", type=int, help="number of delivery hours")
    s.add_argument("--seed", type=int, help="random seed")
    s.add_argument("--config", help="JSON file with generator settings")
    s.add_argument("--raw", action="store_true", help="also write raw trade/day-ahead CSVs")
    s.add_argument("overrides", nargs="*", metavar="KEY=VALUE", help="generator setting overrides")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("ingest", help="aggregate raw trade CSVs into a grid store")
    s.add_argument("--trades", required=True, help="trades CSV")
    s.add_argument("--da", required=True, help="day-ahead price CSV")
    s.add_argument("--fundamentals", required=True, help="day-ahead fundamentals CSV")
    s.add_argument("--out", required=True, help="output grid-store directory")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("backtest", help="run (or resume) a rolling-window backtest")
    s.add_argument("--data", help="grid-store directory")
    s.add_argument("--out", required=True, help="run directory")
    s.add_argument("--config", help="JSON file with backtest settings")
    s.add_argument("--seed", type=int, help="master seed")
    s.add_argument("--models", help="comma-separated model ids")
    s.add_argument("--jobs", type=int, help="worker processes")
    s.add_argument("--stride", type=int, help="refit every N days")
    s.add_argument("overrides", nargs="*", metavar="KEY=VALUE", help="backtest setting overrides")
    s.set_defaults(func=cmd_backtest)

    s = sub.add_parser("evaluate", help="rescore the ensembles of a run directory")
    s.add_argument("--out", required=True, help="run directory")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("dm", help="pairwise Diebold-Mariano p-value matrix")
    s.add_argument("--out", required=True, help="run directory")
    s.add_argument("--loss", choices=("es", "crps"), default="es", help="loss (default: es)")
    s.add_argument("--lag", type=int, help="Newey-West lag (default: floor(N^(1/3)))")
    s.set_defaults(func=cmd_dm)

    s = sub.add_parser("copula", help="reorder a model's ensembles under fixed copulas")
    s.add_argument("--out", required=True, help="run directory")
    s.add_argument("--model", default="Mix.t.mu.sigma", help="base model (default: Mix.t.mu.sigma)")
    s.set_defaults(func=cmd_copula)

    s = sub.add_parser("report", help="write ES-by-hour, CRPS-by-step and pinball-by-level CSVs")
    s.add_argument("--out", required=True, help="run directory")
    s.set_defaults(func=cmd_report)
    return p


def _fail(code, kind, message, command):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "command": command},
                                sort_keys=True) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        return _fail(2, type(exc).__name__, str(exc), args.command)
    except (IdtrajError, OSError, ValueError) as exc:
        return _fail(1, type(exc).__name__, str(exc), args.command)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
