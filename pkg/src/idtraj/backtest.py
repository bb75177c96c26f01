"""Rolling-window backtests, evaluation, DM matrices and the copula experiment.

Run directory layout::

    config.json
    observations.csv                realised paths of every target product-day
    ensembles/<model>/<day>_<hour>.csv (+ .meta.json)
    scores/panel.csv                one row per (model, day, hour)
    scores/summary.csv              model averages
    scores/failures.csv             cells that could not be produced
    dm/<loss>_pvalues.csv
    copula/table.csv

Every file is a deterministic function of the configuration, the data and
the master seed; nothing time-dependent is written.
"""

import csv
import dataclasses
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dmtest import dm_matrix, write_dm_matrix
from .errors import ConfigError, ContractError, DataError, IdtrajError
from .marketdata.io import fmt
from .models import MODEL_IDS, Ensemble, TargetState, fit_model
from .scoring import COVERAGE_LEVELS, SUMMARY_COLUMNS, TAUS, score_ensemble, summarize
from .statcore.copulas import reorder_to_copula
from .statcore.rng import substream

log = logging.getLogger(__name__)

COPULA_ROWS = (
    ("original", None),
    ("maximum dependency", "comonotone"),
    ("minimum dependency", "countermonotone"),
    ("independence", "independence"),
)
MARGINAL_COLUMNS = ("crps", "mae", "rmse", "cov50", "cov90", "cov99")


@dataclass
class BacktestConfig:
    """Settings of one rolling-window study.

    ``first_day`` is the panel index of the first out-of-sample day
    (defaults to ``in_sample_days``).  ``stride`` refits every ``stride``
    days, reusing the latest fit in between.  ``jobs`` only affects speed.
    """

    in_sample_days: int = 365
    out_of_sample_days: int = 30
    products: list | None = None
    n_members: int = 1000
    models: list = field(default_factory=lambda: list(MODEL_IDS))
    seed: int = 0
    stride: int = 1
    jobs: int = 1
    first_day: int | None = None
    copula: bool = True
    copula_model: str = "Mix.t.mu.sigma"
    dm_lag: int | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("in_sample_days", "out_of_sample_days", "n_members", "seed", "stride", "jobs"):
            self._coerce_int(name)
        for name in ("first_day", "dm_lag"):
            if getattr(self, name) is not None:
                self._coerce_int(name)
        if not isinstance(self.copula, bool):
            raise ConfigError("copula must be true or false")
        if isinstance(self.models, str):
            self.models = [m.strip() for m in self.models.split(",") if m.strip()]
        if self.in_sample_days < 30:
            raise ConfigError("in_sample_days must be at least 30")
        if self.out_of_sample_days < 1:
            raise ConfigError("out_of_sample_days must be positive")
        if self.n_members < 2:
            raise ConfigError("n_members must be at least 2")
        if self.stride < 1 or self.jobs < 1:
            raise ConfigError("stride and jobs must be positive")
        self.models = list(self.models)
        bad = [m for m in self.models if m not in MODEL_IDS]
        if bad or not self.models:
            raise ConfigError(f"unknown models {bad}; choose from {', '.join(MODEL_IDS)}")
        if len(set(self.models)) != len(self.models):
            raise ConfigError("duplicate model ids")
        if self.products is not None:
            self.products = [int(h) for h in self.products]
        if self.copula and self.copula_model not in MODEL_IDS:
            raise ConfigError(f"unknown copula model {self.copula_model!r}")

    def _coerce_int(self, name):
        value = getattr(self, name)
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        setattr(self, name, int(value))

    @classmethod
    def field_names(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.field_names())
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**d)

    def to_dict(self):
        return dataclasses.asdict(self)

    def result_dict(self):
        """Fields that influence results (``jobs`` does not)."""
        d = self.to_dict()
        d.pop("jobs")
        return d


def data_fingerprint(store):
    h = hashlib.sha256()
    h.update(json.dumps(store.spec.to_dict(), sort_keys=True).encode())
    for hour in store.hours:
        p = store.panels[hour]
        h.update(str(hour).encode())
        for arr in (p.days.astype("int64"), p.prices, p.traded.astype(np.int8), p.da_price,
                    p.fundamentals):
            h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def config_hash(config, fingerprint):
    doc = json.dumps({"config": config.result_dict(), "data": fingerprint}, sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()[:16]


def _ensemble_path(run_dir, model, day, hour):
    return Path(run_dir) / "ensembles" / model / f"{day}_{hour:02d}.csv"


def _done(path, chash):
    meta = path.with_suffix(".meta.json")
    if not (path.exists() and meta.exists()):
        return False
    try:
        return json.loads(meta.read_text()).get("seed", {}).get("config_hash") == chash
    except (ValueError, AttributeError):
        return False


def _work_units(config, store):
    hours = config.products if config.products is not None else store.hours
    missing = [h for h in hours if h not in store.panels]
    if missing:
        raise DataError(f"products {missing} not in the data")
    first = config.in_sample_days if config.first_day is None else config.first_day
    if first < config.in_sample_days:
        raise ConfigError("first_day leaves fewer than in_sample_days of history")
    end = first + config.out_of_sample_days
    units = []
    for hour in hours:
        if len(store.panels[hour]) < end:
            raise DataError(f"product h{hour} has {len(store.panels[hour])} days, need {end}")
        for anchor in range(first, end, config.stride):
            units.append((hour, anchor, list(range(anchor, min(anchor + config.stride, end)))))
    return units


def _run_unit(args):
    """Fit every model on one window and simulate its target days."""
    config, panel, anchor, targets, run_dir, chash = args
    D = config.in_sample_days
    window = panel.subset(np.arange(anchor - D, anchor))
    # no look-ahead: every training day precedes every target day
    assert window.days[-1] < panel.days[targets[0]]
    cache = {}
    failures = []
    for model in config.models:
        paths = {i: _ensemble_path(run_dir, model, str(panel.days[i]), panel.hour) for i in targets}
        todo = [i for i in targets if not _done(paths[i], chash)]
        if not todo:
            continue
        try:
            fitted = fit_model(model, window, cache)
        except IdtrajError as exc:
            failures += [(model, str(panel.days[i]), panel.hour, type(exc).__name__, str(exc))
                         for i in todo]
            continue
        for i in todo:
            day = str(panel.days[i])
            seed = {"master": config.seed, "model": model, "day": day, "hour": panel.hour,
                    "config_hash": chash}
            try:
                rng = substream(config.seed, model, day, panel.hour)
                ens = fitted.ensemble(TargetState.from_panel(panel, i), config.n_members, rng, seed)
                ens.write(paths[i])
            except IdtrajError as exc:
                failures.append((model, day, panel.hour, type(exc).__name__, str(exc)))
    return failures


def _write_observations(run_dir, store, units):
    spec = store.spec
    o, T = spec.origin_index, spec.n_steps
    rows = []
    for hour, _, targets in units:
        p = store.panels[hour]
        for i in targets:
            rows.append([str(p.days[i]), hour, fmt(p.prices[i, o])]
                        + [fmt(v) for v in p.prices[i, o + 1:o + 1 + T]])
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(Path(run_dir) / "observations.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["day", "hour", "origin_price"] + [f"t{j}" for j in range(1, T + 1)])
        wr.writerows(rows)


def read_observations(run_dir):
    out = {}
    path = Path(run_dir) / "observations.csv"
    if not path.exists():
        raise DataError(f"{run_dir}: no observations.csv; not a run directory")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for r in reader:
            out[(r[0], int(r[1]))] = np.array([float(v) for v in r[3:]])
    return out


def load_config(run_dir):
    path = Path(run_dir) / "config.json"
    if not path.exists():
        raise DataError(f"{run_dir}: no config.json; not a run directory")
    doc = json.loads(path.read_text())
    return BacktestConfig.from_dict(doc["config"]), doc


def run(config, store, run_dir):
    """Execute (or resume) a backtest and write every artifact.

    Returns the summary rows.
    """
    run_dir = Path(run_dir)
    units = _work_units(config, store)
    fp = data_fingerprint(store)
    chash = config_hash(config, fp)
    run_dir.mkdir(parents=True, exist_ok=True)
    cfg_path = run_dir / "config.json"
    doc = {"config": config.result_dict(), "config_hash": chash, "data_fingerprint": fp,
           "grid": store.spec.to_dict()}
    if cfg_path.exists():
        old = json.loads(cfg_path.read_text())
        if old.get("config_hash") != chash:
            log.warning("configuration changed; existing ensembles will be recomputed")
    cfg_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _write_observations(run_dir, store, units)

    tasks = [(config, store.panels[h], a, t, run_dir, chash) for h, a, t in units]
    failures = []
    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            for f in pool.map(_run_unit, tasks):
                failures += f
    else:
        for task in tasks:
            failures += _run_unit(task)
    failures.sort()
    _write_rows(run_dir / "scores" / "failures.csv",
                ["model", "day", "hour", "error", "message"], failures)
    for model, day, hour, kind, msg in failures:
        log.warning("failed %s %s h%s: %s: %s", model, day, hour, kind, msg)
    summary = evaluate(run_dir)
    dm(run_dir)
    if config.copula and config.copula_model in config.models:
        copula_experiment(run_dir, config.copula_model)
    return summary


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return "" if np.isnan(v) else fmt(v)
    return v


def panel_header(n_steps):
    return (["model", "day", "hour", "es", "ed", "ei", "vs", "dss", "dss_degenerate", "crps",
             "mae", "mse"] + [f"cov{int(round(c * 100))}" for c in COVERAGE_LEVELS]
            + [f"crps_t{j}" for j in range(1, n_steps + 1)]
            + [f"pb_{int(round(t * 100)):02d}" for t in TAUS])


def _panel_row(model, day, hour, sc):
    head = [model, day, hour] + [_cell(sc[k]) for k in
                                 ("es", "ed", "ei", "vs", "dss", "dss_degenerate", "crps", "mae", "mse")]
    cov = [_cell(sc[f"cov{int(round(c * 100))}"]) for c in COVERAGE_LEVELS]
    return head + cov + [fmt(v) for v in sc["crps_t"]] + [fmt(v) for v in sc["pb"]]


def _read_failures(run_dir):
    path = Path(run_dir) / "scores" / "failures.csv"
    counts = {}
    if path.exists():
        with open(path, newline="") as fh:
            for r in list(csv.reader(fh))[1:]:
                counts[r[0]] = counts.get(r[0], 0) + 1
    return counts


def evaluate(run_dir):
    """Score every persisted ensemble; writes ``scores/panel.csv`` and ``summary.csv``."""
    run_dir = Path(run_dir)
    config, _ = load_config(run_dir)
    obs = read_observations(run_dir)
    records = {m: [] for m in config.models}
    rows = []
    n_steps = None
    for model in config.models:
        for key in sorted(obs):
            path = _ensemble_path(run_dir, model, key[0], key[1])
            if not path.exists():
                continue
            ens = Ensemble.read(path)
            sc = score_ensemble(obs[key], ens.values)
            n_steps = ens.values.shape[1]
            records[model].append(sc)
            rows.append(_panel_row(model, key[0], key[1], sc))
    n_steps = n_steps or len(next(iter(obs.values())))
    _write_rows(run_dir / "scores" / "panel.csv", panel_header(n_steps), rows)
    summary = summarize(records, _read_failures(run_dir))
    _write_rows(run_dir / "scores" / "summary.csv", SUMMARY_COLUMNS,
                [[_cell(r.get(c, float("nan"))) for c in SUMMARY_COLUMNS] for r in summary])
    return summary


def read_panel(run_dir):
    """``scores/panel.csv`` as a list of dicts with floats where numeric."""
    path = Path(run_dir) / "scores" / "panel.csv"
    if not path.exists():
        raise DataError(f"{run_dir}: no score panel; run evaluate first")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        out = []
        for r in reader:
            rec = {}
            for k, v in r.items():
                if k in ("model", "day"):
                    rec[k] = v
                elif k == "hour":
                    rec[k] = int(v)
                else:
                    rec[k] = float(v) if v != "" else float("nan")
            out.append(rec)
    return out


def loss_panels(run_dir, loss="es"):
    """Per-model ``N x S`` loss matrices over the (day, hour) cells every model scored."""
    if loss not in ("es", "crps"):
        raise ConfigError("loss must be 'es' or 'crps'")
    config, _ = load_config(run_dir)
    panel = read_panel(run_dir)
    by_model = {m: {} for m in config.models}
    for r in panel:
        by_model[r["model"]][(r["day"], r["hour"])] = r[loss]
    present = [m for m in config.models if by_model[m]]
    if not present:
        raise DataError("no scored ensembles")
    common = set.intersection(*(set(by_model[m]) for m in present))
    days = sorted({d for d, _ in common})
    hours = sorted({h for _, h in common})
    days = [d for d in days if all((d, h) in common for h in hours)]
    losses = {m: np.array([[by_model[m][(d, h)] for h in hours] for d in days]) for m in present}
    return present, losses, days, hours


def dm(run_dir, losses=("es", "crps"), lag=None):
    """Write ``dm/<loss>_pvalues.csv`` for every requested loss; returns the matrices."""
    run_dir = Path(run_dir)
    config, _ = load_config(run_dir)
    lag = config.dm_lag if lag is None else lag
    out = {}
    for loss in losses:
        models, panels, days, _ = loss_panels(run_dir, loss)
        if len(days) < 30:
            log.warning("DM test skipped for %s: only %d complete days", loss, len(days))
            continue
        mat = dm_matrix(panels, models, lag)
        write_dm_matrix(run_dir / "dm" / f"{loss}_pvalues.csv", models, mat)
        out[loss] = (models, mat)
    return out


def copula_experiment(run_dir, base_model="Mix.t.mu.sigma"):
    """Rescore the base model's ensembles after copula reorderings.

    Writes ``copula/table.csv`` with one row per dependence structure and
    returns the rows.  Raises :class:`ContractError` if any marginal column
    differs from the original row.
    """
    run_dir = Path(run_dir)
    config, _ = load_config(run_dir)
    obs = read_observations(run_dir)
    found = [k for k in sorted(obs) if _ensemble_path(run_dir, base_model, *k).exists()]
    if not found:
        raise DataError(f"no persisted {base_model} ensembles in {run_dir}")
    records = {name: [] for name, _ in COPULA_ROWS}
    for key in found:
        ens = Ensemble.read(_ensemble_path(run_dir, base_model, *key)).values
        for name, kind in COPULA_ROWS:
            vals = ens if kind is None else reorder_to_copula(
                ens, kind, substream(config.seed, "copula", kind, key[0], key[1]))
            records[name].append(score_ensemble(obs[key], vals))
    rows = summarize(records)
    ref = rows[0]
    for r in rows[1:]:
        for c in MARGINAL_COLUMNS:
            if r[c] != ref[c]:
                raise ContractError(f"copula reordering changed marginal measure {c}")
    cols = ("copula", "es", "vs", "dss", "crps", "mae", "rmse", "cov50", "cov90", "cov99")
    table = [{"copula": r["model"], **{c: r[c] for c in cols[1:]}} for r in rows]
    _write_rows(run_dir / "copula" / "table.csv", cols, [[_cell(t[c]) for c in cols] for t in table])
    return table


def report(run_dir):
    """Figure-shaped CSVs under ``report/``: ES per hour, CRPS per step, pinball per level."""
    run_dir = Path(run_dir)
    config, _ = load_config(run_dir)
    panel = read_panel(run_dir)
    models = [m for m in config.models if any(r["model"] == m for r in panel)]
    hours = sorted({r["hour"] for r in panel})
    out = run_dir / "report"

    def mean_of(model, key, pred=lambda r: True):
        vals = [r[key] for r in panel if r["model"] == model and pred(r)]
        return float(np.mean(vals)) if vals else float("nan")

    _write_rows(out / "es_by_hour.csv", ["hour"] + models,
                [[h] + [_cell(mean_of(m, "es", lambda r, h=h: r["hour"] == h)) for m in models]
                 for h in hours])
    steps = sorted(int(k[6:]) for k in panel[0] if k.startswith("crps_t"))
    _write_rows(out / "crps_by_step.csv", ["step", "minutes_before_delivery"] + models,
                [[t, 185 - 5 * t] + [_cell(mean_of(m, f"crps_t{t}")) for m in models] for t in steps])
    _write_rows(out / "pinball_by_tau.csv", ["tau"] + models,
                [[fmt(tau)] + [_cell(mean_of(m, f"pb_{int(round(tau * 100)):02d}")) for m in models]
                 for tau in TAUS])
    return out
