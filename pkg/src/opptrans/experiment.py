"""Experiment orchestration: wiring traces, models, schemes, and reports.

Every run is a pure function of (config, master seed) modulo the wall-clock
manifest line.  Stages fail with the stage name prefixed so the CLI can
report where a pipeline broke.
"""

from __future__ import annotations

import dataclasses
import os
import time

import numpy as np

from . import blackspot as bs
from .config import Config, ConfigError, derive_seed
from .engine import (train_epochs, write_epoch_results, write_runlog)
from .features import training_set, feature_matrix
from .forest import ForestRatePredictor
from .incremental_net import IncrementalNetRegressor, concept_drift_experiment
from .kpi import PrbTables, PowerModelParams, summarize_run, write_report
from .residual import fit_residual_model
from .schemes import SchemeConfig, make_agent, SCHEME_NAMES
from .trace import SyntheticConfig, generate_synthetic_trace, load_trace


class StageError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc)


def synthetic_config_from(config, prefix="trace.synthetic."):
    kwargs = {}
    for f in dataclasses.fields(SyntheticConfig):
        raw = config.get(prefix + f.name)
        if raw is None:
            continue
        if f.type in ("int",):
            kwargs[f.name] = int(float(raw))
        elif f.type in ("float",):
            kwargs[f.name] = float(raw)
        else:
            kwargs[f.name] = raw
    return SyntheticConfig(**kwargs)


def scheme_config_from(config, measured_rates=None):
    kwargs = {}
    for f in dataclasses.fields(SchemeConfig):
        raw = config.get("scheme." + f.name)
        if raw is None or raw == "auto":
            continue
        kwargs[f.name] = int(float(raw)) if f.type == "int" else float(raw)
    # per-operator rate anchors estimated from training data when not pinned
    if measured_rates is not None and len(measured_rates):
        if config.get("scheme.s_max") in (None, "auto"):
            kwargs["s_max"] = float(np.max(measured_rates))
        if config.get("scheme.s_star") in (None, "auto"):
            kwargs["s_star"] = float(np.quantile(measured_rates, 0.75))
    # keep the probabilistic lower bound valid under small deadline sweeps
    dt_max = kwargs.get("delta_t_max", 120.0)
    dt_min = kwargs.get("delta_t_min", 10.0)
    if dt_min >= dt_max:
        kwargs["delta_t_min"] = dt_max / 2.0
    return SchemeConfig(**kwargs)


def build_traces(config, master_seed, stage, count_key, default_count=2):
    files = config.getlist("trace.files")
    if files:
        for path in files:
            if not os.path.exists(path):
                raise ConfigError(f"missing trace file: {path}")
        return [load_trace(path) for path in files]
    syn = synthetic_config_from(config)
    count = config.getint(count_key, default_count)
    return [generate_synthetic_trace(syn, derive_seed(master_seed, stage, i))
            for i in range(count)]


def build_predictor(config, X, y, master_seed):
    kind = config.get("predictor.kind", "forest")
    seed = derive_seed(master_seed, "predictor")
    if kind == "forest":
        return ForestRatePredictor(
            n_trees=config.getint("predictor.n_trees", 100),
            max_depth=config.getint("predictor.max_depth", 15),
            seed=seed).fit(X, y)
    if kind == "net":
        return IncrementalNetRegressor(
            n_inputs=X.shape[1], seed=seed).fit(
                X, y, epochs=config.getint("predictor.epochs", 500))
    raise ConfigError(f"unknown predictor kind {kind!r}")


def error_samples_from(traces, predictor, encoder,
                       payload_bytes=50000):
    samples = []
    for tr in traces:
        eligible = [s for s in tr.samples if s.measured_data_rate is not None]
        X = feature_matrix(eligible, payload_bytes, encoder)
        pred = predictor.predict(X)
        samples.extend(
            bs.ErrorSample(position=s.position, predicted=float(p),
                           measured=s.measured_data_rate)
            for s, p in zip(eligible, pred))
    return samples


class ExperimentArtifacts:
    """Everything built once per experiment and shared across epochs."""

    def __init__(self, config, master_seed):
        self.config = config
        self.master_seed = master_seed
        self.train_traces = _stage(
            "train-traces", build_traces, config, master_seed,
            "train-traces", "trace.synthetic.train_count")
        self.eval_traces = _stage(
            "eval-traces", build_traces, config, master_seed,
            "eval-traces", "trace.synthetic.count")
        self.encoder, self.X, self.y = _stage(
            "training-set", training_set, self.train_traces)
        self.predictor = _stage(
            "predictor", build_predictor, config, self.X, self.y,
            master_seed)
        pred_on_train = self.predictor.predict(self.X)
        self.residual = _stage(
            "residual-model", fit_residual_model, pred_on_train, self.y,
            length_scale=config.getfloat("residual.length_scale"),
            sigma_f=config.getfloat("residual.sigma_f"),
            sigma_n=config.getfloat("residual.sigma_n"),
            max_pairs=config.getint("residual.max_pairs", 512),
            seed=derive_seed(master_seed, "residual"))
        self.scheme_config = _stage(
            "scheme-config", scheme_config_from, config, self.y)
        self.error_samples = _stage(
            "error-samples", error_samples_from, self.train_traces,
            self.predictor, self.encoder)
        self.tables = PrbTables.default()
        self.power_params = PowerModelParams()

    def blackspot_map(self):
        cfg = bs.BlackSpotConfig(
            n_clusters=self.config.getint("blackspot.n_clusters", 100),
            rmse_max=self.config.getfloat("blackspot.rmse_max", 3.0),
            max_track_elimination=self.config.getfloat(
                "blackspot.max_track_elimination", 0.20),
            b_min=self.config.getfloat("blackspot.b_min", 10.0),
            seed=derive_seed(self.master_seed, "blackspot"))
        return _stage("blackspot", bs.detect_black_spots,
                      self.error_samples, cfg)


def run_scheme(artifacts, scheme_name, n_epochs, eval_epochs=3):
    """Train (if the scheme learns) and evaluate one scheme.

    Returns (train results, eval results, eval records, kpi report).
    """
    config = artifacts.config
    bs_map = None
    if scheme_name == "bscb" and config.getbool("blackspot.enabled", True):
        bs_map = artifacts.blackspot_map()
    agent = make_agent(scheme_name, artifacts.scheme_config,
                       blackspot_map=bs_map, training=True)
    seed = derive_seed(artifacts.master_seed, "epochs")
    results, _ = _stage(
        "train-epochs", train_epochs, artifacts.eval_traces, agent,
        artifacts.predictor, artifacts.encoder, artifacts.residual,
        artifacts.scheme_config, n_epochs, seed,
        tables=artifacts.tables, power_params=artifacts.power_params)
    if hasattr(agent, "training"):
        agent.training = False
    eval_seed = derive_seed(artifacts.master_seed, "eval")
    eval_results, records = _stage(
        "eval-epochs", train_epochs, artifacts.eval_traces, agent,
        artifacts.predictor, artifacts.encoder, artifacts.residual,
        artifacts.scheme_config, eval_epochs, eval_seed,
        tables=artifacts.tables, power_params=artifacts.power_params)
    report = _stage("kpi-summary", summarize_run, records,
                    artifacts.scheme_config, artifacts.tables,
                    artifacts.power_params)
    return results, eval_results, records, report


def run_experiment(config, master_seed, out_dir):
    """Full pipeline for the configured scheme; writes the report bundle."""
    os.makedirs(out_dir, exist_ok=True)
    artifacts = ExperimentArtifacts(config, master_seed)
    scheme = config.get("scheme.name", "periodic")
    if scheme not in SCHEME_NAMES:
        raise ConfigError(
            f"unknown scheme {scheme!r}; valid schemes: "
            f"{', '.join(SCHEME_NAMES)}")
    n_epochs = config.getint("run.n_epochs", 50)
    eval_epochs = config.getint("run.eval_epochs", 3)
    results, eval_results, records, report = run_scheme(
        artifacts, scheme, n_epochs, eval_epochs)
    write_epoch_results(results, os.path.join(out_dir, "epochs.tsv"))
    write_runlog(records, os.path.join(out_dir, "runlog.tsv"))
    write_report(report, os.path.join(out_dir, "kpis.txt"))
    _write_manifest(config, master_seed, out_dir)
    return report


SWEEP_AXES = ("scheme.w", "scheme.delta_t_max", "blackspot.rmse_max")


def sweep(config, axis, values, master_seed, out_dir=None):
    """One full experiment per axis value; returns a per-value KPI table."""
    if axis not in SWEEP_AXES:
        raise ConfigError(
            f"unknown sweep axis {axis!r}; valid axes: "
            f"{', '.join(SWEEP_AXES)}")
    rows = []
    for value in values:
        point = config.with_override(axis, value)
        artifacts = ExperimentArtifacts(point, master_seed)
        scheme = point.get("scheme.name", "bscb")
        _, _, records, report = run_scheme(
            artifacts, scheme, point.getint("run.n_epochs", 50),
            point.getint("run.eval_epochs", 3))
        rows.append({
            "value": float(value),
            "mean_rate": report["mean_rate_mbits"],
            "mean_aoi": report["mean_aoi_s"],
            "rate_efficiency": report["rate_efficiency"],
            "aoi_efficiency": report["aoi_efficiency"],
            "prbs_per_mb": report["prbs_per_mb"],
            "total_energy_j": report["total_energy_j"],
        })
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        _write_table(rows, os.path.join(out_dir, f"sweep_{axis}.tsv"))
        _write_manifest(config, master_seed, out_dir)
    return rows


def compare_schemes(config, schemes, master_seed, out_dir=None):
    """Shared traces and seeds across schemes; per-scheme KPI rows."""
    if len(schemes) < 2:
        raise ConfigError("need at least 2 schemes to compare")
    for s in schemes:
        if s not in SCHEME_NAMES:
            raise ConfigError(
                f"unknown scheme {s!r}; valid schemes: "
                f"{', '.join(SCHEME_NAMES)}")
    artifacts = ExperimentArtifacts(config, master_seed)
    rows = []
    for s in schemes:
        _, _, records, report = run_scheme(
            artifacts, s, config.getint("run.n_epochs", 50),
            config.getint("run.eval_epochs", 3))
        row = {"scheme": s}
        row.update(report)
        rows.append(row)
    deltas = []
    for i, a in enumerate(rows):
        for b in rows[i + 1:]:
            base = a["mean_rate_mbits"]
            deltas.append({
                "pair": f"{a['scheme']}->{b['scheme']}",
                "rate_delta_rel": (b["mean_rate_mbits"] - base)
                / max(base, 1e-12),
                "prb_delta_rel": (b["prbs_per_mb"] - a["prbs_per_mb"])
                / max(a["prbs_per_mb"], 1e-12),
            })
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        _write_table(rows, os.path.join(out_dir, "schemes.tsv"))
        _write_table(deltas, os.path.join(out_dir, "scheme_deltas.tsv"))
        _write_manifest(config, master_seed, out_dir)
    return rows, deltas


def cluster_blackspots(config, master_seed, out_dir):
    """Fit the black-spot map alone; emit the map and the trade-off table."""
    os.makedirs(out_dir, exist_ok=True)
    artifacts = ExperimentArtifacts(config, master_seed)
    bs_map = artifacts.blackspot_map()
    bs.save_map(bs_map, os.path.join(out_dir, "blackspots.txt"))
    thresholds = [float(v) for v in config.getlist(
        "blackspot.tradeoff_thresholds", ["0.5", "1", "2", "3", "1e9"])]
    cfg = bs.BlackSpotConfig(
        n_clusters=config.getint("blackspot.n_clusters", 100),
        max_track_elimination=config.getfloat(
            "blackspot.max_track_elimination", 0.20),
        b_min=config.getfloat("blackspot.b_min", 10.0),
        seed=derive_seed(master_seed, "blackspot"))
    rows = bs.tradeoff_curve(artifacts.error_samples, cfg, thresholds)
    with open(os.path.join(out_dir, "tradeoff.tsv"), "w",
              encoding="utf-8") as fh:
        fh.write("rmse_max\teliminated_fraction\tr2\trmse\tdegenerate\n")
        for row in rows:
            fh.write("\t".join(repr(v) for v in row) + "\n")
    _write_manifest(config, master_seed, out_dir)
    return bs_map, rows


def drift_experiment(config, master_seed, out_dir=None):
    """Concept-drift proof of concept on synthetic A/B operator datasets."""
    syn = synthetic_config_from(config)
    shift = config.getfloat("drift.rate_shift", 5.0)
    scale = config.getfloat("drift.rate_scale", 2.0)
    count = config.getint("trace.synthetic.train_count", 2)
    traces_a = [generate_synthetic_trace(
        syn, derive_seed(master_seed, "drift-a", i)) for i in range(count)]
    traces_b = [generate_synthetic_trace(
        syn, derive_seed(master_seed, "drift-b", i)) for i in range(count)]
    enc_a, xa, ya = training_set(traces_a)
    _, xb, yb = training_set(traces_b)
    # affine feature-target drift: a pure shift would only require the net
    # to re-learn its output bias, which adapts too abruptly to observe the
    # gradual-recovery phase; the multiplicative part re-shapes the slope
    yb = np.maximum(yb * scale + shift, 0.05)
    rmse_a, rmse_b = concept_drift_experiment(
        xa, ya, xb, yb, split=config.getfloat("drift.split", 0.8),
        seed=derive_seed(master_seed, "drift-net"),
        pretrain_epochs=config.getint("drift.pretrain_epochs", 200))
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "drift.tsv"), "w",
                  encoding="utf-8") as fh:
            fh.write("batch\trmse_a\trmse_b\n")
            for i, (a, b) in enumerate(zip(rmse_a, rmse_b)):
                fh.write(f"{i}\t{a!r}\t{b!r}\n")
        _write_manifest(config, master_seed, out_dir)
    return rmse_a, rmse_b


def _write_table(rows, path):
    if not rows:
        return
    keys = list(rows[0])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(keys) + "\n")
        for row in rows:
            fh.write("\t".join(
                row[k] if isinstance(row[k], str) else repr(row[k])
                for k in keys) + "\n")


def _write_manifest(config, master_seed, out_dir):
    with open(os.path.join(out_dir, "manifest.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(f"master_seed {master_seed}\n")
        for key in sorted(config.values):
            fh.write(f"{key} = {config.values[key]}\n")
        # wall-clock line; excluded from determinism comparisons
        fh.write(f"generated_at {time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
