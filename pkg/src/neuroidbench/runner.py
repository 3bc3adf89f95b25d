"""Benchmark execution: dataset loading, cell scheduling, artifact emission.

A cell is one (dataset sweep point, pipeline) pair. Cells are independent:
each derives all of its randomness from the evaluation seed and its own
identifiers, so a failure in one cell cannot disturb another and any
execution order, including a thread pool, produces identical artifacts.

Emitted files: results.csv (per-fold rows plus aggregated rows with
user=fold=ALL), summary.json (resolved config, per-cell statistics,
environment stamp), resolved_config.yml, and one roc_*.csv with a matching
SVG plot per cell.
"""

from __future__ import annotations

import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._version import __version__
from .bundle import read_bundle
from .classifiers import ClassifierSpec
from .config import BenchmarkConfig, emit_config
from .errors import BenchmarkError, ConfigError, IoError
from .evaluation import EvalPlan, ScoreSet, ShallowPipeline, TwinPipeline, run_plan
from .features import FeatureRecipe
from .metrics import (
    DEFAULT_FMR_LEVELS,
    aggregate,
    eer_from_curve,
    fnmr_at_fmr_from_curve,
    level_label,
    report,
    roc,
)
from .preprocessing import PreprocessParams, concat_epochs, preprocess_recording
from .synthetic import SynthConfig, generate
from .twin import TwinConfig

RESULT_COLUMNS = (
    "dataset,pipeline,scheme,attacker,session_pair,user,fold,"
    "eer,fnmr_fmr_1e2,fnmr_fmr_1e3,fnmr_fmr_1e4,n_genuine,n_impostor,warn_resolution"
)

_CLASSIFIER_STEPS = {
    "SVC": lambda p: ClassifierSpec("SVM", {"C": float(p["C"])}),
    "RandomForestClassifier": lambda p: ClassifierSpec(
        "RF", {"n_trees": p["n_estimators"], "n_jobs": p["n_jobs"]}
    ),
    "KNN": lambda p: ClassifierSpec("KNN", {"k": p["n_neighbors"]}),
    "LDA": lambda p: ClassifierSpec("LDA", {}),
    "LogisticRegression": lambda p: ClassifierSpec(
        "LR", {"l2": p["l2"], "max_iter": p["max_iter"], "tol": p["tol"]}
    ),
    "GaussianNB": lambda p: ClassifierSpec("NB", {"var_floor": p["var_floor"]}),
}


@dataclass
class CellResult:
    dataset: str
    pipeline: str
    reports: list = field(default_factory=list)
    skips: list = field(default_factory=list)
    pooled_curve: object = None
    pooled: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class RunRecord:
    config: BenchmarkConfig
    cells: list
    environment: dict
    wall_time_s: float

    @property
    def failed(self):
        return [c for c in self.cells if c.error is not None]


def build_pipeline(name, steps):
    """Turn a resolved step list into the object the evaluator runs."""
    last = steps[-1]
    if last["name"] == "TwinNeuralNetwork":
        p = last["parameters"]
        config = TwinConfig(
            embedding_dim=p["embedding_dim"],
            margin=p["margin"],
            epochs=p["EPOCHS"],
            batch_size=p["batch_size"],
            learning_rate=p["learning_rate"],
            verbose=bool(p["verbose"]),
            workers=p["workers"],
        )
        return TwinPipeline(name, config)
    use_ar = use_psd = False
    ar_order, n_windows, overlap = 1, 4, 0.5
    for step in steps[:-1]:
        if step["name"] == "AutoRegressive":
            use_ar = True
            ar_order = step["parameters"]["order"]
        elif step["name"] == "PowerSpectralDensity":
            use_psd = True
            n_windows = step["parameters"]["n_windows"]
            overlap = step["parameters"]["overlap"]
    recipe = FeatureRecipe(
        use_ar=use_ar,
        ar_order=ar_order,
        use_psd=use_psd,
        psd_n_windows=n_windows,
        psd_overlap=overlap,
    )
    recipe.validate()
    return ShallowPipeline(name, recipe, _CLASSIFIER_STEPS[last["name"]](last["parameters"]))


def _load_recordings(entry):
    name = entry["name"]
    params = entry["parameters"]
    if name == "Synthetic":
        synth = SynthConfig(
            n_subjects=params["subjects"],
            n_sessions=params["sessions"],
            epochs_per_session=params["epochs_per_session"],
            sampling_rate_hz=float(params["rate"]),
            n_channels=params["channels"],
            subject_separability=params["separability"],
            session_drift=params["drift"],
            noise_std_uv=params["noise_std"],
            seed=params["seed"],
        )
        _, recordings = generate(synth)
        return recordings
    path = params.get("dataset_path")
    if not path:
        raise ConfigError(
            f"dataset {name}: set parameters.dataset_path to an exported bundle directory"
        )
    bundle = read_bundle(path)
    recordings = list(bundle.iter_recordings())
    if params.get("subjects") is not None:
        keep = []
        for rec in recordings:
            if rec.subject_id not in keep:
                keep.append(rec.subject_id)
        keep = set(keep[: params["subjects"]])
        recordings = [rec for rec in recordings if rec.subject_id in keep]
    return recordings


def _preprocess_all(recordings, interval, rejection_threshold):
    params = PreprocessParams(
        epoch_tmin_s=float(interval[0]),
        epoch_tmax_s=float(interval[1]),
        baseline_window_s=(float(interval[0]), 0.0) if interval[0] < 0.0 < interval[1] else None,
        ptp_reject_uv=rejection_threshold,
    )
    parts = []
    for rec in recordings:
        epochs, _ = preprocess_recording(rec, params)
        if epochs.n_epochs:
            parts.append(epochs)
    return concat_epochs(parts)


def _sweep_points(entry, sweeps):
    base = entry["parameters"]
    intervals = sweeps["interval"] or [base["interval"]]
    thresholds = sweeps["rejection_threshold"] or [base["rejection_threshold"]]
    points = []
    for interval in intervals:
        for threshold in thresholds:
            label = entry["name"]
            if sweeps["interval"]:
                label += f"#interval={interval[0]:g}:{interval[1]:g}"
            if sweeps["rejection_threshold"]:
                label += f"#ptp={threshold:g}" if threshold is not None else "#ptp=none"
            points.append((label, interval, threshold))
    return points


def _execute_cell(label, pipeline_name, epochs, pipeline, plan):
    cell = CellResult(dataset=label, pipeline=pipeline_name)
    try:
        result = run_plan(epochs, pipeline, plan)
        cell.reports = [report(ss, context=ss.context) for ss in result.score_sets]
        cell.skips = result.skips
        pooled = ScoreSet(
            np.concatenate([np.asarray(ss.genuine) for ss in result.score_sets]),
            np.concatenate([np.asarray(ss.impostor) for ss in result.score_sets]),
        )
        cell.pooled_curve = roc(pooled)
        cell.pooled = {"eer": eer_from_curve(cell.pooled_curve)}
        for level in DEFAULT_FMR_LEVELS:
            cell.pooled[level_label(level)] = fnmr_at_fmr_from_curve(cell.pooled_curve, level)
    except BenchmarkError as exc:
        cell.error = f"{type(exc).__name__}: {exc}"
    return cell


def run(config: BenchmarkConfig, output_dir, jobs=1) -> RunRecord:
    """Execute every cell of the config and write all artifacts.

    A failing cell is recorded with its error and the run continues; the
    caller decides the exit code from record.failed.
    """
    start = time.monotonic()
    plan = EvalPlan(
        scheme=config.evaluation["scheme"],
        attacker=config.evaluation["attacker"],
        k_folds=config.evaluation["k_folds"],
        min_samples_per_user=config.evaluation["min_samples_per_user"],
        seed=config.evaluation["seed"],
    )
    plan.validate()
    pipelines = {name: build_pipeline(name, steps) for name, steps in config.pipelines.items()}

    pending = []  # (label, pipeline_name, epochs or None, pipeline, error)
    for entry in config.datasets:
        points = _sweep_points(entry, config.sweeps)
        try:
            recordings = _load_recordings(entry)
        except BenchmarkError as exc:
            for label, _, _ in points:
                for pname in pipelines:
                    pending.append((label, pname, None, None, f"{type(exc).__name__}: {exc}"))
            continue
        for label, interval, threshold in points:
            try:
                epochs = _preprocess_all(recordings, interval, threshold)
            except BenchmarkError as exc:
                for pname in pipelines:
                    pending.append((label, pname, None, None, f"{type(exc).__name__}: {exc}"))
                continue
            for pname, pobj in pipelines.items():
                pending.append((label, pname, epochs, pobj, None))

    def one(item):
        label, pname, epochs, pobj, error = item
        if error is not None:
            return CellResult(dataset=label, pipeline=pname, error=error)
        return _execute_cell(label, pname, epochs, pobj, plan)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(one, pending))
    else:
        cells = [one(item) for item in pending]

    environment = {
        "version": __version__,
        "seed": plan.seed,
        "scheme": plan.scheme,
        "attacker": plan.attacker,
        "subject_selection": "first N subjects in manifest order",
    }
    record = RunRecord(config, cells, environment, time.monotonic() - start)
    emit_reports(record, output_dir)
    record.wall_time_s = time.monotonic() - start
    return record


def _fmt(value) -> str:
    return f"{value:.12g}"


def _slug(text) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", str(text))


def _report_row(cell, plan_scheme, plan_attacker, rep):
    ctx = rep.context
    pair = f"{ctx['enroll_session']}:{ctx['probe_session']}"
    warn = any(rep.resolution_warnings.values())
    cols = [
        cell.dataset,
        cell.pipeline,
        plan_scheme,
        plan_attacker,
        pair,
        str(ctx["user_id"]),
        str(ctx["fold"]),
        _fmt(rep.eer),
    ]
    cols += [_fmt(rep.fnmr_at_fmr[level]) for level in DEFAULT_FMR_LEVELS]
    cols += [str(rep.n_genuine), str(rep.n_impostor), str(warn)]
    return ",".join(cols)


def _aggregated_rows(cell, plan_scheme, plan_attacker):
    rows = []
    by_pair = {}
    for rep in cell.reports:
        pair = f"{rep.context['enroll_session']}:{rep.context['probe_session']}"
        by_pair.setdefault(pair, []).append(rep)

    def emit(pair, members):
        agg = aggregate(members)[0]
        warn = any(any(m.resolution_warnings.values()) for m in members)
        cols = [cell.dataset, cell.pipeline, plan_scheme, plan_attacker, pair, "ALL", "ALL"]
        cols.append(_fmt(agg["eer_mean"]))
        cols += [_fmt(agg[f"{level_label(level)}_mean"]) for level in DEFAULT_FMR_LEVELS]
        cols.append(str(sum(m.n_genuine for m in members)))
        cols.append(str(sum(m.n_impostor for m in members)))
        cols.append(str(warn))
        rows.append(",".join(cols))

    for pair in sorted(by_pair):
        emit(pair, by_pair[pair])
    if len(by_pair) > 1:
        emit("ALL", cell.reports)
    return rows


def emit_reports(record: RunRecord, output_dir) -> None:
    """Write results.csv, summary.json, resolved_config.yml, roc CSVs, SVGs."""
    out = Path(output_dir)
    scheme = record.environment["scheme"]
    attacker = record.environment["attacker"]
    try:
        out.mkdir(parents=True, exist_ok=True)
        lines = [RESULT_COLUMNS]
        for cell in record.cells:
            if cell.error is not None:
                continue
            for rep in cell.reports:
                lines.append(_report_row(cell, scheme, attacker, rep))
            lines.extend(_aggregated_rows(cell, scheme, attacker))
        (out / "results.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

        summary_cells = {}
        for cell in record.cells:
            key = f"{cell.dataset}::{cell.pipeline}"
            if cell.error is not None:
                summary_cells[key] = {"status": "failed", "error": cell.error}
                continue
            agg = aggregate(cell.reports)[0]
            entry = {
                "status": "ok",
                "n_score_sets": len(cell.reports),
                "n_skips": len(cell.skips),
                "eer_mean": agg["eer_mean"],
                "eer_std": agg["eer_std"],
                "pooled": cell.pooled,
            }
            for level in DEFAULT_FMR_LEVELS:
                entry[f"{level_label(level)}_mean"] = agg[f"{level_label(level)}_mean"]
                entry[f"{level_label(level)}_std"] = agg[f"{level_label(level)}_std"]
            summary_cells[key] = entry
        summary = {
            "name": record.config.name,
            "config": record.config.to_dict(),
            "environment": record.environment,
            "cells": summary_cells,
        }
        (out / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        (out / "resolved_config.yml").write_text(emit_config(record.config), encoding="utf-8")

        from .svgplot import roc_svg

        for cell in record.cells:
            if cell.error is not None:
                continue
            stem = f"roc_{_slug(cell.dataset)}_{_slug(cell.pipeline)}_{scheme}_{attacker}"
            curve = cell.pooled_curve
            rows = ["threshold,fmr,fnmr"]
            rows += [
                f"{_fmt(t)},{_fmt(f)},{_fmt(m)}"
                for t, f, m in zip(curve.thresholds, curve.fmr, curve.fnmr)
            ]
            (out / f"{stem}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
            title = f"{cell.dataset} / {cell.pipeline} ({scheme}, {attacker} attacker)"
            (out / f"{stem}.svg").write_text(
                roc_svg(curve.fmr, curve.fnmr, title), encoding="utf-8"
            )
    except OSError as exc:
        raise IoError(f"cannot write report files under {out}: {exc}") from exc
