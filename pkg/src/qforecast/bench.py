"""Experiment orchestration: configs, the benchmark grid, reports, and files.

A config is a nested key-value document (YAML or JSON) validated against a
schema. Every experiment is fully determined by its config: datasets are
seeded, windows are deterministic, and metric CSVs are byte-identical across
reruns. Reports echo the config so any report can be reproduced from itself.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from . import baselines as bl
from . import diagnostics as dg
from . import kqrc
from . import qgp
from .data import (
    GeneratorParams,
    SubsetSpec,
    TimeSeriesDataset,
    generate_synthetic,
    load_csv,
    rolling_windows,
    select_correlated_subset,
)
from .metrics import compute_metrics, tier_classify

EXPERIMENT_KINDS = (
    "kqrc_triplet",
    "qgp_group",
    "qgp_utility",
    "qubit_scaling",
    "diagnostics",
    "baselines",
)

RELATIVE_ERROR_THRESHOLD = 0.30  # reference line for the qubit-scaling curves


class ConfigError(ValueError):
    """Invalid experiment configuration (reported with the failing field path)."""


CONFIG_SCHEMA = {
    "type": "object",
    "required": ["kind", "output_dir", "dataset"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(EXPERIMENT_KINDS)},
        "seed": {"type": "integer"},
        "output_dir": {"type": "string"},
        "backend": {"enum": ["dense", "mps"]},
        "dataset": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "source": {"enum": ["synthetic", "csv"]},
                "path": {"type": ["string", "null"]},
                "n_customers": {"type": "integer", "minimum": 1},
                "n_hours": {"type": "integer", "minimum": 20},
                "seed": {"type": "integer"},
                "n_clusters": {"type": "integer", "minimum": 1},
                "cluster_loading": {"type": "number", "minimum": 0, "maximum": 1},
                "noise_scale": {"type": "number", "minimum": 0},
                "daily_amplitude": {"type": "number", "minimum": 0},
                "factor_scale": {"type": "number", "minimum": 0},
                "ar_coeff": {"type": "number", "minimum": 0, "maximum": 0.999},
                "peak_rate": {"type": "number", "minimum": 0, "maximum": 1},
                "peak_scale": {"type": "number", "minimum": 0},
                "base_level": {"type": "number", "minimum": 0},
            },
        },
        "subset": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "role": {"enum": ["triplet", "group", "utility"]},
                "size": {"type": "integer", "minimum": 1},
                "members": {
                    "type": ["array", "null"],
                    "items": {"type": "string"},
                },
            },
        },
        "windows": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "train_len": {"type": "integer", "minimum": 2},
                "horizon": {"type": "integer", "minimum": 1},
                "stride": {"type": "integer", "minimum": 1},
                "count": {"type": "integer", "minimum": 1},
            },
        },
        "kqrc": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "qubits_per_stream": {"type": "integer", "minimum": 2},
                "cross_stream_entanglement": {"type": "boolean"},
                "encoding_angle_scale": {"type": "number"},
                "reservoir_seed": {"type": "integer"},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "ridge_lambda": {"type": "number", "exclusiveMinimum": 0},
                "shots": {"type": ["integer", "null"], "minimum": 1},
                "shot_seed": {"type": "integer"},
            },
        },
        "qgp": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_iterations": {"type": "integer", "minimum": 0},
                "step_size": {"type": "number", "exclusiveMinimum": 0},
                "init_noise": {"type": "number", "exclusiveMinimum": 0},
                "theta_seed": {"type": "integer"},
                "angle_scale": {"type": "number"},
                "train_qubits": {"type": ["integer", "null"], "minimum": 2},
                "max_bond": {"type": "integer", "minimum": 2},
            },
        },
        "esn": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "reservoir_size": {"type": "integer", "minimum": 1},
                "spectral_radius": {"type": "number", "exclusiveMinimum": 0},
                "leak_rate": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "input_scale": {"type": "number"},
                "seed": {"type": "integer"},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "ridge_lambda": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "mogp": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "length_scale": {"type": "number", "exclusiveMinimum": 0},
                "noise": {"type": "number", "exclusiveMinimum": 0},
                "optimize": {"type": "boolean"},
                "n_iterations": {"type": "integer", "minimum": 0},
                "step_size": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sizes": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "repetitions": {"type": "integer", "minimum": 1},
                "subset_size": {"type": "integer", "minimum": 2},
                "quantum_kernel": {"enum": ["fidelity", "projected"]},
            },
        },
        "scaling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "qubit_sizes": {"type": "array", "items": {"type": "integer", "minimum": 2}},
            },
        },
    },
}

_DEFAULTS = {
    "seed": 0,
    "backend": "dense",
    "dataset": {
        "source": "synthetic",
        "path": None,
        "n_customers": 103,
        "n_hours": 480,
        "seed": 11,
        "n_clusters": 3,
        "cluster_loading": 0.8,
        "noise_scale": 0.2,
        "daily_amplitude": 0.1,
        "factor_scale": 0.35,
        "ar_coeff": 0.3,
        "peak_rate": 0.01,
        "peak_scale": 1.2,
        "base_level": 0.6,
    },
    "subset": {"role": "triplet", "size": 3, "members": None},
    "windows": {"train_len": 15, "horizon": 5, "stride": 24, "count": 5},
    "kqrc": {
        "qubits_per_stream": 4,
        "cross_stream_entanglement": True,
        "encoding_angle_scale": float(np.pi),
        "reservoir_seed": 3,
        "gamma": 200.0,
        "ridge_lambda": 1e-2,
        "shots": None,
        "shot_seed": 0,
    },
    "qgp": {
        "n_iterations": 30,
        "step_size": 0.05,
        "init_noise": 0.05,
        "theta_seed": 5,
        "angle_scale": float(np.pi / 4),
        "train_qubits": None,
        "max_bond": 64,
    },
    "esn": {
        "reservoir_size": 100,
        "spectral_radius": 0.9,
        "leak_rate": 0.3,
        "input_scale": 1.0,
        "seed": 0,
        "gamma": 1.0,
        "ridge_lambda": 1e-3,
    },
    "mogp": {
        "length_scale": 0.5,
        "noise": 0.05,
        "optimize": True,
        "n_iterations": 60,
        "step_size": 0.02,
    },
    "diagnostics": {
        "sizes": [8, 16, 32, 64],
        "repetitions": 10,
        "subset_size": 5,
        "quantum_kernel": "fidelity",
    },
    "scaling": {"qubit_sizes": [2, 3, 4, 5]},
}


def _merge_defaults(raw: dict) -> dict:
    merged = {}
    for key, default in _DEFAULTS.items():
        if isinstance(default, dict):
            section = dict(default)
            section.update(raw.get(key) or {})
            merged[key] = section
        else:
            merged[key] = raw.get(key, default)
    for key in ("kind", "output_dir"):
        if key in raw:
            merged[key] = raw[key]
    return merged


@dataclass
class ExperimentConfig:
    """Validated, default-filled experiment description."""

    raw: dict

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        merged = _merge_defaults(data)
        if jsonschema is not None:
            validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
            errors = sorted(validator.iter_errors(merged), key=lambda e: e.json_path)
            if errors:
                details = "; ".join(f"{e.json_path}: {e.message}" for e in errors[:5])
                raise ConfigError(f"invalid config: {details}")
        if merged.get("kind") not in EXPERIMENT_KINDS:
            raise ConfigError(f"$.kind: must be one of {EXPERIMENT_KINDS}")
        if not merged.get("output_dir"):
            raise ConfigError("$.output_dir: required")
        return cls(raw=merged)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: cannot parse config: {exc}") from exc
        return cls.from_dict(data or {})

    def __getitem__(self, key):
        return self.raw[key]

    def with_overrides(self, seed=None, output_dir=None, backend=None) -> "ExperimentConfig":
        raw = json.loads(json.dumps(self.raw))
        if seed is not None:
            raw["seed"] = int(seed)
        if output_dir is not None:
            raw["output_dir"] = str(output_dir)
        if backend is not None:
            raw["backend"] = backend
        return ExperimentConfig(raw=raw)


# ---------------------------------------------------------------------------
# experiment building blocks
# ---------------------------------------------------------------------------


def _build_dataset(cfg: ExperimentConfig) -> TimeSeriesDataset:
    d = cfg["dataset"]
    if d["source"] == "csv":
        if not d.get("path"):
            raise ConfigError("$.dataset.path: required when source is csv")
        return load_csv(d["path"])
    params = GeneratorParams(
        n_clusters=d["n_clusters"],
        cluster_loading=d["cluster_loading"],
        daily_amplitude=d["daily_amplitude"],
        factor_scale=d["factor_scale"],
        ar_coeff=d["ar_coeff"],
        noise_scale=d["noise_scale"],
        peak_rate=d["peak_rate"],
        peak_scale=d["peak_scale"],
        base_level=d["base_level"],
    )
    return generate_synthetic(
        n_customers=d["n_customers"], n_hours=d["n_hours"], params=params, seed=d["seed"]
    )


def _resolve_subset(cfg: ExperimentConfig, dataset: TimeSeriesDataset) -> SubsetSpec:
    s = cfg["subset"]
    if s.get("members"):
        return SubsetSpec(role=s["role"], member_ids=tuple(s["members"]))
    if s["role"] == "utility":
        return SubsetSpec(role="utility", member_ids=tuple(dataset.customer_ids[: s["size"]]))
    return select_correlated_subset(dataset, s["size"], role=s["role"])


def _windows(cfg: ExperimentConfig, dataset: TimeSeriesDataset):
    w = cfg["windows"]
    return rolling_windows(
        dataset, train_len=w["train_len"], horizon=w["horizon"], stride=w["stride"],
        max_windows=w["count"],
    )


def _kqrc_config(cfg: ExperimentConfig, n_streams: int, **overrides) -> kqrc.ReservoirConfig:
    k = dict(cfg["kqrc"])
    k.update(overrides)
    return kqrc.ReservoirConfig(
        n_streams=n_streams,
        qubits_per_stream=k["qubits_per_stream"],
        cross_stream_entanglement=k["cross_stream_entanglement"],
        encoding_angle_scale=k["encoding_angle_scale"],
        reservoir_seed=k["reservoir_seed"],
        gamma=k["gamma"],
        ridge_lambda=k["ridge_lambda"],
        shots=k["shots"],
        shot_seed=k["shot_seed"],
    )


def _average_metrics(metric_sets) -> dict:
    cell_mae = np.mean([m.per_cell_mae for m in metric_sets], axis=0)
    cell_mse = np.mean([m.per_cell_mse for m in metric_sets], axis=0)
    from .metrics import MetricSet

    return MetricSet(per_cell_mae=cell_mae, per_cell_mse=cell_mse).to_dict()


def _model_section(per_window_outputs, windows) -> dict:
    metric_sets = [compute_metrics(o.predictions, o.truth) for o in per_window_outputs]
    return {
        "per_window": [
            {"origin": w.origin, "window_hash": w.content_hash(), **m.to_dict()}
            for w, m in zip(windows, metric_sets)
        ],
        "average": _average_metrics(metric_sets),
    }


# ---------------------------------------------------------------------------
# per-kind runners
# ---------------------------------------------------------------------------


def _run_kqrc_triplet(cfg, dataset, subset, windows):
    rcfg = _kqrc_config(cfg, n_streams=len(subset.member_ids))
    kq = [kqrc.forecast(w, rcfg) for w in windows]
    naive = [bl.naive_persistence(w) for w in windows]
    return {"kqrc": _model_section(kq, windows), "naive": _model_section(naive, windows)}


def _run_qgp_group(cfg, dataset, subset, windows):
    q = cfg["qgp"]
    outs = [
        qgp.qgp_forecast(
            w, backend=cfg["backend"], theta_seed=q["theta_seed"],
            angle_scale=q["angle_scale"], init_noise=q["init_noise"],
            n_iterations=q["n_iterations"], step_size=q["step_size"],
            train_qubits=q["train_qubits"], max_bond=q["max_bond"],
        )
        for w in windows
    ]
    naive = [bl.naive_persistence(w) for w in windows]
    section = {"qgp": _model_section(outs, windows), "naive": _model_section(naive, windows)}
    section["qgp"]["loss_trace"] = outs[0].loss_trace
    section["qgp"]["noise"] = outs[0].noise
    return section


def _run_qgp_utility(cfg, dataset, subset, windows):
    q = cfg["qgp"]
    window = windows[0]  # fixed single split at utility scale
    out = qgp.qgp_forecast(
        window, backend=cfg["backend"], theta_seed=q["theta_seed"],
        angle_scale=q["angle_scale"], init_noise=q["init_noise"],
        n_iterations=q["n_iterations"], step_size=q["step_size"],
        train_qubits=q["train_qubits"] or 5, max_bond=q["max_bond"],
    )
    naive = bl.naive_persistence(window)
    section = {
        "qgp": _model_section([out], [window]),
        "naive": _model_section([naive], [window]),
    }
    section["qgp"]["loss_trace"] = out.loss_trace
    section["qgp"]["theta_tiled_from"] = q["train_qubits"] or 5
    return section


def _run_baselines(cfg, dataset, subset, windows):
    esn_cfg = bl.EsnConfig(**cfg["esn"])
    mogp_cfg = bl.LmcConfig(**cfg["mogp"])
    esn = [bl.esn_krr_forecast(w, esn_cfg) for w in windows]
    mogp = [bl.mogp_fit_predict(w, mogp_cfg) for w in windows]
    naive = [bl.naive_persistence(w) for w in windows]
    return {
        "esn_krr": _model_section(esn, windows),
        "mogp": _model_section(mogp, windows),
        "naive": _model_section(naive, windows),
    }


def _run_qubit_scaling(cfg, dataset, subset, windows):
    rows = []
    for n_q in cfg["scaling"]["qubit_sizes"]:
        for entangled in (True, False):
            rcfg = _kqrc_config(
                cfg, n_streams=len(subset.member_ids),
                qubits_per_stream=n_q, cross_stream_entanglement=entangled,
            )
            rel_errors = []
            for w in windows:
                out = kqrc.forecast(w, rcfg)
                m = compute_metrics(out.predictions, out.truth)
                denom = float(np.mean(np.abs(w.normalized_train())))
                rel_errors.append(m.mae / denom if denom > 0 else np.inf)
            rows.append(
                {
                    "n_qubits": int(n_q),
                    "entangled": bool(entangled),
                    "avg_relative_error": float(np.mean(rel_errors)),
                }
            )
    return {"qubit_scaling": rows, "threshold": RELATIVE_ERROR_THRESHOLD}


def _run_diagnostics(cfg, dataset, subset, windows):
    d = cfg["diagnostics"]
    records = dg.scaling_study(
        dataset, sizes=d["sizes"], repetitions=d["repetitions"], seed=cfg["seed"],
        subset_size=d["subset_size"], quantum_kernel=d["quantum_kernel"],
    )
    summaries = dg.summarize_scaling(records)
    return {
        "records": [asdict(r) for r in records],
        "summary": [asdict(s) for s in summaries],
    }


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    subset: dict
    window_hashes: list[dict]
    models: dict = field(default_factory=dict)
    tiers: list[dict] | None = None
    extras: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "subset": self.subset,
            "window_hashes": self.window_hashes,
            "models": self.models,
            "tiers": self.tiers,
            "extras": self.extras,
            "wall_clock_seconds": self.wall_clock_seconds,
        }


def run_experiment(cfg: ExperimentConfig | dict) -> ExperimentReport:
    """Execute one experiment config and assemble its report."""
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    started = time.perf_counter()
    kind = cfg["kind"]
    if kind == "qgp_utility" and cfg["subset"]["role"] != "utility":
        raise ConfigError(
            "$.subset.role: must be 'utility' (with a size) for qgp_utility runs"
        )
    dataset = _build_dataset(cfg)
    subset = _resolve_subset(cfg, dataset)
    sub_ds = dataset.subset(subset.member_ids)
    windows = _windows(cfg, sub_ds)

    runners = {
        "kqrc_triplet": _run_kqrc_triplet,
        "qgp_group": _run_qgp_group,
        "qgp_utility": _run_qgp_utility,
        "baselines": _run_baselines,
        "qubit_scaling": _run_qubit_scaling,
        "diagnostics": _run_diagnostics,
    }
    result = runners[kind](cfg, dataset, subset, windows)

    models, extras = {}, {}
    for key, value in result.items():
        if isinstance(value, dict) and "per_window" in value:
            models[key] = value
        else:
            extras[key] = value

    tiers = None
    primary = next(iter(models)) if models else None
    if primary is not None:
        avg = models[primary]["average"]
        tiers = [
            asdict(row)
            for row in tier_classify(avg["per_customer_mae"], avg["per_customer_mse"])
        ]
    return ExperimentReport(
        kind=kind,
        config=cfg.raw,
        subset={"role": subset.role, "member_ids": list(subset.member_ids)},
        window_hashes=[{"origin": w.origin, "hash": w.content_hash()} for w in windows],
        models=models,
        tiers=tiers,
        extras=extras,
        wall_clock_seconds=time.perf_counter() - started,
    )


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _render_text(value, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(value, dict):
        for key in value:
            sub = value[key]
            if isinstance(sub, (dict, list)) and sub:
                lines.append(f"{pad}{key}:")
                lines.extend(_render_text(sub, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_fmt(sub) if sub is not None else 'null'}")
    elif isinstance(value, list):
        for i, item in enumerate(value):
            if isinstance(item, (dict, list)):
                lines.append(f"{pad}- [{i}]")
                lines.extend(_render_text(item, indent + 1))
            else:
                lines.append(f"{pad}- {_fmt(item)}")
    else:
        lines.append(f"{pad}{_fmt(value)}")
    return lines


def _write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def emit_report(report: ExperimentReport, out_dir=None) -> list[Path]:
    """Write report.json, report.txt, metric CSVs, and plot-data CSVs."""
    out = Path(out_dir if out_dir is not None else report.config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    written = []

    payload = report.to_dict()
    json_path = out / "report.json"
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True))
    written.append(json_path)
    txt_path = out / "report.txt"
    txt_path.write_text("\n".join(_render_text(payload)) + "\n")
    written.append(txt_path)

    ids = report.subset["member_ids"]
    for name in sorted(report.models):
        avg = report.models[name]["average"]
        rows = []
        cell_mae = avg["per_cell_mae"]
        cell_mse = avg["per_cell_mse"]
        for s, cid in enumerate(ids[: len(cell_mae)]):
            for h in range(len(cell_mae[s])):
                rows.append([cid, h + 1, cell_mae[s][h], cell_mse[s][h]])
        written.append(
            _write_csv(out / f"metrics_{name}.csv", ["customer", "horizon", "mae", "mse"], rows)
        )

    if report.models:
        rows = []
        for name in sorted(report.models):
            avg = report.models[name]["average"]
            for s, cid in enumerate(ids[: len(avg["per_cell_mae"])]):
                for h, v in enumerate(avg["per_cell_mae"][s]):
                    rows.append([name, cid, h + 1, v])
        written.append(
            _write_csv(
                out / "plot_per_horizon_mae.csv", ["model", "customer", "horizon", "mae"], rows
            )
        )
        rows = []
        for name in sorted(report.models):
            avg = report.models[name]["average"]
            for s, cid in enumerate(ids[: len(avg["per_customer_mae"])]):
                rows.append([name, cid, avg["per_customer_mae"][s]])
        written.append(
            _write_csv(out / "plot_model_comparison.csv", ["model", "customer", "avg_mae"], rows)
        )

    if report.tiers:
        rows = [
            [t["tier"], t["mae_range"], t["share_pct"], t["avg_mae"],
             t["avg_mse"] if t["avg_mse"] is not None else "", t["count"]]
            for t in report.tiers
        ]
        written.append(
            _write_csv(
                out / "tiers.csv",
                ["tier", "mae_range", "share_pct", "avg_mae", "avg_mse", "count"],
                rows,
            )
        )

    if "qubit_scaling" in report.extras:
        rows = [
            [r["n_qubits"], r["entangled"], r["avg_relative_error"], RELATIVE_ERROR_THRESHOLD]
            for r in report.extras["qubit_scaling"]
        ]
        written.append(
            _write_csv(
                out / "plot_qubit_scaling.csv",
                ["n_qubits", "entangled", "avg_relative_error", "threshold"],
                rows,
            )
        )

    if "summary" in report.extras:
        g_rows, k_rows = [], []
        for summary in report.extras["summary"]:
            for kernel in sorted(summary["g_mean"]):
                g_rows.append(
                    [summary["n"], kernel, summary["g_mean"][kernel], summary["g_std"][kernel]]
                )
            for kernel in sorted(summary["kappa_mean"]):
                k_rows.append(
                    [summary["n"], kernel, summary["kappa_mean"][kernel],
                     summary["kappa_std"][kernel]]
                )
        written.append(
            _write_csv(out / "plot_scaling_g.csv", ["n", "kernel", "g_mean", "g_std"], g_rows)
        )
        written.append(
            _write_csv(
                out / "plot_scaling_kappa.csv",
                ["n", "kernel", "kappa_mean", "kappa_std"],
                k_rows,
            )
        )
    return written


def load_report(path) -> ExperimentReport:
    data = json.loads(Path(path).read_text())
    return ExperimentReport(
        kind=data["kind"],
        config=data["config"],
        subset=data["subset"],
        window_hashes=data["window_hashes"],
        models=data["models"],
        tiers=data.get("tiers"),
        extras=data.get("extras", {}),
        wall_clock_seconds=data.get("wall_clock_seconds", 0.0),
    )
