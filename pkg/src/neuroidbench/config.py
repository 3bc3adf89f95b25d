"""Benchmark configuration: YAML schema, validation, defaults, round-trip.

The accepted document shape is

    name: "my benchmark"
    datasets:                  # `dataset:` is accepted as an alias
      - name: Synthetic
        parameters: {subjects: 10, separability: 0.8}
    pipelines:
      "AR+SVM":
        - {name: AutoRegressive, parameters: {order: 5}}
        - {name: SVC, parameters: {kernel: rbf}}
    evaluation: {scheme: single_session, attacker: unknown, k_folds: 4, seed: 0}
    sweeps: {interval: [[-0.1, 0.9]], rejection_threshold: [100]}

Step and dataset entries may carry a `from:` key, which is accepted and
ignored; it names implementation modules in another ecosystem's config
files and keeps those files usable here unchanged. Every other unknown key
is rejected with the YAML path where it appeared. parse_config of
emit_config output reproduces the resolved config exactly.

A UserDataset whose dataset_path still holds an angle-bracket placeholder
(`<local_dataset_path>`) is rejected with a ConfigError saying so; such
placeholders appear verbatim in published example files and must be
replaced with a real bundle directory before running.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .errors import ConfigError

# Catalogue of the real datasets a config may name. Counts and rates are
# the published ones; they document expectations for exported bundles and
# let `subjects: N` be range-checked. Several datasets go by more than one
# spelling in the wild, hence the aliases.
CATALOGUE = {
    "BrainInvaders2015a": {"subjects": 50, "channels": 32, "rate": 512, "sessions": 1, "paradigm": "P300"},
    "ERPCORE_N400": {"subjects": 40, "channels": 30, "rate": 1024, "sessions": 1, "paradigm": "N400"},
    "ERPCORE_P300": {"subjects": 40, "channels": 30, "rate": 1024, "sessions": 1, "paradigm": "P300"},
    "COGBCIFLANKER": {"subjects": 29, "channels": 64, "rate": 512, "sessions": 3, "paradigm": "N400"},
    "Mantegna2019": {"subjects": 31, "channels": 65, "rate": 500, "sessions": 1, "paradigm": "N400"},
    "Huebner_LLP": {"subjects": 13, "channels": 31, "rate": 1000, "sessions": 1, "paradigm": "P300"},
    "Sosulski2019": {"subjects": 13, "channels": 31, "rate": 1000, "sessions": 1, "paradigm": "P300"},
    "Lee2019": {"subjects": 54, "channels": 62, "rate": 1000, "sessions": 2, "paradigm": "P300"},
    "Won2022": {"subjects": 55, "channels": 32, "rate": 512, "sessions": 1, "paradigm": "P300"},
}
DATASET_ALIASES = {
    "BrainInvaders15a": "BrainInvaders2015a",
    "COG_BCI_Flanker": "COGBCIFLANKER",
}

_SYNTH_DEFAULTS = {
    "subjects": 10,
    "sessions": 1,
    "epochs_per_session": 50,
    "rate": 256,
    "channels": 8,
    "separability": 0.5,
    "drift": 0.0,
    "noise_std": 5.0,
    "seed": 0,
}
_COMMON_DATASET_DEFAULTS = {
    "interval": [-0.2, 0.8],
    "rejection_threshold": None,
}

_EVAL_DEFAULTS = {
    "scheme": "single_session",
    "attacker": "unknown",
    "k_folds": 4,
    "min_samples_per_user": 4,
    "seed": 0,
}
_SCHEME_ALIASES = {"single": "single_session", "multi": "multi_session"}

FEATURE_STEPS = ("AutoRegressive", "PowerSpectralDensity")
AUTHENTICATOR_STEPS = (
    "SVC",
    "RandomForestClassifier",
    "KNN",
    "LDA",
    "LogisticRegression",
    "GaussianNB",
    "TwinNeuralNetwork",
)
_STEP_DEFAULTS = {
    "AutoRegressive": {"order": 1},
    "PowerSpectralDensity": {"n_windows": 4, "overlap": 0.5},
    "SVC": {"kernel": "rbf", "class_weight": "balanced", "probability": True, "C": 1.0},
    "RandomForestClassifier": {"class_weight": "balanced", "n_estimators": 100, "n_jobs": 1},
    "KNN": {"n_neighbors": 5},
    "LDA": {},
    "LogisticRegression": {"l2": 1.0, "max_iter": 100, "tol": 1e-8},
    "GaussianNB": {"var_floor": 1e-9},
    "TwinNeuralNetwork": {
        "EPOCHS": 10,
        "batch_size": 256,
        "verbose": 0,
        "workers": 1,
        "learning_rate": 0.001,
        "margin": 1.0,
        "embedding_dim": 32,
        "user_tnn_path": None,
    },
}


@dataclass
class BenchmarkConfig:
    name: str
    datasets: list = field(default_factory=list)
    pipelines: dict = field(default_factory=dict)
    evaluation: dict = field(default_factory=dict)
    sweeps: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "datasets": self.datasets,
            "pipelines": self.pipelines,
            "evaluation": self.evaluation,
            "sweeps": self.sweeps,
        }


def _expect(node, kind, path, what):
    if not isinstance(node, kind) or isinstance(node, bool) and kind is not bool:
        raise ConfigError(f"{path}: expected {what}, got {type(node).__name__}")
    return node


def _reject_unknown(node, allowed, path):
    for key in node:
        if key == "from":
            continue
        if key not in allowed:
            raise ConfigError(f"{path}: unknown key {key!r}")


def _number(value, path, minimum=None, strict_min=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    if strict_min is not None and value <= strict_min:
        raise ConfigError(f"{path}: must be > {strict_min}, got {value}")
    return float(value)


def _integer(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _interval(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{path}: expected [tmin, tmax]")
    tmin = _number(value[0], f"{path}[0]")
    tmax = _number(value[1], f"{path}[1]")
    if not tmin < tmax:
        raise ConfigError(f"{path}: tmin < tmax violated ({tmin} >= {tmax})")
    return [tmin, tmax]


def _resolve_dataset(entry, path):
    _expect(entry, dict, path, "a mapping")
    if "name" not in entry:
        raise ConfigError(f"{path}: missing key 'name'")
    name = _expect(entry["name"], str, f"{path}.name", "a string")
    name = DATASET_ALIASES.get(name, name)
    known = name in CATALOGUE or name in ("Synthetic", "UserDataset")
    if not known:
        raise ConfigError(f"{path}.name: unknown dataset {name!r}")
    _reject_unknown(entry, {"name", "parameters"}, path)
    params = entry.get("parameters") or {}
    _expect(params, dict, f"{path}.parameters", "a mapping")
    ppath = f"{path}.parameters"

    resolved = dict(_COMMON_DATASET_DEFAULTS)
    if name == "Synthetic":
        resolved.update(_SYNTH_DEFAULTS)
    else:
        resolved.update({"subjects": None, "dataset_path": None})
    _reject_unknown(params, set(resolved), ppath)

    for key, value in params.items():
        if key == "from":
            continue
        kpath = f"{ppath}.{key}"
        if key == "interval":
            resolved[key] = _interval(value, kpath)
        elif key == "rejection_threshold":
            resolved[key] = None if value is None else _number(value, kpath, strict_min=0)
        elif key == "subjects":
            resolved[key] = None if value is None else _integer(value, kpath, minimum=1)
        elif key == "dataset_path":
            resolved[key] = None if value is None else _expect(value, str, kpath, "a string")
        elif key in ("sessions", "epochs_per_session", "rate", "channels"):
            resolved[key] = _integer(value, kpath, minimum=1)
        elif key == "seed":
            resolved[key] = _integer(value, kpath, minimum=0)
        elif key in ("separability", "drift"):
            resolved[key] = _number(value, kpath, minimum=0.0)
        elif key == "noise_std":
            resolved[key] = _number(value, kpath, strict_min=0.0)
        else:
            resolved[key] = value
    if name == "Synthetic" and resolved["subjects"] is not None:
        _integer(resolved["subjects"], f"{ppath}.subjects", minimum=1)
    if name in CATALOGUE and resolved["subjects"] is not None:
        available = CATALOGUE[name]["subjects"]
        if resolved["subjects"] > available:
            raise ConfigError(
                f"{ppath}.subjects: {name} has {available} subjects, got {resolved['subjects']}"
            )
    if name == "UserDataset":
        dataset_path = resolved.get("dataset_path")
        if dataset_path is None:
            raise ConfigError(f"{ppath}.dataset_path: UserDataset requires a bundle directory")
        if "<" in dataset_path or ">" in dataset_path:
            raise ConfigError(
                f"{ppath}.dataset_path: {dataset_path!r} is a placeholder; "
                "replace it with the path of an exported bundle directory"
            )
    return {"name": name, "parameters": resolved}


def _resolve_step(step, path):
    _expect(step, dict, path, "a mapping")
    if "name" not in step:
        raise ConfigError(f"{path}: missing key 'name'")
    name = _expect(step["name"], str, f"{path}.name", "a string")
    if name not in _STEP_DEFAULTS:
        raise ConfigError(f"{path}.name: unknown step {name!r}")
    _reject_unknown(step, {"name", "parameters"}, path)
    params = step.get("parameters") or {}
    _expect(params, dict, f"{path}.parameters", "a mapping")
    ppath = f"{path}.parameters"
    resolved = dict(_STEP_DEFAULTS[name])
    _reject_unknown(params, set(resolved), ppath)
    for key, value in params.items():
        if key == "from":
            continue
        kpath = f"{ppath}.{key}"
        if key == "kernel" and value != "rbf":
            raise ConfigError(f"{kpath}: only 'rbf' is supported, got {value!r}")
        if key == "class_weight" and value != "balanced":
            raise ConfigError(f"{kpath}: only 'balanced' is supported, got {value!r}")
        if key in ("order", "n_windows", "n_estimators", "n_neighbors", "EPOCHS",
                   "batch_size", "workers", "max_iter", "embedding_dim"):
            value = _integer(value, kpath, minimum=1)
        if key in ("C", "margin", "learning_rate", "tol", "var_floor"):
            value = _number(value, kpath, strict_min=0.0)
        if key == "l2":
            value = _number(value, kpath, minimum=0.0)
        if key == "overlap":
            value = _number(value, kpath, minimum=0.0)
            if value >= 1:
                raise ConfigError(f"{kpath}: overlap must be < 1, got {value}")
        if key == "user_tnn_path" and value is not None:
            value = _expect(value, str, kpath, "a string")
        resolved[key] = value
    return {"name": name, "parameters": resolved}


def _resolve_pipeline(steps, path):
    if not isinstance(steps, list) or not steps:
        raise ConfigError(f"{path}: expected a nonempty list of steps")
    resolved = [_resolve_step(step, f"{path}[{i}]") for i, step in enumerate(steps)]
    names = [s["name"] for s in resolved]
    authenticators = [n for n in names if n in AUTHENTICATOR_STEPS]
    if not authenticators:
        raise ConfigError(f"{path}: no authenticator step (must end in a classifier or TwinNeuralNetwork)")
    if len(authenticators) > 1:
        raise ConfigError(f"{path}: more than one authenticator step: {authenticators}")
    if names[-1] not in AUTHENTICATOR_STEPS:
        raise ConfigError(f"{path}: the authenticator must be the last step, found {names[-1]!r} after it")
    if names[-1] == "TwinNeuralNetwork" and len(names) > 1:
        raise ConfigError(
            f"{path}: TwinNeuralNetwork consumes raw epochs and cannot follow feature steps"
        )
    if names[-1] != "TwinNeuralNetwork" and len(names) == 1:
        raise ConfigError(
            f"{path}: a shallow classifier needs at least one feature step before it"
        )
    seen = set()
    for i, n in enumerate(names[:-1]):
        if n in seen:
            raise ConfigError(f"{path}[{i}]: duplicate feature step {n!r}")
        seen.add(n)
    return resolved


def _resolve_evaluation(node, path):
    _expect(node, dict, path, "a mapping")
    resolved = dict(_EVAL_DEFAULTS)
    _reject_unknown(node, set(resolved), path)
    for key, value in node.items():
        if key == "from":
            continue
        kpath = f"{path}.{key}"
        if key == "scheme":
            value = _SCHEME_ALIASES.get(value, value)
            if value not in ("single_session", "multi_session"):
                raise ConfigError(f"{kpath}: expected single_session or multi_session, got {value!r}")
        elif key == "attacker":
            if value not in ("known", "unknown"):
                raise ConfigError(f"{kpath}: expected known or unknown, got {value!r}")
        elif key in ("k_folds",):
            value = _integer(value, kpath, minimum=2)
        elif key in ("min_samples_per_user",):
            value = _integer(value, kpath, minimum=1)
        elif key == "seed":
            value = _integer(value, kpath, minimum=0)
        resolved[key] = value
    return resolved


def _resolve_sweeps(node, path):
    _expect(node, dict, path, "a mapping")
    resolved = {"interval": [], "rejection_threshold": []}
    _reject_unknown(node, set(resolved), path)
    if "interval" in node:
        values = node["interval"]
        if not isinstance(values, list):
            raise ConfigError(f"{path}.interval: expected a list of [tmin, tmax] pairs")
        resolved["interval"] = [
            _interval(v, f"{path}.interval[{i}]") for i, v in enumerate(values)
        ]
    if "rejection_threshold" in node:
        values = node["rejection_threshold"]
        if not isinstance(values, list):
            raise ConfigError(f"{path}.rejection_threshold: expected a list")
        resolved["rejection_threshold"] = [
            None if v is None else _number(v, f"{path}.rejection_threshold[{i}]", strict_min=0)
            for i, v in enumerate(values)
        ]
    return resolved


def parse_config(text: str) -> BenchmarkConfig:
    """Parse and validate YAML text into a fully resolved BenchmarkConfig.

    Every default is materialized, so emitting the result and parsing it
    again is the identity. Schema violations raise ConfigError naming the
    offending YAML path.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from exc
    if doc is None:
        raise ConfigError("empty configuration")
    _expect(doc, dict, "<root>", "a mapping")
    _reject_unknown(doc, {"name", "dataset", "datasets", "pipelines", "evaluation", "sweeps"}, "<root>")
    if "dataset" in doc and "datasets" in doc:
        raise ConfigError("<root>: give either 'dataset' or 'datasets', not both")
    name = doc.get("name", "benchmark")
    _expect(name, str, "name", "a string")
    raw_datasets = doc.get("datasets", doc.get("dataset"))
    if not isinstance(raw_datasets, list) or not raw_datasets:
        raise ConfigError("datasets: expected a nonempty list")
    datasets = [_resolve_dataset(d, f"datasets[{i}]") for i, d in enumerate(raw_datasets)]
    raw_pipelines = doc.get("pipelines")
    _expect(raw_pipelines, dict, "pipelines", "a mapping")
    if not raw_pipelines:
        raise ConfigError("pipelines: at least one pipeline is required")
    pipelines = {}
    for pname, steps in raw_pipelines.items():
        _expect(pname, str, "pipelines", "string keys")
        pipelines[pname] = _resolve_pipeline(steps, f"pipelines.{pname}")
    evaluation = _resolve_evaluation(doc.get("evaluation", {}), "evaluation")
    sweeps = _resolve_sweeps(doc.get("sweeps", {}), "sweeps")
    return BenchmarkConfig(name, datasets, pipelines, evaluation, sweeps)


def emit_config(config: BenchmarkConfig) -> str:
    """Serialize a resolved config back to YAML; inverse of parse_config."""
    return yaml.safe_dump(config.to_dict(), sort_keys=True, default_flow_style=False)
