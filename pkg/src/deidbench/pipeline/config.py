"""Strict YAML experiment configs.

Every key is declared in :data:`SCHEMA` (or the method parameter schemas);
anything else is rejected with the dotted path of the offending key. Relative
file paths resolve against the directory of the config file.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from typing import Any

import yaml

from ..ensemble import ENSEMBLE_KEYS, EnsembleSpec, configure_attribute_guided, spec_from_dict
from ..errors import ConfigError, DeidError, MissingFile, ParseError, UnknownKey
from ..geometry import DEFAULT_CROP_SIZE
from ..methods import PARAM_SCHEMAS, REQUIRED, resolve_method
from ..profiles import default_profiles, load_profiles

CONFIG_DIR_ENV = "DEIDBENCH_CONFIG_DIR"


@dataclass(frozen=True)
class Field:
    default: Any = None
    kind: str = "any"  # int | float | bool | str | list | file | dir | files
    required: bool = False
    help: str = ""
    choices: tuple = ()
    minimum: float | None = None


METRICS = ("psnr", "ssim", "privacy", "fid", "utility")

SCHEMA = {
    "dataset": {
        "manifest": Field(kind="file", required=True, help="TSV: id<TAB>path[<TAB>identity]"),
        "detections": Field(kind="file", required=True, help="JSON-lines detection records keyed by id"),
    },
    "video": {
        "frames": Field(kind="files", required=True, help="frame directory or frame-list file"),
        "detections": Field(kind="file", required=True, help="JSON-lines detection records keyed by frame"),
        "detect_every": Field(1, "int", minimum=1, help="detection stride; other frames reuse the last detection"),
    },
    "evaluation": {
        "metrics": Field(None, "list", help=f"subset of {', '.join(METRICS)}; default: psnr, ssim plus every metric whose inputs are given"),
        "embeddings": {
            "original": Field(kind="file", help="embeddings of the original faces"),
            "deidentified": Field(kind="file", help="embeddings of the de-identified faces"),
        },
        "features": {
            "real": Field(kind="file", help="feature vectors of real images (FID)"),
            "generated": Field(kind="file", help="feature vectors of de-identified images (FID)"),
        },
        "predictions": Field(kind="file", help="CSV of attribute predictions and ground truth"),
        "threshold": {
            "mode": Field("accuracy", "str", choices=("accuracy", "far", "fixed"),
                          help="how the verification threshold is chosen"),
            "far_level": Field(0.001, "float", help="false-accept level for TAR@FAR and far mode"),
            "value": Field(None, "float", help="threshold for fixed mode"),
        },
        "impostor_factor": Field(10, "int", minimum=1, help="impostor pairs per genuine pair (cap)"),
        "psnr_cap": Field(99.0, "float", help="PSNR reported for identical images"),
        "eye_indices": Field(None, "list", help="landmark indices used for inter-ocular distance"),
    },
    "output_dir": Field("deid_out", "str", help="where images and reports are written"),
    "seed": Field(0, "int", help="global seed; fills every unset rng_seed"),
    "jobs": Field(1, "int", minimum=1, help="worker processes"),
    "label": Field(None, "str", help="method label used in reports"),
    "align": {
        "template": Field(None, "list", help="5x2 landmark template in crop pixels (default ArcFace)"),
        "crop_size": Field(DEFAULT_CROP_SIZE, "int", minimum=8, help="aligned crop side"),
        "feather": Field(8.0, "float", minimum=0.0, help="blend ramp width in crop pixels"),
    },
}

# keys that do not change results and are excluded from the config hash
NON_SEMANTIC = ("output_dir", "jobs")


def _walk_schema(node, prefix=""):
    for key, val in node.items():
        path = f"{prefix}{key}"
        if isinstance(val, dict):
            yield from _walk_schema(val, path + ".")
        else:
            yield path, val


def accepted_keys() -> list[tuple[str, str]]:
    """Every accepted dotted key with a short description (for --help)."""
    out = [(p, f.help) for p, f in _walk_schema(SCHEMA)]
    out.append(("method.name", f"one of {', '.join(PARAM_SCHEMAS)}"))
    for name, params in PARAM_SCHEMAS.items():
        for key, default in params.items():
            shown = "required" if default is REQUIRED else f"default {default!r}"
            if key == "surrogate":
                out += [(f"method.params.surrogate.{k}", f"[{name}] default {v!r}") for k, v in default.items()]
                continue
            out.append((f"method.params.{key}", f"[{name}] {shown}"))
    ens_help = {
        "kind": "sequential | parallel | attribute_guided",
        "members": "list of {name, params} method configs",
        "weights": "parallel fusion weights, summing to 1",
        "preserve": "attributes to preserve (attribute_guided)",
        "suppress": "attributes to suppress; must include identity",
        "profiles": "profile store JSON (default: built-in)",
        "reference_dataset": "gallery manifest for k-Same members chosen automatically",
    }
    out += [(f"ensemble.{k}", ens_help[k]) for k in ENSEMBLE_KEYS]
    seen, uniq = set(), []
    for key, text in out:
        if key not in seen:
            seen.add(key)
            uniq.append((key, text))
    return uniq


@dataclass(frozen=True)
class ExperimentConfig:
    data: dict
    source: str | None = None

    def __getitem__(self, key):
        return self.data[key]

    def get(self, key, default=None):
        return self.data.get(key, default)

    @property
    def config_hash(self) -> str:
        return config_hash(self.data)

    @property
    def label(self) -> str:
        if self.data.get("label"):
            return self.data["label"]
        if "method" in self.data:
            return self.data["method"]["name"]
        return "ensemble-" + self.data["ensemble"]["kind"]


def config_hash(data: dict) -> str:
    semantic = {k: v for k, v in data.items() if k not in NON_SEMANTIC}
    blob = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def parse_override(text: str) -> tuple[list[str], Any]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like dotted.key=value", "--set")
    key, raw = text.split("=", 1)
    parts = key.strip().split(".")
    if not all(parts):
        raise ConfigError(f"bad override key {key!r}", "--set")
    try:
        value = yaml.safe_load(raw) if raw.strip() else ""
    except yaml.YAMLError as exc:
        raise ParseError(f"bad override value {raw!r}: {exc}", key) from exc
    return parts, value


def apply_overrides(raw: dict, overrides) -> dict:
    out = copy.deepcopy(raw)
    for text in overrides or ():
        parts, value = parse_override(text)
        node = out
        for i, part in enumerate(parts[:-1]):
            nxt = node.get(part)
            if nxt is None:
                nxt = node[part] = {}
            if not isinstance(nxt, dict):
                raise ConfigError("cannot set a key below a non-mapping value", ".".join(parts[: i + 1]))
            node = nxt
        node[parts[-1]] = value
    return out


def find_config(path) -> str:
    path = os.fspath(path)
    if os.path.exists(path) or os.path.isabs(path):
        return path
    cdir = os.environ.get(CONFIG_DIR_ENV)
    if cdir and os.path.exists(os.path.join(cdir, path)):
        return os.path.join(cdir, path)
    return path


def load_yaml(path) -> dict:
    path = find_config(path)
    if not os.path.exists(path):
        raise MissingFile(f"config file not found: {path}", "config")
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}", "config") from exc
    except OSError as exc:
        raise MissingFile(f"cannot read {path}: {exc}", "config") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be a mapping", "config")
    return raw


def _resolve_path(value, base_dir, path, kind):
    if not isinstance(value, str) or not value:
        raise ConfigError(f"expected a path, got {value!r}", path)
    full = value if os.path.isabs(value) else os.path.normpath(os.path.join(base_dir, value))
    ok = os.path.isdir(full) if kind == "dir" else (os.path.exists(full) if kind == "files" else os.path.isfile(full))
    if not ok:
        raise MissingFile(f"file not found: {full}", path)
    return full


def _coerce(value, f: Field, path, base_dir):
    if value is None:
        if f.required:
            raise ConfigError("required key is missing", path)
        return None
    if f.kind in ("file", "dir", "files"):
        return _resolve_path(value, base_dir, path, f.kind)
    if f.kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
    elif f.kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path)
        value = float(value)
    elif f.kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
    elif f.kind == "list":
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"expected a list, got {value!r}", path)
        value = list(value)
    if f.choices and value not in f.choices:
        raise ConfigError(f"must be one of {f.choices}, got {value!r}", path)
    if f.minimum is not None and value < f.minimum:
        raise ConfigError(f"must be >= {f.minimum}, got {value!r}", path)
    return value


def _resolve_section(raw, schema, prefix, base_dir):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("expected a mapping", prefix.rstrip("."))
    for key in raw:
        if key not in schema:
            raise UnknownKey(f"unknown key {key!r}", f"{prefix}{key}")
    out = {}
    for key, sub in schema.items():
        path = f"{prefix}{key}"
        if isinstance(sub, dict):
            out[key] = _resolve_section(raw.get(key), sub, path + ".", base_dir)
        else:
            val = raw.get(key)
            out[key] = copy.deepcopy(sub.default) if val is None and not sub.required else _coerce(val, sub, path, base_dir)
    return out


def _resolve_method_files(cfg, path):
    for key in ("reference_dataset", "target_embedding"):
        val = cfg["params"].get(key)
        if isinstance(val, str) and not os.path.isfile(val):
            raise MissingFile(f"file not found: {val}", f"{path}.params.{key}")
    return cfg


def _resolve_ensemble(raw, seed, base_dir) -> dict:
    spec = spec_from_dict(raw)
    if spec.kind == "attribute_guided":
        if spec.members:
            raise ConfigError("members are chosen automatically for attribute_guided", "ensemble.members")
        spec.validate()
        profiles = default_profiles()
        if raw.get("profiles"):
            profiles = load_profiles(_resolve_path(raw["profiles"], base_dir, "ensemble.profiles", "file"))
        spec = configure_attribute_guided(spec.preserve, spec.suppress, profiles)
        ref = raw.get("reference_dataset")
        for m in spec.members:
            if m.get("name") == "ksame" and ref and "reference_dataset" not in m.get("params", {}):
                m.setdefault("params", {})["reference_dataset"] = ref
    try:
        spec.validate()
    except DeidError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "ensemble.weights") from exc
    members = []
    for i, m in enumerate(spec.members):
        path = f"ensemble.members[{i}]"
        members.append(_resolve_method_files(resolve_method(m, path, seed, base_dir), path))
    out = {"kind": spec.kind, "members": members}
    if spec.kind == "parallel":
        out["weights"] = list(spec.weights)
    if spec.preserve or spec.suppress:
        out["preserve"], out["suppress"] = list(spec.preserve), list(spec.suppress)
    return out


def resolve_config(raw: dict, base_dir: str = ".", source: str | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ParseError("top level must be a mapping", "config")
    special = {"method", "ensemble"}
    for key in raw:
        if key not in SCHEMA and key not in special:
            raise UnknownKey(f"unknown key {key!r}", key)
    has_m, has_e = raw.get("method") is not None, raw.get("ensemble") is not None
    if has_m == has_e:
        raise ConfigError("exactly one of 'method' or 'ensemble' is required", "method")
    if raw.get("dataset") is None and raw.get("video") is None:
        raise ConfigError("a 'dataset' or a 'video' section is required", "dataset")

    data = {}
    for key, sub in SCHEMA.items():
        if key in ("dataset", "video") and raw.get(key) is None:
            continue
        if isinstance(sub, dict):
            data[key] = _resolve_section(raw.get(key), sub, key + ".", base_dir)
        else:
            val = raw.get(key)
            data[key] = copy.deepcopy(sub.default) if val is None else _coerce(val, sub, key, base_dir)
    seed = data["seed"]
    if has_m:
        data["method"] = _resolve_method_files(resolve_method(raw["method"], "method", seed, base_dir), "method")
    else:
        data["ensemble"] = _resolve_ensemble(raw["ensemble"], seed, base_dir)
    if not os.path.isabs(data["output_dir"]):
        data["output_dir"] = os.path.normpath(os.path.join(base_dir, data["output_dir"]))
    _check_evaluation(data)
    _check_align(data)
    return ExperimentConfig(data, source)


def _check_align(data):
    tpl = data["align"]["template"]
    if tpl is not None:
        if len(tpl) != 5 or any(not isinstance(p, (list, tuple)) or len(p) != 2 for p in tpl):
            raise ConfigError("template must be 5 [x, y] points", "align.template")
        data["align"]["template"] = [[float(x), float(y)] for x, y in tpl]


def _check_evaluation(data):
    ev = data["evaluation"]
    inputs = {
        "privacy": ev["embeddings"]["original"] and ev["embeddings"]["deidentified"],
        "fid": ev["features"]["real"] and ev["features"]["generated"],
        "utility": ev["predictions"],
    }
    if ev["metrics"] is None:
        ev["metrics"] = ["psnr", "ssim"] + [m for m in ("privacy", "fid", "utility") if inputs[m]]
    for i, m in enumerate(ev["metrics"]):
        if m not in METRICS:
            raise ConfigError(f"unknown metric {m!r}; choose from {METRICS}", f"evaluation.metrics[{i}]")
        if m in inputs and not inputs[m]:
            need = {"privacy": "evaluation.embeddings", "fid": "evaluation.features", "utility": "evaluation.predictions"}[m]
            raise ConfigError(f"metric {m!r} needs {need}", need)
    th = ev["threshold"]
    if th["mode"] == "fixed" and th["value"] is None:
        raise ConfigError("fixed threshold mode needs a value", "evaluation.threshold.value")
    if not 0.0 < th["far_level"] < 1.0:
        raise ConfigError("must lie in (0, 1)", "evaluation.threshold.far_level")


def validate_config(path, overrides=()) -> ExperimentConfig:
    """Parse, apply ``key=value`` overrides, then validate strictly."""
    path = find_config(path)
    raw = apply_overrides(load_yaml(path), overrides)
    base = os.path.dirname(os.path.abspath(path))
    return resolve_config(raw, base, os.path.abspath(path))


def dump_yaml(data: dict) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)
