"""Uniform de-identifier interface and the method registry.

A method config is ``{"name": <method>, "params": {...}}``. Every method
exposes ``deidentify(face) -> face`` on an aligned crop and is stateless
between calls, so results do not depend on call order or worker placement.
"""

from __future__ import annotations

import copy
import os

import numpy as np

from . import adversarial, ksame, naive
from .errors import ConfigError, UnknownKey
from .metrics.vectors import load_vectors
from .surrogate import ToyEmbedder

REQUIRED = object()

_SURROGATE = {"seed": 0, "dim": 128}
_ATTACK_COMMON = {
    "epsilon": 8 / 255, "alpha": 2 / 255, "num_iter": 20, "rng_seed": None,
    "targeted": False, "target_embedding": None, "surrogate": _SURROGATE,
}


def _attack_schema(method, **extra):
    schema = {**_ATTACK_COMMON, **extra}
    for key, val in adversarial.ATTACK_DEFAULTS[method].items():
        if key in schema:
            schema[key] = val
    return schema


# method name -> parameter defaults; None means "any value / filled later"
PARAM_SCHEMAS = {
    "identity": {},
    "blur": {"kernel_size": None, "sigma": 0.0},
    "pixelate": {"block_size": 16, "interpolation": "nearest"},
    "mask": {"mask_color": [0.0, 0.0, 0.0], "mask_type": "solid", "rng_seed": None},
    "ksame": {"k": 10, "variant": "average", "selection_mode": "closest",
              "reference_dataset": REQUIRED, "exclude_self": False, "rng_seed": None},
    "pgd": _attack_schema("pgd", norm="Linf", random_start=True),
    "mifgsm": _attack_schema("mifgsm", decay_factor=1.0, random_start=False),
    "tidim": _attack_schema("tidim", decay_factor=1.0, kernel_size=15, prob=0.7, random_start=False),
    "tipim": _attack_schema("tipim", gamma=10.0, decay_factor=1.0, kernel_size=15,
                            use_diverse_input=True, prob=0.7, random_start=False),
    "chameleon": _attack_schema("chameleon", lambda_dsim=1.0, norm="Linf", random_start=True),
}

CHOICES = {
    "interpolation": ("nearest", "linear"),
    "mask_type": ("solid", "random_color", "white", "black"),
    "variant": ("average", "select", "furthest"),
    "selection_mode": ("closest", "furthest", "random"),
    "norm": adversarial.NORMS,
}


def _check_type(value, default, path):
    if default is None or default is REQUIRED:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected a boolean, got {value!r}", path)
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path)
        value = float(value)
    elif isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
    elif isinstance(default, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"expected a list, got {value!r}", path)
        value = list(value)
    return value


def resolve_method(cfg, path="method", seed=0, base_dir=None) -> dict:
    """Validate a method config and fill every default. Returns a new dict."""
    if not isinstance(cfg, dict):
        raise ConfigError("method must be a mapping with 'name' and optional 'params'", path)
    unknown = set(cfg) - {"name", "params"}
    if unknown:
        key = sorted(unknown)[0]
        raise UnknownKey(f"unknown key {key!r}", f"{path}.{key}")
    name = cfg.get("name")
    if name not in PARAM_SCHEMAS:
        raise ConfigError(f"unknown method {name!r}; choose from {sorted(PARAM_SCHEMAS)}", f"{path}.name")
    params = cfg.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError("params must be a mapping", f"{path}.params")
    schema = PARAM_SCHEMAS[name]
    out = {}
    for key, val in params.items():
        if key not in schema:
            raise UnknownKey(f"unknown parameter {key!r} for method {name}", f"{path}.params.{key}")
    for key, default in schema.items():
        kpath = f"{path}.params.{key}"
        if key in params:
            val = _check_type(params[key], default, kpath)
        elif default is REQUIRED:
            raise ConfigError(f"parameter {key!r} is required for method {name}", kpath)
        else:
            val = copy.deepcopy(default)
        if key in CHOICES and val not in CHOICES[key]:
            raise ConfigError(f"must be one of {CHOICES[key]}, got {val!r}", kpath)
        if key == "surrogate":
            val = _resolve_surrogate(val, kpath)
        if key == "rng_seed" and val is None:
            val = int(seed)
        if key in ("reference_dataset", "target_embedding") and isinstance(val, str) and base_dir:
            val = val if os.path.isabs(val) else os.path.normpath(os.path.join(base_dir, val))
        out[key] = val
    if name == "blur":
        try:
            naive.BlurParams(out["kernel_size"], out["sigma"]).resolved()
        except Exception as exc:
            raise ConfigError(str(exc), f"{path}.params") from exc
    if name in adversarial.ATTACKS:
        try:
            _attack_params(name, out)
        except ConfigError as exc:
            raise ConfigError(str(exc), f"{path}.params") from exc
        if out["targeted"] and not out["target_embedding"]:
            raise ConfigError("targeted attacks need target_embedding", f"{path}.params.target_embedding")
    return {"name": name, "params": out}


def _resolve_surrogate(val, path):
    if not isinstance(val, dict):
        raise ConfigError("surrogate must be a mapping", path)
    extra = set(val) - set(_SURROGATE)
    if extra:
        key = sorted(extra)[0]
        raise UnknownKey(f"unknown key {key!r}", f"{path}.{key}")
    out = {**_SURROGATE, **val}
    for key in out:
        out[key] = _check_type(out[key], _SURROGATE[key], f"{path}.{key}")
    return out


def _attack_params(name, params) -> adversarial.AttackParams:
    fields = adversarial.AttackParams.__dataclass_fields__
    kwargs = {k: v for k, v in params.items() if k in fields}
    return adversarial.AttackParams(**kwargs)


class BaseDeidentifier:
    """Common interface: ``deidentify(aligned_face) -> aligned_face``."""

    name = "base"

    def __init__(self, config: dict):
        self.config = config
        self.params = config.get("params", {})

    def deidentify(self, face: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, face):
        return self.deidentify(face)

    def __repr__(self):
        return f"{type(self).__name__}({self.params})"


class IdentityDeidentifier(BaseDeidentifier):
    name = "identity"

    def deidentify(self, face):
        return np.array(face, dtype=np.float64, copy=True)


class GaussianBlurDeidentifier(BaseDeidentifier):
    name = "blur"

    def deidentify(self, face):
        return naive.blur(face, naive.BlurParams(self.params["kernel_size"], self.params["sigma"]))


class PixelateDeidentifier(BaseDeidentifier):
    name = "pixelate"

    def deidentify(self, face):
        return naive.pixelate(face, naive.PixelateParams(self.params["block_size"], self.params["interpolation"]))


class MaskDeidentifier(BaseDeidentifier):
    name = "mask"

    def deidentify(self, face):
        p = naive.MaskParams(tuple(self.params["mask_color"]), self.params["mask_type"])
        return naive.mask(face, p, self.params["rng_seed"])


class KSameDeidentifier(BaseDeidentifier):
    name = "ksame"

    def __init__(self, config, gallery: ksame.Gallery | None = None):
        super().__init__(config)
        p = self.params
        self.gallery = gallery if gallery is not None else ksame.load_gallery(p["reference_dataset"])
        self.kparams = ksame.KSameParams(p["k"], p["variant"], p["selection_mode"], p["rng_seed"], p["exclude_self"])

    def deidentify(self, face):
        return ksame.k_same(face, self.gallery, self.kparams)


class AdversarialDeidentifier(BaseDeidentifier):
    def __init__(self, config, oracle=None):
        super().__init__(config)
        self.name = config["name"]
        p = self.params
        self.oracle = oracle if oracle is not None else ToyEmbedder(p["surrogate"]["seed"], p["surrogate"]["dim"])
        self.attack_params = _attack_params(self.name, p)
        self.target = None
        if p.get("targeted"):
            self.target = load_vectors(p["target_embedding"])[1][0]

    def deidentify(self, face):
        attack = adversarial.ATTACKS[self.name]
        if self.name == "tipim":
            return attack(face, self.oracle, self.attack_params, self.target,
                          use_diverse_input=self.params["use_diverse_input"])
        return attack(face, self.oracle, self.attack_params, self.target)


REGISTRY = {
    "identity": IdentityDeidentifier,
    "blur": GaussianBlurDeidentifier,
    "pixelate": PixelateDeidentifier,
    "mask": MaskDeidentifier,
    "ksame": KSameDeidentifier,
    **{name: AdversarialDeidentifier for name in adversarial.ATTACKS},
}


def get_deidentifier(config: dict, resolve: bool = True, **kwargs) -> BaseDeidentifier:
    """Build a de-identifier from a (possibly partial) method config."""
    cfg = resolve_method(config) if resolve else config
    return REGISTRY[cfg["name"]](cfg, **kwargs)
