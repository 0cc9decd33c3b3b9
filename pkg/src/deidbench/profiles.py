"""Per-method attribute preservation profiles.

The default store is built from published benchmark numbers (utility on six
attributes, privacy as protection success rate against three recognisers on
LFW). Raw numbers are kept verbatim below so the normalisation is auditable:

* accuracy-type attributes: ``acc / acc_original``
* error-type attributes: ``err_original / err``

both clipped to ``[0, 1]``. Privacy is the mean PSR divided by 100.
"""

from __future__ import annotations

import json
import os

from .errors import ConfigError, FormatError, ImageIOError, UnknownAttribute

STORE_VERSION = 1

ATTRIBUTES = ("age", "gender", "ethnicity", "expression", "landmark", "rPPG")
ERROR_ATTRIBUTES = {"age", "landmark", "rPPG"}
ALIASES = {"expr": "expression", "rppg": "rPPG", "landmarks": "landmark", "race": "ethnicity"}

# published utility results: age MAE, gender Acc, ethnicity Acc,
# expression Acc, landmark NME, heart-rate MAE
UTILITY_TABLE = {
    "original": (10.18, 94.39, 71.99, 70.54, 0.3601, 0.39),
    "blur_sigma10": (12.00, 93.97, 71.35, 54.09, 0.3609, 0.40),
    "blur_sigma20": (14.18, 93.55, 69.33, 24.56, 0.3620, 0.40),
    "pixelate_8": (15.26, 90.48, 59.76, 14.79, 0.3615, 4.10),
    "pixelate_16": (18.93, 70.40, 17.12, 15.55, 0.3772, 4.50),
    "mask_black": (18.31, 65.36, 20.26, 14.63, 0.8733, 17.56),
    "ksame_k5": (15.91, 70.74, 27.30, 18.01, 0.3751, 24.13),
    "ksame_k10": (16.00, 71.90, 27.52, 20.27, 0.3802, 23.40),
    "ksame_select_k5": (17.64, 60.22, 21.03, 15.87, 0.3923, 31.11),
    "ksame_select_k10": (17.81, 59.16, 20.49, 15.55, 0.3973, 32.56),
    "ksame_furthest_k10": (18.38, 56.43, 20.39, 15.35, 0.3974, 28.37),
    "mifgsm": (10.29, 91.93, 66.16, 69.26, 0.3601, 1.70),
    "pgd": (10.04, 93.31, 69.44, 69.91, 0.3599, 1.65),
    "tidim": (10.91, 88.91, 61.05, 68.70, 0.3628, 5.37),
    "tipim": (10.95, 88.64, 61.59, 68.90, 0.3630, 3.60),
    "chameleon": (9.95, 93.25, 70.19, 70.30, 0.3599, 1.96),
}

# published PSR (%) on LFW against ArcFace, CosFace and AdaFace
PRIVACY_TABLE = {
    "blur_sigma10": (0.40, 0.40, 0.73),
    "blur_sigma20": (3.37, 2.53, 3.27),
    "pixelate_8": (29.35, 38.36, 42.25),
    "pixelate_16": (21.74, 10.14, 8.70),
    "mask_black": (57.14, 35.71, 57.14),
    "ksame_k5": (70.73, 56.80, 51.93),
    "ksame_k10": (54.53, 37.37, 33.63),
    "ksame_select_k5": (94.73, 93.73, 92.80),
    "ksame_select_k10": (95.57, 94.63, 93.30),
    "ksame_furthest_k10": (95.30, 94.37, 93.33),
    "mifgsm": (16.47, 5.80, 1.90),
    "pgd": (7.70, 2.07, 0.83),
    "tidim": (23.00, 12.37, 5.10),
    "tipim": (22.77, 12.80, 4.67),
    "chameleon": (6.63, 1.53, 0.40),
}

# the method config each profile row was measured with
PROFILE_CONFIGS = {
    "blur_sigma10": {"name": "blur", "params": {"sigma": 10.0}},
    "blur_sigma20": {"name": "blur", "params": {"sigma": 20.0}},
    "pixelate_8": {"name": "pixelate", "params": {"block_size": 8}},
    "pixelate_16": {"name": "pixelate", "params": {"block_size": 16}},
    "mask_black": {"name": "mask", "params": {"mask_type": "black"}},
    "ksame_k5": {"name": "ksame", "params": {"k": 5, "variant": "average"}},
    "ksame_k10": {"name": "ksame", "params": {"k": 10, "variant": "average"}},
    "ksame_select_k5": {"name": "ksame", "params": {"k": 5, "variant": "select"}},
    "ksame_select_k10": {"name": "ksame", "params": {"k": 10, "variant": "select"}},
    "ksame_furthest_k10": {"name": "ksame", "params": {"k": 10, "variant": "furthest"}},
    "mifgsm": {"name": "mifgsm", "params": {}},
    "pgd": {"name": "pgd", "params": {}},
    "tidim": {"name": "tidim", "params": {}},
    "tipim": {"name": "tipim", "params": {"epsilon": 8 / 255}},
    "chameleon": {"name": "chameleon", "params": {"epsilon": 8 / 255}},
}


def canonical_attribute(name: str) -> str:
    """Map user spellings (``expr``, ``rppg``, any case) onto attribute names."""
    known = {a.lower(): a for a in ATTRIBUTES + ("identity",)}
    key = str(name).strip().lower()
    key = ALIASES.get(key, key)
    if key.lower() not in known:
        raise UnknownAttribute(f"unknown attribute {name!r}; known: {', '.join(known.values())}")
    return known[key.lower()]


def normalized_utility(raw, original=UTILITY_TABLE["original"]) -> dict:
    out = {}
    for attr, val, ref in zip(ATTRIBUTES, raw, original):
        ratio = ref / val if attr in ERROR_ATTRIBUTES else val / ref
        out[attr] = min(max(ratio, 0.0), 1.0)
    return out


def default_profiles() -> dict:
    """``{method: {"config", "scores": {attr: [0,1], "privacy": [0,1]}}}``."""
    store = {}
    for name, cfg in PROFILE_CONFIGS.items():
        scores = normalized_utility(UTILITY_TABLE[name])
        psr = PRIVACY_TABLE[name]
        scores["privacy"] = sum(psr) / len(psr) / 100.0
        store[name] = {"config": json.loads(json.dumps(cfg)), "scores": scores}
    return store


def validate_profiles(store) -> dict:
    if not isinstance(store, dict) or not store:
        raise ConfigError("profile store must contain at least one method", "profiles")
    for name, entry in store.items():
        if not isinstance(entry, dict) or "scores" not in entry:
            raise ConfigError(f"profile {name!r} needs a 'scores' mapping", f"profiles.{name}")
        for attr, val in entry["scores"].items():
            if attr != "privacy" and attr not in ATTRIBUTES:
                raise ConfigError(f"unknown attribute {attr!r}", f"profiles.{name}.scores.{attr}")
            if not isinstance(val, (int, float)) or not 0.0 <= val <= 1.0:
                raise ConfigError(f"score must lie in [0, 1], got {val!r}", f"profiles.{name}.scores.{attr}")
    return store


def save_profiles(path, store) -> None:
    validate_profiles(store)
    payload = {"version": STORE_VERSION, "methods": store}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_profiles(path) -> dict:
    path = os.fspath(path)
    if not os.path.exists(path):
        raise ImageIOError(f"no such profile store: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except ValueError as exc:
        raise FormatError(f"{path}: not JSON ({exc})") from exc
    if not isinstance(payload, dict) or payload.get("version") != STORE_VERSION:
        raise FormatError(f"{path}: unsupported profile store version {payload.get('version') if isinstance(payload, dict) else None!r}")
    return validate_profiles(payload.get("methods"))
