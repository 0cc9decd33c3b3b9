"""Ensembles of de-identifiers: sequential composition, weighted fusion and
attribute-guided configuration from preservation profiles."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DeidError, NoViableMethod, StageError, UnknownKey, WeightError
from .profiles import canonical_attribute, default_profiles, validate_profiles

KINDS = ("sequential", "parallel", "attribute_guided")
WEIGHT_TOL = 1e-9


def check_weights(weights, n_members) -> list[float]:
    w = [float(x) for x in weights]
    if len(w) != n_members:
        raise WeightError(f"{len(w)} weights for {n_members} members")
    if any(not np.isfinite(x) or x < 0 for x in w):
        raise WeightError("weights must be finite and non-negative")
    if abs(sum(w) - 1.0) > WEIGHT_TOL:
        raise WeightError(f"weights must sum to 1, got {sum(w)!r}")
    return w


@dataclass
class EnsembleSpec:
    kind: str
    members: list = field(default_factory=list)
    weights: list | None = None
    preserve: list = field(default_factory=list)
    suppress: list = field(default_factory=list)

    def validate(self) -> "EnsembleSpec":
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}", "ensemble.kind")
        if self.kind == "sequential" and len(self.members) < 2:
            raise ConfigError("a sequential ensemble needs at least 2 members", "ensemble.members")
        if self.kind == "parallel":
            if not self.members:
                raise ConfigError("a parallel ensemble needs members", "ensemble.members")
            if self.weights is None:
                raise ConfigError("a parallel ensemble needs weights", "ensemble.weights")
            self.weights = check_weights(self.weights, len(self.members))
        if self.kind == "attribute_guided":
            pres = {canonical_attribute(a) for a in self.preserve}
            supp = {canonical_attribute(a) for a in self.suppress}
            if pres & supp:
                raise ConfigError(f"attributes both preserved and suppressed: {sorted(pres & supp)}", "ensemble")
            if "identity" not in supp:
                raise ConfigError("'identity' must be in suppress", "ensemble.suppress")
        return self

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "members": copy.deepcopy(self.members)}
        if self.weights is not None:
            out["weights"] = list(self.weights)
        if self.preserve or self.suppress:
            out["preserve"] = list(self.preserve)
            out["suppress"] = list(self.suppress)
        return out


def run_sequential(face, members) -> np.ndarray:
    """Apply ``members`` left to right; a failing stage raises StageError(index)."""
    if not members:
        raise ConfigError("sequential ensemble needs at least one member", "ensemble.members")
    x = face
    for i, member in enumerate(members):
        try:
            x = member(x)
        except DeidError as exc:
            raise StageError(i, exc) from exc
    return x


def run_parallel(face, members, weights) -> np.ndarray:
    """``clip(sum_i w_i * f_i(face), 0, 1)``.

    Terms are sorted per pixel before summation so the result is bit-identical
    under any joint permutation of members and weights.
    """
    w = check_weights(weights, len(members))
    terms = []
    for i, (wi, member) in enumerate(zip(w, members)):
        try:
            terms.append(wi * np.asarray(member(face), dtype=np.float64))
        except DeidError as exc:
            raise StageError(i, exc) from exc
    stack = np.sort(np.stack(terms), axis=0)
    total = stack[0].copy()
    for t in stack[1:]:
        total += t
    return np.clip(total, 0.0, 1.0)


def attribute_score(scores: dict, preserve, suppress) -> float:
    """``prod_{a in preserve} p(a) * prod_{a in suppress} (1 - p(a))`` with
    ``p(identity) = 1 - privacy``."""
    def p(attr):
        key = "privacy" if attr == "identity" else attr
        if key not in scores:
            raise ConfigError(f"profile has no score for {attr!r}", f"profiles.scores.{key}")
        val = float(scores[key])
        return 1.0 - val if attr == "identity" else val

    out = 1.0
    for a in preserve:
        out *= p(a)
    for a in suppress:
        out *= 1.0 - p(a)
    return out


def rank_methods(preserve, suppress, profiles=None) -> list[tuple[str, float]]:
    """All methods by descending score, ties by name."""
    profiles = validate_profiles(default_profiles() if profiles is None else profiles)
    pres = [canonical_attribute(a) for a in preserve]
    supp = [canonical_attribute(a) for a in suppress]
    scored = [(name, attribute_score(entry["scores"], pres, supp)) for name, entry in profiles.items()]
    return sorted(scored, key=lambda kv: (-kv[1], kv[0]))


def configure_attribute_guided(preserve, suppress, profiles=None, top: int = 2) -> EnsembleSpec:
    """Parallel ensemble over the ``top`` best-scoring methods with weights
    proportional to their scores. Zero-score methods are never selected."""
    pres = sorted({canonical_attribute(a) for a in preserve})
    supp = sorted({canonical_attribute(a) for a in suppress})
    EnsembleSpec("attribute_guided", preserve=pres, suppress=supp).validate()
    profiles = default_profiles() if profiles is None else profiles
    ranked = [(n, s) for n, s in rank_methods(pres, supp, profiles) if s > 0][:top]
    if not ranked:
        raise NoViableMethod(f"no method has a positive score for preserve={pres} suppress={supp}")
    total = sum(s for _, s in ranked)
    weights = [s / total for _, s in ranked]
    members = []
    for name, _ in ranked:
        cfg = profiles[name].get("config", {"name": name, "params": {}})
        members.append(copy.deepcopy(cfg))
    return EnsembleSpec("parallel", members, weights, pres, supp)


ENSEMBLE_KEYS = ("kind", "members", "weights", "preserve", "suppress", "profiles", "reference_dataset")


def spec_from_dict(d: dict, path="ensemble") -> EnsembleSpec:
    if not isinstance(d, dict):
        raise ConfigError("ensemble must be a mapping", path)
    for key in d:
        if key not in ENSEMBLE_KEYS:
            raise UnknownKey(f"unknown key {key!r}", f"{path}.{key}")
    return EnsembleSpec(
        kind=d.get("kind"),
        members=list(d.get("members") or []),
        weights=d.get("weights"),
        preserve=list(d.get("preserve") or []),
        suppress=list(d.get("suppress") or []),
    )


class EnsembleDeidentifier:
    """Callable wrapper so an ensemble plugs in wherever a method does."""

    def __init__(self, spec: EnsembleSpec, members):
        self.spec = spec
        self.members = list(members)

    def deidentify(self, face):
        if self.spec.kind == "sequential":
            return run_sequential(face, self.members)
        return run_parallel(face, self.members, self.spec.weights)

    __call__ = deidentify
