"""Verification-style privacy metrics over cosine-similarity scores.

A pair is *accepted* (judged same identity) when its score is ``>= t``.
Candidate thresholds are the midpoints between consecutive distinct scores,
plus the lowest score (accept everything) and the next float above the
highest score (accept nothing).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyPairs

DEFAULT_FAR = 0.001


@dataclass(frozen=True)
class PairSet:
    """Genuine and impostor pairs as ``(n, 2, d)`` embedding stacks."""

    genuine: np.ndarray
    impostor: np.ndarray

    def __post_init__(self):
        for name in ("genuine", "impostor"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.size == 0:
                arr = arr.reshape(0, 2, 0)
            if arr.ndim != 3 or arr.shape[1] != 2:
                raise ValueError(f"{name} pairs must have shape (n, 2, d)")
            object.__setattr__(self, name, arr)

    @property
    def genuine_scores(self) -> np.ndarray:
        return cosine_scores(self.genuine)

    @property
    def impostor_scores(self) -> np.ndarray:
        return cosine_scores(self.impostor)


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(norm == 0, 1.0, norm)


def cosine_scores(pairs: np.ndarray) -> np.ndarray:
    if len(pairs) == 0:
        return np.zeros(0)
    a, b = normalize(pairs[:, 0]), normalize(pairs[:, 1])
    return np.einsum("ij,ij->i", a, b)


def deid_pairs(original, deidentified, seed: int = 0, impostor_factor: int = 10) -> PairSet:
    """Genuine pairs ``(orig_i, deid_i)``; impostors ``(orig_i, deid_j), i != j``.

    Impostors are a seeded sample of all off-diagonal combinations, capped at
    ``impostor_factor * n``.
    """
    orig = np.asarray(original, dtype=np.float64)
    deid = np.asarray(deidentified, dtype=np.float64)
    if orig.shape != deid.shape or orig.ndim != 2:
        raise ValueError("original and de-identified embeddings must be matching (n, d) arrays")
    n = len(orig)
    genuine = np.stack([orig, deid], axis=1)
    total = n * (n - 1)
    cap = min(total, impostor_factor * n)
    rng = np.random.default_rng(seed)
    flat = np.sort(rng.choice(total, size=cap, replace=False)) if cap else np.zeros(0, int)
    i = flat // max(n - 1, 1)
    j = flat % max(n - 1, 1)
    j = j + (j >= i)
    impostor = np.stack([orig[i], deid[j]], axis=1) if cap else np.zeros((0, 2, orig.shape[1]))
    return PairSet(genuine, impostor)


def identity_pairs(vectors, identities, seed: int = 0, impostor_factor: int = 10) -> PairSet:
    """Clean pairs for threshold calibration: every same-identity pair ``i < j``
    is genuine; impostors are a seeded sample of different-identity pairs capped
    at ``impostor_factor * n``."""
    vec = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray([str(x) for x in identities])
    if vec.ndim != 2 or len(labels) != len(vec):
        raise ValueError("need one identity per embedding row")
    i, j = np.triu_indices(len(vec), k=1)
    same = labels[i] == labels[j]
    gi, gj = i[same], j[same]
    ii, ij = i[~same], j[~same]
    cap = min(len(ii), impostor_factor * len(vec))
    if cap < len(ii):
        pick = np.sort(np.random.default_rng(seed).choice(len(ii), size=cap, replace=False))
        ii, ij = ii[pick], ij[pick]
    d = vec.shape[1]
    genuine = np.stack([vec[gi], vec[gj]], axis=1) if len(gi) else np.zeros((0, 2, d))
    impostor = np.stack([vec[ii], vec[ij]], axis=1) if len(ii) else np.zeros((0, 2, d))
    return PairSet(genuine, impostor)


@dataclass(frozen=True)
class Threshold:
    value: float
    provenance: str  # "accuracy-optimal" | "far-calibrated(<level>)" | "fixed"
    detail: dict = field(default_factory=dict)


def _candidates(scores: np.ndarray) -> np.ndarray:
    u = np.unique(scores)
    mids = (u[:-1] + u[1:]) / 2.0
    mids = np.where(mids > u[:-1], mids, u[1:])
    return np.concatenate([[u[0]], mids, [np.nextafter(u[-1], np.inf)]])


def _accept_counts(scores: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Number of scores ``>= t`` for each threshold."""
    s = np.sort(scores)
    return len(s) - np.searchsorted(s, thresholds, side="left")


def calibrate_threshold(genuine, impostor, mode: str = "accuracy", far_level: float = DEFAULT_FAR) -> Threshold:
    """Pick a decision threshold from genuine/impostor score arrays.

    ``accuracy``: midpoint of the lowest maximal run of accuracy-optimal
    threshold intervals. ``far``: lowest candidate whose false-accept rate is
    strictly below ``far_level``.
    """
    g = np.asarray(genuine, dtype=np.float64)
    im = np.asarray(impostor, dtype=np.float64)
    if len(im) == 0 or (mode == "accuracy" and len(g) == 0):
        raise EmptyPairs("threshold calibration needs impostor (and, for accuracy, genuine) scores")
    allscores = np.concatenate([g, im])
    if mode == "far":
        if not 0.0 < far_level < 1.0:
            raise ValueError("far_level must lie in (0, 1)")
        cand = _candidates(allscores)
        far = _accept_counts(im, cand) / len(im)
        t = float(cand[np.argmax(far < far_level)])
        return Threshold(t, f"far-calibrated({far_level:g})", {"far_level": far_level})
    if mode != "accuracy":
        raise ValueError(f"unknown threshold mode {mode!r}")
    u = np.unique(allscores)
    # interval j covers thresholds in (u[j-1], u[j]] and accepts scores >= u[j];
    # interval len(u) accepts nothing
    tp = np.concatenate([_accept_counts(g, u), [0]])
    fp = np.concatenate([_accept_counts(im, u), [0]])
    correct = tp + (len(im) - fp)
    best = correct.max()
    j0 = int(np.argmax(correct == best))
    j1 = j0
    while j1 + 1 < len(correct) and correct[j1 + 1] == best:
        j1 += 1
    lo = -np.inf if j0 == 0 else u[j0 - 1]
    hi = np.inf if j1 == len(u) else u[j1]
    if np.isinf(lo) and np.isinf(hi):
        t = float(u[0])
    elif np.isinf(lo):
        t = float(hi)
    elif np.isinf(hi):
        t = float(np.nextafter(lo, np.inf))
    else:
        t = float((lo + hi) / 2.0)
        if t <= lo:
            t = float(hi)
    accuracy = best / (len(g) + len(im))
    return Threshold(t, "accuracy-optimal", {"accuracy": float(accuracy)})


def privacy_report(pairs: PairSet, t: Threshold | float, far_level: float = DEFAULT_FAR,
                   far_threshold: Threshold | float | None = None) -> dict:
    """VA, TAR@FAR and PSR in percent.

    VA: pairs classified correctly at ``t``. TAR: genuine acceptance at
    ``far_threshold``, or when omitted at the threshold calibrated on these
    impostors for ``far_level``. PSR: genuine pairs scoring below ``t``.
    """
    tval = t.value if isinstance(t, Threshold) else float(t)
    g = pairs.genuine_scores
    im = pairs.impostor_scores
    if len(g) == 0:
        raise EmptyPairs("privacy report needs genuine pairs")
    correct = np.count_nonzero(g >= tval) + np.count_nonzero(im < tval)
    va = 100.0 * correct / (len(g) + len(im))
    psr = 100.0 * np.count_nonzero(g < tval) / len(g)
    report = {"VA": float(va), "PSR": float(psr), "threshold": tval}
    if far_threshold is None and len(im):
        far_threshold = calibrate_threshold(g, im, "far", far_level)
    if far_threshold is not None:
        ft = far_threshold.value if isinstance(far_threshold, Threshold) else float(far_threshold)
        report["TAR_at_FAR"] = float(100.0 * np.count_nonzero(g >= ft) / len(g))
        report["far_threshold"] = ft
    return report
