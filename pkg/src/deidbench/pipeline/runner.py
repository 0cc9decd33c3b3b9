"""End-to-end jobs: align -> de-identify -> reinsert -> save -> evaluate.

Per-image work items are independent and run either in-process (``jobs=1``)
or on a process pool; results are always assembled in manifest order, so the
output tree does not depend on the number of workers.
"""

from __future__ import annotations

import logging
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..ensemble import EnsembleDeidentifier, EnsembleSpec
from ..errors import ConfigError, DeidError, EmptyPairs, MissingDetection, TooSmall
from ..geometry import BlendSpec, align_face, reinsert
from ..imgcore import as_image, load_image, quantize_8bit, save_image
from ..methods import get_deidentifier
from ..metrics import (
    Threshold,
    align_by_id,
    calibrate_threshold,
    deid_pairs,
    fid,
    identity_pairs,
    load_predictions,
    load_vectors,
    privacy_report,
    psnr,
    ssim,
    utility_report,
)
from .config import NON_SEMANTIC, ExperimentConfig
from .report import EvaluationReport
from .sources import ManifestEntry, list_frames, load_detections, load_manifest

log = logging.getLogger("deidbench")


@dataclass(frozen=True)
class AlignSettings:
    template: tuple | None = None
    crop_size: int = 112
    feather: float = 8.0

    @classmethod
    def from_config(cls, data: dict) -> "AlignSettings":
        a = data["align"]
        tpl = tuple(map(tuple, a["template"])) if a["template"] is not None else None
        return cls(tpl, a["crop_size"], a["feather"])


def build_deidentifier(data: dict):
    """Callable ``face -> face`` for the method or ensemble in a resolved config."""
    if "method" in data:
        return get_deidentifier(data["method"], resolve=False)
    e = data["ensemble"]
    members = [get_deidentifier(m, resolve=False) for m in e["members"]]
    spec = EnsembleSpec(e["kind"], e["members"], e.get("weights"), e.get("preserve", []), e.get("suppress", []))
    return EnsembleDeidentifier(spec, members)


def process_image(img: np.ndarray, records, deidentifier, align: AlignSettings = AlignSettings()) -> np.ndarray:
    """De-identify every detected face of ``img``; pixels outside the blended
    face regions are returned untouched."""
    out = img
    template = None if align.template is None else np.asarray(align.template, dtype=np.float64)
    for rec in records:
        aligned = align_face(out, rec.landmarks, template, align.crop_size)
        face = as_image(deidentifier(aligned.face))
        if face.shape != aligned.face.shape:
            raise DeidError(f"de-identifier changed the crop shape {aligned.face.shape} -> {face.shape}")
        out = reinsert(out, face, aligned.transform, BlendSpec(align.feather))
    return out


def detection_schedule(n_frames: int, detect_every: int) -> list[int]:
    """Index of the frame whose detections each frame uses."""
    if detect_every < 1:
        raise ValueError("detect_every must be >= 1")
    return [i - i % detect_every for i in range(n_frames)]


def safe_name(key) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", str(key)) or "_"


# --- worker side ---------------------------------------------------------

_STATE = {}


def _init_worker(data):
    _STATE.clear()
    _STATE["deid"] = build_deidentifier(data)
    _STATE["align"] = AlignSettings.from_config(data)
    _STATE["metrics"] = tuple(data["evaluation"]["metrics"])
    _STATE["psnr_cap"] = data["evaluation"]["psnr_cap"]


def _run_item(item):
    index, key, src, recs, dst, rel = item
    rec = {"id": key, "status": "ok", "error": None, "faces": len(recs), "output": rel,
           "psnr": None, "ssim": None}
    try:
        img = load_image(src)
        if not recs:
            raise MissingDetection(f"no detection record for {key!r}")
        out = process_image(img, recs, _STATE["deid"], _STATE["align"])
        save_image(out, dst)
        saved = quantize_8bit(out).astype(np.float64) / 255.0
        _quality(rec, img, saved)
    except (DeidError, OSError, ValueError, ArithmeticError) as exc:
        rec.update(status="error", error=f"{type(exc).__name__}: {exc}", output=None)
    return index, rec


def _quality(rec, img, out):
    if "psnr" in _STATE["metrics"]:
        rec["psnr"] = psnr(img, out, _STATE["psnr_cap"])
    if "ssim" in _STATE["metrics"]:
        try:
            rec["ssim"] = ssim(img, out)
        except TooSmall:
            rec["ssim"] = None


def _map_items(items, data, jobs):
    if jobs <= 1 or len(items) <= 1:
        _init_worker(data)
        return [_run_item(it) for it in items]
    chunk = max(1, len(items) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(data,)) as pool:
        return list(pool.map(_run_item, items, chunksize=chunk))


def _benchmark_item(item):
    codes, recs = item
    img = codes.astype(np.float64) / 255.0
    return quantize_8bit(process_image(img, recs, _STATE["deid"], _STATE["align"]))


def deidentify_batch(images, records, data: dict, jobs: int = 1) -> list[np.ndarray]:
    """In-memory variant of the image job over 8-bit arrays (no disk I/O).

    Returns 8-bit outputs in input order; used for throughput measurements.
    """
    items = list(zip(images, records))
    if jobs <= 1:
        _init_worker(data)
        return [_benchmark_item(it) for it in items]
    chunk = max(1, len(items) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(data,)) as pool:
        return list(pool.map(_benchmark_item, items, chunksize=chunk))


# --- aggregation -----------------------------------------------------------

def _mean(values):
    vals = [v for v in values if v is not None]
    return math.fsum(vals) / len(vals) if vals else None


def aggregate_records(records) -> dict:
    ok = [r for r in records if r["status"] == "ok"]
    agg = {"n_images": len(records), "n_ok": len(ok), "n_failed": len(records) - len(ok)}
    for key in ("psnr", "ssim"):
        m = _mean(r.get(key) for r in ok)
        if m is not None:
            agg[key] = m
    return agg


def _public_config(data):
    return {k: v for k, v in data.items() if k not in NON_SEMANTIC}


def _make_threshold(ev, entries, orig_ids, orig, seed):
    """Decision threshold and FAR threshold for privacy metrics.

    Non-fixed modes calibrate on clean pairs of original embeddings grouped by
    the manifest identity column.
    """
    th = ev["threshold"]
    if th["mode"] == "fixed":
        return Threshold(th["value"], "fixed"), None
    ident = {e.id: e.identity for e in entries or ()}
    labels = [ident.get(i) for i in orig_ids]
    if any(lab is None for lab in labels):
        raise ConfigError("threshold calibration needs an identity for every embedded id in the manifest; "
                          "add identities or use threshold.mode=fixed", "evaluation.threshold.mode")
    clean = identity_pairs(orig, labels, seed, ev["impostor_factor"])
    try:
        t = calibrate_threshold(clean.genuine_scores, clean.impostor_scores, th["mode"], th["far_level"])
        far_t = calibrate_threshold(clean.genuine_scores, clean.impostor_scores, "far", th["far_level"])
    except EmptyPairs as exc:
        raise ConfigError(f"threshold calibration failed: {exc}", "evaluation.threshold") from exc
    return t, far_t


def evaluate_ingested(data: dict, entries=None) -> tuple[dict, dict]:
    """Privacy, FID and utility metrics from externally supplied vectors and
    predictions. Returns ``(aggregates, thresholds)``."""
    ev = data["evaluation"]
    metrics = ev["metrics"]
    agg, thresholds = {}, {}
    if "privacy" in metrics:
        oid, ovec = load_vectors(ev["embeddings"]["original"])
        did, dvec = load_vectors(ev["embeddings"]["deidentified"])
        ovec, dvec = align_by_id(oid, ovec, did, dvec)
        t, far_t = _make_threshold(ev, entries, oid, ovec, data["seed"])
        pairs = deid_pairs(ovec, dvec, data["seed"], ev["impostor_factor"])
        rep = privacy_report(pairs, t, ev["threshold"]["far_level"], far_t)
        agg.update(VA=rep["VA"], PSR=rep["PSR"])
        if "TAR_at_FAR" in rep:
            agg["TAR_at_FAR"] = rep["TAR_at_FAR"]
        thresholds["verification"] = {"value": t.value, "provenance": t.provenance, **t.detail}
        if "far_threshold" in rep:
            prov = far_t.provenance if far_t is not None else f"far-calibrated({ev['threshold']['far_level']}) on de-identified impostors"
            thresholds["far"] = {"value": rep["far_threshold"], "provenance": prov}
    if "fid" in metrics:
        _, real = load_vectors(ev["features"]["real"])
        _, gen = load_vectors(ev["features"]["generated"])
        agg["fid"] = fid(real, gen)
    if "utility" in metrics:
        eye = tuple(ev["eye_indices"]) if ev["eye_indices"] else None
        agg.update(utility_report(load_predictions(ev["predictions"]), eye_indices=eye))
    return agg, thresholds


# --- jobs --------------------------------------------------------------------

def _jobs(data, jobs):
    return int(jobs if jobs is not None else data.get("jobs", 1))


def _log_throughput(kind, n, elapsed):
    rate = n / elapsed if elapsed > 0 else float("inf")
    log.info("%s: %d items in %.2f s (%.1f items/s)", kind, n, elapsed, rate)


def run_image_job(cfg: ExperimentConfig, jobs: int | None = None) -> EvaluationReport:
    data = cfg.data
    if "dataset" not in data:
        raise ConfigError("this job needs a 'dataset' section", "dataset")
    entries = load_manifest(data["dataset"]["manifest"])
    dets = load_detections(data["dataset"]["detections"], key_field="id")
    out_dir = data["output_dir"]
    img_dir = os.path.join(out_dir, "images")
    os.makedirs(img_dir, exist_ok=True)
    items = []
    for i, e in enumerate(entries):
        rel = os.path.join("images", safe_name(e.id) + ".png")
        items.append((i, e.id, e.path, dets.get(e.id, []), os.path.join(out_dir, rel), rel))
    start = time.perf_counter()
    results = _map_items(items, data, _jobs(data, jobs))
    _log_throughput("images", len(items), time.perf_counter() - start)
    records = [rec for _, rec in sorted(results, key=lambda r: r[0])]
    for rec in records:
        if rec["status"] != "ok":
            log.warning("%s: %s", rec["id"], rec["error"])
    agg = aggregate_records(records)
    extra, thresholds = evaluate_ingested(data, entries)
    agg.update(extra)
    return EvaluationReport(cfg.label, cfg.config_hash, _public_config(data), records, agg, thresholds)


def run_video_job(cfg: ExperimentConfig, jobs: int | None = None) -> EvaluationReport:
    """De-identify an ordered frame sequence with detection skipping.

    Frame ``i`` uses the detections of frame ``i - i % detect_every``; a stride
    frame without a detection record raises MissingDetection.
    """
    data = cfg.data
    if "video" not in data:
        raise ConfigError("this job needs a 'video' section", "video")
    v = data["video"]
    frames = list_frames(v["frames"])
    dets = load_detections(v["detections"], key_field="frame")
    schedule = detection_schedule(len(frames), v["detect_every"])
    missing = sorted({s for s in schedule if s not in dets})
    if missing:
        raise MissingDetection(f"no detection for stride frame(s) {missing[:10]}")
    out_dir = data["output_dir"]
    os.makedirs(os.path.join(out_dir, "frames"), exist_ok=True)
    items = []
    for i, (path, src) in enumerate(zip(frames, schedule)):
        stem = os.path.splitext(os.path.basename(path))[0]
        rel = os.path.join("frames", safe_name(stem) + ".png")
        items.append((i, i, path, dets[src], os.path.join(out_dir, rel), rel))
    start = time.perf_counter()
    results = _map_items(items, data, _jobs(data, jobs))
    _log_throughput("frames", len(items), time.perf_counter() - start)
    records = [rec for _, rec in sorted(results, key=lambda r: r[0])]
    for rec, src in zip(records, schedule):
        rec["detection_frame"] = src
    agg = aggregate_records(records)
    return EvaluationReport(cfg.label, cfg.config_hash, _public_config(data), records, agg, {})


def run_evaluation(cfg: ExperimentConfig) -> EvaluationReport:
    """Score existing outputs in ``output_dir/images`` against the dataset and
    compute every ingested metric; no image is re-generated."""
    data = cfg.data
    entries: list[ManifestEntry] = load_manifest(data["dataset"]["manifest"]) if "dataset" in data else []
    _init_worker(data)
    records = []
    for e in entries:
        rel = os.path.join("images", safe_name(e.id) + ".png")
        path = os.path.join(data["output_dir"], rel)
        rec = {"id": e.id, "status": "ok", "error": None, "output": rel, "psnr": None, "ssim": None}
        try:
            _quality(rec, load_image(e.path), load_image(path))
        except (DeidError, OSError, ValueError) as exc:
            rec.update(status="error", error=f"{type(exc).__name__}: {exc}", output=None)
        records.append(rec)
    agg = aggregate_records(records) if records else {}
    extra, thresholds = evaluate_ingested(data, entries)
    agg.update(extra)
    return EvaluationReport(cfg.label, cfg.config_hash, _public_config(data), records, agg, thresholds)
