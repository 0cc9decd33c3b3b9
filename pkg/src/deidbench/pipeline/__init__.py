"""Experiment orchestration: configs, data sources, jobs and reports."""

from .config import ExperimentConfig, accepted_keys, apply_overrides, config_hash, resolve_config, validate_config
from .report import EvaluationReport, emit_report, load_results, radar_svg
from .runner import (
    AlignSettings,
    build_deidentifier,
    deidentify_batch,
    detection_schedule,
    evaluate_ingested,
    process_image,
    run_evaluation,
    run_image_job,
    run_video_job,
)
from .sources import DetectionRecord, ManifestEntry, list_frames, load_detections, load_manifest, write_detections

__all__ = [
    "AlignSettings", "DetectionRecord", "EvaluationReport", "ExperimentConfig", "ManifestEntry",
    "accepted_keys", "apply_overrides", "build_deidentifier", "config_hash", "deidentify_batch",
    "detection_schedule", "emit_report", "evaluate_ingested", "list_frames", "load_detections",
    "load_manifest", "load_results", "process_image", "radar_svg", "resolve_config",
    "run_evaluation", "run_image_job", "run_video_job", "validate_config", "write_detections",
]
