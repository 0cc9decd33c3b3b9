"""Privacy, utility and quality metrics."""

from .fid import feature_stats, fid, frechet_distance
from .quality import PSNR_CAP, psnr, ssim, ssim_and_grad, ssim_map
from .utility import PredictionTable, load_predictions, save_predictions, utility_report
from .vectors import align_by_id, load_vectors, save_vectors
from .verification import (
    PairSet,
    Threshold,
    calibrate_threshold,
    cosine_scores,
    deid_pairs,
    identity_pairs,
    privacy_report,
)

__all__ = [
    "PSNR_CAP", "PairSet", "PredictionTable", "Threshold", "align_by_id",
    "calibrate_threshold", "cosine_scores", "deid_pairs", "feature_stats", "fid",
    "frechet_distance", "identity_pairs", "load_predictions", "load_vectors", "privacy_report", "psnr",
    "save_predictions", "save_vectors", "ssim", "ssim_and_grad", "ssim_map",
    "utility_report",
]
