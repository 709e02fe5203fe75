"""Motion fidelity evaluation: landmark ingest, retargeting, normalization, metrics and paired statistics."""

from .align import align_triplet, resample_linear
from .errors import DegenerateError, MotionFidError, ParseError, ValidationError
from .io import parse_landmark_export, parse_motion, write_motion
from .metrics import MetricReport, compare_sources, dtw_joint, mpjpe, pa_mpjpe, procrustes_rotation
from .model import HUMANML3D_22, MEDIAPIPE_33, EvalTriplet, LandmarkSequence, MotionSequence, SkeletonSpec
from .normalize import NormalizeConfig, normalize_pipeline
from .quantizer import Codebook, nearest_code, vq_loss
from .retarget import retarget_33_to_22
from .stats import AggregateReport, aggregate, paired_t_test, shapiro_wilk

__version__ = "0.1.0"

__all__ = [
    "AggregateReport", "Codebook", "DegenerateError", "EvalTriplet", "HUMANML3D_22", "LandmarkSequence",
    "MEDIAPIPE_33", "MetricReport", "MotionFidError", "MotionSequence", "NormalizeConfig", "ParseError",
    "SkeletonSpec", "ValidationError", "aggregate", "align_triplet", "compare_sources", "dtw_joint", "mpjpe",
    "nearest_code", "normalize_pipeline", "pa_mpjpe", "paired_t_test", "parse_landmark_export", "parse_motion",
    "procrustes_rotation",
    "resample_linear", "retarget_33_to_22", "shapiro_wilk", "vq_loss", "write_motion",
]
