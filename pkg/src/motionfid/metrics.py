"""Whole-body and per-joint motion similarity: MPJPE, PA-MPJPE and DTW."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegenerateError, ValidationError
from .model import EvalTriplet, MotionSequence

METRICS = ("mpjpe", "pa_mpjpe", "dtw")
METRIC_LABELS = {"mpjpe": "MPJPE", "pa_mpjpe": "PA-MPJPE", "dtw": "DTW"}
LABEL_METRICS = {v: k for k, v in METRIC_LABELS.items()}
PA_MODES = ("per_frame", "global")
COMPARED_SOURCES = ("benchmark", "simulated")


def _data(x) -> np.ndarray:
    return x.data if isinstance(x, MotionSequence) else np.asarray(x, dtype=np.float64)


def _same_shape(a, b) -> tuple[np.ndarray, np.ndarray]:
    A, B = _data(a), _data(b)
    if A.shape != B.shape:
        raise ValidationError(f"shape mismatch: {A.shape} vs {B.shape}")
    if A.ndim != 3 or A.shape[-1] != 3:
        raise ValidationError(f"expected (T, J, 3) arrays, got {A.shape}")
    return A, B


def joint_distances(a, b) -> np.ndarray:
    """Euclidean distance per frame and joint, shape (T, J)."""
    A, B = _same_shape(a, b)
    d = A - B
    return np.sqrt((d * d).sum(-1))


def mpjpe(a, b) -> float:
    """Mean Euclidean joint distance over all frames and joints."""
    return float(joint_distances(a, b).mean())


def per_joint_mpjpe(a, b) -> np.ndarray:
    return joint_distances(a, b).mean(axis=0)


@dataclass(frozen=True)
class ProcrustesResult:
    """Rotation mapping the second point set onto the first.

    ``residual`` is the mean point distance after alignment; ``scale`` is 1
    unless scale fitting was requested.
    """

    rotation: np.ndarray
    residual: float
    reflection_used: bool
    scale: float = 1.0


def procrustes_rotation(A, B, allow_reflection: bool = False, with_scale: bool = False) -> ProcrustesResult:
    """Best orthogonal map of centred ``B`` onto centred ``A`` (both N x 3).

    With ``Ac``, ``Bc`` the centred sets, ``Ac^T Bc = U S V^T`` and
    ``R = U V^T``; ``R @ Bc[i]`` then approximates ``Ac[i]``. Unless
    reflections are allowed, a negative determinant is repaired by flipping
    the singular vector of the smallest singular value.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape or A.ndim != 2 or A.shape[1] != 3:
        raise ValidationError(f"expected two N x 3 point sets of equal shape, got {A.shape} and {B.shape}")
    if A.shape[0] < 3:
        raise ValidationError(f"need at least 3 points, got {A.shape[0]}")
    if not (np.isfinite(A).all() and np.isfinite(B).all()):
        raise ValidationError("point sets must be finite")
    R, scale, err, status, reflected = _kernels.procrustes_batch(A[None], B[None], allow_reflection, with_scale)
    if status[0]:
        raise DegenerateError("alignment undefined: a point set collapses to a single point after centering")
    return ProcrustesResult(R[0], float(err[0].mean()), bool(reflected[0]), float(scale[0]))


def pa_errors(a, b, mode: str = "per_frame", allow_reflection: bool = False,
              with_scale: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Aligned joint errors (T, J) and the rotations used.

    ``per_frame`` fits one rotation per frame (shape (T, 3, 3)); ``global``
    fits a single rotation to all frames stacked (shape (1, 3, 3)). The
    second argument is the one being rotated.
    """
    A, B = _same_shape(a, b)
    T, J, _ = A.shape
    if J < 3:
        raise ValidationError(f"Procrustes alignment needs at least 3 joints, got {J}")
    if mode == "per_frame":
        R, _, err, status, _ = _kernels.procrustes_batch(A, B, allow_reflection, with_scale)
        if status.any():
            bad = int(np.flatnonzero(status)[0]) + 1
            raise DegenerateError(f"alignment undefined in frame {bad}: all joints coincide")
        return err, R
    if mode == "global":
        R, _, err, status, _ = _kernels.procrustes_batch(
            A.reshape(1, T * J, 3), B.reshape(1, T * J, 3), allow_reflection, with_scale
        )
        if status.any():
            raise DegenerateError("alignment undefined: all points coincide")
        return err.reshape(T, J), R
    raise ValidationError(f"PA mode must be one of {PA_MODES}, got {mode!r}")


def pa_mpjpe(a, b, mode: str = "per_frame", allow_reflection: bool = False, with_scale: bool = False) -> float:
    err, _ = pa_errors(a, b, mode, allow_reflection, with_scale)
    return float(err.mean())


def _path(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2 or p.shape[0] < 1:
        raise ValidationError(f"DTW needs a non-empty (T, d) path, got shape {p.shape}")
    return p


def dtw_joint(path_a, path_b) -> float:
    """Unnormalized cumulative DTW cost between two trajectories.

    Steps (1,0), (0,1) and (1,1), each adding the Euclidean distance of the
    cell entered; the path is anchored at both ends.
    """
    a, b = _path(path_a), _path(path_b)
    if a.shape[1] != b.shape[1]:
        raise ValidationError(f"DTW paths differ in dimension: {a.shape[1]} vs {b.shape[1]}")
    return float(_kernels.dtw_batch(a[None], b[None])[0])


def dtw_per_joint(a, b) -> np.ndarray:
    A, B = _data(a), _data(b)
    if A.ndim != 3 or B.ndim != 3 or A.shape[1:] != B.shape[1:]:
        raise ValidationError(f"joint layouts differ: {A.shape} vs {B.shape}")
    return _kernels.dtw_batch(A.transpose(1, 0, 2), B.transpose(1, 0, 2))


def dtw_mean(a, b) -> float:
    return float(dtw_per_joint(a, b).mean())


def per_joint_metrics(a, b, metrics=METRICS, pa_mode: str = "per_frame", allow_reflection: bool = False,
                      with_scale: bool = False) -> dict[str, np.ndarray]:
    """Per-joint arrays for each requested metric. PA errors share one rotation per frame across joints."""
    out: dict[str, np.ndarray] = {}
    for m in metrics:
        if m == "mpjpe":
            out[m] = per_joint_mpjpe(a, b)
        elif m == "pa_mpjpe":
            out[m] = pa_errors(a, b, pa_mode, allow_reflection, with_scale)[0].mean(axis=0)
        elif m == "dtw":
            out[m] = dtw_per_joint(a, b)
        else:
            raise ValidationError(f"unknown metric {m!r}; expected a subset of {METRICS}")
    return out


@dataclass
class SourceMetrics:
    overall: dict[str, float]
    per_joint: dict[str, np.ndarray]

    def to_dict(self) -> dict:
        return {
            "overall": {k: float(v) for k, v in self.overall.items()},
            "per_joint": {k: [float(x) for x in v] for k, v in self.per_joint.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SourceMetrics":
        return cls(
            {k: float(v) for k, v in d["overall"].items()},
            {k: np.asarray(v, dtype=np.float64) for k, v in d["per_joint"].items()},
        )


@dataclass
class MetricReport:
    """Metric blocks for one task, keyed by compared source (``benchmark``, ``simulated``), each against ``real``."""

    task_id: str
    sources: dict[str, SourceMetrics]
    joint_names: list[str] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for src, block in self.sources.items():
            for m, v in block.overall.items():
                if not (np.isfinite(v) and v >= 0):
                    raise ValidationError(f"{self.task_id}/{src}/{m}: metric must be finite and non-negative")
            for m, arr in block.per_joint.items():
                if not (np.isfinite(arr).all() and (arr >= 0).all()):
                    raise ValidationError(f"{self.task_id}/{src}/{m}: per-joint values must be finite and non-negative")

    @property
    def metrics(self) -> list[str]:
        first = next(iter(self.sources.values()), None)
        return [] if first is None else [m for m in METRICS if m in first.per_joint]

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "joint_names": list(self.joint_names),
            "metadata": dict(sorted(self.metadata.items())),
            "sources": {s: b.to_dict() for s, b in self.sources.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            str(d["task_id"]),
            {s: SourceMetrics.from_dict(b) for s, b in d["sources"].items()},
            list(d.get("joint_names", [])),
            {str(k): str(v) for k, v in d.get("metadata", {}).items()},
        )


def compare_sources(trip: EvalTriplet, metrics=METRICS, pa_mode: str = "per_frame",
                    allow_reflection: bool = False, with_scale: bool = False) -> MetricReport:
    """Score benchmark and simulated members against the real member."""
    metrics = tuple(m for m in METRICS if m in set(metrics))
    if not metrics:
        raise ValidationError("no metrics selected")
    real = trip.real
    if any(m in metrics for m in ("mpjpe", "pa_mpjpe")):
        counts = set(trip.frame_counts)
        if len(counts) != 1:
            raise ValidationError(f"triplet {trip.task_id!r} is not aligned: frame counts {trip.frame_counts}")
    sources = {}
    for name in COMPARED_SOURCES:
        seq = getattr(trip, name)
        per_joint = per_joint_metrics(seq, real, metrics, pa_mode, allow_reflection, with_scale)
        overall = {}
        if "mpjpe" in per_joint:
            overall["mpjpe"] = mpjpe(seq, real)
        if "pa_mpjpe" in per_joint:
            overall["pa_mpjpe"] = float(per_joint["pa_mpjpe"].mean())
        if "dtw" in per_joint:
            overall["dtw"] = float(per_joint["dtw"].mean())
        sources[name] = SourceMetrics(overall, per_joint)
    meta = {
        "metrics": ",".join(metrics),
        "pa.mode": pa_mode,
        "pa.allow_reflection": "yes" if allow_reflection else "no",
        "pa.scale": "yes" if with_scale else "no",
        "frames": str(real.n_frames),
    }
    for key, val in real.meta.items():
        if key.startswith(("normalize.", "align.", "retarget.")):
            meta[key] = val
    if meta.get("normalize.scale_b") == "11":
        meta["note.scale_reference"] = "scale pair uses joint 11 (Right Foot); joint 12 (Left Foot) is the documented alternative"
    return MetricReport(trip.task_id, sources, real.skeleton.names, meta)
