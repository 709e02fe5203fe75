"""Synthetic 22-joint fixtures with known structure, rigid/time-warp transforms, and a brute-force DTW oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import HUMANML3D_22, SOURCES, MotionSequence

KINDS = ("constant", "linear_ramp", "walk_cycle", "noise")
BRUTE_FORCE_MAX_LEN = 10

# y-up standing pose, right side at negative x, metres
BASE_POSE = np.array([
    [0.00, 1.00, 0.00],    # 1 pelvis
    [-0.10, 0.95, 0.00],   # 2 right hip
    [0.10, 0.95, 0.00],    # 3 left hip
    [0.00, 1.15, 0.00],    # 4 lumbar
    [-0.10, 0.52, 0.02],   # 5 right knee
    [0.10, 0.52, 0.02],    # 6 left knee
    [0.00, 1.33, 0.00],    # 7 thorax
    [-0.10, 0.09, -0.02],  # 8 right ankle
    [0.10, 0.09, -0.02],   # 9 left ankle
    [0.00, 1.45, 0.00],    # 10 upper spine
    [-0.10, 0.00, 0.12],   # 11 right foot
    [0.10, 0.00, 0.12],    # 12 left foot
    [0.00, 1.52, 0.00],    # 13 neck base
    [-0.19, 1.46, 0.00],   # 14 right shoulder
    [0.19, 1.46, 0.00],    # 15 left shoulder
    [0.00, 1.76, 0.02],    # 16 head top
    [-0.22, 1.17, -0.02],  # 17 right elbow
    [0.22, 1.17, -0.02],   # 18 left elbow
    [-0.23, 0.92, 0.03],   # 19 right wrist
    [0.23, 0.92, 0.03],    # 20 left wrist
    [-0.23, 0.84, 0.05],   # 21 right hand
    [0.23, 0.84, 0.05],    # 22 left hand
])

# forward swing weight per joint (1-based index -> weight); sign gives the phase group
_SWING = {
    5: 0.5, 8: 1.0, 11: 1.0,          # right leg
    6: -0.5, 9: -1.0, 12: -1.0,       # left leg
    17: -0.5, 19: -1.0, 21: -1.0,     # right arm swings with the left leg
    18: 0.5, 20: 1.0, 22: 1.0,        # left arm
}


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a deterministic synthetic sequence.

    ``period`` (frames) only affects ``walk_cycle``; ``seed`` only ``noise``.
    ``amplitude`` is the ramp travel, the swing amplitude or the noise
    standard deviation, depending on ``kind``.
    """

    kind: str
    frames: int
    fps: float = 30.0
    amplitude: float = 0.1
    seed: int = 0
    period: int = 32
    source: str = "simulated"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"synth kind must be one of {KINDS}, got {self.kind!r}")
        if self.frames < 1:
            raise ValidationError(f"frame count must be >= 1, got {self.frames}")
        if not self.fps > 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")
        if not np.isfinite(self.amplitude):
            raise ValidationError("amplitude must be finite")
        if self.period < 2:
            raise ValidationError(f"period must be >= 2 frames, got {self.period}")
        if self.source not in SOURCES:
            raise ValidationError(f"source must be one of {SOURCES}")


def generate(spec: SynthSpec) -> MotionSequence:
    T = spec.frames
    data = np.broadcast_to(BASE_POSE, (T, 22, 3)).copy()
    if spec.kind == "linear_ramp":
        s = np.arange(T) / max(T - 1, 1)
        data[..., 2] += spec.amplitude * s[:, None]
    elif spec.kind == "walk_cycle":
        phase = np.sin(2.0 * np.pi * np.arange(T) / spec.period)
        for j, w in _SWING.items():
            data[:, j - 1, 2] += spec.amplitude * w * phase
    elif spec.kind == "noise":
        rng = np.random.default_rng(spec.seed)
        data += spec.amplitude * rng.standard_normal(data.shape)
    meta = {"synth.kind": spec.kind, "synth.amplitude": repr(float(spec.amplitude))}
    if spec.kind == "walk_cycle":
        meta["synth.period"] = str(spec.period)
    if spec.kind == "noise":
        meta["synth.seed"] = str(spec.seed)
    return MotionSequence(HUMANML3D_22, data, spec.fps, spec.source, frozenset(), meta)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed proper rotation (QR of a Gaussian matrix, sign-fixed)."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def apply_rigid(seq: MotionSequence, rotation, translation=(0.0, 0.0, 0.0)) -> MotionSequence:
    """``x -> R x + t`` on every joint of every frame."""
    R = np.asarray(rotation, dtype=np.float64)
    t = np.asarray(translation, dtype=np.float64)
    if R.shape != (3, 3) or t.shape != (3,):
        raise ValidationError("rotation must be 3 x 3 and translation a 3-vector")
    if not np.allclose(R.T @ R, np.eye(3), atol=1e-10) or np.linalg.det(R) <= 0:
        raise ValidationError("rotation must be orthogonal with determinant +1")
    data = seq.data @ R.T + t
    state = seq.state if not t.any() else seq.state - {"centered"}
    return MotionSequence(seq.skeleton, data, seq.fps, seq.source, state, dict(seq.meta))


def apply_time_warp(seq: MotionSequence, warp) -> MotionSequence:
    """Frame ``k`` of the result is frame ``warp[k]`` (0-based) of ``seq``; ``warp`` must be non-decreasing."""
    w = np.asarray(warp)
    if w.ndim != 1 or w.size < 1 or not np.issubdtype(w.dtype, np.integer):
        raise ValidationError("warp map must be a non-empty integer vector")
    if (np.diff(w) < 0).any():
        raise ValidationError("warp map must be non-decreasing")
    if w[0] < 0 or w[-1] >= seq.n_frames:
        raise ValidationError(f"warp map indexes outside 0..{seq.n_frames - 1}")
    return MotionSequence(seq.skeleton, seq.data[w], seq.fps, seq.source, seq.state, dict(seq.meta))


def brute_force_dtw(path_a, path_b) -> float:
    """Minimum DTW cost by enumerating every warping path (lengths up to 10).

    Same step set and local cost as the dynamic-programming version; costs
    are accumulated in path order, so results agree to the last bit.
    """
    a = np.asarray(path_a, dtype=np.float64)
    b = np.asarray(path_b, dtype=np.float64)
    a = a[:, None] if a.ndim == 1 else a
    b = b[:, None] if b.ndim == 1 else b
    n, m = a.shape[0], b.shape[0]
    if n < 1 or m < 1:
        raise ValidationError("paths must be non-empty")
    if max(n, m) > BRUTE_FORCE_MAX_LEN:
        raise ValidationError(f"brute-force DTW is limited to length {BRUTE_FORCE_MAX_LEN}, got {n} x {m}")
    if a.shape[1] != b.shape[1]:
        raise ValidationError("paths differ in dimension")
    cost = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)).tolist()
    best = float("inf")
    stack = [(0, 0, cost[0][0])]
    while stack:
        i, j, acc = stack.pop()
        if i == n - 1 and j == m - 1:
            best = min(best, acc)
            continue
        if i + 1 < n:
            stack.append((i + 1, j, acc + cost[i + 1][j]))
        if j + 1 < m:
            stack.append((i, j + 1, acc + cost[i][j + 1]))
        if i + 1 < n and j + 1 < m:
            stack.append((i + 1, j + 1, acc + cost[i + 1][j + 1]))
    return best
