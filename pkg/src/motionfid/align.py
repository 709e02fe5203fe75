"""Linear-interpolation resampling to a common frame count."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import EvalTriplet, MotionSequence


@dataclass(frozen=True)
class AlignPlan:
    target_frames: int
    lengths: tuple[int, int, int]
    auto: bool = True

    def echo(self) -> dict[str, str]:
        return {
            "align.target_frames": str(self.target_frames),
            "align.mode": "auto" if self.auto else "override",
            "align.lengths": ",".join(str(n) for n in self.lengths),
        }


def resample_channels(x: np.ndarray, n_out: int) -> np.ndarray:
    """Resample the rows of ``x`` (T, ...) to ``n_out`` rows.

    Input sample ``i`` sits at normalized time ``i/(T-1)``, output sample
    ``k`` at ``k/(n_out-1)``. Positions are located with integer arithmetic,
    so samples that land on an input knot are copied exactly.
    """
    x = np.asarray(x, dtype=np.float64)
    T = x.shape[0]
    if T < 2 or n_out < 2:
        raise ValidationError(f"resampling needs at least 2 input and 2 output frames (got {T} -> {n_out})")
    num = np.arange(n_out, dtype=np.int64) * (T - 1)
    den = n_out - 1
    lo = num // den
    rem = num % den
    hi = np.minimum(lo + 1, T - 1)
    frac = (rem / den).reshape((-1,) + (1,) * (x.ndim - 1))
    a, b = x[lo], x[hi]
    out = a + frac * (b - a)
    # convex combination: keep rounding from stepping outside the bracket
    out = np.clip(out, np.minimum(a, b), np.maximum(a, b))
    exact = rem == 0
    out[exact] = x[lo[exact]]
    return out


def resample_linear(seq: MotionSequence, n_frames: int) -> MotionSequence:
    data = resample_channels(seq.data, int(n_frames))
    return seq.replace(data, add_state=("resampled",), meta={"align.target_frames": str(int(n_frames))})


def plan_alignment(trip: EvalTriplet, target_frames: int | None = None) -> AlignPlan:
    lengths = trip.frame_counts
    if min(lengths) < 2:
        raise ValidationError(f"triplet {trip.task_id!r}: every member needs at least 2 frames, got {lengths}")
    if target_frames is None:
        return AlignPlan(min(lengths), lengths, True)
    if target_frames < 2:
        raise ValidationError(f"target frame count must be >= 2, got {target_frames}")
    return AlignPlan(int(target_frames), lengths, False)


def align_triplet(trip: EvalTriplet, target_frames: int | None = None) -> EvalTriplet:
    """Resample all three members to ``target_frames`` (default: the shortest member's length).

    The plan is echoed into every member's metadata under ``align.*``.
    """
    plan = plan_alignment(trip, target_frames)
    meta = plan.echo()
    members = {
        name: resample_linear(seq, plan.target_frames).replace(meta=meta)
        for name, seq in trip.members.items()
    }
    return EvalTriplet(task_id=trip.task_id, **members)
