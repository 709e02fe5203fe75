"""Skeleton catalogs and the motion containers the rest of the package works on.

Joint indices are 1-based at every public boundary, matching the published
joint tables; arrays are indexed 0-based internally.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .errors import ParseError, ValidationError

SOURCES = ("real", "benchmark", "simulated")
STATE_FLAGS = ("centered", "scaled", "y_flipped", "filtered", "resampled")


@dataclass(frozen=True)
class SkeletonSpec:
    """Ordered joint catalog.

    Attributes
    ----------
    id : str
        Registry key written into motion file headers.
    joints : tuple of (int, str)
        ``(index, name)`` pairs with contiguous 1-based indices.
    head_index : int
        Joint used for root-centering by default.
    scale_pair : (int, int)
        Joints whose distance defines the per-frame body scale.
    left_right_pairs : tuple of (int, int)
        Mirrored joints, left/right order as they appear in the catalog.
    """

    id: str
    joints: tuple[tuple[int, str], ...]
    head_index: int
    scale_pair: tuple[int, int]
    left_right_pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        idx = [j for j, _ in self.joints]
        if idx != list(range(1, len(idx) + 1)):
            raise ValidationError(f"skeleton {self.id!r}: joint indices must be contiguous 1..J")
        names = [n for _, n in self.joints]
        if len(set(names)) != len(names):
            raise ValidationError(f"skeleton {self.id!r}: duplicate joint names")
        J = len(idx)
        for role, j in (("head", self.head_index), ("scale_a", self.scale_pair[0]), ("scale_b", self.scale_pair[1])):
            if not 1 <= j <= J:
                raise ValidationError(f"skeleton {self.id!r}: {role} index {j} outside 1..{J}")
        for a, b in self.left_right_pairs:
            if a == b or not (1 <= a <= J and 1 <= b <= J):
                raise ValidationError(f"skeleton {self.id!r}: bad left/right pair ({a}, {b})")

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def names(self) -> list[str]:
        return [n for _, n in self.joints]

    def name_of(self, j: int) -> str:
        return self.joints[self.check_index(j) - 1][1]

    def index_of(self, name: str) -> int:
        for j, n in self.joints:
            if n == name:
                return j
        raise ValidationError(f"skeleton {self.id!r} has no joint named {name!r}")

    def check_index(self, j: int) -> int:
        if not 1 <= int(j) <= self.n_joints:
            raise ValidationError(f"joint index {j} outside 1..{self.n_joints}")
        return int(j)


HUMANML3D_22_TEXT = """\
skeleton humanml3d-22
1, Root/Pelvis
2, Right Hip
3, Left Hip
4, Spine/Lumbar
5, Right Knee
6, Left Knee
7, Spine/Thorax
8, Right Ankle
9, Left Ankle
10, Spine/Upper
11, Right Foot, scale_b
12, Left Foot
13, Neck Base
14, Right Shoulder
15, Left Shoulder
16, Head Top, head scale_a
17, Right Elbow
18, Left Elbow
19, Right Wrist
20, Left Wrist
21, Right Hand
22, Left Hand
pair 3 2
pair 6 5
pair 9 8
pair 12 11
pair 15 14
pair 18 17
pair 20 19
pair 22 21
"""

MEDIAPIPE_33_NAMES = (
    "NOSE", "LEFT_EYE_INNER", "LEFT_EYE", "LEFT_EYE_OUTER", "RIGHT_EYE_INNER",
    "RIGHT_EYE", "RIGHT_EYE_OUTER", "LEFT_EAR", "RIGHT_EAR", "MOUTH_LEFT",
    "MOUTH_RIGHT", "LEFT_SHOULDER", "RIGHT_SHOULDER", "LEFT_ELBOW", "RIGHT_ELBOW",
    "LEFT_WRIST", "RIGHT_WRIST", "LEFT_PINKY", "RIGHT_PINKY", "LEFT_INDEX",
    "RIGHT_INDEX", "LEFT_THUMB", "RIGHT_THUMB", "LEFT_HIP", "RIGHT_HIP",
    "LEFT_KNEE", "RIGHT_KNEE", "LEFT_ANKLE", "RIGHT_ANKLE", "LEFT_HEEL",
    "RIGHT_HEEL", "LEFT_FOOT_INDEX", "RIGHT_FOOT_INDEX",
)


def _mediapipe_33() -> SkeletonSpec:
    joints = tuple((i + 1, n) for i, n in enumerate(MEDIAPIPE_33_NAMES))
    pos = {n: i + 1 for i, n in enumerate(MEDIAPIPE_33_NAMES)}
    pairs = tuple(
        (pos[n], pos["RIGHT_" + n[5:]]) for n in MEDIAPIPE_33_NAMES if n.startswith("LEFT_")
    )
    pairs += ((pos["MOUTH_LEFT"], pos["MOUTH_RIGHT"]),)
    return SkeletonSpec(
        id="mediapipe-33",
        joints=joints,
        head_index=pos["NOSE"],
        scale_pair=(pos["NOSE"], pos["RIGHT_HEEL"]),
        left_right_pairs=pairs,
    )


_LINE = re.compile(r"^\s*(\d+)\s*,\s*([^,]+?)\s*(?:,\s*([^,]*?)\s*)?(?:,\s*(.*?)\s*)?$")


def parse_skeleton_text(text: str, with_rules: bool = False):
    """Parse a skeleton table.

    Grammar, one item per line (``#`` starts a comment)::

        skeleton <id>
        <index>, <name>[, <role tags>[, <rule>]]
        pair <left index> <right index>

    Role tags are any of ``head``, ``scale_a``, ``scale_b`` separated by
    whitespace. The optional fourth column is a retarget rule and is only
    returned when ``with_rules`` is set, as ``(skeleton, {index: rule_text})``.
    """
    sk_id = None
    joints, pairs, rules = [], [], {}
    head = scale_a = scale_b = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head_word = line.split()[0]
        if head_word == "skeleton":
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"line {lineno}: expected 'skeleton <id>'")
            sk_id = parts[1]
            continue
        if head_word == "pair":
            parts = line.split()
            try:
                pairs.append((int(parts[1]), int(parts[2])))
            except (IndexError, ValueError):
                raise ParseError(f"line {lineno}: expected 'pair <int> <int>'") from None
            continue
        m = _LINE.match(line)
        if not m:
            raise ParseError(f"line {lineno}: cannot parse joint row {raw!r}")
        idx, name, tags, rule = int(m.group(1)), m.group(2), m.group(3) or "", m.group(4)
        joints.append((idx, name))
        for tag in tags.split():
            if tag == "head":
                head = idx
            elif tag == "scale_a":
                scale_a = idx
            elif tag == "scale_b":
                scale_b = idx
            else:
                raise ParseError(f"line {lineno}: unknown role tag {tag!r}")
        if rule:
            rules[idx] = rule
    if sk_id is None:
        raise ParseError("missing 'skeleton <id>' line")
    if head is None or scale_a is None or scale_b is None:
        raise ParseError(f"skeleton {sk_id!r}: head, scale_a and scale_b tags are all required")
    joints.sort()
    spec = SkeletonSpec(sk_id, tuple(joints), head, (scale_a, scale_b), tuple(pairs))
    return (spec, rules) if with_rules else spec


def skeleton_to_text(spec: SkeletonSpec) -> str:
    lines = [f"skeleton {spec.id}"]
    for j, name in spec.joints:
        tags = []
        if j == spec.head_index:
            tags.append("head")
        if j == spec.scale_pair[0]:
            tags.append("scale_a")
        if j == spec.scale_pair[1]:
            tags.append("scale_b")
        lines.append(f"{j}, {name}" + (f", {' '.join(tags)}" if tags else ""))
    lines += [f"pair {a} {b}" for a, b in spec.left_right_pairs]
    return "\n".join(lines) + "\n"


HUMANML3D_22 = parse_skeleton_text(HUMANML3D_22_TEXT)
MEDIAPIPE_33 = _mediapipe_33()

_REGISTRY: dict[str, SkeletonSpec] = {HUMANML3D_22.id: HUMANML3D_22, MEDIAPIPE_33.id: MEDIAPIPE_33}


def builtin_skeletons() -> tuple[SkeletonSpec, SkeletonSpec]:
    """Return the 22-joint HumanML3D-style catalog and the 33-landmark catalog."""
    return HUMANML3D_22, MEDIAPIPE_33


def register_skeleton(spec: SkeletonSpec) -> SkeletonSpec:
    existing = _REGISTRY.get(spec.id)
    if existing is not None and existing != spec:
        raise ValidationError(f"skeleton id {spec.id!r} already registered with a different catalog")
    _REGISTRY[spec.id] = spec
    return spec


def get_skeleton(sk_id: str) -> SkeletonSpec:
    try:
        return _REGISTRY[sk_id]
    except KeyError:
        raise ValidationError(f"unknown skeleton id {sk_id!r}") from None


def load_skeleton(path) -> SkeletonSpec:
    with open(path, encoding="utf-8") as fh:
        return register_skeleton(parse_skeleton_text(fh.read()))


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LandmarkSequence:
    """Raw pose-estimator export: ``coords`` (T, 33, 3) and ``visibility`` (T, 33)."""

    coords: np.ndarray
    visibility: np.ndarray
    fps: float = 30.0

    def __post_init__(self):
        c = _frozen(self.coords)
        v = _frozen(self.visibility)
        if c.ndim != 3 or c.shape[1:] != (33, 3) or c.shape[0] < 1:
            raise ValidationError(f"landmark coords must have shape (T>=1, 33, 3), got {c.shape}")
        if v.shape != c.shape[:2]:
            raise ValidationError(f"visibility shape {v.shape} does not match coords {c.shape[:2]}")
        bad = np.flatnonzero(~np.isfinite(c).all(axis=(1, 2)))
        if bad.size:
            raise ValidationError(f"non-finite coordinate in frame {bad[0] + 1}")
        if not np.all((v >= 0) & (v <= 1)):
            raise ValidationError("visibility outside [0, 1]")
        if not self.fps > 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "visibility", v)

    @property
    def n_frames(self) -> int:
        return self.coords.shape[0]

    def as_motion(self, source: str = "real") -> "MotionSequence":
        """View the export as a 33-joint motion sequence (visibility dropped)."""
        return MotionSequence(MEDIAPIPE_33, self.coords, self.fps, source)


@dataclass(frozen=True, eq=False)
class MotionSequence:
    """Motion tensor (T, J, 3) tagged with its skeleton, provenance and pipeline state."""

    skeleton: SkeletonSpec
    data: np.ndarray
    fps: float = 30.0
    source: str = "real"
    state: frozenset = frozenset()
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        d = _frozen(self.data)
        J = self.skeleton.n_joints
        if d.ndim != 3 or d.shape[0] < 1 or d.shape[1:] != (J, 3):
            raise ValidationError(f"motion data must have shape (T>=1, {J}, 3), got {d.shape}")
        if not np.isfinite(d).all():
            raise ValidationError("motion data contains non-finite values")
        if self.source not in SOURCES:
            raise ValidationError(f"unknown source {self.source!r}; expected one of {SOURCES}")
        state = frozenset(self.state)
        unknown = state - set(STATE_FLAGS)
        if unknown:
            raise ValidationError(f"unknown state flags {sorted(unknown)}")
        if not self.fps > 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")
        meta = MappingProxyType({str(k): str(v) for k, v in dict(self.meta).items()})
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "meta", meta)
        if "centered" in state:
            c = self.center_joint
            if np.any(d[:, c - 1, :] != 0.0):
                raise ValidationError(f"state 'centered' set but joint {c} is not at the origin")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_joints(self) -> int:
        return self.data.shape[1]

    @property
    def center_joint(self) -> int:
        return int(self.meta.get("normalize.center_joint", self.skeleton.head_index))

    def replace(self, data=None, *, add_state: Iterable[str] = (), meta: Mapping[str, str] | None = None,
                fps: float | None = None) -> "MotionSequence":
        """New sequence with updated data; state flags only ever accumulate."""
        merged = dict(self.meta)
        if meta:
            merged.update({str(k): str(v) for k, v in meta.items()})
        return MotionSequence(
            self.skeleton,
            self.data if data is None else data,
            self.fps if fps is None else fps,
            self.source,
            self.state | frozenset(add_state),
            merged,
        )

    def __eq__(self, other):
        if not isinstance(other, MotionSequence):
            return NotImplemented
        return (
            self.skeleton == other.skeleton
            and self.fps == other.fps
            and self.source == other.source
            and self.state == other.state
            and dict(self.meta) == dict(other.meta)
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None


def joint_trajectory(seq: MotionSequence, j: int) -> np.ndarray:
    """Per-frame positions of joint ``j`` (1-based), shape (T, 3)."""
    return seq.data[:, seq.skeleton.check_index(j) - 1, :]


@dataclass(frozen=True)
class EvalTriplet:
    """Real, benchmark and simulated sequences for one task."""

    real: MotionSequence
    benchmark: MotionSequence
    simulated: MotionSequence
    task_id: str = "task"

    def __post_init__(self):
        sk = self.real.skeleton
        for name in ("benchmark", "simulated"):
            if getattr(self, name).skeleton != sk:
                raise ValidationError(
                    f"triplet {self.task_id!r}: {name} skeleton "
                    f"{getattr(self, name).skeleton.id!r} differs from real {sk.id!r}"
                )

    @property
    def members(self) -> dict[str, MotionSequence]:
        return {"real": self.real, "benchmark": self.benchmark, "simulated": self.simulated}

    @property
    def frame_counts(self) -> tuple[int, int, int]:
        return self.real.n_frames, self.benchmark.n_frames, self.simulated.n_frames
