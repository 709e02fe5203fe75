"""Readers and writers for landmark exports, canonical motion files and metric tables.

Formats
-------
``.mpl`` landmark export
    Either JSON -- ``{"fps": 30, "frames": [[{"x":..,"y":..,"z":..,"visibility":..}, ...], ...]}``
    (a bare frame array is also accepted, and a frame may be ``{"landmarks": [...]}``) --
    or CSV rows ``frame,landmark,x,y,z,visibility`` with 1-based frame and
    landmark numbers, an optional header row and an optional ``# fps=<value>``
    comment.
``.gmo`` canonical motion
    Text header (``GMO 1``, ``skeleton``, ``fps``, ``source``, ``state``,
    ``frames``, ``joints``, zero or more ``meta <key>=<value>``), a ``data``
    line, then one line per frame of ``3*J`` numbers printed with 9
    significant digits. A CSV variant (``frame,joint,x,y,z``, 1-based, with
    optional ``# key=value`` comments for skeleton/fps/source/state) is also
    parsed.
``.csv`` metric table
    ``task,joint,metric,source,value`` with values printed to 6 decimals.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math

import numpy as np

from .errors import ParseError, ValidationError
from .model import (
    HUMANML3D_22,
    MEDIAPIPE_33,
    SOURCES,
    STATE_FLAGS,
    LandmarkSequence,
    MotionSequence,
    get_skeleton,
)

FORMAT_VERSION = 1
DEFAULT_FPS = 30.0
COORD_FMT = "{:.8e}"  # 9 significant digits
TABLE_HEADER = ("task", "joint", "metric", "source", "value")


def _text(data) -> str:
    if isinstance(data, (bytes, bytearray)):
        try:
            return bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from None
    return str(data)


def _float(tok: str, where: str) -> float:
    try:
        v = float(tok)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: not a number: {tok!r}") from None
    if not math.isfinite(v):
        raise ParseError(f"{where}: non-finite value {tok!r}")
    return v


# ---------------------------------------------------------------- landmarks

def parse_landmark_export(data) -> LandmarkSequence:
    """Parse a pose-estimator landmark export (JSON or CSV) into a :class:`LandmarkSequence`."""
    text = _text(data)
    stripped = text.lstrip()
    if stripped.startswith("{") or stripped.startswith("["):
        return _parse_landmark_json(stripped)
    return _parse_landmark_csv(text)


def _parse_landmark_json(text: str) -> LandmarkSequence:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"landmark JSON: {exc}") from None
    fps = DEFAULT_FPS
    if isinstance(doc, dict):
        if "fps" in doc:
            fps = _float(doc["fps"], "header field 'fps'")
        frames = doc.get("frames")
    else:
        frames = doc
    if not isinstance(frames, list) or not frames:
        raise ParseError("landmark JSON: expected a non-empty frame array")
    T = len(frames)
    coords = np.empty((T, 33, 3))
    vis = np.empty((T, 33))
    for t, frame in enumerate(frames, 1):
        if isinstance(frame, dict):
            frame = frame.get("landmarks")
        if not isinstance(frame, list):
            raise ParseError(f"frame {t}: expected a list of landmark records")
        if len(frame) != 33:
            raise ParseError(f"frame {t}: expected 33 landmarks, found {len(frame)}")
        for i, rec in enumerate(frame):
            if not isinstance(rec, dict):
                raise ParseError(f"frame {t}, landmark {i + 1}: malformed record")
            try:
                vals = [rec[k] for k in ("x", "y", "z", "visibility")]
            except KeyError as exc:
                raise ParseError(f"frame {t}, landmark {i + 1}: missing field {exc.args[0]!r}") from None
            if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in vals):
                raise ParseError(f"frame {t}, landmark {i + 1}: malformed record")
            if not all(math.isfinite(v) for v in vals):
                raise ParseError(f"frame {t}, landmark {i + 1}: non-finite coordinate")
            coords[t - 1, i] = vals[:3]
            vis[t - 1, i] = vals[3]
    return _landmarks(coords, vis, fps)


def _landmarks(coords, vis, fps) -> LandmarkSequence:
    try:
        return LandmarkSequence(coords, vis, fps)
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def _parse_landmark_csv(text: str) -> LandmarkSequence:
    fps = DEFAULT_FPS
    rows: dict[int, dict[int, list[float]]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            key, _, val = s[1:].partition("=")
            if key.strip() == "fps":
                fps = _float(val.strip(), f"line {lineno}")
            continue
        parts = [p.strip() for p in s.split(",")]
        if parts[0].lower() == "frame":
            continue
        if len(parts) != 6:
            raise ParseError(f"line {lineno}: expected 6 fields frame,landmark,x,y,z,visibility")
        try:
            t, lm = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"line {lineno}: frame and landmark must be integers") from None
        if not 1 <= lm <= 33:
            raise ParseError(f"frame {t}: landmark number {lm} outside 1..33")
        vals = [_float(p, f"frame {t}, landmark {lm}") for p in parts[2:]]
        frame = rows.setdefault(t, {})
        if lm in frame:
            raise ParseError(f"frame {t}: duplicate landmark {lm}")
        frame[lm] = vals
    if not rows:
        raise ParseError("landmark CSV: no data rows")
    frame_ids = sorted(rows)
    if frame_ids != list(range(1, len(frame_ids) + 1)):
        raise ParseError("landmark CSV: frame numbers must run contiguously from 1")
    T = len(frame_ids)
    coords = np.empty((T, 33, 3))
    vis = np.empty((T, 33))
    for t in frame_ids:
        frame = rows[t]
        if len(frame) != 33:
            missing = sorted(set(range(1, 34)) - set(frame))
            raise ParseError(f"frame {t}: expected 33 landmarks, missing {missing}")
        for lm, vals in frame.items():
            coords[t - 1, lm - 1] = vals[:3]
            vis[t - 1, lm - 1] = vals[3]
    return _landmarks(coords, vis, fps)


def write_landmark_export(seq: LandmarkSequence) -> bytes:
    """JSON landmark export with sorted keys and round-trip float repr."""
    frames = [
        [
            {"x": float(c[0]), "y": float(c[1]), "z": float(c[2]), "visibility": float(v)}
            for c, v in zip(seq.coords[t], seq.visibility[t])
        ]
        for t in range(seq.n_frames)
    ]
    return (json.dumps({"fps": seq.fps, "frames": frames}, sort_keys=True) + "\n").encode()


# ---------------------------------------------------------------- motion

def _fmt_num(v: float) -> str:
    return repr(float(v))


def write_motion(seq: MotionSequence) -> bytes:
    """Canonical ``.gmo`` bytes. Identical sequences always produce identical bytes."""
    T, J, _ = seq.data.shape
    state = ",".join(f for f in STATE_FLAGS if f in seq.state) or "none"
    lines = [
        f"GMO {FORMAT_VERSION}",
        f"skeleton {seq.skeleton.id}",
        f"fps {_fmt_num(seq.fps)}",
        f"source {seq.source}",
        f"state {state}",
        f"frames {T}",
        f"joints {J}",
    ]
    for key in sorted(seq.meta):
        val = seq.meta[key].replace("\n", " ")
        lines.append(f"meta {key}={val}")
    lines.append("data")
    flat = seq.data.reshape(T, J * 3)
    for row in flat:
        lines.append(" ".join(COORD_FMT.format(v + 0.0) for v in row))
    return ("\n".join(lines) + "\n").encode("ascii")


def parse_motion(data, skeletons=None) -> MotionSequence:
    """Parse a canonical ``.gmo`` file or its CSV variant.

    ``skeletons`` optionally maps extra skeleton ids to catalogs; otherwise the
    built-in and registered catalogs are consulted.
    """
    text = _text(data)
    if text.lstrip().startswith("GMO"):
        return _parse_gmo(text, skeletons)
    return _parse_motion_csv(text, skeletons)


def _lookup(sk_id: str, skeletons):
    if skeletons and sk_id in skeletons:
        return skeletons[sk_id]
    return get_skeleton(sk_id)


def _parse_state(tok: str):
    if tok in ("", "none"):
        return frozenset()
    flags = frozenset(f.strip() for f in tok.split(","))
    bad = flags - set(STATE_FLAGS)
    if bad:
        raise ParseError(f"unknown state flags {sorted(bad)}")
    return flags


def _parse_gmo(text: str, skeletons) -> MotionSequence:
    lines = text.splitlines()
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != "GMO":
        raise ParseError("missing 'GMO <version>' magic line")
    if magic[1] != str(FORMAT_VERSION):
        raise ParseError(f"unsupported format version {magic[1]!r} (expected {FORMAT_VERSION})")
    header: dict[str, str] = {}
    meta: dict[str, str] = {}
    body_start = None
    for i, line in enumerate(lines[1:], 1):
        if line.strip() == "data":
            body_start = i + 1
            break
        if not line.strip():
            continue
        key, _, val = line.partition(" ")
        if key == "meta":
            mk, sep, mv = val.partition("=")
            if not sep:
                raise ParseError(f"line {i + 1}: meta entry needs key=value")
            meta[mk] = mv
        elif key in ("skeleton", "fps", "source", "state", "frames", "joints"):
            header[key] = val.strip()
        else:
            raise ParseError(f"line {i + 1}: unknown header field {key!r}")
    if body_start is None:
        raise ParseError("missing 'data' line")
    for key in ("skeleton", "fps", "source", "frames", "joints"):
        if key not in header:
            raise ParseError(f"missing header field {key!r}")
    try:
        skeleton = _lookup(header["skeleton"], skeletons)
    except ValidationError as exc:
        raise ParseError(str(exc)) from None
    try:
        T, J = int(header["frames"]), int(header["joints"])
    except ValueError:
        raise ParseError("header frames/joints must be integers") from None
    if J != skeleton.n_joints:
        raise ParseError(f"header says {J} joints but skeleton {skeleton.id!r} has {skeleton.n_joints}")
    body = [ln for ln in lines[body_start:] if ln.strip()]
    if len(body) != T:
        raise ParseError(f"header says {T} frames but body has {len(body)}")
    arr = np.empty((T, J * 3))
    for t, ln in enumerate(body):
        toks = ln.split()
        if len(toks) != 3 * J:
            raise ParseError(f"frame {t + 1}: expected {3 * J} numbers, found {len(toks)}")
        arr[t] = [_float(tok, f"frame {t + 1}") for tok in toks]
    fps = _float(header["fps"], "header fps")
    return _motion(skeleton, arr.reshape(T, J, 3), fps, header["source"],
                   _parse_state(header.get("state", "none")), meta)


def _motion(skeleton, data, fps, source, state, meta) -> MotionSequence:
    if source not in SOURCES:
        raise ParseError(f"unknown source tag {source!r}")
    try:
        return MotionSequence(skeleton, data, fps, source, state, meta)
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def _parse_motion_csv(text: str, skeletons) -> MotionSequence:
    opts: dict[str, str] = {}
    cells: dict[tuple[int, int], list[float]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            key, sep, val = s[1:].partition("=")
            if sep:
                opts[key.strip()] = val.strip()
            continue
        parts = [p.strip() for p in s.split(",")]
        if parts[0].lower() == "frame":
            continue
        if len(parts) != 5:
            raise ParseError(f"line {lineno}: expected 5 fields frame,joint,x,y,z")
        try:
            t, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"line {lineno}: frame and joint must be integers") from None
        if (t, j) in cells:
            raise ParseError(f"line {lineno}: duplicate frame {t} joint {j}")
        cells[(t, j)] = [_float(p, f"line {lineno}") for p in parts[2:]]
    if not cells:
        raise ParseError("motion CSV: no data rows")
    T = max(t for t, _ in cells)
    J = max(j for _, j in cells)
    if "skeleton" in opts:
        try:
            skeleton = _lookup(opts["skeleton"], skeletons)
        except ValidationError as exc:
            raise ParseError(str(exc)) from None
    elif J == HUMANML3D_22.n_joints:
        skeleton = HUMANML3D_22
    elif J == MEDIAPIPE_33.n_joints:
        skeleton = MEDIAPIPE_33
    else:
        raise ParseError(f"cannot infer skeleton for {J} joints; add '# skeleton=<id>'")
    J = skeleton.n_joints
    if len(cells) != T * J or min(t for t, _ in cells) < 1 or min(j for _, j in cells) < 1:
        raise ParseError(f"motion CSV: expected every joint 1..{J} for every frame 1..{T}")
    arr = np.empty((T, J, 3))
    for (t, j), v in cells.items():
        if j > J:
            raise ParseError(f"frame {t}: joint {j} outside 1..{J}")
        arr[t - 1, j - 1] = v
    fps = _float(opts.get("fps", DEFAULT_FPS), "fps")
    return _motion(skeleton, arr, fps, opts.get("source", "real"), _parse_state(opts.get("state", "none")), {})


def write_motion_csv(seq: MotionSequence) -> bytes:
    state = ",".join(f for f in STATE_FLAGS if f in seq.state) or "none"
    out = [
        f"# skeleton={seq.skeleton.id}",
        f"# fps={_fmt_num(seq.fps)}",
        f"# source={seq.source}",
        f"# state={state}",
        "frame,joint,x,y,z",
    ]
    for t in range(seq.n_frames):
        for j in range(seq.n_joints):
            x, y, z = (COORD_FMT.format(v + 0.0) for v in seq.data[t, j])
            out.append(f"{t + 1},{j + 1},{x},{y},{z}")
    return ("\n".join(out) + "\n").encode("ascii")


# ---------------------------------------------------------------- tables

def write_table(report) -> bytes:
    """Long-format metric table, one row per (task, joint, metric, source).

    ``report`` is a :class:`~motionfid.metrics.MetricReport` or an iterable of
    them; an empty iterable yields the header line only.
    """
    from .metrics import METRIC_LABELS, MetricReport

    reports = [report] if isinstance(report, MetricReport) else list(report)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for rep in reports:
        for source, block in rep.sources.items():
            for metric, values in block.per_joint.items():
                label = METRIC_LABELS[metric]
                for j, v in enumerate(values, 1):
                    w.writerow((rep.task_id, j, label, source, f"{v:.6f}"))
    return buf.getvalue().encode("ascii")


def parse_table(data) -> list[tuple[str, int, str, str, float]]:
    """Rows of a long-format metric table as ``(task, joint, metric_label, source, value)``."""
    text = _text(data)
    rows = []
    reader = csv.reader(line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#"))
    header = next(reader, None)
    if header is None:
        return rows
    if tuple(h.strip() for h in header) != TABLE_HEADER:
        raise ParseError(f"table header must be {','.join(TABLE_HEADER)}")
    for n, rec in enumerate(reader, 2):
        if len(rec) != 5:
            raise ParseError(f"table row {n}: expected 5 fields")
        try:
            joint = int(rec[1])
        except ValueError:
            raise ParseError(f"table row {n}: joint must be an integer") from None
        rows.append((rec[0].strip(), joint, rec[2].strip(), rec[3].strip(), _float(rec[4], f"table row {n}")))
    return rows
