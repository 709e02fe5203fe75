"""``motionfid`` command line.

Exit codes: 0 success, 1 unreadable input, 2 invalid input or arguments,
3 numerically degenerate data. Failures print one line to stderr:
``motionfid: error kind=<kind> exit=<code>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .align import align_triplet
from .errors import MotionFidError, ParseError, ValidationError
from .io import parse_landmark_export, parse_motion, parse_table, write_landmark_export, write_motion, write_table
from .metrics import METRICS, PA_MODES, MetricReport, compare_sources
from .model import EvalTriplet, MotionSequence
from .normalize import FLIP_MODES, SCALE_MODES, NormalizeConfig, normalize_pipeline
from .retarget import LAMBDA_LUMBAR, LAMBDA_NECK, load_rules, retarget_33_to_22
from .stats import EMIT_FORMATS, PAIRINGS, aggregate, emit, load_published_fixture
from .synth import KINDS, SynthSpec, generate


class _Log:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def info(self, msg: str):
        if not self.quiet:
            print(f"motionfid: {msg}", file=sys.stderr)

    def warn(self, msg: str):
        print(f"motionfid: warning: {msg}", file=sys.stderr)


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: str, data: bytes):
    if path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc.strerror or exc}") from None


def _check_distinct(inputs, outputs):
    seen: dict[str, str] = {}
    for role, paths in (("input", inputs), ("output", outputs)):
        for p in paths:
            if p is None or p == "-":
                continue
            key = os.path.realpath(p)
            if key in seen:
                raise ValidationError(f"path {p} used more than once ({seen[key]} and {role})")
            seen[key] = role


def _frames(tok: str):
    if tok == "auto":
        return None
    try:
        n = int(tok)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or an integer, got {tok!r}") from None
    if n < 2:
        raise argparse.ArgumentTypeError("frame count must be >= 2")
    return n


def _metric_list(tok: str):
    items = tuple(t.strip().replace("-", "_") for t in tok.split(",") if t.strip())
    bad = [t for t in items if t not in METRICS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"metrics must be a comma list drawn from {','.join(METRICS)}")
    return items


def _pa_mode(tok: str):
    mode = tok.replace("-", "_")
    if mode not in PA_MODES:
        raise argparse.ArgumentTypeError(f"PA mode must be per-frame or global, got {tok!r}")
    return mode


def _normalize_config(a) -> NormalizeConfig:
    return NormalizeConfig(
        center_joint=a.center_joint, scale_pair=(a.scale_a, a.scale_b), flip_y=a.flip_y,
        median_kernel=a.median_kernel, lowpass_cutoff=a.cutoff, lowpass_order=a.order,
        scale_epsilon=a.scale_epsilon, scale_mode=a.scale_mode,
    )


def _load_triplet(a) -> EvalTriplet:
    # position on the command line decides the role
    real, bench, sim = (_with_source(parse_motion(_read(p)), src)
                        for p, src in ((a.real, "real"), (a.benchmark, "benchmark"), (a.simulated, "simulated")))
    return EvalTriplet(real, bench, sim, a.task)


def _with_source(seq: MotionSequence, source: str) -> MotionSequence:
    if seq.source == source:
        return seq
    return MotionSequence(seq.skeleton, seq.data, seq.fps, source, seq.state, dict(seq.meta))


# ---------------------------------------------------------------- subcommands

def cmd_ingest(a, log: _Log) -> int:
    _check_distinct([a.input], [a.output])
    seq = parse_landmark_export(_read(a.input))
    _write(a.output, write_landmark_export(seq))
    log.info(f"ingested {seq.n_frames} frame(s) at {seq.fps:g} fps")
    return 0


def cmd_retarget(a, log: _Log) -> int:
    _check_distinct([a.input, a.rules], [a.output])
    raw = _read(a.input)
    try:
        src = parse_landmark_export(raw)
    except ParseError:
        src = parse_motion(raw)
    if a.rules:
        skeleton, rules = load_rules(a.rules)
        out = retarget_33_to_22(src, rules, skeleton=skeleton)
    else:
        out = retarget_33_to_22(src, lambda_lumbar=a.lambda_lumbar, lambda_neck=a.lambda_neck)
    if a.source:
        out = _with_source(out, a.source)
    _write(a.output, write_motion(out))
    log.info(f"retargeted {out.n_frames} frame(s) to {out.skeleton.id}")
    return 0


def cmd_normalize(a, log: _Log) -> int:
    _check_distinct([a.input], [a.output])
    seq = parse_motion(_read(a.input))
    out = normalize_pipeline(seq, _normalize_config(a))
    _write(a.output, write_motion(out))
    log.info(f"normalized {out.n_frames} frame(s); flip applied: {out.meta['normalize.flip_applied']}")
    return 0


def cmd_resample(a, log: _Log) -> int:
    if len(a.outputs) != 3:
        raise ValidationError("resample needs exactly three output paths")
    _check_distinct([a.real, a.benchmark, a.simulated], a.outputs)
    trip = align_triplet(_load_triplet(a), a.frames)
    for seq, path in zip((trip.real, trip.benchmark, trip.simulated), a.outputs):
        _write(path, write_motion(seq))
    log.info(f"resampled triplet to {trip.real.n_frames} frames")
    return 0


def cmd_compare(a, log: _Log) -> int:
    _check_distinct([a.real, a.benchmark, a.simulated], [a.report, a.table])
    trip = _load_triplet(a)
    if a.auto_align or a.frames is not None:
        trip = align_triplet(trip, a.frames)
    report = compare_sources(trip, a.metrics, a.pa_mode, a.allow_reflection, a.pa_scale)
    config = {
        "inputs": [Path(p).name for p in (a.real, a.benchmark, a.simulated)],
        "metrics": list(a.metrics),
        "pa_mode": a.pa_mode,
        "allow_reflection": a.allow_reflection,
        "pa_scale": a.pa_scale,
        "auto_align": a.auto_align,
        "frames": "auto" if a.frames is None else a.frames,
    }
    doc = {"config": config, "report": report.to_dict()}
    _write(a.report, (json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n").encode())
    if a.table:
        _write(a.table, write_table(report))
    log.info(f"task {a.task}: " + ", ".join(
        f"{src} {m}={v:.4f}" for src, blk in report.sources.items() for m, v in blk.overall.items()))
    return 0


def _load_aggregate_input(path: str):
    raw = _read(path)
    if path.lower().endswith(".csv"):
        return parse_table(raw)
    try:
        doc = json.loads(raw)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: not a JSON report ({exc})") from None
    try:
        return MetricReport.from_dict(doc["report"] if "report" in doc else doc)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MotionFidError):
            raise
        raise ParseError(f"{path}: malformed report ({exc})") from None


def cmd_aggregate(a, log: _Log) -> int:
    if not a.reports and not a.published:
        raise ValidationError("aggregate needs at least one report (or --published)")
    _check_distinct(a.reports, [a.output])
    inputs, provenance = [], []
    if a.published:
        inputs.append(load_published_fixture())
        provenance.append("bundled:published_jointwise.csv")
    for p in a.reports:
        inputs.append(_load_aggregate_input(p))
        provenance.append(Path(p).name)
    rep = aggregate(inputs, a.pairing, provenance)
    for m, st in rep.stats.items():
        for e in st.errors:
            log.warn(f"{m}: {e}")
    _write(a.output, emit(rep, a.format, {"pairing": a.pairing, "format": a.format}))
    return 0


def cmd_synth(a, log: _Log) -> int:
    spec = SynthSpec(a.kind, a.frames, a.fps, a.amplitude, a.seed, a.period, a.source)
    _write(a.output, write_motion(generate(spec)))
    log.info(f"wrote {a.kind} fixture with {a.frames} frames")
    return 0


# ---------------------------------------------------------------- parser

def _triplet_args(p):
    p.add_argument("real")
    p.add_argument("benchmark")
    p.add_argument("simulated")
    p.add_argument("--task", default="task", help="task identifier recorded in outputs")
    p.add_argument("--frames", type=_frames, default=None, metavar="auto|N",
                   help="target frame count (default auto: shortest member)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motionfid", description="Motion fidelity evaluation pipeline.")
    parser.add_argument("--version", action="version", version=f"motionfid {__version__}")
    parser.add_argument("--config", help="JSON file of flag defaults (keys are long flag names)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress messages")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a landmark export and write it canonically (.mpl)")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("retarget", help="33 landmarks -> 22-joint motion (.gmo)")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--lambda-lumbar", type=float, default=LAMBDA_LUMBAR)
    p.add_argument("--lambda-neck", type=float, default=LAMBDA_NECK)
    p.add_argument("--rules", help="skeleton table with a rule column replacing the built-in mapping")
    p.add_argument("--source", choices=("real", "benchmark", "simulated"), default=None)
    p.set_defaults(func=cmd_retarget)

    p = sub.add_parser("normalize", help="center, scale, flip and smooth a motion file")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--center-joint", type=int, default=16)
    p.add_argument("--scale-a", type=int, default=16)
    p.add_argument("--scale-b", type=int, default=11)
    p.add_argument("--scale-mode", choices=SCALE_MODES, default="per_frame")
    p.add_argument("--scale-epsilon", type=float, default=1e-6)
    p.add_argument("--flip-y", choices=FLIP_MODES, default="auto")
    p.add_argument("--median-kernel", type=int, default=11)
    p.add_argument("--cutoff", type=float, default=0.05, help="low-pass cutoff as a fraction of Nyquist")
    p.add_argument("--order", type=int, default=4)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("resample", help="resample a triplet to a common frame count")
    _triplet_args(p)
    p.add_argument("-o", "--outputs", nargs=3, required=True, metavar=("REAL", "BENCHMARK", "SIMULATED"))
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("compare", help="score benchmark and simulated against real")
    _triplet_args(p)
    p.add_argument("--report", required=True, help="JSON report path ('-' for stdout)")
    p.add_argument("--table", help="long-format CSV table path")
    p.add_argument("--metrics", type=_metric_list, default=METRICS, help="comma list of mpjpe,pa_mpjpe,dtw")
    p.add_argument("--pa-mode", type=_pa_mode, default="per_frame", metavar="per-frame|global")
    p.add_argument("--allow-reflection", action="store_true")
    p.add_argument("--pa-scale", action="store_true", help="also fit a uniform scale during alignment")
    p.add_argument("--auto-align", action="store_true", help="resample to a common length first")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("aggregate", help="paired statistics across task reports")
    p.add_argument("reports", nargs="*", help="compare JSON reports or long-format CSV tables")
    p.add_argument("--published", action="store_true", help="include the bundled joint-wise table")
    p.add_argument("--pairing", choices=PAIRINGS, default="task_joint")
    p.add_argument("--format", choices=EMIT_FORMATS, default="json")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("synth", help="write a synthetic 22-joint fixture")
    p.add_argument("--kind", choices=KINDS, default="walk_cycle")
    p.add_argument("--frames", type=int, default=120)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--period", type=int, default=32)
    p.add_argument("--source", choices=("real", "benchmark", "simulated"), default="simulated")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read config {known.config}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {known.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ParseError(f"config {known.config}: expected a JSON object")
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices
    used = set()
    for sp in subs.values():
        dests = {act.dest: act for act in sp._actions}
        for key, val in cfg.items():
            dest = key.lstrip("-").replace("-", "_")
            act = dests.get(dest)
            if act is None or not act.option_strings:
                continue
            if isinstance(val, str) and act.type is not None:
                val = act.type(val)
            elif dest == "metrics" and isinstance(val, list):
                val = _metric_list(",".join(val))
            sp.set_defaults(**{dest: val})
            used.add(key)
    unknown = sorted(set(cfg) - used)
    if unknown:
        raise ValidationError(f"config {known.config}: unknown keys {', '.join(unknown)}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        try:
            a = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        return a.func(a, _Log(a.quiet))
    except MotionFidError as exc:
        msg = " ".join(str(exc).split())
        print(f"motionfid: error kind={exc.kind} exit={exc.exit_code}: {msg}", file=sys.stderr)
        return exc.exit_code
    except argparse.ArgumentTypeError as exc:
        print(f"motionfid: error kind=validation exit=2: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
