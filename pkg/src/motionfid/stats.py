"""Cross-task aggregation and paired statistics (paired t-test, Shapiro-Wilk)."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .errors import DegenerateError, MotionFidError, ValidationError
from .metrics import LABEL_METRICS, METRIC_LABELS, METRICS, MetricReport

SOURCE_A = "simulated"
SOURCE_B = "benchmark"
PAIRINGS = ("task_joint", "joint_mean")

# ---------------------------------------------------------------- special functions

_CF_EPS = 1e-15
_CF_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = _CF_TINY if abs(d) < _CF_TINY else d
    d = 1.0 / d
    h = d
    for m in range(1, 10001):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc needs a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """Two-tailed Student-t tail probability P(|T| >= |t|)."""
    if not df > 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return float(betainc(0.5 * df, 0.5, df / (df + t * t)))


# ---------------------------------------------------------------- paired t

@dataclass(frozen=True)
class PairedSample:
    labels: tuple
    values_a: np.ndarray
    values_b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.values_a, dtype=np.float64)
        b = np.asarray(self.values_b, dtype=np.float64)
        if a.shape != b.shape or a.ndim != 1:
            raise ValidationError(f"paired samples must be equal-length vectors, got {a.shape} and {b.shape}")
        if a.size < 3:
            raise ValidationError(f"paired sample needs at least 3 pairs, got {a.size}")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValidationError("paired sample contains non-finite values")
        if len(self.labels) != a.size:
            raise ValidationError("one label per pair required")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values_a", a)
        object.__setattr__(self, "values_b", b)

    @property
    def n(self) -> int:
        return self.values_a.size

    @property
    def differences(self) -> np.ndarray:
        return self.values_a - self.values_b


def paired_t_test(s: PairedSample) -> tuple[float, float, int]:
    """Paired t statistic on ``a - b``, its two-tailed p-value, and degrees of freedom."""
    d = s.differences
    n = d.size
    mean = d.mean()
    sd = math.sqrt(((d - mean) ** 2).sum() / (n - 1))
    if sd == 0.0:
        raise DegenerateError("degenerate paired sample: differences have zero variance")
    t = mean / (sd / math.sqrt(n))
    return float(t), t_sf_two_sided(t, n - 1), n - 1


# ---------------------------------------------------------------- Shapiro-Wilk

_C1 = (0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.544, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)
_STD_NORMAL = NormalDist()


def _poly(c, x: float) -> float:
    out = 0.0
    for coef in reversed(c):
        out = out * x + coef
    return out


def _sw_coefficients(n: int) -> np.ndarray:
    """Antisymmetric weights for the sorted sample (Royston's polynomial approximation)."""
    half = n // 2
    a = np.zeros(half)
    if n == 3:
        a[0] = math.sqrt(0.5)
    else:
        m = np.array([_STD_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, half + 1)])
        summ2 = 2.0 * float((m * m).sum())
        ssumm2 = math.sqrt(summ2)
        rsn = 1.0 / math.sqrt(n)
        a1 = _poly(_C1, rsn) - m[0] / ssumm2
        if n > 5:
            a2 = -m[1] / ssumm2 + _poly(_C2, rsn)
            fac = math.sqrt((summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2) / (1.0 - 2.0 * a1**2 - 2.0 * a2**2))
            a[1] = a2
            start = 2
        else:
            fac = math.sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1**2))
            start = 1
        a[0] = a1
        a[start:] = -m[start:] / fac
    full = np.zeros(n)
    full[:half] = -a
    full[n - half :] = a[::-1]
    return full


def shapiro_wilk(x) -> tuple[float, float]:
    """Shapiro-Wilk W and its approximate p-value for 3 <= n <= 5000."""
    x = np.sort(np.asarray(x, dtype=np.float64).ravel())
    n = x.size
    if not 3 <= n <= 5000:
        raise ValidationError(f"Shapiro-Wilk needs 3 <= n <= 5000, got {n}")
    if not np.isfinite(x).all():
        raise ValidationError("Shapiro-Wilk sample contains non-finite values")
    rng = x[-1] - x[0]
    if rng <= 0.0:
        raise DegenerateError("Shapiro-Wilk undefined for an all-equal sample")
    a = _sw_coefficients(n)
    xs = x / rng
    xc = xs - xs.mean()
    ac = a - a.mean()
    ssa, ssx, sax = float((ac * ac).sum()), float((xc * xc).sum()), float((ac * xc).sum())
    root = math.sqrt(ssa * ssx)
    w1 = (root - sax) * (root + sax) / (ssa * ssx)
    w = 1.0 - w1
    if n == 3:
        p = 1.909859 * (math.asin(math.sqrt(w)) - 1.047198)
        return w, min(max(p, 0.0), 1.0)
    y = math.log(w1) if w1 > 0 else -math.inf
    if n <= 11:
        gamma = _poly(_G, n)
        if y >= gamma:
            return w, 1e-99
        y = -math.log(gamma - y)
        mu = _poly(_C3, n)
        sigma = math.exp(_poly(_C4, n))
    else:
        ln = math.log(n)
        mu = _poly(_C5, ln)
        sigma = math.exp(_poly(_C6, ln))
    if math.isinf(y):
        return w, 1.0
    p = 0.5 * math.erfc((y - mu) / sigma / math.sqrt(2.0))
    return w, p


# ---------------------------------------------------------------- aggregation

@dataclass
class MetricStats:
    metric: str
    n: int
    mean_a: float
    mean_b: float
    t_statistic: float | None = None
    p_value: float | None = None
    df: int | None = None
    shapiro_W: float | None = None
    shapiro_p: float | None = None
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "metric": METRIC_LABELS[self.metric],
            "n": self.n,
            "mean_a": self.mean_a,
            "mean_b": self.mean_b,
            "t_statistic": self.t_statistic,
            "p_value": self.p_value,
            "df": self.df,
            "shapiro_W": self.shapiro_W,
            "shapiro_p": self.shapiro_p,
            "errors": list(self.errors),
        }


@dataclass
class AggregateReport:
    """Per-metric paired statistics of ``simulated`` (a) against ``benchmark`` (b)."""

    stats: dict[str, MetricStats]
    samples: dict[str, PairedSample]
    values: dict[tuple[str, int, str, str], float]
    pairing: str = "task_joint"
    provenance: list[str] = field(default_factory=list)
    reports: list[MetricReport] = field(default_factory=list)

    @property
    def tasks(self) -> list[str]:
        seen: dict[str, None] = {}
        for task, *_ in self.values:
            seen.setdefault(task, None)
        return list(seen)

    @property
    def joints(self) -> list[int]:
        return sorted({j for _, j, _, _ in self.values})


def _collect(inputs) -> dict[tuple[str, int, str, str], float]:
    """Flatten reports and table rows into ``(task, joint, metric, source) -> value``."""
    values: dict[tuple[str, int, str, str], float] = {}

    def put(key, v):
        old = values.get(key)
        if old is not None and old != v:
            raise ValidationError(f"conflicting values for task {key[0]!r} joint {key[1]} {key[2]} {key[3]}")
        values[key] = float(v)

    for item in inputs:
        if isinstance(item, MetricReport):
            for src, block in item.sources.items():
                for metric, arr in block.per_joint.items():
                    for j, v in enumerate(arr, 1):
                        put((item.task_id, j, metric, src), v)
        else:
            for task, joint, label, src, v in item:
                metric = LABEL_METRICS.get(label, label)
                if metric not in METRICS:
                    raise ValidationError(f"unknown metric label {label!r}")
                put((task, int(joint), metric, src), v)
    return values


def paired_sample(values, metric: str, pairing: str = "task_joint") -> PairedSample:
    keys = sorted({(t, j) for t, j, m, s in values if m == metric})
    pairs = [(k, values.get((*k, metric, SOURCE_A)), values.get((*k, metric, SOURCE_B))) for k in keys]
    pairs = [(k, a, b) for k, a, b in pairs if a is not None and b is not None]
    if pairing == "joint_mean":
        by_joint: dict[int, list[tuple[float, float]]] = {}
        for (t, j), a, b in pairs:
            by_joint.setdefault(j, []).append((a, b))
        labels = sorted(by_joint)
        va = [float(np.mean([p[0] for p in by_joint[j]])) for j in labels]
        vb = [float(np.mean([p[1] for p in by_joint[j]])) for j in labels]
        return PairedSample(tuple(("mean", j) for j in labels), np.array(va), np.array(vb))
    if pairing != "task_joint":
        raise ValidationError(f"pairing must be one of {PAIRINGS}")
    return PairedSample(tuple(k for k, _, _ in pairs), np.array([p[1] for p in pairs]), np.array([p[2] for p in pairs]))


def aggregate(inputs, pairing: str = "task_joint", provenance=()) -> AggregateReport:
    """Paired statistics across tasks.

    ``inputs`` holds :class:`MetricReport` objects and/or parsed table rows.
    Identical duplicates of a (task, joint) value collapse to one pair.
    Problems with one metric (too few pairs, zero variance) are recorded in
    that metric's ``errors`` rather than raised.
    """
    inputs = list(inputs)
    if not inputs:
        raise ValidationError("aggregate needs at least one report")
    values = _collect(inputs)
    if not values:
        raise ValidationError("aggregate inputs contain no metric values")
    stats: dict[str, MetricStats] = {}
    samples: dict[str, PairedSample] = {}
    present = [m for m in METRICS if any(k[2] == m for k in values)]
    for metric in present:
        try:
            s = paired_sample(values, metric, pairing)
        except ValidationError as exc:
            a = [v for k, v in values.items() if k[2] == metric and k[3] == SOURCE_A]
            b = [v for k, v in values.items() if k[2] == metric and k[3] == SOURCE_B]
            stats[metric] = MetricStats(metric, min(len(a), len(b)),
                                        float(np.mean(a)) if a else math.nan,
                                        float(np.mean(b)) if b else math.nan, errors=[str(exc)])
            continue
        samples[metric] = s
        st = MetricStats(metric, s.n, float(s.values_a.mean()), float(s.values_b.mean()))
        try:
            st.t_statistic, st.p_value, st.df = paired_t_test(s)
        except MotionFidError as exc:
            st.errors.append(str(exc))
        if s.n <= 5000:
            try:
                st.shapiro_W, st.shapiro_p = shapiro_wilk(s.differences)
            except MotionFidError as exc:
                st.errors.append(f"shapiro: {exc}")
        stats[metric] = st
    reports = [r for r in inputs if isinstance(r, MetricReport)]
    return AggregateReport(stats, samples, values, pairing, list(provenance), reports)


# ---------------------------------------------------------------- emit

EMIT_FORMATS = ("json", "summary", "by_task", "by_joint", "plot")


def _num(v, fmt):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else fmt.format(v)


def emit(report: AggregateReport, fmt: str = "json", config: dict | None = None) -> bytes:
    """Serialize an aggregate.

    ``json``     structured report (config echo, per-task reports, statistics)
    ``summary``  one row per metric: means, t, df, p, Shapiro-Wilk W and p
    ``by_task``  one row per (metric, source), one column per task
    ``by_joint`` one row per joint, task-averaged metric columns per source
    ``plot``     long per-joint rows ``task,joint,metric,source,value``
    """
    if fmt not in EMIT_FORMATS:
        raise ValidationError(f"format must be one of {EMIT_FORMATS}")
    if fmt == "json":
        doc = {
            "config": dict(config or {}),
            "pairing": report.pairing,
            "provenance": list(report.provenance),
            "source_a": SOURCE_A,
            "source_b": SOURCE_B,
            "statistics": {m: s.to_dict() for m, s in report.stats.items()},
            "tasks": [r.to_dict() for r in report.reports],
        }
        return (json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n").encode()

    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    metrics = [m for m in METRICS if m in report.stats]
    if fmt == "summary":
        w.writerow(("metric", "n", "mean_a", "mean_b", "t", "df", "p", "shapiro_W", "shapiro_p", "errors"))
        for m in metrics:
            s = report.stats[m]
            w.writerow((METRIC_LABELS[m], s.n, _num(s.mean_a, "{:.6f}"), _num(s.mean_b, "{:.6f}"),
                        _num(s.t_statistic, "{:.6f}"), _num(s.df, "{}"), _num(s.p_value, "{:.6e}"),
                        _num(s.shapiro_W, "{:.6f}"), _num(s.shapiro_p, "{:.6e}"), "; ".join(s.errors)))
    elif fmt == "by_task":
        tasks = report.tasks
        w.writerow(("metric", "source", *tasks))
        for m in metrics:
            for src in (SOURCE_A, SOURCE_B):
                row = []
                for t in tasks:
                    vals = [v for (tk, _, mk, sk), v in report.values.items() if tk == t and mk == m and sk == src]
                    row.append(_num(float(np.mean(vals)) if vals else None, "{:.6f}"))
                w.writerow((METRIC_LABELS[m], src, *row))
    elif fmt == "by_joint":
        cols = [(m, src) for m in metrics for src in (SOURCE_A, SOURCE_B)]
        w.writerow(("joint", *(f"{METRIC_LABELS[m]}:{src}" for m, src in cols)))
        for j in report.joints:
            row = []
            for m, src in cols:
                vals = [v for (_, jk, mk, sk), v in report.values.items() if jk == j and mk == m and sk == src]
                row.append(_num(float(np.mean(vals)) if vals else None, "{:.6f}"))
            w.writerow((j, *row))
    else:
        w.writerow(("task", "joint", "metric", "source", "value"))
        for (t, j, m, s), v in report.values.items():
            w.writerow((t, j, METRIC_LABELS[m], s, f"{v:.6f}"))
    return buf.getvalue().encode("ascii")


def load_published_fixture() -> list[tuple[str, int, str, str, float]]:
    """Bundled task-averaged joint-wise table (22 joints, both sources, three metrics) as table rows."""
    from importlib.resources import files

    from .io import parse_table

    return parse_table(files("motionfid").joinpath("data/published_jointwise.csv").read_bytes())
