"""Map 33-landmark pose-estimator output onto the 22-joint skeleton.

Every rule is an affine combination of landmarks (weights sum to one), so
retargeting commutes with translation. Two virtual points are always
available to rules: ``MID_HIP`` and ``MID_SHOULDER``, the unweighted means of
the hip and shoulder landmarks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError
from .model import HUMANML3D_22, MEDIAPIPE_33_NAMES, LandmarkSequence, MotionSequence, SkeletonSpec, parse_skeleton_text

LAMBDA_LUMBAR = 1.0 / 3.0
LAMBDA_NECK = 1.0 / 3.0

_LM = {name: i for i, name in enumerate(MEDIAPIPE_33_NAMES)}
VIRTUAL_POINTS = {
    "MID_HIP": ("LEFT_HIP", "RIGHT_HIP"),
    "MID_SHOULDER": ("LEFT_SHOULDER", "RIGHT_SHOULDER"),
}


@dataclass(frozen=True)
class RetargetRule:
    """How one target joint is built.

    ``kind`` is ``"direct"`` (one operand), ``"mean"`` (two operands) or
    ``"lerp"`` (two operands, ``a + fraction * (b - a)``). Operands are
    landmark names, virtual point names, or ``"@k"`` for an already computed
    target joint ``k``.
    """

    target: int
    kind: str
    operands: tuple[str, ...]
    fraction: float = 0.5

    def __post_init__(self):
        arity = {"direct": 1, "mean": 2, "lerp": 2}
        if self.kind not in arity:
            raise ValidationError(f"joint {self.target}: unknown rule kind {self.kind!r}")
        if len(self.operands) != arity[self.kind]:
            raise ValidationError(f"joint {self.target}: {self.kind} takes {arity[self.kind]} operand(s)")
        if self.kind == "lerp" and not 0.0 <= self.fraction <= 1.0:
            raise ValidationError(f"joint {self.target}: lerp fraction {self.fraction} outside [0, 1]")
        for op in self.operands:
            if op.startswith("@"):
                if not op[1:].isdigit():
                    raise ValidationError(f"joint {self.target}: bad joint reference {op!r}")
            elif op not in _LM and op not in VIRTUAL_POINTS:
                raise ValidationError(f"joint {self.target}: unknown landmark {op!r}")

    def to_text(self) -> str:
        if self.kind == "direct":
            return self.operands[0]
        if self.kind == "mean":
            return f"mean({self.operands[0]}, {self.operands[1]})"
        return f"lerp({self.operands[0]}, {self.operands[1]}, {self.fraction!r})"


_RULE_RE = re.compile(r"^(mean|lerp)\(\s*([@\w]+)\s*,\s*([@\w]+)\s*(?:,\s*([^)\s]+)\s*)?\)$")


def parse_rule(target: int, text: str) -> RetargetRule:
    text = text.strip()
    m = _RULE_RE.match(text)
    if not m:
        if re.fullmatch(r"[@\w]+", text):
            return RetargetRule(target, "direct", (text,))
        raise ParseError(f"joint {target}: cannot parse rule {text!r}")
    kind, a, b, frac = m.groups()
    if kind == "mean":
        if frac is not None:
            raise ParseError(f"joint {target}: mean() takes two operands")
        return RetargetRule(target, "mean", (a, b))
    if frac is None:
        raise ParseError(f"joint {target}: lerp() needs a fraction")
    try:
        f = float(frac)
    except ValueError:
        raise ParseError(f"joint {target}: bad lerp fraction {frac!r}") from None
    return RetargetRule(target, "lerp", (a, b), f)


def default_rules(lambda_lumbar: float = LAMBDA_LUMBAR, lambda_neck: float = LAMBDA_NECK) -> tuple[RetargetRule, ...]:
    """Rules for the default 22-joint catalog; the two interior spine points sit at the given fractions."""
    text = {
        1: "mean(LEFT_HIP, RIGHT_HIP)",
        2: "RIGHT_HIP",
        3: "LEFT_HIP",
        5: "RIGHT_KNEE",
        6: "LEFT_KNEE",
        7: "MID_SHOULDER",
        8: "RIGHT_ANKLE",
        9: "LEFT_ANKLE",
        10: "mean(MID_SHOULDER, NOSE)",
        11: "RIGHT_HEEL",
        12: "LEFT_HEEL",
        14: "RIGHT_SHOULDER",
        15: "LEFT_SHOULDER",
        16: "NOSE",
        17: "RIGHT_ELBOW",
        18: "LEFT_ELBOW",
        19: "RIGHT_WRIST",
        20: "LEFT_WRIST",
        21: "RIGHT_INDEX",
        22: "LEFT_INDEX",
    }
    rules = {j: parse_rule(j, t) for j, t in text.items()}
    rules[4] = RetargetRule(4, "lerp", ("MID_HIP", "MID_SHOULDER"), float(lambda_lumbar))
    rules[13] = RetargetRule(13, "lerp", ("MID_SHOULDER", "NOSE"), float(lambda_neck))
    return tuple(rules[j] for j in sorted(rules))


def load_rules(path) -> tuple[SkeletonSpec, tuple[RetargetRule, ...]]:
    """Read a skeleton table whose fourth column holds the rule for each joint."""
    with open(path, encoding="utf-8") as fh:
        skeleton, texts = parse_skeleton_text(fh.read(), with_rules=True)
    rules = tuple(parse_rule(j, texts[j]) for j in sorted(texts))
    return skeleton, rules


def _check_rules(rules, n_joints: int):
    targets = [r.target for r in rules]
    if sorted(targets) != list(range(1, n_joints + 1)):
        missing = sorted(set(range(1, n_joints + 1)) - set(targets))
        raise ValidationError(f"incomplete rule set: need exactly one rule per joint 1..{n_joints}; missing {missing}")


def _order(rules):
    """Rules sorted so that every ``@k`` operand is computed before it is used."""
    pending = {r.target: r for r in rules}
    done: list[RetargetRule] = []
    have: set[int] = set()
    while pending:
        ready = [t for t, r in sorted(pending.items())
                 if all(int(op[1:]) in have for op in r.operands if op.startswith("@"))]
        if not ready:
            raise ValidationError(f"rules for joints {sorted(pending)} reference each other cyclically or unknown joints")
        for t in ready:
            done.append(pending.pop(t))
            have.add(t)
    return done


def retarget_33_to_22(src, rules=None, *, skeleton: SkeletonSpec = HUMANML3D_22,
                      lambda_lumbar: float = LAMBDA_LUMBAR, lambda_neck: float = LAMBDA_NECK) -> MotionSequence:
    """Build the target-skeleton sequence from a landmark export (or 33-joint motion).

    Frame count and fps are preserved; visibility is dropped. ``rules``
    defaults to :func:`default_rules` with the two spine fractions.
    """
    if isinstance(src, LandmarkSequence):
        X, fps, source = src.coords, src.fps, "real"
    elif isinstance(src, MotionSequence) and src.n_joints == 33:
        X, fps, source = src.data, src.fps, src.source
    else:
        raise ValidationError("retarget input must be a 33-landmark sequence")
    if rules is None:
        for name, lam in (("lambda_lumbar", lambda_lumbar), ("lambda_neck", lambda_neck)):
            if not 0.0 <= lam <= 1.0:
                raise ValidationError(f"{name} {lam} outside [0, 1]")
        rules = default_rules(lambda_lumbar, lambda_neck)
    _check_rules(rules, skeleton.n_joints)

    cache: dict[str, np.ndarray] = {}

    def point(op: str) -> np.ndarray:
        if op not in cache:
            if op.startswith("@"):
                raise ValidationError(f"joint reference {op} used before it is defined")
            if op in VIRTUAL_POINTS:
                a, b = VIRTUAL_POINTS[op]
                cache[op] = 0.5 * (X[:, _LM[a]] + X[:, _LM[b]])
            else:
                cache[op] = X[:, _LM[op]]
        return cache[op]

    out = np.empty((X.shape[0], skeleton.n_joints, 3))
    for r in _order(rules):
        if r.kind == "direct":
            val = point(r.operands[0])
        elif r.kind == "mean":
            val = 0.5 * (point(r.operands[0]) + point(r.operands[1]))
        else:
            a, b = point(r.operands[0]), point(r.operands[1])
            val = a + r.fraction * (b - a)
        out[:, r.target - 1] = val
        cache[f"@{r.target}"] = out[:, r.target - 1]

    # interior spine points are placed by assumption; keep them visible downstream
    meta = {f"retarget.rule.{r.target}": r.to_text() for r in rules if r.kind == "lerp"}
    meta["retarget.from"] = "mediapipe-33"
    return MotionSequence(skeleton, out, fps, source, frozenset(), meta)
