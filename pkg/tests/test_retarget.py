import numpy as np
import pytest

from motionfid.errors import ParseError, ValidationError
from motionfid.model import HUMANML3D_22, MEDIAPIPE_33, LandmarkSequence, skeleton_to_text
from motionfid.retarget import (
    RetargetRule,
    default_rules,
    load_rules,
    parse_rule,
    retarget_33_to_22,
)

LM = {n: i for i, n in enumerate(MEDIAPIPE_33.names)}


def lms(coords):
    coords = np.asarray(coords, dtype=np.float64)
    return LandmarkSequence(coords, np.ones(coords.shape[:2]))


def single_frame(**points):
    c = np.zeros((1, 33, 3))
    for name, p in points.items():
        c[0, LM[name]] = p
    return lms(c)


def test_pelvis_is_hip_mean():
    out = retarget_33_to_22(single_frame(LEFT_HIP=(0.4, 1, 0), RIGHT_HIP=(0.6, 1, 0)))
    assert np.array_equal(out.data[0, 0], [0.5, 1, 0])


def test_upper_spine_is_midpoint():
    src = single_frame(LEFT_SHOULDER=(-1, 1, 0), RIGHT_SHOULDER=(1, 1, 0), NOSE=(0, 2, 0))
    out = retarget_33_to_22(src)
    assert np.array_equal(out.data[0, 9], [0, 1.5, 0])
    assert np.array_equal(out.data[0, 6], [0, 1, 0])


def test_lumbar_at_one_third():
    src = single_frame(LEFT_SHOULDER=(-1, 3, 0), RIGHT_SHOULDER=(1, 3, 0))
    out = retarget_33_to_22(src, lambda_lumbar=1 / 3)
    assert np.allclose(out.data[0, 3], [0, 1, 0], atol=1e-15)


def test_neck_fraction_configurable():
    src = single_frame(LEFT_SHOULDER=(-1, 1, 0), RIGHT_SHOULDER=(1, 1, 0), NOSE=(0, 2, 0))
    out = retarget_33_to_22(src, lambda_neck=0.5)
    assert np.allclose(out.data[0, 12], [0, 1.5, 0], atol=1e-15)


def test_direct_copies(rng):
    src = lms(rng.standard_normal((4, 33, 3)))
    out = retarget_33_to_22(src)
    for j, name in ((11, "RIGHT_HEEL"), (21, "RIGHT_INDEX"), (16, "NOSE"), (8, "RIGHT_ANKLE"), (15, "LEFT_SHOULDER")):
        assert np.array_equal(out.data[:, j - 1], src.coords[:, LM[name]])


def test_frames_and_fps_preserved(rng):
    c = rng.standard_normal((7, 33, 3))
    src = LandmarkSequence(c, np.ones((7, 33)), fps=25.0)
    out = retarget_33_to_22(src)
    assert out.n_frames == 7 and out.fps == 25.0 and out.n_joints == 22


def test_translation_commutes(rng):
    c = rng.standard_normal((5, 33, 3))
    off = np.array([0.25, -1.5, 4.0])
    a = retarget_33_to_22(lms(c)).data
    b = retarget_33_to_22(lms(c + off)).data
    assert np.allclose(b, a + off, atol=1e-12)


def test_mirror_symmetry(rng):
    c = rng.standard_normal((3, 33, 3))
    mirrored = c.copy()
    mirrored[..., 0] *= -1
    perm = np.arange(33)
    for a, b in MEDIAPIPE_33.left_right_pairs:
        perm[a - 1], perm[b - 1] = b - 1, a - 1
    mirrored = mirrored[:, perm]
    out = retarget_33_to_22(lms(c)).data
    out_m = retarget_33_to_22(lms(mirrored)).data
    perm22 = np.arange(22)
    for a, b in HUMANML3D_22.left_right_pairs:
        perm22[a - 1], perm22[b - 1] = b - 1, a - 1
    expect = out[:, perm22].copy()
    expect[..., 0] *= -1
    assert np.allclose(out_m, expect, atol=1e-12)


def test_lambda_range():
    with pytest.raises(ValidationError):
        retarget_33_to_22(single_frame(), lambda_lumbar=1.5)
    with pytest.raises(ValidationError):
        RetargetRule(4, "lerp", ("MID_HIP", "MID_SHOULDER"), -0.1)


def test_incomplete_rules():
    rules = default_rules()[:-1]
    with pytest.raises(ValidationError, match="missing"):
        retarget_33_to_22(single_frame(), rules)


def test_rule_parsing():
    assert parse_rule(3, "LEFT_HIP").kind == "direct"
    r = parse_rule(4, "lerp(MID_HIP, @7, 0.25)")
    assert r.operands == ("MID_HIP", "@7") and r.fraction == 0.25
    with pytest.raises(ParseError):
        parse_rule(4, "lerp(MID_HIP, NOSE)")
    with pytest.raises(ValidationError):
        parse_rule(4, "ELBOW_OF_DOOM")


def test_joint_references_resolve_in_dependency_order():
    rules = list(default_rules())
    rules[12] = parse_rule(13, "mean(@7, @16)")
    src = single_frame(LEFT_SHOULDER=(-1, 1, 0), RIGHT_SHOULDER=(1, 1, 0), NOSE=(0, 3, 0))
    out = retarget_33_to_22(src, rules)
    assert np.array_equal(out.data[0, 12], [0, 2, 0])


def test_rule_file(tmp_path):
    text = skeleton_to_text(HUMANML3D_22).splitlines()
    rules = {r.target: r.to_text() for r in default_rules(0.5, 0.5)}
    lines = []
    for line in text:
        head = line.split(",")[0]
        if head.isdigit():
            parts = [p.strip() for p in line.split(",")]
            if len(parts) == 2:
                parts.append("")
            line = ", ".join(parts + [rules[int(head)]])
        lines.append(line)
    path = tmp_path / "rules.skel"
    path.write_text("\n".join(lines) + "\n")
    skel, loaded = load_rules(path)
    assert skel == HUMANML3D_22
    src = single_frame(LEFT_SHOULDER=(-1, 2, 0), RIGHT_SHOULDER=(1, 2, 0))
    assert np.array_equal(retarget_33_to_22(src, loaded).data[0, 3], [0, 1, 0])


def test_meta_flags_assumed_joints():
    meta = retarget_33_to_22(single_frame()).meta
    assert meta["retarget.rule.4"].startswith("lerp(MID_HIP, MID_SHOULDER")
    assert meta["retarget.rule.13"].startswith("lerp(MID_SHOULDER, NOSE")
