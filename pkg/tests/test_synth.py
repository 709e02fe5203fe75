import numpy as np
import pytest

from motionfid.errors import ValidationError
from motionfid.io import write_motion
from motionfid.metrics import dtw_joint, dtw_per_joint, pa_mpjpe
from motionfid.synth import (
    SynthSpec,
    apply_rigid,
    apply_time_warp,
    brute_force_dtw,
    generate,
    random_rotation,
)

RZ90 = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 1]])


def test_constant_has_zero_velocity():
    s = generate(SynthSpec("constant", 12))
    assert not np.diff(s.data, axis=0).any()


def test_linear_ramp_is_affine_in_time():
    s = generate(SynthSpec("linear_ramp", 11, amplitude=1.0))
    assert np.allclose(np.diff(s.data[..., 2], 2, axis=0), 0, atol=1e-12)
    assert abs(s.data[-1, 0, 2] - s.data[0, 0, 2] - 1.0) < 1e-12


def test_same_seed_same_bytes():
    spec = SynthSpec("noise", 20, seed=7)
    assert write_motion(generate(spec)) == write_motion(generate(spec))
    assert write_motion(generate(spec)) != write_motion(generate(SynthSpec("noise", 20, seed=8)))


def test_walk_cycle_ankles_half_period_apart():
    period = 32
    s = generate(SynthSpec("walk_cycle", 256, period=period, amplitude=0.2))
    right, left = s.data[:, 7, 2], s.data[:, 8, 2]
    r, l = right - right.mean(), left - left.mean()
    lags = np.arange(period)
    xc = [np.dot(r[: len(r) - k], l[k:]) for k in lags]
    assert int(lags[np.argmax(xc)]) == period // 2
    torso = s.data[:, [0, 3, 6, 9, 12, 15]]
    assert not np.diff(torso, axis=0).any()


def test_spec_validation():
    for kw in ({"kind": "dance", "frames": 5}, {"kind": "noise", "frames": 0},
               {"kind": "noise", "frames": 5, "period": 1}, {"kind": "noise", "frames": 5, "source": "x"}):
        with pytest.raises(ValidationError):
            SynthSpec(**kw)


def test_identity_transform():
    s = generate(SynthSpec("noise", 6))
    assert apply_rigid(s, np.eye(3)) == s


def test_rotation_is_rigid(rng):
    s = generate(SynthSpec("walk_cycle", 30))
    out = apply_rigid(s, RZ90, (0.0, 0.0, 0.0))
    assert pa_mpjpe(s, out) < 1e-9
    R = random_rotation(rng)
    moved = apply_rigid(s, R, rng.standard_normal(3))
    d0 = np.linalg.norm(s.data[:, :, None] - s.data[:, None], axis=-1)
    d1 = np.linalg.norm(moved.data[:, :, None] - moved.data[:, None], axis=-1)
    assert np.abs(d0 - d1).max() < 1e-12


def test_translation_drops_centered_flag():
    s = generate(SynthSpec("constant", 3))
    d = s.data - s.data[:, 15:16]
    from motionfid.model import MotionSequence

    c = MotionSequence(s.skeleton, d, state=frozenset({"centered"}))
    assert "centered" in apply_rigid(c, RZ90).state
    assert "centered" not in apply_rigid(c, RZ90, (1.0, 0, 0)).state


def test_invalid_rotation():
    s = generate(SynthSpec("constant", 3))
    with pytest.raises(ValidationError):
        apply_rigid(s, np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ValidationError):
        apply_rigid(s, 2 * np.eye(3))


def test_duplication_warp_zero_dtw():
    s = generate(SynthSpec("noise", 10, seed=3))
    w = apply_time_warp(s, [0, 1, 1, 2, 3, 3, 3, 4, 5, 6, 7, 8, 9, 9])
    assert not dtw_per_joint(s, w).any()


def test_invalid_warp():
    s = generate(SynthSpec("noise", 5))
    for w in ([0, 2, 1], [0, 5], [-1, 0], [0.0, 1.0], []):
        with pytest.raises(ValidationError):
            apply_time_warp(s, np.asarray(w))


class TestBruteForce:
    def test_examples(self):
        assert brute_force_dtw([1.0, 2, 3], [1.0, 3]) == 1.0
        p = np.arange(12.0).reshape(4, 3)
        assert brute_force_dtw(p, p) == 0.0
        assert brute_force_dtw([[0.0, 0, 0]], [[1.0, 2, 2]]) == 3.0

    def test_length_cap(self):
        with pytest.raises(ValidationError):
            brute_force_dtw(np.zeros(11), np.zeros(3))

    def test_matches_dynamic_program(self, backend):
        r = np.random.default_rng(99)
        for _ in range(50):
            a = r.standard_normal((r.integers(1, 7), 3))
            b = r.standard_normal((r.integers(1, 7), 3))
            assert brute_force_dtw(a, b) == dtw_joint(a, b)
