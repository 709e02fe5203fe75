import numpy as np
import pytest
import scipy.signal as sig
from hypothesis import given, settings
from hypothesis import strategies as st

from motionfid.errors import DegenerateError, ValidationError
from motionfid.normalize import (
    NormalizeConfig,
    butter_lowpass,
    butter_sos,
    filtfilt,
    flip_y,
    frame_scales,
    lowpass_zero_phase,
    median_filter,
    normalize_pipeline,
    root_center,
    scale_normalize,
    sosfilt_zi,
    sosfiltfilt,
)
from motionfid.synth import SynthSpec, generate

from conftest import motion, random_motion


def channel_seq(x):
    """Sequence whose joint 1 x-coordinate carries ``x``."""
    d = np.zeros((len(x), 22, 3))
    d[:, 0, 0] = x
    return motion(d)


class TestRootCenter:
    def test_subtraction(self):
        d = np.zeros((1, 22, 3))
        d[0, 15] = (1, 2, 3)
        d[0, 4] = (2, 2, 3)
        out = root_center(motion(d))
        assert out.data[0, 4].tolist() == [1, 0, 0]
        assert out.data[0, 15].tolist() == [0, 0, 0]
        assert "centered" in out.state

    def test_idempotent(self, rng):
        once = root_center(random_motion(rng))
        assert np.array_equal(root_center(once).data, once.data)

    def test_other_center_joint(self, rng):
        out = root_center(random_motion(rng), 1)
        assert not out.data[:, 0].any()


class TestScale:
    def _pose(self, scales):
        d = np.zeros((len(scales), 22, 3))
        d[:, 10, 1] = scales
        d[:, 0] = (1, 1, 0)
        return root_center(motion(d))

    def test_hand_example(self):
        out = scale_normalize(self._pose([2.0]))
        assert out.data[0, 0].tolist() == [0.5, 0.5, 0]

    def test_unit_reference_distance(self, rng):
        out = scale_normalize(root_center(random_motion(rng)))
        assert np.allclose(frame_scales(out), 1.0, atol=1e-14)

    def test_invalid_frame_reuses_previous(self):
        out = scale_normalize(self._pose([2.0, 0.0, 4.0]))
        assert out.data[1, 0].tolist() == [0.5, 0.5, 0]
        assert out.data[2, 0].tolist() == [0.25, 0.25, 0]
        assert out.meta["normalize.scale_filled_frames"] == "1"

    def test_leading_invalid_frames_use_first_valid(self):
        out = scale_normalize(self._pose([0.0, 0.0, 4.0]))
        assert out.data[0, 0].tolist() == [0.25, 0.25, 0]

    def test_all_degenerate(self):
        with pytest.raises(DegenerateError):
            scale_normalize(self._pose([0.0, 1e-9]))

    def test_requires_centering(self, rng):
        with pytest.raises(ValidationError):
            scale_normalize(random_motion(rng))

    def test_median_mode(self):
        out = scale_normalize(self._pose([1.0, 2.0, 4.0]), mode="median")
        assert np.array_equal(out.data[:, 0, 0], [0.5, 0.5, 0.5])


class TestFlip:
    def test_sign(self):
        d = np.zeros((1, 22, 3))
        d[0, 3] = (1, 2, 3)
        assert flip_y(motion(d)).data[0, 3].tolist() == [1, -2, 3]

    def test_involution(self, rng):
        s = random_motion(rng)
        assert np.array_equal(flip_y(flip_y(s)).data, s.data)

    def test_zero_y_fixed(self):
        d = np.ones((2, 22, 3))
        d[..., 1] = 0.0
        assert np.array_equal(flip_y(motion(d)).data, d)


class TestMedian:
    def test_spike_removed(self):
        assert median_filter(channel_seq([0, 10, 0, 0, 0]), 3).data[:, 0, 0].tolist() == [0] * 5

    def test_constant(self):
        assert np.array_equal(median_filter(channel_seq([3.0] * 9), 5).data[:, 0, 0], [3.0] * 9)

    def test_ramp_unchanged(self):
        x = np.arange(8.0)
        assert np.array_equal(median_filter(channel_seq(x), 3).data[:, 0, 0], x)

    def test_kernel_longer_than_series(self):
        out = median_filter(channel_seq([5.0, 1.0, 3.0]), 11).data[:, 0, 0]
        assert out.tolist() == [3.0, 3.0, 3.0]

    def test_matches_scipy_interior(self, rng):
        x = rng.standard_normal(60)
        ours = median_filter(channel_seq(x), 11).data[:, 0, 0]
        ref = sig.medfilt(x, 11)
        assert np.array_equal(ours[5:-5], ref[5:-5])

    def test_edges_replicate(self, rng):
        x = rng.standard_normal(30)
        ours = median_filter(channel_seq(x), 5).data[:, 0, 0]
        padded = np.concatenate([[x[0]] * 2, x, [x[-1]] * 2])
        ref = [np.median(padded[i : i + 5]) for i in range(30)]
        assert np.array_equal(ours, ref)

    @pytest.mark.parametrize("k", [0, 4])
    def test_kernel_validation(self, k):
        with pytest.raises(ValidationError):
            median_filter(channel_seq([1.0, 2.0]), k)


class TestLowpass:
    def test_design_matches_scipy(self):
        for order, wn in ((4, 0.05), (2, 0.3), (5, 0.5)):
            b, a = butter_lowpass(order, wn)
            rb, ra = sig.butter(order, wn)
            assert np.allclose(b, rb, rtol=1e-12, atol=1e-15)
            assert np.allclose(a, ra, rtol=1e-12, atol=1e-15)

    def test_matches_scipy_filtfilt(self, backend, rng):
        b, a = butter_lowpass(4, 0.05)
        x = rng.standard_normal((200, 9))
        ref = sig.filtfilt(*sig.butter(4, 0.05), x, axis=0, padtype="odd", padlen=15)
        assert np.abs(filtfilt(x, b, a) - ref).max() < 1e-10

    def test_short_sequence_shrinks_padding(self, backend, rng):
        b, a = butter_lowpass(4, 0.05)
        x = rng.standard_normal((9, 2))
        ref = sig.filtfilt(*sig.butter(4, 0.05), x, axis=0, padtype="odd", padlen=8)
        assert np.abs(filtfilt(x, b, a) - ref).max() < 1e-10

    @pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
    def test_sections_match_scipy(self, order):
        ours = butter_sos(order, 0.05)
        ref = sig.butter(order, 0.05, output="sos")
        for k in range(2):
            assert np.allclose(sig.sos2tf(ours)[k], sig.sos2tf(ref)[k], rtol=1e-12, atol=1e-15)

    def test_section_zi_matches_scipy(self):
        sos = butter_sos(4, 0.05)
        assert np.allclose(sosfilt_zi(sos), sig.sosfilt_zi(sos), rtol=1e-10, atol=1e-14)

    @pytest.mark.parametrize("T", [9, 200])
    def test_sections_match_direct_form(self, backend, rng, T):
        x = rng.standard_normal((T, 4))
        ref = sig.filtfilt(*sig.butter(4, 0.05), x, axis=0, padtype="odd", padlen=min(15, T - 1))
        assert np.abs(sosfiltfilt(x, butter_sos(4, 0.05)) - ref).max() < 1e-10

    def test_sections_lower_rounding_noise(self, rng):
        # same input up to an exact power-of-two rescale versus a 3.7x rescale
        x = rng.standard_normal((300, 8))
        sos = butter_sos(4, 0.05)
        b, a = butter_lowpass(4, 0.05)
        dev_sos = np.abs(sosfiltfilt(3.7 * x, sos) / 3.7 - sosfiltfilt(x, sos)).max()
        dev_ba = np.abs(filtfilt(3.7 * x, b, a) / 3.7 - filtfilt(x, b, a)).max()
        assert dev_sos < 1e-13
        assert dev_sos < dev_ba

    def test_constant_passes(self, backend):
        out = lowpass_zero_phase(channel_seq([2.5] * 64)).data[:, 0, 0]
        assert np.abs(out - 2.5).max() < 1e-6

    def test_time_reversal_symmetry(self, backend, rng):
        # edge-initialised passes differ near the ends; the interior is symmetric once transients decay
        x = rng.standard_normal(1000)
        fwd = lowpass_zero_phase(channel_seq(x)).data[:, 0, 0]
        rev = lowpass_zero_phase(channel_seq(x[::-1])).data[:, 0, 0][::-1]
        assert np.abs(fwd - rev)[300:-300].max() < 1e-8

    def test_zero_lag(self, rng):
        t = np.arange(400)
        x = np.sin(2 * np.pi * t / 80) + 0.3 * rng.standard_normal(400)
        y = lowpass_zero_phase(channel_seq(x)).data[:, 0, 0]
        xc = np.correlate(y - y.mean(), x - x.mean(), mode="full")
        assert int(np.argmax(xc)) - (len(x) - 1) == 0

    def test_too_short(self):
        with pytest.raises(ValidationError, match="short"):
            lowpass_zero_phase(channel_seq([1.0]))

    @pytest.mark.parametrize("kw", [{"lowpass_cutoff": 0.0}, {"lowpass_cutoff": 1.0}, {"lowpass_order": 0},
                                    {"median_kernel": 2}, {"flip_y": "sometimes"}, {"scale_epsilon": 0.0}])
    def test_config_validation(self, kw):
        with pytest.raises(ValidationError):
            NormalizeConfig(**kw)


class TestPipeline:
    def test_defaults_echoed(self, rng):
        meta = normalize_pipeline(random_motion(rng, 40)).meta
        assert meta["normalize.median_kernel"] == "11"
        assert meta["normalize.lowpass_cutoff"] == "0.05"
        assert meta["normalize.lowpass_order"] == "4"
        assert meta["normalize.center_joint"] == "16"
        assert (meta["normalize.scale_a"], meta["normalize.scale_b"]) == ("16", "11")

    def test_auto_flip_only_for_real(self, rng):
        d = rng.standard_normal((40, 22, 3))
        real = normalize_pipeline(motion(d, source="real"))
        sim = normalize_pipeline(motion(d, source="simulated"))
        assert "y_flipped" in real.state and "y_flipped" not in sim.state
        assert np.allclose(real.data[..., 1], -sim.data[..., 1], atol=1e-12)
        assert np.array_equal(real.data[..., 0], sim.data[..., 0])

    def test_explicit_flip_modes(self, rng):
        s = random_motion(rng, 30)
        assert "y_flipped" in normalize_pipeline(s, NormalizeConfig(flip_y="always")).state
        r = random_motion(rng, 30, source="real")
        assert "y_flipped" not in normalize_pipeline(r, NormalizeConfig(flip_y="never")).state

    def test_zero_motion(self):
        s = generate(SynthSpec("constant", 30))
        out = normalize_pipeline(s)
        assert np.abs(out.data - out.data[0]).max() < 1e-12
        assert abs(np.linalg.norm(out.data[0, 10] - out.data[0, 15]) - 1.0) < 1e-12

    def test_center_stays_zero(self, rng):
        out = normalize_pipeline(random_motion(rng, 50))
        assert not out.data[:, 15].any()
        assert out.state >= {"centered", "scaled", "filtered"}

    @settings(max_examples=25, deadline=None)
    @given(alpha=st.floats(0.01, 100.0), shift=st.tuples(*[st.floats(-50, 50)] * 3), seed=st.integers(0, 2**16))
    def test_scale_and_translation_invariance(self, alpha, shift, seed):
        d = np.random.default_rng(seed).standard_normal((24, 22, 3))
        ref = normalize_pipeline(motion(d)).data
        out = normalize_pipeline(motion(alpha * d + np.array(shift))).data
        scale = np.abs(ref).max()
        assert np.abs(out - ref).max() <= 1e-10 * scale
