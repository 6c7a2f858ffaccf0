import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emovox.exceptions import TooShortError
from emovox.features.framing import detect_voicing, frame_length, frame_signal, nccf, pitch_track
from emovox.synth import sine

FS = 16000


def test_frame_counts():
    assert frame_signal(np.zeros(16000), FS).shape == (95, 960)
    assert frame_signal(np.zeros(960), FS).shape == (1, 960)
    with pytest.raises(TooShortError):
        frame_signal(np.zeros(959), FS)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(960, 20000))
def test_frames_are_contiguous_slices(n):
    x = np.arange(n, dtype=float)
    fr = frame_signal(x, FS)
    assert fr.shape[0] == 1 + (n - 960) // 160
    np.testing.assert_array_equal(fr[:, 0], np.arange(fr.shape[0]) * 160)
    assert fr[-1, -1] <= n - 1


def test_nccf_of_periodic_signal_peaks_at_period():
    x = sine(200.0, 0.06)[None, :]
    r = nccf(x, 40, 120)
    assert r[0, 80 - 40] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("freq", [150.0, 220.0, 440.0])
def test_sine_pitch(freq):
    voiced, f0 = detect_voicing(sine(freq, 0.06, amplitude=1.0), FS)
    assert voiced and f0 == pytest.approx(freq, abs=2.0)


def test_white_noise_is_unvoiced():
    rng = np.random.default_rng(0)
    frames = rng.normal(size=(1000, frame_length(FS)))
    voiced, _, _ = pitch_track(frames, FS, reference_rms=1.0)
    assert voiced.mean() <= 0.01


def test_silence_is_unvoiced():
    assert detect_voicing(np.zeros(960), FS) == (False, None)


def test_quiet_frames_are_gated():
    x = np.vstack([sine(200, 0.06), 1e-4 * sine(200, 0.06)])
    voiced, _, _ = pitch_track(x, FS)
    assert voiced.tolist() == [True, False]


def test_pitch_range_respected():
    # above the default ceiling a pure tone is still periodic at twice its period
    voiced, f0 = detect_voicing(sine(1000.0, 0.06), FS)
    assert not voiced or f0 == pytest.approx(500.0, abs=2.0)
    voiced, f0 = detect_voicing(sine(1000.0, 0.06), FS, f0_max=1100.0)
    assert voiced and f0 == pytest.approx(1000.0, abs=2.0)
