import numpy as np
import pytest

from emovox.features.spectral import (
    FRAME_FEATURE_NAMES,
    N_FFT,
    frame_feature_matrix,
    frame_features,
    formants,
    hz_to_mel,
    irregularity,
    levinson_durbin,
    mel_filterbank,
    mel_to_hz,
    roughness,
    spectral_peaks,
)
from emovox.synth import sine, vowel
from oracles import dft_magnitude

FS = 16000
BIN = FS / N_FFT


def test_thirty_three_descriptors():
    assert len(FRAME_FEATURE_NAMES) == 33 == len(set(FRAME_FEATURE_NAMES))


@pytest.mark.parametrize("freq", [150.0, 220.0, 440.0, 1000.0])
def test_pure_tone_descriptors(freq):
    f = frame_features(sine(freq, 0.06, amplitude=0.9), FS, freq)
    assert f["centroid"] == pytest.approx(freq, abs=BIN)
    assert f["spread"] <= 2 * BIN
    assert f["flatness"] <= 0.01
    assert abs(f["roughness"]) <= 1e-9
    assert f["f0"] == freq


def test_vowel_formants():
    poles = (700.0, 1220.0, 2600.0, 3400.0)
    x = vowel(100.0, poles)
    frame = x[4000:4960] * np.hamming(960)
    freq, bw = formants(np.append(frame[0], frame[1:] - 0.97 * frame[:-1]), FS)
    np.testing.assert_allclose(freq, poles, atol=60.0)
    assert np.all(bw < 400)


def test_formant_slots_filled_when_missing():
    f, b = formants(np.hanning(960) * sine(300, 0.06), FS, order=4)
    assert f.shape == (4,) and np.all(f[f.size - 2 :] == FS / 2)


def test_levinson_matches_normal_equations():
    rng = np.random.default_rng(0)
    x = rng.normal(size=400)
    r = np.correlate(x, x, "full")[399 : 399 + 7]
    a, err = levinson_durbin(r, 6)
    from scipy.linalg import solve_toeplitz

    np.testing.assert_allclose(a[1:], -solve_toeplitz(r[:6], r[1:7]), atol=1e-10)
    assert err > 0


def test_mel_scale_and_bank():
    assert hz_to_mel(1000.0) == pytest.approx(1000.0, abs=0.5)
    assert mel_to_hz(hz_to_mel(3210.0)) == pytest.approx(3210.0)
    fb = mel_filterbank(FS)
    assert fb.shape == (26, N_FFT // 2 + 1)
    assert np.all(fb >= 0) and np.all(fb.sum(axis=1) > 0)


def test_spectral_peaks_and_leakage():
    x = sine(1000.0, 0.06) * np.hanning(960)
    mag = dft_magnitude(x, N_FFT)
    peaks = spectral_peaks(mag)
    assert peaks.size == 1 and abs(peaks[0] * BIN - 1000) <= BIN
    two = dft_magnitude((sine(500.0, 0.06) + sine(2000.0, 0.06)) * np.hanning(960), N_FFT)
    assert spectral_peaks(two).size == 2
    assert spectral_peaks(np.zeros(10)).size == 0


def test_roughness_and_irregularity_values():
    assert roughness([440.0], [1.0]) == 0.0
    assert roughness([440.0, 460.0], [1.0, 1.0]) > roughness([440.0, 880.0], [1.0, 1.0])
    assert irregularity([1.0]) == pytest.approx(1.0)
    assert irregularity([1.0, 1.0]) == pytest.approx(0.5)
    assert irregularity([]) == 0.0


def test_matrix_rows_agree_with_single_frame():
    frames = np.vstack([sine(f, 0.06) for f in (150.0, 300.0)])
    M = frame_feature_matrix(frames, FS, [150.0, 300.0])
    assert M.shape == (2, 33) and np.all(np.isfinite(M))
    np.testing.assert_allclose(M[1], list(frame_features(frames[1], FS, 300.0).values()))
