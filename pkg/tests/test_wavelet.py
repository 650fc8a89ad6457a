import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csigait.errors import InvalidInput, PeakResolutionError
from csigait.separation import SeparationRequest, separate
from csigait.separation.wavelet import DB4_HI, DB4_LO, find_gait_peaks, soft_threshold, wavedec, waverec


def test_filter_is_orthonormal():
    assert np.sum(DB4_LO) == pytest.approx(np.sqrt(2))
    assert np.sum(DB4_LO ** 2) == pytest.approx(1.0)
    for shift in (2, 4, 6):
        assert np.dot(DB4_LO[shift:], DB4_LO[:-shift]) == pytest.approx(0.0, abs=1e-12)
    assert np.dot(DB4_LO, DB4_HI) == pytest.approx(0.0, abs=1e-12)
    # four vanishing moments
    k = np.arange(8)
    for m in range(4):
        assert np.sum(DB4_HI * k ** m) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(16, 700))
def test_perfect_reconstruction_any_length(seed, n):
    x = np.random.default_rng(seed).normal(size=n)
    coeffs, length = wavedec(x)
    assert np.max(np.abs(waverec(coeffs, length) - x)) < 1e-8


def test_energy_preserved_on_block_lengths(rng):
    x = rng.normal(size=256)
    coeffs, _ = wavedec(x)
    assert sum(np.sum(c ** 2) for c in coeffs) == pytest.approx(np.sum(x ** 2))


def test_multichannel_matches_per_channel(rng):
    x = rng.normal(size=(300, 4))
    coeffs, n = wavedec(x)
    for j in range(4):
        single, _ = wavedec(x[:, j])
        for a, b in zip(coeffs, single):
            assert np.allclose(a[:, j], b)


def test_constant_signal_has_no_detail():
    coeffs, _ = wavedec(np.full(512, 3.7))
    for d in coeffs[1:]:
        assert np.max(np.abs(d)) < 1e-10


def test_soft_threshold():
    assert np.allclose(soft_threshold(np.array([-3.0, -0.5, 0.5, 2.0]), 1.0), [-2.0, 0.0, 0.0, 1.0])


def two_tone(rng, n=2048, rate=100.0):
    t = np.arange(n) / rate
    tones = np.column_stack([np.sin(2 * np.pi * 1.0 * t), 0.8 * np.sin(2 * np.pi * 2.5 * t + 0.3)])
    return tones @ rng.normal(size=(2, 52)) + 0.05 * rng.normal(size=(n, 52))


def test_two_tone_sources_hit_each_tone(rng):
    x = two_tone(rng)
    res = separate(SeparationRequest(x=x, p=2, method="Wavelet", sample_rate_hz=100.0))
    freqs = np.fft.rfftfreq(x.shape[0], 0.01)
    dom = sorted(freqs[np.argmax(np.abs(np.fft.rfft(res.sources, axis=0)), axis=0)])
    df = freqs[1]
    assert abs(dom[0] - 1.0) <= df and abs(dom[1] - 2.5) <= df
    assert np.allclose(sorted(res.metadata["peaks_hz"]), [1.0, 2.5], atol=0.2)
    assert res.metadata["wavelet"] == "db4" and res.metadata["levels"] == 4


def test_unresolvable_peaks(rng):
    x = two_tone(rng)
    with pytest.raises(PeakResolutionError):
        find_gait_peaks(x, 100.0, 8)


def test_short_input_rejected(rng):
    with pytest.raises(InvalidInput):
        separate(SeparationRequest(x=rng.normal(size=(200, 5)), p=1, method="Wavelet"))
