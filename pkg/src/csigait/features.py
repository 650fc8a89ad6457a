"""24-dimensional gait feature vector of one separated source.

Slot order is fixed and shared by model files and CSV exports (see
:data:`FEATURE_NAMES`). Conventions:

* variance / std use the sample (n - 1) normalisation, skewness and excess
  kurtosis the plain central-moment ratios; both are 0 for a constant signal;
* spectra are Hann-windowed periodograms of the mean-removed signal, scaled
  as a density so the summed band power approximates the variance;
* spectral flatness is measured on the average of the 8 short-time spectra
  also used for the flux, because a single periodogram of white noise has a
  flatness of only exp(-Euler gamma) ~ 0.56;
* the last two spatial slots (mean and max pairwise antenna correlation)
  are aggregates chosen to fill the 8 spatial slots.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .preprocess import NormalizedTrial

TEMPORAL_NAMES = ("mean", "std", "variance", "skewness", "kurtosis", "zero_crossing_rate", "peak_to_peak", "rms")
FREQUENCY_NAMES = (
    "spectral_centroid",
    "spectral_spread",
    "spectral_entropy",
    "spectral_flatness",
    "dominant_frequency",
    "spectral_rolloff",
    "spectral_flux",
    "psd_power",
)
SPATIAL_NAMES = (
    "xcorr_ant01",
    "xcorr_ant02",
    "xcorr_ant12",
    "spatial_variance",
    "diversity_gain",
    "spatial_entropy",
    "mean_pair_correlation",
    "max_pair_correlation",
)
FEATURE_NAMES = TEMPORAL_NAMES + FREQUENCY_NAMES + SPATIAL_NAMES
N_FEATURES = len(FEATURE_NAMES)

ROLLOFF_FRACTION = 0.85
FLUX_SEGMENTS = 8


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray  # (24,)
    label: object = None

    @property
    def temporal(self) -> np.ndarray:
        return self.values[:8]

    @property
    def frequency(self) -> np.ndarray:
        return self.values[8:16]

    @property
    def spatial(self) -> np.ndarray:
        return self.values[16:]

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, map(float, self.values)))


def _signal(s) -> np.ndarray:
    s = np.asarray(s, dtype=float).ravel()
    if not np.all(np.isfinite(s)):
        raise InvalidInput("source contains non-finite values")
    return s


def temporal_features(s) -> np.ndarray:
    s = _signal(s)
    n = s.size
    if n < 4:
        raise InvalidInput("temporal features need at least 4 samples")
    mean = s.mean()
    d = s - mean
    var = float(np.sum(d * d) / (n - 1))
    m2 = float(np.mean(d * d))
    if m2 <= 1e-30 * max(mean * mean, 1e-300):
        skew = kurt = 0.0
    else:
        skew = float(np.mean(d ** 3) / m2 ** 1.5)
        kurt = float(np.mean(d ** 4) / m2 ** 2 - 3.0)
    zcr = float(np.count_nonzero(d[:-1] * d[1:] < 0) / (n - 1))
    return np.array([
        mean,
        np.sqrt(var),
        var,
        skew,
        kurt,
        zcr,
        float(s.max() - s.min()),
        float(np.sqrt(np.mean(s * s))),
    ])


def periodogram(s: np.ndarray, rate_hz: float):
    """One-sided Hann periodogram (density scaling) of the mean-removed signal."""
    n = s.size
    w = np.hanning(n)
    spec = np.abs(np.fft.rfft((s - s.mean()) * w)) ** 2 / (rate_hz * np.sum(w * w))
    if n % 2 == 0:
        spec[1:-1] *= 2.0
    else:
        spec[1:] *= 2.0
    return np.fft.rfftfreq(n, 1.0 / rate_hz), spec


def short_time_spectra(s: np.ndarray, segments: int = FLUX_SEGMENTS) -> np.ndarray:
    """Power spectra of ``segments`` Hann windows with 50 % overlap."""
    n = s.size
    seg = (2 * n) // (segments + 1)
    hop = seg // 2
    w = np.hanning(seg)
    frames = np.stack([s[i * hop: i * hop + seg] for i in range(segments)])
    frames = frames - frames.mean(axis=1, keepdims=True)
    return np.abs(np.fft.rfft(frames * w, axis=1)) ** 2


def _normalise(p: np.ndarray) -> np.ndarray:
    total = p.sum()
    return p / total if total > 0 else np.zeros_like(p)


def frequency_features(s, rate_hz: float) -> np.ndarray:
    s = _signal(s)
    if s.size < 64:
        raise InvalidInput("frequency features need at least 64 samples")
    freqs, pxx = periodogram(s, rate_hz)
    total = pxx.sum()
    if total <= 0:
        return np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    p = pxx / total
    centroid = float(np.sum(freqs * p))
    spread = float(np.sqrt(np.sum((freqs - centroid) ** 2 * p)))
    nz = p[p > 0]
    entropy = float(-np.sum(nz * np.log2(nz)))
    dominant = float(freqs[int(np.argmax(pxx))])
    rolloff = float(freqs[min(int(np.searchsorted(np.cumsum(p), ROLLOFF_FRACTION - 1e-12)), freqs.size - 1)])
    frames = short_time_spectra(s)
    avg = frames.mean(axis=0)[1:]  # DC bin is empty after mean removal
    if avg.max() > 0:
        floor = 1e-300 + 1e-20 * avg.max()
        flatness = float(np.exp(np.mean(np.log(avg + floor))) / np.mean(avg + floor))
    else:
        flatness = 1.0
    norm_frames = np.array([_normalise(f) for f in frames])
    flux = float(np.mean(np.linalg.norm(np.diff(norm_frames, axis=0), axis=1)))
    power = float(total * (freqs[1] - freqs[0]))
    return np.array([centroid, spread, entropy, flatness, dominant, rolloff, flux, power])


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation; 0 when either series is (numerically) constant."""
    a0 = a - a.mean()
    b0 = b - b.mean()
    na, nb = np.linalg.norm(a0), np.linalg.norm(b0)
    if na <= 1e-12 * np.linalg.norm(a) or nb <= 1e-12 * np.linalg.norm(b) or na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a0 @ b0 / (na * nb), -1.0, 1.0))


def spatial_features(s, trial: NormalizedTrial | np.ndarray) -> np.ndarray:
    s = _signal(s)
    tensor = trial.tensor if isinstance(trial, NormalizedTrial) else np.asarray(trial, dtype=float)
    if tensor.ndim != 3 or tensor.shape[2] != 3:
        raise InvalidInput("spatial features need an (n, subcarriers, 3) tensor")
    if tensor.shape[0] != s.size:
        raise InvalidInput("source and trial lengths differ")
    ant = tensor.mean(axis=1)  # (n, 3) per-antenna mean series
    g = np.array([_corr(s, ant[:, k]) for k in range(3)])
    pairs = np.array([_corr(ant[:, 0], ant[:, 1]), _corr(ant[:, 0], ant[:, 2]), _corr(ant[:, 1], ant[:, 2])])
    mag = np.abs(g)
    total = mag.sum()
    if total > 0:
        q = mag / total
        nz = q[q > 0]
        entropy = float(-np.sum(nz * np.log2(nz)))
        gain = float(mag.max() / mag.mean())
    else:
        entropy = gain = 0.0
    return np.concatenate([pairs, [float(np.var(g)), gain, entropy, float(pairs.mean()), float(pairs.max())]])


def extract(s, trial: NormalizedTrial | np.ndarray, rate_hz: float | None = None, label=None) -> FeatureVector:
    if rate_hz is None:
        if not isinstance(trial, NormalizedTrial):
            raise InvalidInput("rate_hz is required when trial is a bare tensor")
        rate_hz = trial.sample_rate_hz
    values = np.concatenate([temporal_features(s), frequency_features(s, rate_hz), spatial_features(s, trial)])
    return FeatureVector(values=values, label=label)
