"""Subcarrier filtering, z-score normalisation and timestamp alignment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .csi_data import N_SUBCARRIERS, CsiTrial
from .errors import DataQualityError, InvalidInput

# 6 low guard, DC, 5 high guard out of a 64-bin 802.11n HT20 symbol
NULL_GUARD_INDICES = tuple(range(0, 6)) + (32,) + tuple(range(59, 64))

MAX_FILL_FRACTION = 0.10


def filter_subcarriers(raw, drop_indices=None) -> np.ndarray:
    """Keep the 52 data-bearing subcarriers of a ``(n, m, 3)`` tensor."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 3:
        raise InvalidInput(f"expected (n, m, antennas) tensor, got shape {raw.shape}")
    m = raw.shape[1]
    if m == N_SUBCARRIERS:
        return raw
    if m != 64:
        raise InvalidInput(f"expected 52 or 64 subcarriers, got {m}")
    drop = sorted(set(NULL_GUARD_INDICES if drop_indices is None else drop_indices))
    keep = [j for j in range(m) if j not in drop]
    if len(keep) != N_SUBCARRIERS:
        raise InvalidInput(f"drop set leaves {len(keep)} subcarriers, need {N_SUBCARRIERS}")
    return raw[:, keep, :]


@dataclass(frozen=True, eq=False)
class NormalizedTrial:
    tensor: np.ndarray  # (n, 52, 3) z-scored
    mean: np.ndarray  # (52, 3)
    std: np.ndarray  # (52, 3), population std, 0 for constant channels
    sample_rate_hz: float
    timestamps: np.ndarray | None = None
    person_ids: tuple = ()
    scenario_id: str = ""

    @property
    def n(self) -> int:
        return self.tensor.shape[0]

    def antenna_mean(self) -> np.ndarray:
        """``(n, 52)`` matrix averaged over antennas."""
        return self.tensor.mean(axis=2)

    def stacked(self) -> np.ndarray:
        """``(3n, 52)`` matrix with antennas stacked as extra rows."""
        return np.concatenate([self.tensor[:, :, k] for k in range(self.tensor.shape[2])], axis=0)

    def flattened(self, mode: str = "average") -> np.ndarray:
        if mode == "average":
            return self.antenna_mean()
        if mode == "stacked":
            return self.stacked()
        raise InvalidInput(f"unknown antenna mode {mode!r}")


def zscore(trial: CsiTrial | np.ndarray, sample_rate_hz: float | None = None) -> NormalizedTrial:
    """Standardise every (subcarrier, antenna) channel to zero mean, unit population std.

    Channels with zero variance become all-zero and keep ``std = 0``.
    """
    if isinstance(trial, CsiTrial):
        x = trial.amplitudes
        rate = trial.sample_rate_hz
        meta = dict(timestamps=trial.timestamps, person_ids=trial.person_ids, scenario_id=trial.scenario_id)
    else:
        x = np.asarray(trial, dtype=float)
        rate = sample_rate_hz or 100.0
        meta = {}
    if x.ndim != 3:
        raise InvalidInput(f"expected (n, subcarriers, antennas) tensor, got {x.shape}")
    if x.shape[0] < 2:
        raise InvalidInput("z-score needs at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("tensor has missing or non-finite values; align() first")
    mu = x.mean(axis=0)
    centred = x - mu
    sd = np.sqrt(np.mean(centred ** 2, axis=0))
    # relative test so round-off in a constant channel is not blown up to unit scale
    const = sd <= 1e-12 * np.maximum(np.abs(mu), 1.0)
    safe = np.where(const, 1.0, sd)
    z = np.where(const, 0.0, centred / safe)
    sd = np.where(const, 0.0, sd)
    return NormalizedTrial(tensor=z, mean=mu, std=sd, sample_rate_hz=float(rate), **meta)


def nearest_indices(source_ts: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Index of the nearest source timestamp for every grid point (ties go earlier)."""
    pos = np.searchsorted(source_ts, grid, side="left")
    pos = np.clip(pos, 1, len(source_ts) - 1)
    left = source_ts[pos - 1]
    right = source_ts[pos]
    take_left = (grid - left) <= (right - grid)
    return np.where(take_left, pos - 1, pos)


def default_rate(timestamps) -> float:
    """Median instantaneous rate (Hz) of a timestamp sequence in microseconds."""
    dt = np.diff(np.asarray(timestamps, dtype=float))
    return float(np.median(1e6 / dt))


def _ffill_bfill(values: np.ndarray, missing: np.ndarray) -> np.ndarray:
    """Forward- then backward-fill rows of ``values`` where ``missing`` (axis 0)."""
    n = missing.size
    idx = np.where(~missing, np.arange(n), -1)
    idx = np.maximum.accumulate(idx)
    back = np.where(~missing, np.arange(n), n)
    back = np.minimum.accumulate(back[::-1])[::-1]
    src = np.where(idx >= 0, idx, back)
    return values[src]


def align(trial: CsiTrial, target_rate_hz: float | None = None, max_fill: float = MAX_FILL_FRACTION) -> CsiTrial:
    """Resample onto a uniform grid by nearest-neighbour timestamp matching.

    Grid points whose nearest capture lacks an antenna row are filled from
    the previous grid value of that antenna, or the next one at the start.
    The fraction of filled (time, antenna) slots is stored in
    ``fill_fraction``; above ``max_fill`` the capture is rejected.
    """
    if trial.n < 2:
        raise InvalidInput("align needs at least 2 samples")
    rate = float(target_rate_hz) if target_rate_hz else default_rate(trial.timestamps)
    if rate <= 0:
        raise InvalidInput("target rate must be positive")
    ts = trial.timestamps
    period = 1e6 / rate
    count = int(np.floor((ts[-1] - ts[0]) / period + 1e-9)) + 1
    grid = ts[0] + np.round(np.arange(count) * period).astype(np.int64)
    src = nearest_indices(ts, grid)
    amp = trial.amplitudes[src].copy()
    missing = trial.missing[src]
    fraction = float(missing.mean())
    if fraction > max_fill:
        raise DataQualityError(f"{fraction:.1%} of antenna samples missing (limit {max_fill:.0%})")
    if missing.all(axis=0).any():
        raise DataQualityError("an antenna has no samples at all")
    for k in range(amp.shape[2]):
        if missing[:, k].any():
            amp[:, :, k] = _ffill_bfill(amp[:, :, k], missing[:, k])
    return trial.replace(timestamps=grid, amplitudes=amp, sample_rate_hz=rate, fill_fraction=fraction)


def preprocess(trial: CsiTrial, target_rate_hz: float | None = None) -> NormalizedTrial:
    """Filter, align and z-score one trial."""
    amp = filter_subcarriers(trial.amplitudes)
    if amp is not trial.amplitudes:
        trial = trial.replace(amplitudes=amp)
    return zscore(align(trial, target_rate_hz))
