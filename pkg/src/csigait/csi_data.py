"""CSI trial model, trial file I/O and the synthetic gait mixture generator.

A trial stores CSI amplitudes as an ``(n, 52, 3)`` tensor indexed by
(time, subcarrier, antenna). On disk a trial is a CSV file with one row per
(timestamp, antenna) plus a ``<stem>.meta.json`` sidecar::

    timestamp_us,antenna,s0,...,s51
    0,0,12.5,...
    0,1,...

An antenna row that is absent from the CSV is loaded as NaN for that
(time, antenna) slot; :func:`csigait.preprocess.align` fills such gaps.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidInput, IoError, ParseError
from .numerics import SeededRng

N_SUBCARRIERS = 52
N_ANTENNAS = 3
MAX_PERSONS = 10
GAIT_BAND_HZ = (0.5, 3.0)


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


@dataclass(frozen=True, eq=False)
class CsiTrial:
    timestamps: np.ndarray  # int64 microseconds, strictly increasing
    amplitudes: np.ndarray  # (n, 52, 3)
    person_ids: tuple = ()
    scenario_id: str = ""
    sample_rate_hz: float = 100.0
    fill_fraction: float = 0.0

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        amp = np.asarray(self.amplitudes, dtype=float)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "person_ids", tuple(self.person_ids))
        if amp.ndim != 3 or amp.shape[2] != N_ANTENNAS:
            raise FormatError(f"amplitudes must be (n, m, {N_ANTENNAS}), got {amp.shape}")
        if ts.shape != (amp.shape[0],):
            raise FormatError("one timestamp per time sample required")
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            raise FormatError("timestamps must be strictly increasing")
        present = np.isfinite(amp)
        # missing data is only allowed as whole (time, antenna) rows
        if np.any(present.any(axis=1) != present.all(axis=1)):
            raise FormatError("non-finite amplitude inside a present antenna row")
        if np.any(amp[present] < 0):
            raise FormatError("amplitudes must be nonnegative")
        if not 1 <= len(self.person_ids) <= MAX_PERSONS:
            raise FormatError(f"1..{MAX_PERSONS} person ids required, got {len(self.person_ids)}")
        if len(set(self.person_ids)) != len(self.person_ids):
            raise FormatError("duplicate person ids")

    @property
    def n(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def missing(self) -> np.ndarray:
        """Boolean ``(n, 3)`` mask of absent antenna rows."""
        return ~np.isfinite(self.amplitudes[:, 0, :])

    def replace(self, **changes) -> "CsiTrial":
        return replace(self, **changes)


# ---------------------------------------------------------------- file I/O

def save_trial(trial: CsiTrial, path) -> None:
    """Write ``trial`` as CSV plus JSON sidecar; reals keep 17 significant digits."""
    if trial.n == 0:
        raise FormatError("cannot save an empty trial")
    path = Path(path)
    m = trial.amplitudes.shape[1]
    header = ["timestamp_us", "antenna"] + [f"s{j}" for j in range(m)]
    rows = []
    missing = trial.missing
    for i, ts in enumerate(trial.timestamps):
        for k in range(N_ANTENNAS):
            if missing[i, k]:
                continue
            vals = trial.amplitudes[i, :, k]
            rows.append([str(int(ts)), str(k)] + [format(float(v), ".17g") for v in vals])
    meta = {
        "scenario_id": trial.scenario_id,
        "person_ids": list(trial.person_ids),
        "sample_rate_hz": float(trial.sample_rate_hz),
    }
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        meta_path(path).write_text(json.dumps(meta, indent=2) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from None


def load_trial(path, drop_indices=None) -> CsiTrial:
    """Parse a trial CSV and its ``.meta.json`` sidecar.

    Files with 64 subcarrier columns are reduced to 52 with
    :func:`csigait.preprocess.filter_subcarriers` (``drop_indices`` overrides
    the default null/guard set).
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        m = len(header) - 2
        expected = ["timestamp_us", "antenna"] + [f"s{j}" for j in range(m)]
        if [h.strip() for h in header] != expected or m not in (52, 64):
            raise ParseError("header must be timestamp_us,antenna,s0,...,s51", line=1)
        order: list[int] = []
        values: dict[int, dict[int, np.ndarray]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != m + 2:
                raise ParseError(f"expected {m + 2} columns, got {len(row)}", line=lineno)
            try:
                ts = int(row[0])
                ant = int(row[1])
                vals = np.array([float(x) for x in row[2:]])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            if not 0 <= ant < N_ANTENNAS:
                raise ParseError(f"antenna index {ant} out of range", line=lineno)
            if ts not in values:
                if order and ts < order[-1]:
                    raise FormatError(f"line {lineno}: timestamps not monotone")
                order.append(ts)
                values[ts] = {}
            elif ts != order[-1]:
                raise FormatError(f"line {lineno}: timestamps not monotone")
            if ant in values[ts]:
                raise FormatError(f"line {lineno}: duplicate row for antenna {ant}")
            values[ts][ant] = vals
    if not order:
        raise FormatError(f"{path}: no data rows")
    amp = np.full((len(order), m, N_ANTENNAS), np.nan)
    for i, ts in enumerate(order):
        for ant, vals in values[ts].items():
            amp[i, :, ant] = vals
    if m == 64:
        from .preprocess import filter_subcarriers

        amp = filter_subcarriers(amp, drop_indices)

    mp = meta_path(path)
    try:
        meta = json.loads(mp.read_text())
    except FileNotFoundError:
        raise FormatError(f"missing metadata sidecar {mp}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{mp}: {exc}") from None
    try:
        return CsiTrial(
            timestamps=np.array(order, dtype=np.int64),
            amplitudes=amp,
            person_ids=tuple(meta["person_ids"]),
            scenario_id=str(meta.get("scenario_id", "")),
            sample_rate_hz=float(meta.get("sample_rate_hz", 100.0)),
        )
    except KeyError as exc:
        raise FormatError(f"{mp}: missing key {exc}") from None


# --------------------------------------------------------------- synthesis

@dataclass(frozen=True)
class GaitProfile:
    """Parameters of one walker's CSI signature.

    ``cadence_hz``, ``harmonic_amps`` and ``torso_limb_ratio`` shape the
    gait waveform; ``phase``, ``path_gain_per_antenna`` and
    ``subcarrier_signature`` describe where the walker is in the room.
    """

    cadence_hz: float
    harmonic_amps: tuple = (1.0, 0.5, 0.25)
    torso_limb_ratio: float = 0.3
    phase: float = 0.0
    path_gain_per_antenna: tuple = (1.0, 1.0, 1.0)
    subcarrier_signature: tuple = field(default_factory=lambda: (1.0,) * N_SUBCARRIERS)

    def __post_init__(self):
        if not 0.5 <= self.cadence_hz <= 3.0:
            raise InvalidInput(f"cadence {self.cadence_hz} Hz outside [0.5, 3.0]")
        if any(a < 0 for a in self.harmonic_amps):
            raise InvalidInput("harmonic amplitudes must be nonnegative")
        if len(self.path_gain_per_antenna) != N_ANTENNAS:
            raise InvalidInput("one path gain per antenna required")
        if len(self.subcarrier_signature) != N_SUBCARRIERS:
            raise InvalidInput("one signature value per subcarrier required")

    def waveform(self, t: np.ndarray) -> np.ndarray:
        """Unit-variance gait signal sampled at times ``t`` (seconds)."""
        f = self.cadence_hz
        s = np.zeros_like(t)
        for h, a in enumerate(self.harmonic_amps, start=1):
            s += a * np.sin(2 * np.pi * h * f * t + h * self.phase)
        sway = 1.0 + self.torso_limb_ratio * np.sin(2 * np.pi * 0.1 * f * t + 0.5 * self.phase)
        s = s * sway
        s -= s.mean()
        sd = s.std()
        return s / sd if sd > 0 else s


def smooth_signature(rng: SeededRng, order: int = 12) -> np.ndarray:
    """Zero-mean, unit-RMS low-order Fourier curve over subcarrier index."""
    j = np.arange(N_SUBCARRIERS) / N_SUBCARRIERS
    sig = np.zeros(N_SUBCARRIERS)
    for m in range(1, order + 1):
        a, b = rng.normal(size=2)
        sig += a * np.cos(2 * np.pi * m * j) + b * np.sin(2 * np.pi * m * j)
    return sig / np.sqrt(np.mean(sig ** 2))


def random_profile(rng: SeededRng, cadence_hz: float | None = None) -> GaitProfile:
    if cadence_hz is None:
        cadence_hz = float(rng.uniform(low=0.7, high=2.6))
    return GaitProfile(
        cadence_hz=cadence_hz,
        harmonic_amps=(1.0, float(rng.uniform(low=0.15, high=0.7)), float(rng.uniform(low=0.05, high=0.4))),
        torso_limb_ratio=float(rng.uniform(low=0.1, high=0.5)),
        phase=float(rng.uniform(high=2 * np.pi)),
        path_gain_per_antenna=tuple(float(g) for g in rng.uniform(3, low=0.5, high=1.5)),
        subcarrier_signature=tuple(float(v) for v in smooth_signature(rng)),
    )


def place_profile(profile: GaitProfile, rng: SeededRng, cadence_jitter: float = 0.0) -> GaitProfile:
    """Same walker at a fresh random position (new phase, gains, signature)."""
    cadence = profile.cadence_hz * (1.0 + cadence_jitter * float(rng.uniform(low=-1.0, high=1.0)))
    return replace(
        profile,
        cadence_hz=float(np.clip(cadence, 0.5, 3.0)),
        phase=float(rng.uniform(high=2 * np.pi)),
        path_gain_per_antenna=tuple(float(g) for g in rng.uniform(3, low=0.5, high=1.5)),
        subcarrier_signature=tuple(float(v) for v in smooth_signature(rng)),
    )


@dataclass(frozen=True)
class SynthConfig:
    persons: int = 2
    duration_s: float = 20.0
    sample_rate_hz: float = 100.0
    snr_db: float = 30.0  # math.inf disables noise
    multipath_taps: int = 1
    seed: int = 0
    profiles: tuple | None = None  # one GaitProfile per person
    person_ids: tuple | None = None
    scenario_id: str = "synthetic"
    timestamp_jitter_s: float = 0.0
    missing_fraction: float = 0.0

    def __post_init__(self):
        if not 1 <= self.persons <= MAX_PERSONS:
            raise InvalidInput(f"persons must be in 1..{MAX_PERSONS}, got {self.persons}")
        if self.duration_s * self.sample_rate_hz < 256:
            raise InvalidInput("duration_s * sample_rate_hz must be >= 256")
        if self.multipath_taps < 1:
            raise InvalidInput("multipath_taps must be >= 1")
        if self.profiles is not None and len(self.profiles) != self.persons:
            raise InvalidInput("one profile per person required")
        if self.person_ids is not None and len(self.person_ids) != self.persons:
            raise InvalidInput("one person id per person required")


def _multipath(s: np.ndarray, taps: np.ndarray, spacing: int) -> np.ndarray:
    out = s * taps[0]
    for i, h in enumerate(taps[1:], start=1):
        d = i * spacing
        out[d:] += h * s[:-d] if d < s.size else 0.0
    return out


def synthesize(cfg: SynthConfig):
    """Render a synthetic multi-person CSI trial.

    Returns
    -------
    trial : CsiTrial
    ground_truth : ndarray, shape (n, persons)
        The unit-variance gait waveform of each person, in ``person_ids``
        order.
    """
    rng = SeededRng(cfg.seed)
    n = int(round(cfg.duration_s * cfg.sample_rate_hz))
    t = np.arange(n) / cfg.sample_rate_hz
    profiles = cfg.profiles or tuple(random_profile(rng) for _ in range(cfg.persons))
    ids = tuple(cfg.person_ids) if cfg.person_ids is not None else tuple(range(1, cfg.persons + 1))

    truth = np.column_stack([p.waveform(t) for p in profiles])
    clean = np.zeros((n, N_SUBCARRIERS, N_ANTENNAS))
    spacing = max(1, int(round(0.02 * cfg.sample_rate_hz)))
    for idx, prof in enumerate(profiles):
        sig = np.asarray(prof.subcarrier_signature)
        for k, g in enumerate(prof.path_gain_per_antenna):
            taps = np.ones(1)
            if cfg.multipath_taps > 1:
                decay = 0.6 ** np.arange(1, cfg.multipath_taps)
                taps = np.concatenate([[1.0], decay * rng.normal(size=cfg.multipath_taps - 1)])
            s = _multipath(truth[:, idx].copy(), taps, spacing)
            clean[:, :, k] += g * np.outer(s, sig)

    power = float(np.mean(clean ** 2))
    noisy = clean
    if math.isfinite(cfg.snr_db) and power > 0:
        sigma = math.sqrt(power / 10.0 ** (cfg.snr_db / 10.0))
        noisy = clean + sigma * rng.normal(size=clean.shape)
    rms = math.sqrt(float(np.mean(noisy ** 2)))
    offset = max(5.0 * rms, -float(noisy.min()), 1.0)
    amplitudes = noisy + offset

    period_us = 1e6 / cfg.sample_rate_hz
    ts = np.arange(n) * period_us
    if cfg.timestamp_jitter_s > 0:
        jitter = min(cfg.timestamp_jitter_s * 1e6, 0.45 * period_us)
        ts = ts + rng.uniform(n, low=-jitter, high=jitter)
    ts = np.round(ts).astype(np.int64)
    if cfg.missing_fraction > 0:
        drop = rng.uniform((n, N_ANTENNAS)) < cfg.missing_fraction
        drop[0] = drop[-1] = False
        amplitudes[drop[:, None, :].repeat(N_SUBCARRIERS, axis=1)] = np.nan

    trial = CsiTrial(
        timestamps=ts,
        amplitudes=amplitudes,
        person_ids=ids,
        scenario_id=cfg.scenario_id,
        sample_rate_hz=cfg.sample_rate_hz,
    )
    return trial, truth
