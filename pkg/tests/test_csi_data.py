import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csigait.csi_data import CsiTrial, GaitProfile, SynthConfig, load_trial, meta_path, save_trial, synthesize
from csigait.errors import FormatError, InvalidInput, ParseError
from csigait.numerics import sym_eig


def small_trial(n=2, ids=(1,)):
    ts = np.arange(n, dtype=np.int64) * 10_000
    amp = np.arange(n * 52 * 3, dtype=float).reshape(n, 52, 3) / 7.0
    return CsiTrial(timestamps=ts, amplitudes=amp, person_ids=ids, scenario_id="t", sample_rate_hz=100.0)


def test_two_row_file(tmp_path):
    path = tmp_path / "t.csv"
    save_trial(small_trial(2), path)
    assert load_trial(path).n == 2


def test_round_trip_bit_exact(tmp_path):
    trial, _ = synthesize(SynthConfig(persons=3, seed=4, duration_s=3, timestamp_jitter_s=0.002))
    path = tmp_path / "r.csv"
    save_trial(trial, path)
    back = load_trial(path)
    assert np.array_equal(back.amplitudes, trial.amplitudes)
    assert np.array_equal(back.timestamps, trial.timestamps)
    assert back.person_ids == trial.person_ids


def test_ten_person_labels_survive(tmp_path):
    ids = tuple(range(10, 20))
    path = tmp_path / "p.csv"
    save_trial(small_trial(3, ids), path)
    assert load_trial(path).person_ids == ids


def test_short_row_is_parse_error(tmp_path):
    path = tmp_path / "bad.csv"
    save_trial(small_trial(3), path)
    lines = path.read_text().splitlines()
    lines[3] = ",".join(lines[3].split(",")[:-1])  # 51 subcarriers
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as err:
        load_trial(path)
    assert err.value.line == 4


def test_non_monotone_timestamps(tmp_path):
    path = tmp_path / "m.csv"
    save_trial(small_trial(3), path)
    lines = path.read_text().splitlines()
    header, body = lines[0], lines[1:]
    body = body[3:6] + body[0:3] + body[6:]
    path.write_text("\n".join([header] + body) + "\n")
    with pytest.raises(FormatError):
        load_trial(path)


def test_missing_sidecar(tmp_path):
    path = tmp_path / "s.csv"
    save_trial(small_trial(2), path)
    meta_path(path).unlink()
    with pytest.raises(FormatError):
        load_trial(path)


def test_empty_trial_cannot_be_saved(tmp_path):
    t = small_trial(2)
    empty = CsiTrial(timestamps=t.timestamps[:0], amplitudes=t.amplitudes[:0], person_ids=(1,))
    with pytest.raises(FormatError):
        save_trial(empty, tmp_path / "e.csv")


def test_64_column_file_is_filtered(tmp_path):
    path = tmp_path / "w.csv"
    rows = ["timestamp_us,antenna," + ",".join(f"s{j}" for j in range(64))]
    for i in range(2):
        for k in range(3):
            rows.append(f"{i * 10000},{k}," + ",".join(str(j + 100 * k) for j in range(64)))
    path.write_text("\n".join(rows) + "\n")
    meta_path(path).write_text('{"scenario_id": "x", "person_ids": [1], "sample_rate_hz": 100}')
    t = load_trial(path)
    assert t.amplitudes.shape == (2, 52, 3)
    assert t.amplitudes[0, 0, 0] == 6.0 and t.amplitudes[0, -1, 0] == 58.0


def test_trial_invariants():
    t = small_trial(2)
    with pytest.raises(FormatError):
        CsiTrial(timestamps=t.timestamps[::-1].copy(), amplitudes=t.amplitudes, person_ids=(1,))
    with pytest.raises(FormatError):
        CsiTrial(timestamps=t.timestamps, amplitudes=-t.amplitudes - 1, person_ids=(1,))
    with pytest.raises(FormatError):
        CsiTrial(timestamps=t.timestamps, amplitudes=t.amplitudes, person_ids=tuple(range(11)))


def test_profile_cadence_bounds():
    with pytest.raises(InvalidInput):
        GaitProfile(cadence_hz=3.5)


def test_persons_out_of_range():
    with pytest.raises(InvalidInput):
        SynthConfig(persons=0)
    with pytest.raises(InvalidInput):
        SynthConfig(persons=11)


def test_single_person_noiseless_is_rank_one():
    trial, _ = synthesize(SynthConfig(persons=1, snr_db=math.inf, seed=2))
    x = trial.amplitudes.mean(axis=2)
    x = x - x.mean(axis=0)
    lam = sym_eig(x.T @ x / x.shape[0]).eigenvalues
    assert lam[1] / lam[0] < 1e-6


def test_two_cadences_visible_on_every_subcarrier():
    profiles = []
    from csigait.csi_data import random_profile
    from csigait.numerics import SeededRng

    for k, f in enumerate((1.0, 1.8)):
        profiles.append(random_profile(SeededRng(k), cadence_hz=f))
    trial, _ = synthesize(SynthConfig(persons=2, snr_db=30, seed=3, profiles=tuple(profiles)))
    n = trial.n
    freqs = np.fft.rfftfreq(n, 0.01)
    for j in (0, 17, 51):
        spec = np.abs(np.fft.rfft(trial.amplitudes[:, j, 0] - trial.amplitudes[:, j, 0].mean())) ** 2
        band = (freqs > 0.5) & (freqs < 3.0)
        top = freqs[band][np.argsort(spec[band])[-12:]]
        assert np.any(np.abs(top - 1.0) < 0.06) and np.any(np.abs(top - 1.8) < 0.06)


def test_ground_truth_peaks_at_cadence():
    trial, truth = synthesize(SynthConfig(persons=3, seed=5))
    freqs = np.fft.rfftfreq(trial.n, 0.01)
    spec = np.abs(np.fft.rfft(truth, axis=0))
    assert np.all(np.isfinite(truth))
    assert truth.shape == (trial.n, 3)
    assert np.allclose(truth.std(axis=0), 1.0, atol=1e-9)
    assert np.all(freqs[np.argmax(spec, axis=0)] >= 0.5)


def test_deterministic():
    a, ta = synthesize(SynthConfig(persons=4, seed=9, multipath_taps=3))
    b, tb = synthesize(SynthConfig(persons=4, seed=9, multipath_taps=3))
    assert np.array_equal(a.amplitudes, b.amplitudes) and np.array_equal(ta, tb)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 10), st.integers(0, 1000), st.sampled_from([-5.0, 10.0, 40.0, math.inf]), st.integers(1, 4))
def test_output_satisfies_trial_invariants(persons, seed, snr, taps):
    trial, truth = synthesize(SynthConfig(persons=persons, seed=seed, snr_db=snr, multipath_taps=taps, duration_s=3))
    assert np.all(np.isfinite(trial.amplitudes)) and np.all(trial.amplitudes >= 0)
    assert np.all(np.diff(trial.timestamps) > 0)
    assert len(trial.person_ids) == persons


def test_distinct_cadences_decorrelate():
    from csigait.csi_data import random_profile
    from csigait.numerics import SeededRng

    t = np.arange(2000) / 100.0
    for seed in range(10):
        a = random_profile(SeededRng(seed), cadence_hz=0.9).waveform(t)
        b = random_profile(SeededRng(seed + 100), cadence_hz=1.2 + 0.1 * (seed % 5)).waveform(t)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.3
