"""Acceptance gate: one PASS/FAIL line per criterion, collected in the terminal summary."""
import json
import time

import numpy as np
import pytest
from scipy.stats import norm

from csigait import cli
from csigait.classifier import compute_gamma, rbf_kernel, train
from csigait.diagnostics import centroids, isd, isv, overlap, pdr
from csigait.enumeration import count_from_spectrum, estimate_count
from csigait.harness import default_config, run_experiment
from csigait.numerics import joint_diagonalize, off_energy, svd, sym_eig
from csigait.separation import SeparationRequest, align_sources, separate
from csigait.separation.wavelet import wavedec, waverec

from .test_diagnostics import brute_isd, brute_isv, brute_overlap, random_groups

RESULTS = {}


def record(number, title, ok, detail=""):
    RESULTS[number] = (title, ok, detail)
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
    print(line)
    assert ok, line


def ar1(rng, n, coef):
    e = rng.normal(size=n)
    out = np.zeros(n)
    for i in range(1, n):
        out[i] = coef * out[i - 1] + e[i]
    return out


def orthonormal(rng, n, r, zero_mean=False):
    a = rng.normal(size=(n, r))
    if zero_mean:
        a -= a.mean(axis=0)
    q, _ = np.linalg.qr(a)
    return q


# ------------------------------------------------------------ 1

def separation_cases():
    rng = np.random.default_rng(101)
    n = 5000
    s = rng.uniform(-1, 1, size=(n, 2))
    yield "FastICA", s, SeparationRequest(x=s @ rng.normal(size=(2, 52)), p=2, method="FastICA")

    s = np.column_stack([ar1(rng, n, 0.9), ar1(rng, n, 0.3)])
    yield "SOBI", s, SeparationRequest(x=s @ rng.normal(size=(2, 52)), p=2, method="SOBI")

    w0 = rng.random((400, 2)) * (rng.random((400, 2)) < 0.5)  # sparse, hence identifiable, factors
    h0 = rng.random((2, 52))
    yield "NMF", w0, SeparationRequest(x=w0 @ h0, p=2, method="NMF",
                                       options={"alpha": 0.0, "shift": "none", "max_iter": 5000, "tol": 1e-10})

    u1 = orthonormal(rng, 600, 2, zero_mean=True)
    core = np.zeros((2, 2, 2))
    core[0, 0, 0], core[1, 1, 1] = 3.0, 1.5
    t = np.einsum("abc,ia,jb,kc->ijk", core, u1, orthonormal(rng, 52, 2), orthonormal(rng, 3, 2))
    yield "Tensor", u1, SeparationRequest(x=t.mean(axis=2), p=2, method="Tensor", tensor=t)


def test_criterion_1_oracle_separation():
    details, ok = [], True
    for method, truth, req in separation_cases():
        start = time.perf_counter()
        res = separate(req)
        elapsed = time.perf_counter() - start
        _, _, corr = align_sources(res.sources, truth)
        details.append(f"{method} corr {corr.min():.4f} in {elapsed:.2f}s")
        ok &= bool(corr.min() >= 0.95 and elapsed < 10.0)
    record(1, "oracle separation, aligned correlation >= 0.95 in < 10 s", ok, "; ".join(details))


# ------------------------------------------------------------ 2

def test_criterion_2_numerics():
    rng = np.random.default_rng(202)
    worst_eig = worst_svd = 0.0
    for _ in range(100):
        m, n = (int(v) for v in rng.integers(1, 53, size=2))
        a = rng.normal(size=(m, n))
        u, s, v = svd(a)
        worst_svd = max(worst_svd, np.linalg.norm(a - (u * s) @ v.T) / np.linalg.norm(a))
        sym = a[:, :min(m, n)][:min(m, n)]
        sym = sym + sym.T
        e = sym_eig(sym)
        rec = (e.eigenvectors * e.eigenvalues) @ e.eigenvectors.T
        worst_eig = max(worst_eig, np.linalg.norm(sym - rec) / max(np.linalg.norm(sym), 1e-300))

    monotone, worst_off = True, 0.0
    for _ in range(20):
        k = int(rng.integers(2, 9))
        q = orthonormal(rng, k, k)
        mats = [q @ np.diag(rng.normal(size=k)) @ q.T for _ in range(int(rng.integers(2, 6)))]
        w, info = joint_diagonalize(mats, return_info=True)
        monotone &= bool(np.all(np.diff(info.trace) <= 1e-12 * info.trace[0]))
        worst_off = max(worst_off, off_energy([w @ m @ w.T for m in mats]))
    ok = worst_eig < 1e-6 and worst_svd < 1e-6 and monotone and worst_off < 1e-8
    record(2, "eig/svd reconstruction and joint diagonalisation", ok,
           f"eig {worst_eig:.1e}, svd {worst_svd:.1e}, off-energy {worst_off:.1e}, monotone {monotone}")


# ------------------------------------------------------------ 3

def rank_k_trial(rng, k, n=2000):
    t = np.arange(n) / 100.0
    cadences = np.linspace(0.8, 2.6, k)
    s = np.column_stack([np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi)) for f in cadences])
    rows = orthonormal(rng, 52, k).T * np.sqrt(rng.uniform(0.5, 1.0, size=(k, 1)))
    return s @ rows


def test_criterion_3_enumeration():
    rng = np.random.default_rng(303)
    found = {k: sorted({estimate_count(rank_k_trial(rng, k)).p_hat for _ in range(10)}) for k in (1, 2, 5)}
    flat = count_from_spectrum(np.ones(52))[0]
    ok = all(v == [k] for k, v in found.items()) and flat == 50
    record(3, "noiseless rank-k input gives p_hat = k; flat spectrum gives 50", ok,
           f"p_hat seen {found}, flat {flat}")


# ------------------------------------------------------------ 4

def test_criterion_4_metric_formulas():
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(50):
        g = random_groups(rng)
        for c, rows in isv(g).items():
            worst = max(worst, abs(rows - brute_isv(g[c])))
        mus = [[sum(col) / len(rows) for col in zip(*rows.tolist())] for rows in g.values()]
        worst = max(worst, abs(isd(centroids(g)) - brute_isd(mus)))
        worst = max(worst, abs(overlap(g) - brute_overlap(g)))
        a2, a10 = rng.uniform(0.01, 1, size=2)
        worst = max(worst, abs(pdr(a2, a10) - (a2 - a10) / a2 * 100))
    gen = np.random.default_rng(7)
    gauss = overlap({0: gen.normal(0, 1, (10_000, 1)), 1: gen.normal(2, 1, (10_000, 1))})
    analytic = 2 * norm.cdf(-1.0) * 100
    ok = worst < 1e-12 and abs(gauss - analytic) < 3.0
    record(4, "metric formulas against brute force and the gaussian overlap", ok,
           f"max deviation {worst:.1e}, gaussian overlap {gauss:.1f} vs {analytic:.1f}")


# ------------------------------------------------------------ 5

def test_criterion_5_monotonicity():
    rng = np.random.default_rng(505)
    nmf_ok = hooi_ok = True
    for _ in range(20):
        x = rng.normal(size=(int(rng.integers(60, 200)), 52))
        res = separate(SeparationRequest(x=x, p=int(rng.integers(1, 5)), method="NMF"))
        tr = np.array(res.objective_trace)
        nmf_ok &= bool(np.all(np.diff(tr) <= 1e-10 * tr[0]))
    for _ in range(20):
        t = rng.normal(size=(int(rng.integers(60, 200)), 52, 3))
        res = separate(SeparationRequest(x=t.mean(axis=2), p=int(rng.integers(1, 5)), method="Tensor", tensor=t))
        hooi_ok &= bool(np.all(np.diff(res.objective_trace) >= -1e-12))
    record(5, "NMF objective non-increasing, HOOI fit non-decreasing", nmf_ok and hooi_ok,
           f"NMF {nmf_ok}, HOOI {hooi_ok}")


# ------------------------------------------------------------ 6

def test_criterion_6_classifier():
    x = np.zeros((4, 24))
    x[:, :2] = [[0, 0], [1, 1], [0, 1], [1, 0]]
    xor_ok = train(x, [0, 0, 1, 1]).predict_many(x) == [0, 0, 1, 1]

    rng = np.random.default_rng(606)
    min_eig = np.inf
    for _ in range(20):
        f = rng.normal(size=(20, 24)) * rng.uniform(0.1, 10)
        min_eig = min(min_eig, sym_eig(rbf_kernel(f, f, compute_gamma(f))).eigenvalues[-1])

    scale_ok = True
    for c in (0.01, 0.5, 3.0, 100.0):
        f = rng.normal(size=(60, 24)) + np.repeat(np.arange(3), 20)[:, None] * 0.4
        y = np.repeat(np.arange(3), 20)
        ft = rng.normal(size=(40, 24))
        scale_ok &= train(f, y).predict_many(ft) == train(c * f, y).predict_many(c * ft)
    ok = xor_ok and min_eig >= -1e-8 and scale_ok
    record(6, "XOR separable, kernel PSD, scaling invariant", ok,
           f"XOR {xor_ok}, min eigenvalue {min_eig:.1e}, scaling {scale_ok}")


# ------------------------------------------------------------ 7

@pytest.fixture(scope="module")
def default_run():
    return run_experiment(default_config())


def _scenario_rows(result, name):
    return {r["method"]: r for r in result.report.per_scenario if r["scenario"] == name}


def test_criterion_7a_accuracy_trend(default_run):
    easy = _scenario_rows(default_run, "2p_high_snr")
    hard = _scenario_rows(default_run, "10p_low_snr")
    best = max(easy, key=lambda m: easy[m]["accuracy"])
    best_easy = easy[best]["accuracy"]
    best_hard = max(np.nan_to_num(r["accuracy"]) for r in hard.values())
    ok = best_easy >= 0.8 and best_hard <= best_easy - 0.20
    record("7a", "2-person best accuracy >= 0.8 and 10-person drop >= 20 points", ok,
           f"best 2-person {best} {best_easy:.3f}, best 10-person {best_hard:.3f}")


def test_criterion_7b_ratio_trend(default_run):
    easy = _scenario_rows(default_run, "2p_high_snr")
    hard = _scenario_rows(default_run, "10p_low_snr")
    both = [m for m in easy if np.isfinite(easy[m]["isv_isd_ratio"]) and np.isfinite(hard[m]["isv_isd_ratio"])]
    r_easy = float(np.mean([easy[m]["isv_isd_ratio"] for m in both]))
    r_hard = float(np.mean([hard[m]["isv_isd_ratio"] for m in both]))
    ok = bool(both) and r_hard > r_easy
    record("7b", "mean ISV/ISD ratio grows from 2 to 10 persons", ok,
           f"{r_easy:.3f} -> {r_hard:.3f} over {', '.join(both)}")


# ------------------------------------------------------------ 8

def test_criterion_8_determinism(tmp_path):
    cfg = {
        "scenarios": [{"name": "mini", "persons": 2, "trials": 4, "duration_s": 10.0, "cast": 3}],
        "population": 3,
        "enroll_trials": 2,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    outs = []
    for run in ("a", "b"):
        code = cli.main(["run", "--config", str(path), "--seed", "11", "--out", str(tmp_path / run)])
        assert code == 0
        outs.append((tmp_path / run / "summary.csv").read_bytes())
    record(8, "repeated run gives byte-identical summary.csv", outs[0] == outs[1])


# ------------------------------------------------------------ 9

def test_criterion_9_wavelet_round_trip():
    rng = np.random.default_rng(909)
    worst = 0.0
    for _ in range(20):
        x = rng.normal(size=1024)
        coeffs, length = wavedec(x, levels=4)
        worst = max(worst, float(np.max(np.abs(waverec(coeffs, length) - x))))
    record(9, "4-level db4 analysis/synthesis round trip < 1e-8", worst < 1e-8, f"max error {worst:.1e}")
