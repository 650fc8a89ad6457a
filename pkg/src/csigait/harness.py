"""Experiment orchestration: scenarios, full pipeline per trial, aggregation, reports.

Per trial the stages run in a fixed order: preprocess, count persons,
separate, extract features. Classification and scoring happen afterwards in
:func:`aggregate`, which only needs the per-trial records. A saved
``run_result.json`` can therefore be re-aggregated without re-running the
signal processing.

Source identities
-----------------
Separated sources carry no identity. Training sources are labelled by a
one-to-one nearest-centroid match against each roster member's enrollment
centroid (features of single-person recordings, standardised by the
enrollment spread). Test sources are scored against the ground-truth
waveform they correlate with best when synthetic truth exists, and by the
same centroid match otherwise. Roster members left without a source count
as misclassified.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import classifier as clf
from . import diagnostics as dg
from .csi_data import MAX_PERSONS, SynthConfig, load_trial, place_profile, random_profile, synthesize
from .enumeration import estimate_count
from .errors import ConfigError, CsiGaitError, InvalidInput, IoError
from .features import extract
from .numerics import SeededRng
from .preprocess import preprocess
from .separation import METHODS, SeparationRequest, best_assignment, correlation_matrix, separate

ENROLL = -1  # scenario index of enrollment trials


# ------------------------------------------------------------------ config

@dataclass
class ScenarioConfig:
    name: str
    persons: int = 2
    trials: int = 20
    environment: str = "lab"
    snr_db: float = 20.0
    multipath_taps: int = 1
    duration_s: float = 20.0
    sample_rate_hz: float = 100.0
    data_dir: str | None = None
    cast: int | None = None  # walkers taking part; None means the whole population

    def validate(self):
        if self.data_dir is None:
            if not 1 <= self.persons <= MAX_PERSONS:
                raise ConfigError(f"scenario {self.name!r}: persons must be in 1..{MAX_PERSONS}")
            if self.trials < 4:
                raise ConfigError(f"scenario {self.name!r}: at least 4 trials required")
            if self.duration_s * self.sample_rate_hz < 256:
                raise ConfigError(f"scenario {self.name!r}: fewer than 256 samples per trial")
            if self.cast is not None and self.cast < self.persons:
                raise ConfigError(f"scenario {self.name!r}: cast smaller than persons per trial")


@dataclass
class ExperimentConfig:
    scenarios: list
    methods: tuple = METHODS
    seed: int = 0
    count_mode: str = "estimated"  # or "ground_truth"
    train_fraction: float = 0.7
    out_dir: str = "results"
    population: int = 10
    enroll_trials: int = 3
    enroll_snr_db: float = 30.0
    cadence_jitter: float = 0.02
    classifier_scope: str = "scenario"  # or "global"
    train_on_enrollment: bool = True
    standardize_features: bool = False
    average: str = "macro"
    threshold: float = 0.95
    workers: int = 1

    def __post_init__(self):
        self.scenarios = [s if isinstance(s, ScenarioConfig) else _scenario(s) for s in self.scenarios]
        self.methods = tuple(self.methods)
        self.validate()

    def validate(self):
        if not self.scenarios:
            raise ConfigError("no scenarios configured")
        if not self.methods:
            raise ConfigError("no methods configured")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; choose from {METHODS}")
        if len(set(s.name for s in self.scenarios)) != len(self.scenarios):
            raise ConfigError("scenario names must be unique")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.count_mode not in ("estimated", "ground_truth"):
            raise ConfigError("count_mode must be 'estimated' or 'ground_truth'")
        if self.classifier_scope not in ("scenario", "global"):
            raise ConfigError("classifier_scope must be 'scenario' or 'global'")
        if self.average not in ("macro", "micro"):
            raise ConfigError("average must be 'macro' or 'micro'")
        if not 2 <= self.population <= MAX_PERSONS:
            raise ConfigError(f"population must be in 2..{MAX_PERSONS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for s in self.scenarios:
            s.validate()
            if s.data_dir is None and max(s.persons, s.cast or 0) > self.population:
                raise ConfigError(f"scenario {s.name!r} needs more persons than the population holds")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d


def _scenario(d) -> ScenarioConfig:
    if not isinstance(d, dict):
        raise ConfigError("each scenario must be an object")
    known = {f.name for f in fields(ScenarioConfig)}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown scenario keys {sorted(extra)}")
    if "name" not in d:
        raise ConfigError("scenario without a name")
    return ScenarioConfig(**d)


def config_from_dict(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}")
    if "scenarios" not in d:
        raise ConfigError("config needs a 'scenarios' list")
    try:
        return ExperimentConfig(**d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(d)


def default_config(seed: int = 0) -> ExperimentConfig:
    """Easy, middle and hard regimes.

    The easy regime pairs walkers from a 4-person cast with widely spaced
    cadences at high SNR; the hard one crowds all 10 walkers together at
    low SNR with multipath.
    """
    return ExperimentConfig(
        scenarios=[
            ScenarioConfig(name="2p_high_snr", persons=2, trials=20, environment="lab", snr_db=20.0,
                           multipath_taps=1, cast=4),
            ScenarioConfig(name="5p_mid_snr", persons=5, trials=20, environment="office", snr_db=5.0,
                           multipath_taps=2),
            ScenarioConfig(name="10p_low_snr", persons=10, trials=20, environment="corridor", snr_db=-5.0,
                           multipath_taps=3),
        ],
        seed=seed,
    )


# ------------------------------------------------------------------ per-trial work

@dataclass
class TrialTask:
    scenario: int
    trial: int
    methods: tuple
    count_mode: str
    threshold: float
    synth: SynthConfig | None = None
    path: str | None = None


@dataclass
class MethodRecord:
    p_est: int = 0
    converged: bool = False
    features: list = field(default_factory=list)  # one 24-vector per source
    truth_source: list = field(default_factory=list)  # per roster person: source index or -1
    truth_corr: list = field(default_factory=list)
    error: str = ""


@dataclass
class TrialRecord:
    scenario: int
    trial: int
    persons: list  # roster ids in waveform order
    split: str = "train"
    p_hat: int = 0
    p_raw: int = 0
    has_truth: bool = False
    methods: dict = field(default_factory=dict)  # method -> MethodRecord
    error: str = ""


def canonical_sign(sources: np.ndarray) -> np.ndarray:
    """Flip each column so its skewness is non-negative (ties keep the sign)."""
    s = sources - sources.mean(axis=0)
    skew = np.mean(s ** 3, axis=0)
    return sources * np.where(skew < 0, -1.0, 1.0)


def match_truth(sources: np.ndarray, truth: np.ndarray):
    """Source index (or -1) and absolute correlation for every ground-truth column."""
    c = np.abs(correlation_matrix(sources, truth))
    p, P = c.shape
    if p >= P:
        rows = best_assignment(c, exhaustive_up_to=5)
        return [int(r) for r in rows], [float(c[r, k]) for k, r in enumerate(rows)]
    cols = best_assignment(c.T, exhaustive_up_to=5)  # person per source
    idx = [-1] * P
    corr = [0.0] * P
    for src, person in enumerate(cols):
        idx[int(person)] = src
        corr[int(person)] = float(c[src, person])
    return idx, corr


def _load_truth(path: Path):
    truth_file = path.with_name(path.stem + ".truth.csv")
    if not truth_file.exists():
        return None
    return np.loadtxt(truth_file, delimiter=",", skiprows=1, ndmin=2)


def run_trial(task: TrialTask) -> TrialRecord:
    """Preprocess, count, separate and featurise one trial for every method."""
    rec = TrialRecord(scenario=task.scenario, trial=task.trial, persons=[])
    try:
        if task.synth is not None:
            trial, truth = synthesize(task.synth)
        else:
            trial = load_trial(task.path)
            truth = _load_truth(Path(task.path))
        rec.persons = list(trial.person_ids)
        norm = preprocess(trial)
        if truth is not None and truth.shape != (norm.n, len(rec.persons)):
            truth = None
        rec.has_truth = truth is not None
        count = estimate_count(norm, threshold=task.threshold)
        rec.p_raw, rec.p_hat = int(count.p_raw), int(count.p_hat)
    except (CsiGaitError, ValueError, OSError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    p = len(rec.persons) if task.count_mode == "ground_truth" else rec.p_hat
    x = norm.antenna_mean()
    for method in task.methods:
        mr = MethodRecord(p_est=p)
        try:
            req = SeparationRequest(x=x, p=min(p, x.shape[1], norm.n), method=method, seed=task.trial,
                                    tensor=norm.tensor, sample_rate_hz=norm.sample_rate_hz)
            res = separate(req)
            sources = res.sources if method == "NMF" else canonical_sign(res.sources)
            mr.p_est = int(sources.shape[1])
            mr.converged = bool(res.converged)
            mr.features = [extract(sources[:, k], norm).values.tolist() for k in range(sources.shape[1])]
            if truth is not None:
                mr.truth_source, mr.truth_corr = match_truth(sources, truth)
        except (CsiGaitError, ValueError) as exc:
            mr.error = f"{type(exc).__name__}: {exc}"
            mr.features = []
        rec.methods[method] = mr
    return rec


def population(cfg: ExperimentConfig) -> list:
    """Walker profiles with cadences spread evenly over the gait band."""
    root = SeededRng(cfg.seed).spawn(0)
    cadences = np.linspace(0.75, 2.55, cfg.population)
    return [random_profile(root.spawn(k), cadence_hz=float(c)) for k, c in enumerate(cadences)]


def cast_members(cfg: ExperimentConfig, sc: ScenarioConfig) -> list:
    """Population indices of a scenario's cast, evenly spaced in cadence."""
    size = sc.cast or cfg.population
    return sorted({int(round(v)) for v in np.linspace(0, cfg.population - 1, size)})


def rosters(cfg: ExperimentConfig, scen_idx: int, sc: ScenarioConfig) -> list:
    """Balanced rosters: cast members drawn round-robin from a seeded ordering."""
    cast = cast_members(cfg, sc)
    order = [cast[int(k)] for k in SeededRng(cfg.seed).spawn(1, scen_idx).permutation(len(cast))]
    out = []
    for t in range(sc.trials):
        roster = [order[(t * sc.persons + j) % len(cast)] for j in range(sc.persons)]
        out.append(sorted(roster))
    return out


def split_trials(cfg: ExperimentConfig, scen_idx: int, n_trials: int) -> list:
    """'train' / 'test' per trial from a seeded shuffle; both sides non-empty."""
    order = SeededRng(cfg.seed).spawn(2, scen_idx).permutation(n_trials)
    n_train = min(max(int(round(cfg.train_fraction * n_trials)), 1), n_trials - 1)
    split = ["test"] * n_trials
    for k in order[:n_train]:
        split[int(k)] = "train"
    return split


def _data_files(sc: ScenarioConfig) -> list:
    d = Path(sc.data_dir)
    if not d.is_dir():
        raise ConfigError(f"scenario {sc.name!r}: data_dir {d} is not a directory")
    files = sorted(p for p in d.glob("*.csv") if not p.name.endswith(".truth.csv"))
    if len(files) < 4:
        raise ConfigError(f"scenario {sc.name!r}: need at least 4 trial files in {d}")
    return files


def build_tasks(cfg: ExperimentConfig):
    pop = population(cfg)
    ids = tuple(range(1, cfg.population + 1))
    tasks = []
    for k in range(cfg.population):
        for e in range(cfg.enroll_trials):
            rng = SeededRng(cfg.seed).spawn(3, k, e)
            synth = SynthConfig(persons=1, snr_db=cfg.enroll_snr_db, seed=int(rng.integers(0, 2 ** 31)),
                                profiles=(place_profile(pop[k], rng.spawn(0), cfg.cadence_jitter),),
                                person_ids=(ids[k],), scenario_id="enroll")
            tasks.append(TrialTask(ENROLL, k * cfg.enroll_trials + e, cfg.methods, "ground_truth", cfg.threshold, synth=synth))
    splits = {}
    for s_idx, sc in enumerate(cfg.scenarios):
        if sc.data_dir is not None:
            files = _data_files(sc)
            splits[s_idx] = split_trials(cfg, s_idx, len(files))
            for t, f in enumerate(files):
                tasks.append(TrialTask(s_idx, t, cfg.methods, cfg.count_mode, cfg.threshold, path=str(f)))
            continue
        splits[s_idx] = split_trials(cfg, s_idx, sc.trials)
        for t, roster in enumerate(rosters(cfg, s_idx, sc)):
            rng = SeededRng(cfg.seed).spawn(4, s_idx, t)
            profiles = tuple(place_profile(pop[k], rng.spawn(1, j), cfg.cadence_jitter) for j, k in enumerate(roster))
            synth = SynthConfig(persons=sc.persons, duration_s=sc.duration_s, sample_rate_hz=sc.sample_rate_hz,
                                snr_db=sc.snr_db, multipath_taps=sc.multipath_taps,
                                seed=int(rng.integers(0, 2 ** 31)), profiles=profiles,
                                person_ids=tuple(ids[k] for k in roster), scenario_id=sc.name)
            tasks.append(TrialTask(s_idx, t, cfg.methods, cfg.count_mode, cfg.threshold, synth=synth))
    return tasks, splits


# ------------------------------------------------------------------ aggregation

@dataclass
class RunResult:
    config: ExperimentConfig
    records: list  # TrialRecord, sorted by (scenario, trial)
    report: dg.DiagnosticsReport | None = None
    units: list = field(default_factory=list)  # per (scenario, method, trial, person) outcome

    def to_json(self) -> str:
        payload = {
            "format": "csigait-run",
            "version": 1,
            "config": self.config.to_dict(),
            "records": [asdict(r) for r in self.records],
        }
        return json.dumps(payload, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunResult":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid run result: {exc}") from None
        if not isinstance(d, dict) or d.get("format") != "csigait-run":
            raise ConfigError("not a csigait run result")
        cfg = config_from_dict(d["config"])
        records = []
        for r in d["records"]:
            methods = {m: MethodRecord(**mr) for m, mr in r.pop("methods").items()}
            records.append(TrialRecord(methods=methods, **r))
        result = cls(config=cfg, records=records)
        aggregate(result)
        return result


class _Scaler:
    def __init__(self, rows: np.ndarray):
        self.mean = rows.mean(axis=0)
        sd = rows.std(axis=0)
        self.std = np.where(sd > 0, sd, 1.0)

    def __call__(self, rows) -> np.ndarray:
        return (np.asarray(rows, dtype=float) - self.mean) / self.std


def centroid_labels(features: np.ndarray, roster: list, refs: dict, scaler: _Scaler) -> dict:
    """One-to-one nearest-centroid labelling: source index -> person id."""
    cand = [pid for pid in roster if pid in refs]
    if not cand or features.shape[0] == 0:
        return {}
    f = scaler(features)
    mu = scaler(np.array([refs[pid] for pid in cand]))
    dist = np.linalg.norm(f[:, None, :] - mu[None, :, :], axis=2)  # (sources, persons)
    if f.shape[0] >= len(cand):
        rows = best_assignment(-dist, exhaustive_up_to=5)
        return {int(r): cand[k] for k, r in enumerate(rows)}
    cols = best_assignment(-dist.T, exhaustive_up_to=5)
    return {src: cand[int(k)] for src, k in enumerate(cols)}


def aggregate(result: RunResult) -> RunResult:
    """Train classifiers, score the test sources and fill the diagnostics report."""
    cfg = result.config
    recs = result.records
    enroll = [r for r in recs if r.scenario == ENROLL and not r.error]
    trials = [r for r in recs if r.scenario != ENROLL]
    envs = tuple(sorted({sc.environment for sc in cfg.scenarios}))
    report = dg.DiagnosticsReport(environments=envs)
    units = []

    for method in cfg.methods:
        ref_rows, ref_labels = [], []
        for r in enroll:
            mr = r.methods.get(method)
            if mr is not None and not mr.error and mr.features:
                ref_rows.append(mr.features[0])
                ref_labels.append(r.persons[0])
        refs = {}
        scaler = None
        if ref_rows:
            grouped = dg.group_by_label(ref_rows, ref_labels)
            refs = {pid: rows.mean(axis=0) for pid, rows in grouped.items()}
            scaler = _Scaler(np.array(ref_rows))

        # training rows per classifier scope
        train_sets: dict = {}
        for r in trials:
            if r.error or r.split != "train":
                continue
            mr = r.methods[method]
            if mr.error or not mr.features:
                continue
            feats = np.array(mr.features)
            recorded = cfg.scenarios[r.scenario].data_dir is not None
            # enrollment walkers are synthetic, so recorded trials use their own truth when present
            use_refs = scaler is not None and not (recorded and r.has_truth)
            labels = centroid_labels(feats, r.persons, refs, scaler) if use_refs else {}
            if not labels and r.has_truth:
                labels = {src: r.persons[k] for k, src in enumerate(mr.truth_source) if src >= 0}
            key = r.scenario if cfg.classifier_scope == "scenario" else 0
            rows, labs = train_sets.setdefault(key, ([], []))
            for src, pid in sorted(labels.items()):
                rows.append(feats[src])
                labs.append(pid)
        models = {}
        scope_keys = range(len(cfg.scenarios)) if cfg.classifier_scope == "scenario" else [0]
        for key in scope_keys:
            rows, labs = train_sets.get(key, ([], []))
            rows, labs = list(rows), list(labs)
            if cfg.train_on_enrollment:
                # a per-scenario classifier only knows the walkers seen in that scenario
                seen = {pid for r in trials if cfg.scenarios[r.scenario].data_dir is None
                        and (cfg.classifier_scope == "global" or r.scenario == key) for pid in r.persons}
                for row, lab in zip(ref_rows, ref_labels):
                    if lab in seen:
                        rows.append(row)
                        labs.append(lab)
            try:
                models[key] = clf.train(np.array(rows).reshape(len(rows), -1), labs,
                                        standardize=cfg.standardize_features)
            except InvalidInput:
                models[key] = None

        # scoring
        diag_rows = {s: ([], []) for s in range(len(cfg.scenarios))}
        for r in trials:
            mr = r.methods.get(method) if not r.error else None
            if mr is not None and not mr.error and mr.features and r.has_truth:
                for k, src in enumerate(mr.truth_source):
                    if src >= 0:
                        diag_rows[r.scenario][0].append(mr.features[src])
                        diag_rows[r.scenario][1].append(r.persons[k])
            if r.split != "test":
                continue
            key = r.scenario if cfg.classifier_scope == "scenario" else 0
            model = models.get(key)
            preds = [None] * len(r.persons)
            if mr is not None and not mr.error and mr.features and model is not None:
                labels = model.predict_many(np.array(mr.features))
                if r.has_truth:
                    owner = mr.truth_source
                else:
                    mapping = centroid_labels(np.array(mr.features), r.persons, refs, scaler) if scaler else {}
                    owner = [next((s for s, pid in mapping.items() if pid == person), -1) for person in r.persons]
                preds = [labels[src] if src >= 0 else None for src in owner]
            for person, pred in zip(r.persons, preds):
                units.append({"scenario": r.scenario, "method": method, "trial": r.trial,
                              "truth": person, "pred": pred})

        mu = [u for u in units if u["method"] == method]
        if not mu:
            raise InvalidInput("no test units to score")
        acc, prec, rec, f1 = dg.classification_metrics([u["pred"] for u in mu], [u["truth"] for u in mu], cfg.average)
        env_acc = {}
        for env in envs:
            sel = [u for u in mu if cfg.scenarios[u["scenario"]].environment == env]
            env_acc[env] = float(np.mean([u["pred"] == u["truth"] for u in sel])) if sel else float("nan")
        all_rows = [row for s in diag_rows.values() for row in s[0]]
        all_labs = [lab for s in diag_rows.values() for lab in s[1]]
        fd = dg.feature_diagnostics(all_rows, all_labs) if all_rows else dg.feature_diagnostics(np.zeros((0, 24)), [])
        by_persons = {}
        for u in mu:
            by_persons.setdefault(cfg.scenarios[u["scenario"]].persons, []).append(u["pred"] == u["truth"])
        pdr = float("nan")
        if 2 in by_persons and 10 in by_persons and np.mean(by_persons[2]) > 0:
            pdr = dg.pdr(float(np.mean(by_persons[2])), float(np.mean(by_persons[10])))
        report.methods.append(dg.MethodDiagnostics(
            method=method, accuracy=acc, precision=prec, recall=rec, f1=f1, env_accuracy=env_acc,
            isv_per_class=fd["isv_per_class"], isv_mean=fd["isv_mean"], isd=fd["isd"], pdr=pdr,
            overlap=fd["overlap"],
        ))
        for s_idx, sc in enumerate(cfg.scenarios):
            su = [u for u in mu if u["scenario"] == s_idx]
            srecs = [r for r in trials if r.scenario == s_idx]
            rows, labs = diag_rows[s_idx]
            sd = dg.feature_diagnostics(rows, labs) if rows else None
            method_recs = [r.methods.get(method) for r in srecs if not r.error]
            report.per_scenario.append({
                "scenario": sc.name,
                "environment": sc.environment,
                "persons": sc.persons,
                "snr_db": sc.snr_db,
                "method": method,
                "accuracy": float(np.mean([u["pred"] == u["truth"] for u in su])) if su else float("nan"),
                "test_units": len(su),
                "count_correct": float(np.mean([r.p_hat == len(r.persons) for r in srecs if not r.error])) if srecs else float("nan"),
                "converged": float(np.mean([m.converged for m in method_recs if m is not None])) if method_recs else float("nan"),
                "errors": sum(1 for r in srecs if r.error or r.methods.get(method) is None or r.methods[method].error),
                "isv": sd["isv_mean"] if sd else float("nan"),
                "isd": sd["isd"] if sd else float("nan"),
                "isv_isd_ratio": sd["ratio"] if sd else float("nan"),
                "overlap": sd["overlap"] if sd else float("nan"),
            })
    result.report = report
    result.units = units
    return result


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    tasks, splits = build_tasks(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(run_trial, tasks))
    else:
        records = [run_trial(t) for t in tasks]
    for r in records:
        if r.scenario != ENROLL:
            r.split = splits[r.scenario][r.trial]
    records.sort(key=lambda r: (r.scenario, r.trial))
    return aggregate(RunResult(config=cfg, records=records))


# ------------------------------------------------------------------ reports

def _pct(v: float) -> str:
    return "nan" if not math.isfinite(v) else f"{100.0 * v:.1f}"


def _num(v: float, spec: str) -> str:
    return "nan" if not math.isfinite(v) else format(v, spec)


def summary_header(envs) -> list:
    return ["Method", "Acc", "Prec", "Rec", "F1"] + [f"Acc_{e}" for e in envs] + ["ISV", "ISD", "PDR", "Overlap"]


def summary_rows(report: dg.DiagnosticsReport) -> list:
    rows = []
    for m in report.methods:
        rows.append(
            [m.method, _pct(m.accuracy), _pct(m.precision), _pct(m.recall), _pct(m.f1)]
            + [_pct(m.env_accuracy.get(e, float("nan"))) for e in report.environments]
            + [_num(m.isv_mean, ".6g"), _num(m.isd, ".6g"), _num(m.pdr, ".1f"), _num(m.overlap, ".1f")]
        )
    return rows


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


PER_SCENARIO_COLUMNS = ("scenario", "environment", "persons", "snr_db", "method", "accuracy", "test_units",
                        "count_correct", "converged", "errors", "isv", "isd", "isv_isd_ratio", "overlap")


def text_table(report: dg.DiagnosticsReport) -> str:
    header = summary_header(report.environments)
    rows = summary_rows(report)
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    lines = ["  ".join(str(c).rjust(w) for c, w in zip(r, widths)) for r in [header] + rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def emit_report(result: RunResult, out_dir) -> dict:
    """Write ``summary.csv``, ``per_scenario.csv``, plot data and the run record."""
    report = result.report
    if report is None or not report.methods:
        raise InvalidInput("nothing to report: empty method set")
    out = Path(out_dir)

    scen_rows = []
    for row in report.per_scenario:
        scen_rows.append([
            _num(v, ".6g") if isinstance(v, float) else v for v in (row[c] for c in PER_SCENARIO_COLUMNS)
        ])
    by_key: dict = {}
    for row in report.per_scenario:
        by_key.setdefault((row["method"], row["persons"]), []).append(row["accuracy"])
    plot_rows = [[m, p, _num(float(np.nanmean(v)) if np.isfinite(v).any() else float("nan"), ".6g")]
                 for (m, p), v in sorted(by_key.items(), key=lambda kv: (kv[0][0], kv[0][1]))]

    texts = {
        "summary": ("summary.csv", _csv_text(summary_header(report.environments), summary_rows(report))),
        "per_scenario": ("per_scenario.csv", _csv_text(PER_SCENARIO_COLUMNS, scen_rows)),
        "plot": ("plot_accuracy_vs_persons.csv", _csv_text(["method", "persons", "accuracy"], plot_rows)),
        "run_result": ("run_result.json", result.to_json()),
    }
    paths = {}
    try:
        out.mkdir(parents=True, exist_ok=True)
        for key, (name, text) in texts.items():
            paths[key] = out / name
            paths[key].write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write reports to {out}: {exc.strerror or exc}") from None
    return paths


def read_summary(path) -> list:
    """Parse a ``summary.csv`` back into dicts of floats (Method stays a string)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (v if k == "Method" else float(v)) for k, v in row.items()} for row in rows]
