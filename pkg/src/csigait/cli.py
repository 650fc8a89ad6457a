"""Command-line entry point: ``csigait {synth,run,report,diagnose}``.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import harness
from .csi_data import SynthConfig, place_profile, save_trial, synthesize
from .errors import ConfigError, CsiGaitError
from .numerics import SeededRng

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    common.add_argument("--config", type=Path, default=None, help="JSON config file")
    common.add_argument("--out", type=Path, default=None, help="output directory")

    parser = _Parser(prog="csigait", description="Multi-person CSI gait separation and identification")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("synth", parents=[common], help="write synthetic trial files")
    p.add_argument("--trials", type=int, default=4)
    p.add_argument("--persons", type=int, default=None)
    p.add_argument("--snr-db", type=float, default=None)

    sub.add_parser("run", parents=[common], help="run an experiment config")

    p = sub.add_parser("report", parents=[common], help="re-aggregate a saved run_result.json")
    p.add_argument("result", type=Path, nargs="?", default=None)

    p = sub.add_parser("diagnose", parents=[common], help="ISV/ISD/overlap of a labelled feature CSV")
    p.add_argument("features", type=Path)
    p.add_argument("--acc2", type=float, default=None, help="2-person accuracy, for PDR")
    p.add_argument("--acc10", type=float, default=None, help="10-person accuracy, for PDR")
    return parser


def _synth_config(args) -> tuple[SynthConfig, int]:
    base = {}
    if args.config is not None:
        try:
            base = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(base, dict):
            raise ConfigError("synth config must be a JSON object")
    trials = int(base.pop("trials", args.trials))
    known = {f.name for f in fields(SynthConfig)} - {"profiles", "person_ids"}
    extra = set(base) - known
    if extra:
        raise ConfigError(f"unknown synth keys {sorted(extra)}")
    if args.persons is not None:
        base["persons"] = args.persons
    if args.snr_db is not None:
        base["snr_db"] = args.snr_db
    if args.seed is not None:
        base["seed"] = args.seed
    try:
        cfg = SynthConfig(**base)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    return cfg, trials


def cmd_synth(args) -> int:
    cfg, trials = _synth_config(args)
    out = args.out or Path("synth")
    out.mkdir(parents=True, exist_ok=True)
    # a fixed 10-walker population so that ids mean the same person across files
    pop = harness.population(harness.ExperimentConfig(scenarios=[{"name": "synth"}], seed=cfg.seed))
    for t in range(trials):
        rng = SeededRng(cfg.seed).spawn(5, t)
        roster = sorted(int(k) for k in rng.permutation(len(pop))[: cfg.persons])
        profiles = tuple(place_profile(pop[k], rng.spawn(1, j), 0.02) for j, k in enumerate(roster))
        trial_cfg = SynthConfig(**{**{f.name: getattr(cfg, f.name) for f in fields(SynthConfig)},
                                   "seed": int(rng.integers(0, 2 ** 31)), "profiles": profiles,
                                   "person_ids": tuple(k + 1 for k in roster)})
        trial, truth = synthesize(trial_cfg)
        path = out / f"trial_{t:03d}.csv"
        save_trial(trial, path)
        header = ",".join(f"person_{pid}" for pid in trial.person_ids)
        np.savetxt(out / f"trial_{t:03d}.truth.csv", truth, delimiter=",", header=header, comments="", fmt="%.17g")
    print(f"wrote {trials} trials to {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = harness.load_config(args.config) if args.config is not None else harness.default_config()
    if args.seed is not None:
        cfg.seed = args.seed
    out = args.out or Path(cfg.out_dir)
    result = harness.run_experiment(cfg)
    harness.emit_report(result, out)
    print(harness.text_table(result.report))
    print(f"reports written to {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    path = args.result
    if path is None:
        if args.out is None:
            raise ConfigError("report needs a run_result.json path or --out directory")
        path = args.out / "run_result.json"
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    result = harness.RunResult.from_json(text)
    out = args.out or path.parent
    harness.emit_report(result, out)
    print(harness.text_table(result.report))
    return EXIT_OK


def read_feature_csv(path: Path):
    """Rows ``label, f1, f2, ...`` with a header line; returns (features, labels)."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    if len(rows) < 2:
        raise ConfigError(f"{path}: header and at least one row required")
    feats, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            feats.append([float(v) for v in row[1:]])
        except ValueError:
            raise ConfigError(f"{path}: line {lineno}: non-numeric feature") from None
        labels.append(row[0])
    if len({len(f) for f in feats}) != 1 or not feats[0]:
        raise ConfigError(f"{path}: ragged or empty feature rows")
    return np.array(feats), labels


def cmd_diagnose(args) -> int:
    feats, labels = read_feature_csv(args.features)
    d = dg.feature_diagnostics(feats, labels)
    for label, value in d["isv_per_class"].items():
        print(f"ISV[{label}] = {value:.6g}")
    print(f"ISV_mean = {d['isv_mean']:.6g}")
    print(f"ISD = {d['isd']:.6g}")
    print(f"ISV/ISD = {d['ratio']:.6g}")
    print(f"Overlap = {d['overlap']:.1f}")
    if args.acc2 is not None and args.acc10 is not None:
        print(f"PDR = {dg.pdr(args.acc2, args.acc10):.1f}")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        payload = {k: (v if not isinstance(v, float) or math.isfinite(v) else None) for k, v in d.items()}
        (args.out / "diagnostics.json").write_text(json.dumps(payload, indent=1, sort_keys=True, default=str))
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "report": cmd_report, "diagnose": cmd_diagnose}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CsiGaitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
