"""Classification scores and the feature-space diagnostics of a pipeline.

* ISV (intra-subject variability): mean distance of a class's feature
  vectors from their centroid.
* ISD (inter-subject distinguishability): mean distance between class
  centroids over ordered pairs.
* PDR (performance degradation rate): relative accuracy change from the
  2-person to the 10-person scenarios, in percent; negative means the
  crowded case did better.
* Overlap: histogram intersection of every class pair on every feature
  dimension (32 shared bins), averaged, in percent. This is a local
  definition; no standard formula exists for it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import InvalidInput

OVERLAP_BINS = 32


def _groups(grouped) -> dict:
    out = {}
    for label, rows in dict(grouped).items():
        arr = np.atleast_2d(np.asarray(rows, dtype=float))
        out[label] = arr
    return out


def group_by_label(features, labels) -> dict:
    """Rows of ``features`` bucketed by label, in first-seen label order."""
    features = np.asarray(features, dtype=float)
    out: dict = {}
    for row, lab in zip(features, labels):
        out.setdefault(lab, []).append(row)
    return {lab: np.array(rows) for lab, rows in out.items()}


def classification_metrics(predictions, truths, average: str = "macro"):
    """``(accuracy, precision, recall, f1)`` as fractions.

    Macro averages run over the classes present in ``truths``; a class that
    is never predicted gets precision 0.
    """
    predictions = list(predictions)
    truths = list(truths)
    if len(predictions) != len(truths):
        raise InvalidInput("predictions and truths differ in length")
    if not truths:
        raise InvalidInput("no samples")
    correct = [p == t for p, t in zip(predictions, truths)]
    accuracy = float(np.mean(correct))
    if average == "micro":
        return accuracy, accuracy, accuracy, accuracy
    if average != "macro":
        raise InvalidInput(f"unknown averaging {average!r}")
    precisions, recalls, f1s = [], [], []
    for c in sorted(set(truths), key=repr):
        tp = sum(1 for p, t in zip(predictions, truths) if p == c and t == c)
        fp = sum(1 for p, t in zip(predictions, truths) if p == c and t != c)
        fn = sum(1 for p, t in zip(predictions, truths) if p != c and t == c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        precisions.append(prec)
        recalls.append(rec)
        f1s.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return accuracy, float(np.mean(precisions)), float(np.mean(recalls)), float(np.mean(f1s))


def isv(grouped) -> dict:
    """Per-class mean Euclidean distance to the class centroid."""
    out = {}
    for label, rows in _groups(grouped).items():
        if rows.shape[0] == 0:
            raise InvalidInput(f"class {label!r} is empty")
        mu = rows.mean(axis=0)
        out[label] = float(np.mean(np.linalg.norm(rows - mu, axis=1)))
    return out


def centroids(grouped) -> np.ndarray:
    return np.array([rows.mean(axis=0) for rows in _groups(grouped).values()])


def isd(class_centroids) -> float:
    """Mean distance between centroids over all ordered pairs ``i != j``."""
    mu = np.atleast_2d(np.asarray(class_centroids, dtype=float))
    c = mu.shape[0]
    if c < 2:
        raise InvalidInput("ISD needs at least two classes")
    d = np.linalg.norm(mu[:, None, :] - mu[None, :, :], axis=2)
    return float(d.sum() / (c * (c - 1)))


def pdr(acc_2person: float, acc_10person: float) -> float:
    """Relative accuracy loss from 2 to 10 persons, in percent."""
    if acc_2person <= 0:
        raise InvalidInput("2-person accuracy must be positive")
    return (acc_2person - acc_10person) / acc_2person * 100.0


def histogram_overlap(a: np.ndarray, b: np.ndarray, bins: int = OVERLAP_BINS) -> float:
    """Intersection of two normalised histograms on their shared range (0..1)."""
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if not hi > lo:
        return 1.0
    edges = np.linspace(lo, hi, bins + 1)
    ha, _ = np.histogram(a, bins=edges)
    hb, _ = np.histogram(b, bins=edges)
    return float(np.minimum(ha / a.size, hb / b.size).sum())


def overlap(grouped, bins: int = OVERLAP_BINS) -> float:
    """Mean pairwise histogram overlap over classes and dimensions, in percent."""
    groups = list(_groups(grouped).values())
    if len(groups) < 2:
        raise InvalidInput("overlap needs at least two classes")
    if any(g.shape[0] < 2 for g in groups):
        raise InvalidInput("overlap needs at least two samples per class")
    dims = groups[0].shape[1]
    vals = [
        histogram_overlap(ga[:, d], gb[:, d], bins)
        for ga, gb in combinations(groups, 2)
        for d in range(dims)
    ]
    return float(np.mean(vals) * 100.0)


@dataclass
class MethodDiagnostics:
    method: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    env_accuracy: dict = field(default_factory=dict)
    isv_per_class: dict = field(default_factory=dict)
    isv_mean: float = float("nan")
    isd: float = float("nan")
    pdr: float = float("nan")
    overlap: float = float("nan")

    @property
    def ratio(self) -> float:
        return isv_isd_ratio(self)


@dataclass
class DiagnosticsReport:
    methods: list = field(default_factory=list)  # MethodDiagnostics, one per method
    per_scenario: list = field(default_factory=list)  # dict rows
    environments: tuple = ()


def isv_isd_ratio(report) -> float:
    """Mean ISV divided by ISD."""
    if isinstance(report, MethodDiagnostics):
        mean_isv, sep = report.isv_mean, report.isd
    elif isinstance(report, dict):
        mean_isv, sep = report["isv_mean"], report["isd"]
    else:
        mean_isv, sep = report
    if not sep > 0:
        raise InvalidInput("ISD must be positive")
    return float(mean_isv / sep)


def feature_diagnostics(features, labels) -> dict:
    """ISV (per class and mean), ISD, ISV/ISD and overlap of a labelled feature set.

    Quantities that need more classes or samples than available come back
    as NaN.
    """
    grouped = group_by_label(features, labels)
    per_class = isv(grouped) if grouped else {}
    out = {
        "isv_per_class": per_class,
        "isv_mean": float(np.mean(list(per_class.values()))) if per_class else float("nan"),
        "isd": float("nan"),
        "ratio": float("nan"),
        "overlap": float("nan"),
    }
    if len(grouped) >= 2:
        out["isd"] = isd(centroids(grouped))
        if out["isd"] > 0:
            out["ratio"] = out["isv_mean"] / out["isd"]
        eligible = {k: v for k, v in grouped.items() if v.shape[0] >= 2}
        if len(eligible) >= 2:
            out["overlap"] = overlap(eligible)
    return out
