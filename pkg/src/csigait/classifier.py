"""One-vs-one RBF-kernel SVM trained with an SMO-style dual solver.

Each class pair gets a soft-margin binary machine solved by pairwise
coordinate updates, choosing the maximal-violating pair at every step
(first-order working-set selection, as in LIBSVM). Training samples are put
in a canonical order first, so the model does not depend on input order.
Prediction is a majority vote over the pairwise decision functions, ties
going to the smallest label.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidInput, ParseError

MODEL_MAGIC = "csigait-svm"
MODEL_VERSION = 1
TAU = 1e-12


def rbf_kernel(a, b, gamma: float) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    d2 = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * a @ b.T
    return np.exp(-gamma * np.maximum(d2, 0.0))


def compute_gamma(train_features) -> float:
    """``1 / (d * var)`` with ``var`` the sample variance pooled over all entries."""
    f = np.asarray(train_features, dtype=float)
    if f.ndim != 2 or f.shape[0] < 2:
        raise InvalidInput("need an (N >= 2, d) feature matrix")
    var = float(np.var(f, ddof=1))
    if not var > 0:
        raise InvalidInput("pooled feature variance is zero")
    return 1.0 / (f.shape[1] * var)


@dataclass
class BinarySolution:
    alpha: np.ndarray
    rho: float
    iterations: int
    converged: bool


def smo(K: np.ndarray, y: np.ndarray, C: float = 1.0, tol: float = 1e-3, max_iter: int = 10_000) -> BinarySolution:
    """Solve ``min 1/2 a^T Q a - 1^T a`` s.t. ``0 <= a <= C``, ``y^T a = 0``.

    ``Q = (y y^T) * K`` and ``y`` holds +1/-1. The decision function of the
    solution is ``sum_i a_i y_i K(x_i, x) - rho``.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        up = ((alpha < C) & (y > 0)) | ((alpha > 0) & (y < 0))
        low = ((alpha < C) & (y < 0)) | ((alpha > 0) & (y > 0))
        v = -y * G
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(v[up])])
        j = int(np.flatnonzero(low)[np.argmin(v[low])])
        if v[i] - v[j] < tol:
            converged = True
            break
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(QD[i] + QD[j] + 2.0 * Q[i, j], TAU)
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            quad = max(QD[i] + QD[j] - 2.0 * Q[i, j], TAU)
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0:
                ni, nj = 0.0, total
        G += Q[:, i] * (ni - ai) + Q[:, j] * (nj - aj)
        alpha[i], alpha[j] = ni, nj
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        at_upper = alpha >= C
        ub_mask = (at_upper & (y < 0)) | (~at_upper & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (~at_upper & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2) if np.isfinite(ub + lb) else float(ub if np.isfinite(ub) else lb)
    return BinarySolution(alpha=alpha, rho=rho, iterations=it, converged=converged)


@dataclass
class PairModel:
    positive: object  # label voted for when the decision value is > 0
    negative: object
    support_vectors: np.ndarray  # (n_sv, d)
    coefficients: np.ndarray  # alpha_i * y_i
    bias: float  # decision = sum coef * K + bias

    def decision(self, x: np.ndarray, gamma: float) -> np.ndarray:
        return rbf_kernel(x, self.support_vectors, gamma) @ self.coefficients + self.bias


@dataclass
class TrainedClassifier:
    labels: tuple
    gamma: float
    C: float
    pairs: list = field(default_factory=list)
    feature_mean: np.ndarray | None = None
    feature_std: np.ndarray | None = None
    dim: int = 24

    def _prepare(self, f) -> np.ndarray:
        f = np.atleast_2d(np.asarray(f, dtype=float))
        if f.shape[1] != self.dim:
            raise InvalidInput(f"expected {self.dim} features, got {f.shape[1]}")
        if self.feature_mean is not None:
            f = (f - self.feature_mean) / self.feature_std
        return f

    def votes(self, f) -> np.ndarray:
        """``(N, n_labels)`` vote counts."""
        x = self._prepare(f)
        index = {lab: k for k, lab in enumerate(self.labels)}
        counts = np.zeros((x.shape[0], len(self.labels)), dtype=int)
        for pm in self.pairs:
            dec = pm.decision(x, self.gamma)
            counts[dec > 0, index[pm.positive]] += 1
            counts[dec <= 0, index[pm.negative]] += 1
        return counts

    def predict_many(self, f) -> list:
        counts = self.votes(f)
        # argmax returns the first maximum, i.e. the smallest label
        return [self.labels[int(k)] for k in np.argmax(counts, axis=1)]


def _canonical_order(x: np.ndarray, labels: list) -> np.ndarray:
    keys = [x[:, k] for k in range(x.shape[1] - 1, -1, -1)]
    label_rank = np.array([sorted(set(labels)).index(lab) for lab in labels])
    return np.lexsort(keys + [label_rank])


def train(features, labels, C: float = 1.0, gamma: float | None = None, standardize: bool = False,
          tol: float = 1e-3, max_iter: int = 10_000) -> TrainedClassifier:
    """Fit a one-vs-one RBF SVM on ``(N, d)`` features."""
    x = np.asarray(features, dtype=float)
    # numpy scalars become plain Python values so models serialise cleanly
    labels = [lab.item() if isinstance(lab, np.generic) else lab for lab in labels]
    if x.ndim != 2 or x.shape[0] != len(labels):
        raise InvalidInput("features must be (N, d) with one label per row")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise InvalidInput("need at least two classes")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("features contain non-finite values")
    order = _canonical_order(x, labels)
    x = x[order]
    labels = [labels[k] for k in order]
    mean = std = None
    if standardize:
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        x = (x - mean) / std
    if gamma is None:
        gamma = compute_gamma(x)
    if not gamma > 0:
        raise InvalidInput("gamma must be positive")
    lab_arr = np.array([classes.index(lab) for lab in labels])
    K_full = rbf_kernel(x, x, gamma)
    pairs = []
    for a, b in combinations(range(len(classes)), 2):
        idx = np.flatnonzero((lab_arr == a) | (lab_arr == b))
        y = np.where(lab_arr[idx] == a, 1.0, -1.0)
        sol = smo(K_full[np.ix_(idx, idx)], y, C=C, tol=tol, max_iter=max_iter)
        sv = sol.alpha > 0
        if not sv.any():
            sv[:] = True  # degenerate pair: keep every sample with zero weight
        pairs.append(PairModel(
            positive=classes[a],
            negative=classes[b],
            support_vectors=x[idx][sv],
            coefficients=(sol.alpha * y)[sv],
            bias=-sol.rho,
        ))
    return TrainedClassifier(labels=classes, gamma=float(gamma), C=float(C), pairs=pairs,
                             feature_mean=mean, feature_std=std, dim=x.shape[1])


def predict(model: TrainedClassifier, f):
    """Label and per-label vote counts for one feature vector."""
    values = getattr(f, "values", f)
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise InvalidInput("predict takes a single feature vector")
    counts = model.votes(values[None, :])[0]
    label = model.labels[int(np.argmax(counts))]
    return label, dict(zip(model.labels, map(int, counts)))


# ------------------------------------------------------------ model files

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_model(model: TrainedClassifier, path) -> None:
    lines = [
        f"{MODEL_MAGIC} {MODEL_VERSION}",
        f"gamma {_fmt(model.gamma)}",
        f"C {_fmt(model.C)}",
        f"dim {model.dim}",
        "labels " + json.dumps(list(model.labels)),
    ]
    if model.feature_mean is not None:
        lines.append("mean " + " ".join(map(_fmt, model.feature_mean)))
        lines.append("std " + " ".join(map(_fmt, model.feature_std)))
    lines.append(f"pairs {len(model.pairs)}")
    for pm in model.pairs:
        lines.append(f"pair {json.dumps([pm.positive, pm.negative])} {len(pm.coefficients)} {_fmt(pm.bias)}")
        for c, sv in zip(pm.coefficients, pm.support_vectors):
            lines.append(_fmt(c) + " " + " ".join(map(_fmt, sv)))
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> TrainedClassifier:
    lines = Path(path).read_text().splitlines()
    pos = 0

    def take(key):
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(f"unexpected end of file, wanted {key!r}", line=pos + 1)
        head, _, rest = lines[pos].partition(" ")
        if head != key:
            raise ParseError(f"expected {key!r}, got {head!r}", line=pos + 1)
        pos += 1
        return rest

    try:
        if take(MODEL_MAGIC).strip() != str(MODEL_VERSION):
            raise FormatError("unsupported model version")
        gamma = float(take("gamma"))
        C = float(take("C"))
        dim = int(take("dim"))
        labels = tuple(json.loads(take("labels")))
        mean = std = None
        if pos < len(lines) and lines[pos].startswith("mean "):
            mean = np.array([float(v) for v in take("mean").split()])
            std = np.array([float(v) for v in take("std").split()])
        n_pairs = int(take("pairs"))
        pairs = []
        for _ in range(n_pairs):
            rest = take("pair")
            bracket = rest.index("]") + 1
            pos_lab, neg_lab = json.loads(rest[:bracket])
            count, bias = rest[bracket:].split()
            coefs, svs = [], []
            for _ in range(int(count)):
                if pos >= len(lines):
                    raise ParseError("truncated support vector block", line=pos + 1)
                vals = [float(v) for v in lines[pos].split()]
                if len(vals) != dim + 1:
                    raise ParseError(f"expected {dim + 1} numbers", line=pos + 1)
                coefs.append(vals[0])
                svs.append(vals[1:])
                pos += 1
            pairs.append(PairModel(pos_lab, neg_lab, np.array(svs).reshape(-1, dim), np.array(coefs), float(bias)))
    except (ValueError, json.JSONDecodeError) as exc:
        raise ParseError(str(exc), line=pos + 1) from None
    return TrainedClassifier(labels=labels, gamma=gamma, C=C, pairs=pairs, feature_mean=mean, feature_std=std, dim=dim)
