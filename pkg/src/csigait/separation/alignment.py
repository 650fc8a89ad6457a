from __future__ import annotations

import itertools

import numpy as np

from ..errors import InvalidInput


def correlation_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pearson correlation between every column of ``a`` and every column of ``b``.

    Zero-variance columns correlate 0 with everything.
    """
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    na = np.linalg.norm(a, axis=0)
    nb = np.linalg.norm(b, axis=0)
    denom = np.outer(na, nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(denom > 0, (a.T @ b) / np.where(denom > 0, denom, 1.0), 0.0)
    return np.clip(c, -1.0, 1.0)


def best_assignment(score: np.ndarray, exhaustive_up_to: int = 6) -> np.ndarray:
    """Row index for every column maximising the summed ``score``.

    ``score`` is ``(rows, cols)`` with ``rows >= cols``. Exhaustive search
    over permutations when ``cols <= exhaustive_up_to``, else greedy best
    match first. Ties keep the lexicographically first assignment.
    """
    rows, cols = score.shape
    if rows < cols:
        raise InvalidInput("need at least as many candidates as targets")
    if cols <= exhaustive_up_to:
        best, best_val = None, -np.inf
        for perm in itertools.permutations(range(rows), cols):
            val = score[list(perm), range(cols)].sum()
            if val > best_val + 1e-15:
                best, best_val = perm, val
        return np.array(best, dtype=int)
    out = -np.ones(cols, dtype=int)
    used_r, used_c = set(), set()
    flat = np.argsort(-score, axis=None, kind="stable")
    for f in flat:
        r, c = divmod(int(f), cols)
        if r in used_r or c in used_c:
            continue
        out[c] = r
        used_r.add(r)
        used_c.add(c)
        if len(used_c) == cols:
            break
    return out


def align_sources(estimated, truth):
    """Resolve permutation and sign of estimated sources against ground truth.

    Returns ``(perm, signs, corr)``: ``estimated[:, perm] * signs`` lines up
    column-for-column with ``truth`` and ``corr`` holds the resulting
    correlations (all in [0, 1]).
    """
    est = np.asarray(estimated, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape or est.ndim != 2:
        raise InvalidInput(f"shape mismatch: {est.shape} vs {tru.shape}")
    c = correlation_matrix(est, tru)
    perm = best_assignment(np.abs(c))
    picked = c[perm, np.arange(tru.shape[1])]
    signs = np.where(picked < 0, -1.0, 1.0)
    return perm, signs, np.abs(picked)
