"""Tucker decomposition by higher-order orthogonal iteration (HOOI)."""
from __future__ import annotations

import numpy as np

from ..errors import InvalidInput
from ..numerics import svd, sym_eig
from .base import SeparationRequest, SeparationResult


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    return np.moveaxis(t, mode, 0).reshape(t.shape[mode], -1)


def mode_product(t: np.ndarray, m: np.ndarray, mode: int) -> np.ndarray:
    """``t x_mode m`` for a matrix ``m`` of shape ``(r, t.shape[mode])``."""
    return np.moveaxis(np.tensordot(m, t, axes=([1], [mode])), 0, mode)


def leading_left_vectors(a: np.ndarray, r: int) -> np.ndarray:
    """Top-``r`` left singular vectors; wide matrices go through their Gram matrix."""
    if a.shape[0] < a.shape[1]:
        return sym_eig(a @ a.T).eigenvectors[:, :r]
    U, _, _ = svd(a)
    return U[:, :r]


def reconstruct(core, factors) -> np.ndarray:
    out = core
    for mode, f in enumerate(factors):
        out = mode_product(out, f, mode)
    return out


def hooi(x: np.ndarray, ranks, max_iter: int = 100, tol: float = 1e-6):
    """Rank-``ranks`` Tucker model of a 3-way tensor.

    Modes 2 and 3 start from the truncated HOSVD; mode 1 is never needed
    before its first update. Returns ``(core, factors, fit_trace,
    iterations, converged)`` with one fit ``1 - ||X - X_hat|| / ||X||`` per
    sweep.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 3:
        raise InvalidInput("HOOI expects a 3-way tensor")
    ranks = tuple(int(r) for r in ranks)
    for r, dim in zip(ranks, x.shape):
        if not 1 <= r <= dim:
            raise InvalidInput(f"rank {r} outside 1..{dim}")
    norm_x = np.linalg.norm(x)
    factors = [None] + [leading_left_vectors(unfold(x, k), ranks[k]) for k in (1, 2)]

    def fit_of(fs):
        core = x
        for mode, f in enumerate(fs):
            core = mode_product(core, f.T, mode)
        resid2 = max(norm_x ** 2 - np.linalg.norm(core) ** 2, 0.0)
        return core, (1.0 - np.sqrt(resid2) / norm_x) if norm_x > 0 else 1.0

    trace = []
    core = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        for k in range(3):
            y = x
            for mode in range(3):
                if mode != k:
                    y = mode_product(y, factors[mode].T, mode)
            factors[k] = leading_left_vectors(unfold(y, k), ranks[k])
        core, fit = fit_of(factors)
        trace.append(fit)
        if len(trace) > 1 and trace[-1] - trace[-2] < tol:
            converged = True
            break
    return core, factors, trace, it, converged


def tucker_separate(req: SeparationRequest) -> SeparationResult:
    tensor = req.tensor if req.tensor is not None else req.x[:, :, None]
    tensor = tensor - tensor.mean(axis=0)
    _, m, k = tensor.shape
    ranks = (req.p, min(req.p, m), min(req.p, k))
    core, factors, trace, it, converged = hooi(
        tensor, ranks, max_iter=int(req.opt("max_iter", 100)), tol=float(req.opt("tol", 1e-6))
    )
    return SeparationResult(
        sources=factors[0],
        method="Tensor",
        unmixing=None,
        iterations=it,
        converged=converged,
        objective_trace=trace,
        metadata={"ranks": ranks, "core": core, "factors": factors},
    )
