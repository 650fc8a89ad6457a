"""Sparse NMF by multiplicative updates with NNDSVDa initialisation."""
from __future__ import annotations

import numpy as np

from ..errors import InvalidInput
from ..numerics import svd
from .base import SeparationRequest, SeparationResult

EPS = 1e-12


def nndsvd(x: np.ndarray, p: int, fill: str = "mean"):
    """NNDSVD initial factors ``W (n, p)`` and ``H (p, m)`` for ``x >= 0``.

    With ``fill="mean"`` zero entries are replaced by the mean of ``x``
    (the NNDSVDa variant).
    """
    U, s, V = svd(x)
    n, m = x.shape
    W = np.zeros((n, p))
    H = np.zeros((p, m))
    W[:, 0] = np.sqrt(s[0]) * np.abs(U[:, 0])
    H[0, :] = np.sqrt(s[0]) * np.abs(V[:, 0])
    for j in range(1, p):
        u, v = U[:, j], V[:, j]
        up, un = np.maximum(u, 0), np.maximum(-u, 0)
        vp, vn = np.maximum(v, 0), np.maximum(-v, 0)
        nup, nun = np.linalg.norm(up), np.linalg.norm(un)
        nvp, nvn = np.linalg.norm(vp), np.linalg.norm(vn)
        mp, mn = nup * nvp, nun * nvn
        if mp >= mn:
            uu, vv, sigma = (up / nup if nup else up), (vp / nvp if nvp else vp), mp
        else:
            uu, vv, sigma = (un / nun if nun else un), (vn / nvn if nvn else vn), mn
        lbd = np.sqrt(s[j] * sigma)
        W[:, j] = lbd * uu
        H[j, :] = lbd * vv
    if fill == "mean":
        avg = x.mean()
        W[W == 0] = avg
        H[H == 0] = avg
    return W, H


def objective(x, W, H, alpha) -> float:
    r = x - W @ H
    return float(np.sum(r * r) + alpha * (W.sum() + H.sum()))


def multiplicative_nmf(x, W, H, alpha=0.1, max_iter=500, tol=1e-5):
    """Lee-Seung updates for ``||X - WH||_F^2 + alpha (|W|_1 + |H|_1)``.

    Returns ``(W, H, trace, iterations, converged)``; ``trace`` holds the
    objective before the first update and after each one.
    """
    half = 0.5 * alpha
    trace = [objective(x, W, H, alpha)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        H = H * (W.T @ x) / (W.T @ W @ H + half + EPS)
        W = W * (x @ H.T) / (W @ (H @ H.T) + half + EPS)
        trace.append(objective(x, W, H, alpha))
        prev, cur = trace[-2], trace[-1]
        if abs(prev - cur) <= tol * max(abs(prev), EPS):
            converged = True
            break
    return W, H, trace, it, converged


def nmf(req: SeparationRequest) -> SeparationResult:
    alpha = float(req.opt("alpha", 0.1))
    shift = req.opt("shift", "global_min")
    x = req.x
    if shift == "global_min":
        offset = float(x.min())
        xp = x - offset
    elif shift == "none":
        offset = 0.0
        xp = x
    else:
        raise InvalidInput(f"unknown NMF shift mode {shift!r}")
    if xp.min() < 0:
        raise InvalidInput("NMF input has negative entries; use shift='global_min'")
    W0, H0 = req.opt("init", None) or nndsvd(xp, req.p)
    W, H, trace, it, converged = multiplicative_nmf(
        xp,
        np.array(W0, dtype=float),
        np.array(H0, dtype=float),
        alpha=alpha,
        max_iter=int(req.opt("max_iter", 500)),
        tol=float(req.opt("tol", 1e-5)),
    )
    return SeparationResult(
        sources=W,
        method="NMF",
        unmixing=None,
        iterations=it,
        converged=converged,
        objective_trace=trace,
        metadata={"basis": H, "alpha": alpha, "offset": offset, "shift": shift},
    )
