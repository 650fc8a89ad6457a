from __future__ import annotations

from ..numerics import sym_eig
from .base import SeparationRequest, SeparationResult


def pca_separate(req: SeparationRequest) -> SeparationResult:
    """Top-``p`` principal component scores of the centred input."""
    x = req.x
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / x.shape[0]
    eig = sym_eig(0.5 * (cov + cov.T))
    u = eig.eigenvectors[:, : req.p]
    lam = eig.eigenvalues
    total = lam.clip(min=0).sum()
    ratios = lam[: req.p] / total if total > 0 else lam[: req.p] * 0.0
    return SeparationResult(
        sources=xc @ u,
        method="PCA",
        unmixing=u.T,
        iterations=eig.sweeps,
        converged=True,
        objective_trace=[float(v) for v in lam[: req.p]],
        metadata={"explained_variance_ratio": ratios, "eigenvalues": lam, "mean": mean},
    )
