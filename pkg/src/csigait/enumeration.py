"""Person-count estimation from the covariance eigenvalue energy curve."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InvalidInput
from .numerics import sym_eig
from .preprocess import NormalizedTrial

MAX_PIPELINE_COUNT = 10


@dataclass(frozen=True, eq=False)
class CountEstimate:
    p_raw: int
    p_hat: int  # p_raw clamped to [1, 10]
    eigenvalues: np.ndarray
    energy_curve: np.ndarray
    threshold: float
    few_samples: bool = False


def count_from_spectrum(eigenvalues, threshold: float = 0.95) -> tuple[int, np.ndarray]:
    """Smallest k whose leading-k eigenvalue share reaches ``threshold``."""
    lam = np.sort(np.clip(np.asarray(eigenvalues, dtype=float), 0.0, None))[::-1]
    total = lam.sum()
    if total <= 0:
        raise DegenerateInput("all eigenvalues are zero")
    curve = np.cumsum(lam) / total
    curve[-1] = 1.0
    # guard against round-off pushing an exact hit just below the threshold
    k = int(np.argmax(curve >= threshold - 1e-12)) + 1
    return k, curve


def covariance(x: np.ndarray) -> np.ndarray:
    """``(1/n) X^T X`` for an ``(n, m)`` data matrix."""
    x = np.asarray(x, dtype=float)
    c = x.T @ x / x.shape[0]
    return 0.5 * (c + c.T)


def estimate_count(norm: NormalizedTrial | np.ndarray, threshold: float = 0.95, antenna_mode: str = "average") -> CountEstimate:
    """Estimate how many walkers are present.

    ``antenna_mode`` selects how the 3 antennas are reduced to the
    ``(rows, 52)`` matrix whose covariance is decomposed: ``"average"`` or
    ``"stacked"``.
    """
    if not 0 < threshold <= 1:
        raise InvalidInput("threshold must be in (0, 1]")
    if isinstance(norm, NormalizedTrial):
        x = norm.flattened(antenna_mode)
    else:
        x = np.asarray(norm, dtype=float)
        if x.ndim == 3:
            x = x.mean(axis=2) if antenna_mode == "average" else np.concatenate(list(np.moveaxis(x, 2, 0)), axis=0)
    if x.ndim != 2:
        raise InvalidInput("expected an (n, 52) matrix or (n, 52, 3) tensor")
    lam = sym_eig(covariance(x)).eigenvalues
    p_raw, curve = count_from_spectrum(lam, threshold)
    return CountEstimate(
        p_raw=p_raw,
        p_hat=int(min(max(p_raw, 1), MAX_PIPELINE_COUNT)),
        eigenvalues=lam,
        energy_curve=curve,
        threshold=threshold,
        few_samples=x.shape[0] < x.shape[1],
    )
