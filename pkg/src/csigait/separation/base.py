from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInput, RankDeficient
from ..numerics import sym_eig

METHODS = ("FastICA", "SOBI", "PCA", "NMF", "Wavelet", "Tensor")


@dataclass(frozen=True, eq=False)
class SeparationRequest:
    """Input to one separation call.

    ``x`` is the ``(n, 52)`` antenna-reduced signal; ``tensor`` the full
    ``(n, 52, 3)`` one, required by the Tensor method only. ``options``
    overrides per-method tolerances and iteration limits.
    """

    x: np.ndarray
    p: int
    method: str = "PCA"
    seed: int = 0
    tensor: np.ndarray | None = None
    sample_rate_hz: float = 100.0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        if x.ndim != 2:
            raise InvalidInput(f"x must be (n, m), got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInput("x contains NaN or infinite values")
        if self.tensor is not None:
            t = np.asarray(self.tensor, dtype=float)
            object.__setattr__(self, "tensor", t)
            if t.ndim != 3 or t.shape[0] != x.shape[0]:
                raise InvalidInput("tensor must be (n, m, k) with the same n as x")
            if not np.all(np.isfinite(t)):
                raise InvalidInput("tensor contains NaN or infinite values")
        n, m = x.shape
        if not 1 <= self.p <= min(m, n):
            raise InvalidInput(f"p={self.p} outside 1..min(n, m)={min(m, n)}")

    def opt(self, name, default):
        return self.options.get(name, default)


@dataclass(eq=False)
class SeparationResult:
    sources: np.ndarray  # (n, p)
    method: str
    unmixing: np.ndarray | None = None  # (p, m) when the method defines one
    iterations: int = 0
    converged: bool = True
    objective_trace: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.sources.shape[1]


def whiten(x: np.ndarray, p: int, rank_tol: float = 1e-10):
    """Project centred data on its top ``p`` principal axes with unit variance.

    Returns ``(z, K, mean)`` with ``z = (x - mean) @ K.T`` and
    ``cov(z) = I`` (population normalisation).
    """
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / x.shape[0]
    eig = sym_eig(0.5 * (cov + cov.T))
    lam = eig.eigenvalues
    if lam[0] <= 0 or lam[p - 1] <= rank_tol * lam[0]:
        raise RankDeficient(f"data rank is below the requested {p} sources")
    K = eig.eigenvectors[:, :p].T / np.sqrt(lam[:p])[:, None]
    return xc @ K.T, K, mean
