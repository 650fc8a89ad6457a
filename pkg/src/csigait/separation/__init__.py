"""Blind source separation methods behind a single dispatcher."""
from __future__ import annotations

from ..errors import InvalidInput
from .alignment import align_sources, best_assignment, correlation_matrix
from .base import METHODS, SeparationRequest, SeparationResult, whiten
from .fastica import fastica
from .nmf import nmf
from .pca import pca_separate
from .sobi import sobi
from .tucker import tucker_separate
from .wavelet import wavelet_separate

_DISPATCH = {
    "FastICA": fastica,
    "SOBI": sobi,
    "PCA": pca_separate,
    "NMF": nmf,
    "Wavelet": wavelet_separate,
    "Tensor": tucker_separate,
}


def separate(req: SeparationRequest) -> SeparationResult:
    try:
        fn = _DISPATCH[req.method]
    except KeyError:
        raise InvalidInput(f"unknown method {req.method!r}; choose from {METHODS}") from None
    return fn(req)


__all__ = [
    "METHODS",
    "SeparationRequest",
    "SeparationResult",
    "align_sources",
    "best_assignment",
    "correlation_matrix",
    "fastica",
    "nmf",
    "pca_separate",
    "separate",
    "sobi",
    "tucker_separate",
    "wavelet_separate",
    "whiten",
]
