"""Multi-person WiFi CSI gait separation, identification and diagnostics."""
from .classifier import TrainedClassifier, compute_gamma, load_model, predict, save_model, train
from .csi_data import CsiTrial, GaitProfile, SynthConfig, load_trial, save_trial, synthesize
from .diagnostics import classification_metrics, isd, isv, isv_isd_ratio, overlap, pdr
from .enumeration import estimate_count
from .features import FEATURE_NAMES, FeatureVector, extract
from .harness import ExperimentConfig, RunResult, emit_report, run_experiment
from .preprocess import NormalizedTrial, preprocess
from .separation import METHODS, SeparationRequest, SeparationResult, align_sources, separate

__all__ = [
    "FEATURE_NAMES",
    "METHODS",
    "CsiTrial",
    "ExperimentConfig",
    "FeatureVector",
    "GaitProfile",
    "NormalizedTrial",
    "RunResult",
    "SeparationRequest",
    "SeparationResult",
    "SynthConfig",
    "TrainedClassifier",
    "align_sources",
    "classification_metrics",
    "compute_gamma",
    "emit_report",
    "estimate_count",
    "extract",
    "isd",
    "isv",
    "isv_isd_ratio",
    "load_model",
    "load_trial",
    "overlap",
    "pdr",
    "predict",
    "preprocess",
    "run_experiment",
    "save_model",
    "save_trial",
    "separate",
    "synthesize",
    "train",
]
