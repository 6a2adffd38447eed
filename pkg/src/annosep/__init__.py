"""Annotation-informed single-channel audio source separation toolkit.

Decomposes a mixture spectrogram into per-source contributions guided by
user-annotated time-frequency regions. Two solvers are provided: a
convex low-rank formulation (squared misfit plus nuclear-norm penalties,
solved by projected subgradient) and a penalized Itakura-Saito NMF
baseline with multiplicative updates. Reconstruction, metrics, an
experiment harness, a CLI, and an HTTP service for the annotation UI
round out the package.
"""

__version__ = "0.1.0"

from .annotation import (
    AnnotationSet,
    TargetValues,
    annotations_from_json,
    annotations_to_json,
    compute_targets,
    generate_annotations,
)
from .errors import AnnosepError, ConfigError, InputError, NumericalError
from .evaluation import EvalReport, ExperimentConfig, bss_eval, run_experiment
from .lownuc import (
    LownucConfig,
    SolveTrace,
    SourceEstimates,
    nuclear_norm,
    objective,
    project,
    solve,
    subgradient,
)
from .nmf import NmfConfig, NmfFactors, is_divergence, mu_step, nmf_objective, solve_nmf
from .reconstruction import (
    WienerMasks,
    lazy_estimates,
    oracle_estimates,
    synthesize_sources,
    wiener_masks,
)
from .spectral import (
    ComplexSpectrogram,
    MixtureSpectrogram,
    StftParams,
    istft,
    power_spectrogram,
    stft,
)
from .tracks import Track, synthetic_track, track_from_wav_dir

__all__ = [
    "__version__",
    "AnnosepError",
    "ConfigError",
    "InputError",
    "NumericalError",
    "StftParams",
    "ComplexSpectrogram",
    "MixtureSpectrogram",
    "stft",
    "istft",
    "power_spectrogram",
    "AnnotationSet",
    "TargetValues",
    "generate_annotations",
    "compute_targets",
    "annotations_to_json",
    "annotations_from_json",
    "SourceEstimates",
    "LownucConfig",
    "SolveTrace",
    "nuclear_norm",
    "objective",
    "subgradient",
    "project",
    "solve",
    "NmfConfig",
    "NmfFactors",
    "is_divergence",
    "nmf_objective",
    "mu_step",
    "solve_nmf",
    "WienerMasks",
    "wiener_masks",
    "synthesize_sources",
    "lazy_estimates",
    "oracle_estimates",
    "EvalReport",
    "ExperimentConfig",
    "bss_eval",
    "run_experiment",
    "Track",
    "synthetic_track",
    "track_from_wav_dir",
]
