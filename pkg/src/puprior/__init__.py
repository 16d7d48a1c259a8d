"""Target class-prior estimation from positive-unlabeled source data under label shift."""

from ._backend import BACKEND_NAME
from .baseline_km import KMConfig, KMResult, hull_distance, km2_fit, km2_ls_target_prior, km2_prior
from .bounds import (
    DELTA_MAX,
    BoundReport,
    concentration_radius,
    empirical_bound,
    empirical_bound_from_norm,
    minimal_sample_size,
    population_bound,
)
from .datagen import (
    LabeledDataset,
    PUDataset,
    SyntheticConfig,
    downsample_to_prior,
    gen_synthetic,
    load_csv,
    make_pu_sample,
)
from .errors import (
    DegenerateEmbeddingError,
    InputError,
    InsufficientSampleError,
    InvalidDeltaError,
    NumericalInconsistencyError,
    PluginFailureError,
    PUPriorError,
)
from .estimator import PiSource, PriorEstimate, estimate_target_prior, tcpu_closed_form
from .harness import ExperimentConfig, RunResult, run_experiment
from .kernel import EmbeddingStats, KernelConfig, Sample, SampleTag, embedding_stats

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "DELTA_MAX",
    "BoundReport",
    "DegenerateEmbeddingError",
    "EmbeddingStats",
    "ExperimentConfig",
    "InputError",
    "InsufficientSampleError",
    "InvalidDeltaError",
    "KMConfig",
    "KMResult",
    "KernelConfig",
    "LabeledDataset",
    "NumericalInconsistencyError",
    "PUDataset",
    "PUPriorError",
    "PiSource",
    "PluginFailureError",
    "PriorEstimate",
    "RunResult",
    "Sample",
    "SampleTag",
    "SyntheticConfig",
    "concentration_radius",
    "downsample_to_prior",
    "embedding_stats",
    "empirical_bound",
    "empirical_bound_from_norm",
    "estimate_target_prior",
    "gen_synthetic",
    "hull_distance",
    "km2_fit",
    "km2_ls_target_prior",
    "km2_prior",
    "load_csv",
    "make_pu_sample",
    "minimal_sample_size",
    "population_bound",
    "run_experiment",
    "tcpu_closed_form",
]
