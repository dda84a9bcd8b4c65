"""Sequential unbiased estimators of Shannon entropy and class number."""

from .dist import (CategoricalDistribution, class_number, entropy, make_uniform, make_zipf,
                   parse_dist_spec)
from .errors import CapExceeded, PreconditionViolated, ValidationError
from .estimators import (CaptureRecord, EstimateRecord, PluginCounts, capture_recapture, evaluate,
                         h1_estimate, h2_estimate, h3_estimate, harmonic, m1_estimate, m2_direct,
                         m2_telescoped, m3_estimate, m4_estimate, m4_from_counts, m4_stopping,
                         plugin_entropy)
from .mc import ExperimentConfig, MonteCarloReport, compare, plugin_bias_experiment, run_replications
from .sampler import ReplayStream, SampleStream, derive_seed

__version__ = "0.1.0"
