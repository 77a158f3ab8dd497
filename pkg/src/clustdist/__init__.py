"""Distances between cluster distributions, elliptical or not.

Core pieces: exact and Monte Carlo distance measures between cluster models
(Mahalanobis, Hellinger, Jensen-Shannon variants, Wasserstein), empirical
label-based indices (average between, separation index, ARI), a Gaussian
mixture EM fitter, and simulation scenario runners.
"""

from .distributions import (ClusterModel, GaussianParams, GHParams, bessel_k,
                            gig_mean, gig_sample, log_bessel_k)
from .divergences import (DivergenceValue, EstimatorSettings, bhattacharyya_mc,
                          hellinger, jsd_extended, jsd_plugin, mahalanobis)
from .indices import (LabeledDataset, RecoveryBand, adjusted_rand, average_between,
                      recovery_band, scale_columns, separation_index)
from .mixture import (FitResult, GaussianMixture, GaussianMixtureEM, fit_gmm,
                      information_criteria, map_assign, n_free_parameters)
from .scenarios import (ScenarioConfig, ScenarioResult, run_scenario,
                        scenario1_models, scenario2_models, scenario3_models)
from .transport import PointCloud, TransportPlan, wasserstein, wasserstein_between_models

__version__ = "0.1.0"

__all__ = [
    "ClusterModel", "GaussianParams", "GHParams",
    "bessel_k", "log_bessel_k", "gig_sample", "gig_mean",
    "DivergenceValue", "EstimatorSettings", "bhattacharyya_mc", "hellinger",
    "jsd_extended", "jsd_plugin", "mahalanobis",
    "LabeledDataset", "RecoveryBand", "adjusted_rand", "average_between",
    "recovery_band", "scale_columns", "separation_index",
    "FitResult", "GaussianMixture", "GaussianMixtureEM", "fit_gmm",
    "information_criteria", "map_assign", "n_free_parameters",
    "ScenarioConfig", "ScenarioResult", "run_scenario",
    "scenario1_models", "scenario2_models", "scenario3_models",
    "PointCloud", "TransportPlan", "wasserstein", "wasserstein_between_models",
]
