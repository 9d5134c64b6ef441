"""Adaptive robust confidence intervals for the null location in Efron's
Gaussian two-groups model, certified through empirical characteristic
functions.

Layout: `model` (data-generating law, exact CFs, seeded sampling), `ecf`
(empirical CF, frequency grids, concentration radii), `certificates`
(residuals, slacks, PSD checks, gap bounds), `pilot` (crude location/variance
estimates and grids), `ci` (the two interval procedures), `hard_instances`
(lower-bound fixtures and moment oracles), `harness` (Monte-Carlo
experiments), `cli`/`service` (entry points).
"""

from .certificates import (
    CertificateError,
    CertificateMargins,
    ExponentOverflowError,
    cosine_acceptance,
    disk_distance,
    order1_margin,
    order2_margin,
    order3_residuals,
    quadratic_gap_lb,
    quartic_gap_check,
    slack_known,
    slack_unknown,
    toeplitz_psd_check,
    upsilon_known,
    upsilon_unknown,
)
from .ci import (
    CertificateReport,
    CIOutput,
    certify_candidate,
    ci_known_variance,
    ci_output_to_dict,
    ci_unknown_variance,
)
from .ecf import (
    EmpiricalCF,
    FrequencyGrid,
    GridError,
    concentration_radius,
    ecf_eval,
    grid_known,
    grid_unknown,
)
from .hard_instances import (
    DiscretePrior,
    HardInstanceError,
    chi2_moment_bound,
    chi2_quadrature,
    gaussian_raw_moments,
    hankel_dets,
    matching_priors_known,
    prior_moments,
    prior_to_adversary,
    two_point_instance_unknown,
)
from .harness import (
    CalibrationTargets,
    ExperimentConfig,
    ExperimentResult,
    HarnessError,
    calibrate_constants,
    indistinguishability_probe,
    run_experiment,
    write_results_csv,
)
from .interval import Interval
from .model import (
    Adversary,
    DiscreteAtoms,
    EfronModel,
    GaussianMixture,
    ModelError,
    PointMass,
    SampleSet,
    SeedProvenance,
    adversary_cf,
    population_cf,
    sample,
)
from .pilot import (
    ConstantsError,
    PilotBundle,
    PilotConstants,
    PilotError,
    blockwise_variance,
    median_constant,
    pilot_bundle,
    pilot_mean,
    pilot_variance,
    sample_median,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "Adversary",
    "DiscreteAtoms",
    "EfronModel",
    "GaussianMixture",
    "ModelError",
    "PointMass",
    "SampleSet",
    "SeedProvenance",
    "adversary_cf",
    "population_cf",
    "sample",
    # ecf
    "EmpiricalCF",
    "FrequencyGrid",
    "GridError",
    "concentration_radius",
    "ecf_eval",
    "grid_known",
    "grid_unknown",
    # certificates
    "CertificateError",
    "CertificateMargins",
    "ExponentOverflowError",
    "cosine_acceptance",
    "disk_distance",
    "order1_margin",
    "order2_margin",
    "order3_residuals",
    "quadratic_gap_lb",
    "quartic_gap_check",
    "slack_known",
    "slack_unknown",
    "toeplitz_psd_check",
    "upsilon_known",
    "upsilon_unknown",
    # pilot
    "ConstantsError",
    "PilotBundle",
    "PilotConstants",
    "PilotError",
    "blockwise_variance",
    "median_constant",
    "pilot_bundle",
    "pilot_mean",
    "pilot_variance",
    "sample_median",
    # ci
    "Interval",
    "CertificateReport",
    "CIOutput",
    "certify_candidate",
    "ci_known_variance",
    "ci_output_to_dict",
    "ci_unknown_variance",
    # hard instances
    "DiscretePrior",
    "HardInstanceError",
    "chi2_moment_bound",
    "chi2_quadrature",
    "gaussian_raw_moments",
    "hankel_dets",
    "matching_priors_known",
    "prior_moments",
    "prior_to_adversary",
    "two_point_instance_unknown",
    # harness
    "CalibrationTargets",
    "ExperimentConfig",
    "ExperimentResult",
    "HarnessError",
    "calibrate_constants",
    "indistinguishability_probe",
    "run_experiment",
    "write_results_csv",
]
