from .estimators import (
    BootstrapResult,
    PrevalenceParams,
    TestCharacteristics,
    apply_misclassification,
    bootstrap_estimate,
    infection_probabilities,
    ipw_prevalence,
    naive_prevalence,
    rogan_gladen,
    simulate_infections,
)
from .ipf import ipf_weights
from .population import (
    SyntheticPopulation,
    build_synthetic_population,
    generate_base_sample,
    impute_from_margins,
    subsample_biased,
)
from .schema import (
    MISSING,
    Cohort,
    CovariateSchema,
    MarginTable,
    default_margins,
    default_schema,
    dummy_encode,
    read_cohorts,
    write_cohorts,
)
from .simulate import (
    EpochFrame,
    PrevalenceDataset,
    PrevalenceDesign,
    PrevalencePrior,
    build_epoch_frame,
    build_frames,
    simulate_dataset,
)

__all__ = [
    "BootstrapResult",
    "Cohort",
    "CovariateSchema",
    "EpochFrame",
    "MISSING",
    "MarginTable",
    "PrevalenceDataset",
    "PrevalenceDesign",
    "PrevalenceParams",
    "PrevalencePrior",
    "SyntheticPopulation",
    "TestCharacteristics",
    "apply_misclassification",
    "bootstrap_estimate",
    "build_epoch_frame",
    "build_frames",
    "build_synthetic_population",
    "default_margins",
    "default_schema",
    "dummy_encode",
    "generate_base_sample",
    "impute_from_margins",
    "infection_probabilities",
    "ipf_weights",
    "ipw_prevalence",
    "naive_prevalence",
    "read_cohorts",
    "rogan_gladen",
    "simulate_dataset",
    "simulate_infections",
    "subsample_biased",
    "write_cohorts",
]
