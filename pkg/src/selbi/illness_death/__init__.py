from .metrics import cumulative_hazard_curve, mean_covariates, nrmse_hazard
from .model import (
    PARAM_NAMES,
    TRANSITIONS,
    IdmParams,
    IdmPrior,
    IdmSubject,
    Trajectory,
    cumulative_hazard,
    hazard,
    simulate_trajectory,
    trajectory_from_uniforms,
)
from .observe import (
    IdmRecord,
    VisitConfig,
    apply_visit_censoring,
    censor_with_visits,
    draw_visits,
)
from .simulate import (
    RECORD_COLUMNS,
    IdmCohort,
    IdmDesign,
    IdmRecordBatch,
    build_cohorts,
    generate_cohort,
    read_records,
    simulate_full_data_dataset,
    simulate_idm_dataset,
    write_records,
)

__all__ = [
    "IdmCohort",
    "IdmDesign",
    "IdmParams",
    "IdmPrior",
    "IdmRecord",
    "IdmRecordBatch",
    "IdmSubject",
    "PARAM_NAMES",
    "RECORD_COLUMNS",
    "TRANSITIONS",
    "Trajectory",
    "VisitConfig",
    "apply_visit_censoring",
    "build_cohorts",
    "censor_with_visits",
    "cumulative_hazard",
    "cumulative_hazard_curve",
    "draw_visits",
    "generate_cohort",
    "hazard",
    "mean_covariates",
    "nrmse_hazard",
    "read_records",
    "simulate_full_data_dataset",
    "simulate_idm_dataset",
    "simulate_trajectory",
    "trajectory_from_uniforms",
    "write_records",
]
