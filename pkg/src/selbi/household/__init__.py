from .config import (
    ADULT,
    CHILD,
    INFANT,
    MAX_HOUSEHOLD,
    PARAM_NAMES,
    SCHEMES,
    HouseholdParams,
    HouseholdPrior,
    Roster,
    VariantConfig,
    age_band,
    alpha_variant,
    generate_rosters,
    get_variant,
    omicron_variant,
)
from .encode import (
    N_FEATURES,
    decode_dataset,
    encode_dataset,
    read_dataset,
    write_dataset,
)
from .sim import (
    CHILD_AGE_LIMIT,
    DATE_SHIFT,
    FOLLOW_UP_OFFSETS,
    HORIZON_DAYS,
    MISSING_DATE,
    REPLICATES,
    HouseholdRecord,
    HouseholdState,
    RawBatch,
    StudyDataset,
    TestLog,
    first_positive_fraction_under_18,
    infection_hazard,
    select_study,
    simulate_raw_batch,
    simulate_study,
    step_day,
    testing_process,
)

__all__ = [
    "ADULT",
    "CHILD",
    "CHILD_AGE_LIMIT",
    "DATE_SHIFT",
    "FOLLOW_UP_OFFSETS",
    "HORIZON_DAYS",
    "INFANT",
    "MAX_HOUSEHOLD",
    "MISSING_DATE",
    "N_FEATURES",
    "PARAM_NAMES",
    "REPLICATES",
    "SCHEMES",
    "HouseholdParams",
    "HouseholdPrior",
    "HouseholdRecord",
    "HouseholdState",
    "RawBatch",
    "Roster",
    "StudyDataset",
    "TestLog",
    "VariantConfig",
    "age_band",
    "alpha_variant",
    "decode_dataset",
    "encode_dataset",
    "first_positive_fraction_under_18",
    "generate_rosters",
    "get_variant",
    "infection_hazard",
    "omicron_variant",
    "read_dataset",
    "select_study",
    "simulate_raw_batch",
    "simulate_study",
    "step_day",
    "testing_process",
    "write_dataset",
]
