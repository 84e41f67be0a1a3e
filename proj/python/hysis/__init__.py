"""Hybrid SIS demand model: simulation and least-squares identification."""

from ._hysis import (
    Error,
    HybridModelSpec,
    IdentifiabilityError,
    IntervalParams,
    RegressionSystem,
    Simulation,
    StateRangeError,
    Trajectory,
    UndefinedRatioError,
    UpdateSchedule,
    ValidationError,
    add_observation_noise,
    build_regression,
    check_identifiability,
    estimate,
    forecast,
    load_scenario,
    reproduction_number,
    run_noise_study,
    scenario_from_dict,
    simulate_ct,
    simulate_dt,
    simulate_sde,
    theta_names,
)

__version__ = "0.1.0"
