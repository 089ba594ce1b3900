"""Box-model AMOC simulation and neural-network architecture comparison."""
from .boxmodel import (BoxState, DeltaState, DensityLaw, DensityParams, Method, ModelConfig,
                       TABLE_INITIAL, TimeGrid, Trajectory, Variant, integrate, q_from_state,
                       rho_eos80, rho_linear, step_extended, step_standard)
from .datagen import (Dataset, Mode, Scaler, Split, build_ar, build_pi, fit_apply_scaler,
                      read_dataset, split_chrono, write_dataset)
from .errors import ConfigError, DomainError, IntegrationError, StageError, TrainingError
from .forcing import ForcingKind, ForcingSpec, Scenario, eval_forcing, scenario

__version__ = "0.1.0"

__all__ = [
    "BoxState",
    "DeltaState",
    "DensityLaw",
    "DensityParams",
    "Method",
    "ModelConfig",
    "TABLE_INITIAL",
    "TimeGrid",
    "Trajectory",
    "Variant",
    "integrate",
    "q_from_state",
    "rho_eos80",
    "rho_linear",
    "step_extended",
    "step_standard",
    "Dataset",
    "Mode",
    "Scaler",
    "Split",
    "build_ar",
    "build_pi",
    "fit_apply_scaler",
    "read_dataset",
    "split_chrono",
    "write_dataset",
    "ConfigError",
    "DomainError",
    "IntegrationError",
    "StageError",
    "TrainingError",
    "ForcingKind",
    "ForcingSpec",
    "Scenario",
    "eval_forcing",
    "scenario",
]
