"""Neural-network surrogate for the Johnson-Cook flow law.

Covers the analytic reference law, a small dense network with closed-form
input derivatives, full-batch ADAM training, radial-return integration with
adiabatic heating, and export to JSON archives and a flat Fortran
hardening subroutine.
"""

from .benchmark import LoadPath, run_path_benchmark, uniaxial_path
from .estimator import FlowStressRegressor
from .export import emit_subroutine, evaluate_staged, load_model, save_model
from .johnson_cook import (
    STEEL_42CRMO4,
    STEEL_42CRMO4_THERMAL,
    JohnsonCookLaw,
    JohnsonCookParams,
    ThermalElasticParams,
    jc_derivatives,
    jc_flow_stress,
)
from .mlp import MlpModel, NormalizationRanges, input_jacobian, predict_physical
from .plasticity import MaterialPointState, radial_return_step
from .training import (
    Dataset,
    TrainConfig,
    evaluate,
    generate_test_set,
    generate_training_grid,
    init_model,
    train_adam,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "FlowStressRegressor", "JohnsonCookLaw", "JohnsonCookParams", "LoadPath",
    "MaterialPointState", "MlpModel", "NormalizationRanges", "STEEL_42CRMO4",
    "STEEL_42CRMO4_THERMAL", "ThermalElasticParams", "TrainConfig", "emit_subroutine",
    "evaluate", "evaluate_staged", "generate_test_set", "generate_training_grid",
    "init_model", "input_jacobian", "jc_derivatives", "jc_flow_stress", "load_model",
    "predict_physical", "radial_return_step", "run_path_benchmark", "save_model",
    "train_adam", "uniaxial_path",
]
