"""Outlier-resistant semi-parametric kernel calibration toolkit."""

from .dataio import (AlignedDataset, CsvFormatError, EmptyOverlapError,
                     RawSensorSeries, ReferenceSeries, align, read_aligned_csv,
                     read_reference_csv, read_sensor_csv, resample_average,
                     resample_reference, temporal_split, write_aligned_csv)
from .estimators import KernelRidgeCalibrator, RespireRegressor, RidgeCalibrator
from .evaluation import (evaluate_predictions, overfit_flag, paired_ttest, r2,
                         robust_curve, robust_r2, smoothness_index, win_counts)
from .kernels import (FAMILIES, KernelSpec, cross_kernel, gram, kernel_eval,
                      lengthscale_candidates)
from .model_io import load_model, save_model
from .robust import RobustConfig, RobustFit, corruption_budget, fit_respire, hard_threshold
from .spr import (FitProblem, SemiParamModel, compress, dual_objective, fit_spr,
                  predict, weight_curves)
from .transfer import (Adapter, SensorMap, apply_adapter, apply_sensor_map,
                       fit_adapter, fit_sensor_map, run_scenario_matrix,
                       run_sensor_scenarios, scenario_kind)
from .tuning import GridSearchResult, HyperGrid, grid_search, kfold_splits

__version__ = "0.1.0"

__all__ = [
    "AlignedDataset", "CsvFormatError", "EmptyOverlapError", "RawSensorSeries",
    "ReferenceSeries", "align", "read_aligned_csv", "read_reference_csv",
    "read_sensor_csv", "resample_average", "resample_reference",
    "temporal_split", "write_aligned_csv",
    "KernelRidgeCalibrator", "RespireRegressor", "RidgeCalibrator",
    "evaluate_predictions", "overfit_flag", "paired_ttest", "r2",
    "robust_curve", "robust_r2", "smoothness_index", "win_counts",
    "FAMILIES", "KernelSpec", "cross_kernel", "gram", "kernel_eval",
    "lengthscale_candidates",
    "load_model", "save_model",
    "RobustConfig", "RobustFit", "corruption_budget", "fit_respire",
    "hard_threshold",
    "FitProblem", "SemiParamModel", "compress", "dual_objective", "fit_spr",
    "predict", "weight_curves",
    "Adapter", "SensorMap", "apply_adapter", "apply_sensor_map", "fit_adapter",
    "fit_sensor_map", "run_scenario_matrix", "run_sensor_scenarios",
    "scenario_kind",
    "GridSearchResult", "HyperGrid", "grid_search", "kfold_splits",
    "__version__",
]
