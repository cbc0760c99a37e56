"""Cross-deployment transfer: adapters, sensor maps and scenario harnesses.

A fitted calibration model rarely moves cleanly between sites, seasons or
sensor units.  This module provides the two cheap correction layers (a
1-D affine output adapter and a 2x2 + offset map between sensor channel
pairs) and the harnesses that sweep (source, target) combinations for a
set of calibration methods.
"""

from dataclasses import dataclass

import numpy as np

from .dataio import AlignedDataset, temporal_split
from .estimators import KernelRidgeCalibrator, RespireRegressor, RidgeCalibrator
from .evaluation import r2, robust_r2
from .spr import SemiParamModel, predict as spr_predict
from .tuning import HyperGrid, grid_search, kfold_splits

__all__ = [
    "DEFAULT_METHODS",
    "Adapter",
    "SensorMap",
    "fit_adapter",
    "apply_adapter",
    "fit_sensor_map",
    "apply_sensor_map",
    "scenario_kind",
    "ScenarioCell",
    "run_scenario_matrix",
    "SensorScenarios",
    "run_sensor_scenarios",
    "fit_method",
]

DEFAULT_METHODS = ("RESPIRE", "RR", "KRR")

RR_LAMS = (0.1, 1.0, 10.0, 50.0, 100.0)
KRR_LAMS = (0.1, 1.0, 10.0)
KRR_QS = (0.1, 0.25, 0.5, 0.75, 0.9)


@dataclass(frozen=True)
class Adapter:
    """Affine output correction yhat -> a * yhat + b."""

    a: float
    b: float


def fit_adapter(predictions, truth) -> Adapter:
    """Least-squares affine map from predictions onto truth.

    Degenerate predictions (variance below 1e-12 * variance(truth) +
    1e-24) fall back to the constant map a=0, b=mean(truth).
    """
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(truth, dtype=float)
    if p.ndim != 1 or p.shape != t.shape:
        raise ValueError(f"predictions and truth must be 1-D of equal length, "
                         f"got {p.shape} and {t.shape}")
    if p.shape[0] < 2:
        raise ValueError(f"fit_adapter needs at least 2 points, got {p.shape[0]}")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(t))):
        raise ValueError("predictions and truth must be finite")
    var_p = float(np.var(p))
    if var_p < 1e-12 * float(np.var(t)) + 1e-24:
        return Adapter(a=0.0, b=float(t.mean()))
    a = float(np.sum((p - p.mean()) * (t - t.mean()))) / float(np.sum((p - p.mean()) ** 2))
    return Adapter(a=a, b=float(t.mean() - a * p.mean()))


def apply_adapter(adapter: Adapter, predictions):
    return adapter.a * np.asarray(predictions, dtype=float) + adapter.b


@dataclass(frozen=True)
class SensorMap:
    """Channel map ops -> ops @ A.T + d between two sensor units."""

    A: np.ndarray
    d: np.ndarray


def fit_sensor_map(ops_from, ops_to) -> SensorMap:
    """Learn the affine map taking ``ops_from`` channels onto ``ops_to``.

    Each output channel is a separate 3-parameter least-squares fit; a
    rank-deficient design falls back to the minimum-norm solution.
    """
    F = np.asarray(ops_from, dtype=float)
    T = np.asarray(ops_to, dtype=float)
    if F.ndim != 2 or F.shape[1] != 2 or F.shape != T.shape:
        raise ValueError(f"need matching (n, 2) op arrays, got {F.shape} and {T.shape}")
    if F.shape[0] < 3:
        raise ValueError(f"fit_sensor_map needs at least 3 shared records, got {F.shape[0]}")
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(T))):
        raise ValueError("op readings must be finite")
    design = np.column_stack([F, np.ones(F.shape[0])])
    coefs, _, _, _ = np.linalg.lstsq(design, T, rcond=None)
    return SensorMap(A=coefs[:2].T.copy(), d=coefs[2].copy())


def apply_sensor_map(sensor_map: SensorMap, ops):
    ops = np.asarray(ops, dtype=float)
    return ops @ sensor_map.A.T + sensor_map.d


def scenario_kind(source_id: str, target_id: str) -> str:
    """Classify a dataset pair by shared site / season.

    Ids follow 'site-season'; the part before the first hyphen is the
    site.  Returns one of SS, SX, XS, XX (site letter first).
    """
    s_site, _, s_season = source_id.partition("-")
    t_site, _, t_season = target_id.partition("-")
    return ("S" if s_site == t_site else "X") + ("S" if s_season == t_season else "X")


class _FittedRespire:
    """Adapter giving a tuned semi-parametric fit the estimator interface."""

    def __init__(self, model: SemiParamModel):
        self.model = model

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        return spr_predict(self.model, X[:, 0], X[:, 1], X[:, 2])


def _tune_estimator(factory, cells, train: AlignedDataset, k: int):
    """Generic grid CV for (x, y)-style estimators; earliest best cell wins."""
    splits = kfold_splits(train, k)
    folds = [(train.subset(f), train.subset(h)) for f, h in splits]
    best_params, best_score = None, None
    for params in cells:
        scores = []
        try:
            for fit_ds, hold_ds in folds:
                est = factory(**params).fit(fit_ds.features(), fit_ds.y)
                scores.append(r2(hold_ds.y, est.predict(hold_ds.features())))
        except ValueError:
            continue
        mean = float(np.mean(scores))
        if best_score is None or mean > best_score:
            best_params, best_score = params, mean
    if best_params is None:
        raise ValueError("baseline tuning failed on every grid cell")
    return factory(**best_params).fit(train.features(), train.y)


def fit_method(name: str, train: AlignedDataset, cv_folds: int = 3,
               respire_grid: HyperGrid | None = None):
    """Tune and fit one calibration method on a train split.

    Returns an object with a ``predict(X)`` method over (x1, x2, temp)
    feature rows.
    """
    if name == "RESPIRE":
        result = grid_search(train, respire_grid or HyperGrid(), k=cv_folds)
        est = RespireRegressor(
            family=result.family, length_scale=result.kernel.length_scale,
            lam=result.config.lam, alpha=result.config.alpha, eta=result.config.eta,
        )
        return est.fit(train.features(), train.y)
    if name == "RR":
        cells = [{"lam": lam} for lam in RR_LAMS]
        return _tune_estimator(RidgeCalibrator, cells, train, cv_folds)
    if name == "KRR":
        cells = [{"lam": lam, "ls_quantile": q} for lam in KRR_LAMS for q in KRR_QS]
        return _tune_estimator(KernelRidgeCalibrator, cells, train, cv_folds)
    raise ValueError(f"unknown method {name!r}; expected one of {DEFAULT_METHODS}")


@dataclass(frozen=True)
class ScenarioCell:
    """One (method, source, target, adapter) result row."""

    method: str
    source: str
    target: str
    kind: str
    adapter: bool
    r2: float
    robust_r2_05: float
    n_test: int
    error: str = ""


def _scenario_rows(datasets: dict, methods, adapter_settings, train_frac: float,
                   cv_folds: int, respire_grid):
    ids = list(datasets)
    splits = {i: temporal_split(datasets[i], train_frac) for i in ids}
    rows = []
    for source in ids:
        src_train, _ = splits[source]
        for method in methods:
            fitted, fit_error = None, ""
            try:
                fitted = fit_method(method, src_train, cv_folds, respire_grid)
            except ValueError as exc:
                fit_error = f"fit failed: {exc}"
            for target in ids:
                kind = scenario_kind(source, target)
                tgt_train, tgt_test = splits[target]
                for use_adapter in adapter_settings:
                    if fit_error:
                        rows.append(ScenarioCell(method, source, target, kind,
                                                 use_adapter, float("nan"),
                                                 float("nan"), 0, fit_error))
                        continue
                    try:
                        yhat = fitted.predict(tgt_test.features())
                        if use_adapter:
                            adapter = fit_adapter(
                                fitted.predict(tgt_train.features()), tgt_train.y)
                            yhat = apply_adapter(adapter, yhat)
                        rows.append(ScenarioCell(
                            method, source, target, kind, use_adapter,
                            r2(tgt_test.y, yhat), robust_r2(tgt_test.y, yhat, 0.05),
                            len(tgt_test)))
                    except ValueError as exc:
                        rows.append(ScenarioCell(method, source, target, kind,
                                                 use_adapter, float("nan"),
                                                 float("nan"), len(tgt_test),
                                                 f"evaluation failed: {exc}"))
    return tuple(rows)


def run_scenario_matrix(datasets: dict, methods=DEFAULT_METHODS,
                        with_adapter: bool = False, train_frac: float = 0.8,
                        cv_folds: int = 3, respire_grid: HyperGrid | None = None):
    """Evaluate every ordered (source, target) pair for each method.

    Hyperparameters are tuned by CV on the source train split only; the
    optional adapter is fit on target train predictions.  Failures are
    recorded per cell and the sweep continues.
    """
    if not datasets:
        raise ValueError("run_scenario_matrix needs at least one dataset")
    return _scenario_rows(datasets, methods, (with_adapter,), train_frac,
                          cv_folds, respire_grid)


@dataclass(frozen=True)
class SensorScenarios:
    """R^2 under the five sensor-replacement scenarios.

    s1: source unit, no correction      s2: source unit + adapter
    s3: target unit fed raw             s4: target unit through sensor map
    s5: sensor map + adapter
    """

    s1: float
    s2: float
    s3: float
    s4: float
    s5: float
    sensor_map: SensorMap

    def values(self):
        return (self.s1, self.s2, self.s3, self.s4, self.s5)


def run_sensor_scenarios(source_sensor: AlignedDataset, target_sensor: AlignedDataset,
                         model: SemiParamModel, train_frac: float = 0.8) -> SensorScenarios:
    """Score a source-trained model across the sensor-replacement ladder.

    The sensor map is learned on the train-portion timestamp overlap of
    the two units (at least 3 shared records); adapters are learned on
    the respective train splits only.
    """
    s_train, s_test = temporal_split(source_sensor, train_frac)
    t_train, t_test = temporal_split(target_sensor, train_frac)

    def model_preds(x1, x2, temp):
        return spr_predict(model, x1, x2, temp)

    preds_s_test = model_preds(s_test.x1, s_test.x2, s_test.temp_c)
    s1 = r2(s_test.y, preds_s_test)
    adapter_src = fit_adapter(model_preds(s_train.x1, s_train.x2, s_train.temp_c), s_train.y)
    s2 = r2(s_test.y, apply_adapter(adapter_src, preds_s_test))

    s3 = r2(t_test.y, model_preds(t_test.x1, t_test.x2, t_test.temp_c))

    shared = sorted(set(s_train.t) & set(t_train.t))
    if len(shared) < 3:
        raise ValueError(f"sensor map needs >= 3 shared train timestamps, got {len(shared)}")
    s_by_t = {ts: i for i, ts in enumerate(s_train.t)}
    t_by_t = {ts: i for i, ts in enumerate(t_train.t)}
    s_idx = [s_by_t[ts] for ts in shared]
    t_idx = [t_by_t[ts] for ts in shared]
    sensor_map = fit_sensor_map(
        ops_from=np.column_stack([t_train.x1[t_idx], t_train.x2[t_idx]]),
        ops_to=np.column_stack([s_train.x1[s_idx], s_train.x2[s_idx]]),
    )

    mapped_test = apply_sensor_map(sensor_map, np.column_stack([t_test.x1, t_test.x2]))
    preds_mapped_test = model_preds(mapped_test[:, 0], mapped_test[:, 1], t_test.temp_c)
    s4 = r2(t_test.y, preds_mapped_test)

    mapped_train = apply_sensor_map(sensor_map, np.column_stack([t_train.x1, t_train.x2]))
    adapter_tgt = fit_adapter(
        model_preds(mapped_train[:, 0], mapped_train[:, 1], t_train.temp_c), t_train.y)
    s5 = r2(t_test.y, apply_adapter(adapter_tgt, preds_mapped_test))

    return SensorScenarios(s1=s1, s2=s2, s3=s3, s4=s4, s5=s5, sensor_map=sensor_map)
