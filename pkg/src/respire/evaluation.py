"""Accuracy metrics, robustness diagnostics and report assembly.

The headline metric is R^2; robust_r2 recomputes it after discarding the
largest residuals so that a handful of gross reference spikes cannot
dominate a comparison.  Also here: win counting across experiment tables,
weight-curve smoothness diagnostics, and a paired t-test.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import stdtr

from .spr import SemiParamModel, weight_curves

__all__ = [
    "DEFAULT_DELTAS",
    "r2",
    "robust_r2",
    "robust_curve",
    "win_counts",
    "smoothness_index",
    "OverfitDiagnostics",
    "overfit_flag",
    "paired_ttest",
    "EvalReport",
    "evaluate_predictions",
    "write_report_csv",
]

DEFAULT_DELTAS = (0.0, 0.01, 0.02, 0.05, 0.1)


def _pair(y, yhat):
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.ndim != 1 or y.shape != yhat.shape:
        raise ValueError(f"y and yhat must be 1-D of equal length, got {y.shape} and {yhat.shape}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(yhat))):
        raise ValueError("y and yhat must be finite")
    return y, yhat


def r2(y, yhat) -> float:
    """Coefficient of determination, 1 - SSE / TSS."""
    y, yhat = _pair(y, yhat)
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0.0:
        raise ValueError("r2 is undefined: targets have zero variance")
    sse = float(np.sum((y - yhat) ** 2))
    return 1.0 - sse / tss


def robust_r2(y, yhat, delta: float) -> float:
    """R^2 after discarding the ceil(delta * n) largest-|residual| points.

    Ties in |residual| discard the lower index first; the mean in the TSS
    is recomputed on the retained points.
    """
    y, yhat = _pair(y, yhat)
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    n = y.shape[0]
    # slack guards exact products like 0.1 * 30 from ceiling one too high
    n_drop = int(math.ceil(delta * n - 1e-9))
    if n_drop >= n:
        raise ValueError(f"delta={delta} discards all {n} points")
    if n_drop > 0:
        drop = np.argsort(-np.abs(y - yhat), kind="stable")[:n_drop]
        keep = np.setdiff1d(np.arange(n), drop)
        y, yhat = y[keep], yhat[keep]
    return r2(y, yhat)


def robust_curve(y, yhat, deltas=DEFAULT_DELTAS):
    """robust_r2 swept over a strictly increasing delta grid.

    Degenerate cells (retained targets constant) are recorded as NaN.
    """
    deltas = [float(d) for d in deltas]
    if any(b <= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly increasing")
    out = []
    for d in deltas:
        try:
            val = robust_r2(y, yhat, d)
        except ValueError:
            val = float("nan")
        out.append((d, val))
    return out


def win_counts(scores: dict, epsilon: float = 0.01) -> dict:
    """Count near-best finishes per method across experiments.

    ``scores`` maps method -> {experiment -> score}.  In each experiment
    every method within ``epsilon`` of the best present score earns a win;
    methods missing from an experiment neither win nor set the bar.
    """
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    experiments = set()
    for per_exp in scores.values():
        experiments.update(per_exp)
    wins = {method: 0 for method in scores}
    for exp in experiments:
        present = {m: per_exp[exp] for m, per_exp in scores.items() if exp in per_exp}
        best = max(present.values())
        for m, v in present.items():
            if v >= best - epsilon:
                wins[m] += 1
    return wins


def smoothness_index(curve) -> float:
    """Total variation of a sampled curve divided by its range.

    Equals 1.0 exactly when the samples are monotone; a constant curve is
    defined as 1.0.
    """
    c = np.asarray(curve, dtype=float)
    if c.ndim != 1 or c.shape[0] < 2:
        raise ValueError(f"curve must be a 1-D array of length >= 2, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("curve must be finite")
    rng = float(c.max() - c.min())
    if rng == 0.0:
        return 1.0
    return float(np.sum(np.abs(np.diff(c)))) / rng


@dataclass(frozen=True)
class OverfitDiagnostics:
    flagged: bool
    indices: dict
    tau: float


def overfit_flag(model: SemiParamModel, z_grid=None, tau: float = 3.0,
                 n_grid: int = 200) -> OverfitDiagnostics:
    """Flag weight curves that wiggle more than ``tau`` over the z range.

    By default the curves are sampled on a uniform grid spanning the raw
    train z range (200 points).
    """
    if z_grid is None:
        zmin, zmax = model.norm_params
        lo = zmin + float(model.z_train.min()) * (zmax - zmin)
        hi = zmin + float(model.z_train.max()) * (zmax - zmin)
        if hi <= lo:
            hi = lo + 1.0
        z_grid = np.linspace(lo, hi, n_grid)
    w1, w2, b = weight_curves(model, z_grid)
    indices = {
        "w1": smoothness_index(w1),
        "w2": smoothness_index(w2),
        "b": smoothness_index(b),
    }
    return OverfitDiagnostics(flagged=any(v > tau for v in indices.values()),
                              indices=indices, tau=tau)


def paired_ttest(a, b):
    """Two-sided paired t-test; returns (t statistic, p-value).

    Identical samples give (0.0, 1.0); zero-variance differences with a
    nonzero mean give (+-inf, 0.0).
    """
    a, b = _pair(a, b)
    n = a.shape[0]
    if n < 2:
        raise ValueError(f"paired_ttest needs at least 2 pairs, got {n}")
    d = a - b
    if np.all(d == 0.0):
        return 0.0, 1.0
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(stdtr(n - 1, -abs(t)))
    return t, p


@dataclass(frozen=True)
class EvalReport:
    """Headline metrics for one (method, dataset) evaluation."""

    method_id: str
    dataset_id: str
    n: int
    r2: float
    robust_curve: tuple
    residuals: np.ndarray


def evaluate_predictions(y, yhat, method_id: str = "", dataset_id: str = "",
                         deltas=DEFAULT_DELTAS) -> EvalReport:
    y, yhat = _pair(y, yhat)
    curve = tuple(robust_curve(y, yhat, deltas))
    return EvalReport(method_id=method_id, dataset_id=dataset_id, n=y.shape[0],
                      r2=r2(y, yhat), robust_curve=curve, residuals=y - yhat)


def write_report_csv(report: EvalReport, path: str):
    """Two-section CSV: a summary row, then the robust-R^2 curve."""
    with open(path, "w", newline="") as fh:
        fh.write("method,dataset,n,r2\n")
        fh.write(f"{report.method_id},{report.dataset_id},{report.n},{repr(report.r2)}\n")
        fh.write("delta,r2\n")
        for delta, val in report.robust_curve:
            fh.write(f"{repr(float(delta))},{repr(float(val))}\n")
