"""Hyperparameter selection by exhaustive grid search over temporal folds.

Cross-validation folds are contiguous blocks of the (time-ordered) train
data, so each holdout is a genuine future/past segment rather than a
random shuffle.  The search is fully deterministic: cells are visited in
a fixed order and ties keep the earliest cell.
"""

from dataclasses import dataclass

import numpy as np

from .dataio import AlignedDataset
from .kernels import FAMILIES, KernelSpec, lengthscale_candidates
from .robust import RobustConfig, fit_respire
from .spr import FitProblem, predict
from .evaluation import r2

__all__ = ["HyperGrid", "GridCell", "GridSearchResult", "kfold_splits", "grid_search"]


@dataclass(frozen=True)
class HyperGrid:
    """Candidate sets for the robust fit's tunable knobs.

    Length scales are stated as quantiles (q_ls) of the pairwise distances
    of each fold's fit-portion auxiliary values, so the resolved scale
    adapts to the data it is fit on.
    """

    alphas: tuple = (0.0, 0.05, 0.1, 0.15, 0.2)
    q_ls: tuple = (0.1, 0.3, 0.5, 0.7, 0.9)
    etas: tuple = (0.1, 0.4, 0.7, 1.0)
    lams: tuple = (0.1, 0.5, 1.0, 5.0, 10.0)
    families: tuple = ("matern32",)

    def __post_init__(self):
        for name in ("alphas", "q_ls", "etas", "lams", "families"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, vals)
        for fam in self.families:
            if fam not in FAMILIES:
                raise ValueError(f"unknown kernel family {fam!r}; choose from {FAMILIES}")
        if any(not 0.0 <= a <= 0.5 for a in self.alphas):
            raise ValueError("alphas must lie in [0, 0.5]")
        if any(not 0.0 <= q <= 1.0 for q in self.q_ls):
            raise ValueError("q_ls must lie in [0, 1]")
        if any(not 0.0 < e <= 1.0 for e in self.etas):
            raise ValueError("etas must lie in (0, 1]")
        if any(l <= 0.0 for l in self.lams):
            raise ValueError("lams must be > 0")

    def size(self) -> int:
        return (len(self.families) * len(self.alphas) * len(self.q_ls)
                * len(self.etas) * len(self.lams))


@dataclass(frozen=True)
class GridCell:
    """One evaluated grid cell with its per-fold holdout scores."""

    family: str
    q_ls: float
    alpha: float
    eta: float
    lam: float
    fold_r2: tuple
    mean_r2: float
    error: str = ""


@dataclass(frozen=True)
class GridSearchResult:
    config: RobustConfig
    kernel: KernelSpec
    q_ls: float
    family: str
    mean_r2: float
    table: tuple


def kfold_splits(train: AlignedDataset, k: int):
    """Contiguous temporal folds; block sizes differ by at most one.

    Returns a list of (fit_indices, holdout_indices) pairs, one per fold,
    holdouts in temporal order and together covering every record once.
    """
    n = len(train)
    if not 2 <= k <= n:
        raise ValueError(f"k must lie in [2, {n}], got {k}")
    blocks = np.array_split(np.arange(n), k)
    splits = []
    for i, block in enumerate(blocks):
        fit_idx = np.concatenate([b for j, b in enumerate(blocks) if j != i])
        splits.append((fit_idx, block))
    return splits


def _fit_and_score(fit_ds: AlignedDataset, hold_ds: AlignedDataset,
                   family: str, q: float, alpha: float, eta: float, lam: float) -> float:
    ls = lengthscale_candidates(fit_ds.z, [q])[0]
    spec = KernelSpec(family, ls)
    problem = FitProblem(x1=fit_ds.x1, x2=fit_ds.x2, z=fit_ds.z, y=fit_ds.y)
    cfg = RobustConfig(alpha=alpha, eta=eta, lam=lam)
    fit = fit_respire(problem, spec, cfg, norm_params=fit_ds.norm_params)
    yhat = predict(fit.model, hold_ds.x1, hold_ds.x2, hold_ds.temp_c)
    return r2(hold_ds.y, yhat)


def grid_search(train: AlignedDataset, grid: HyperGrid = HyperGrid(),
                k: int = 3) -> GridSearchResult:
    """Pick the cell with the best mean holdout R^2.

    Cells are visited family-major, then alpha, q_ls, eta, lam ascending
    in their given order; ties keep the earliest cell.  Cells where any
    fold fails (degenerate holdout, no usable length scale) are recorded
    with an error and skipped; if every cell fails, raises.
    """
    splits = kfold_splits(train, k)
    folds = [(train.subset(f), train.subset(h)) for f, h in splits]

    table = []
    best = None
    best_key = None
    for family in grid.families:
        for alpha in grid.alphas:
            for q in grid.q_ls:
                for eta in grid.etas:
                    for lam in grid.lams:
                        scores, err = [], ""
                        for fit_ds, hold_ds in folds:
                            try:
                                scores.append(_fit_and_score(
                                    fit_ds, hold_ds, family, q, alpha, eta, lam))
                            except ValueError as exc:
                                err = str(exc)
                                break
                        if err:
                            cell = GridCell(family, q, alpha, eta, lam, tuple(scores),
                                            float("-inf"), error=err)
                        else:
                            mean = float(np.mean(scores))
                            cell = GridCell(family, q, alpha, eta, lam, tuple(scores), mean)
                            if best is None or mean > best:
                                best = mean
                                best_key = cell
                        table.append(cell)
    if best_key is None:
        raise ValueError("grid search failed: every cell errored on some fold")

    ls = lengthscale_candidates(train.z, [best_key.q_ls])[0]
    kernel = KernelSpec(best_key.family, ls)
    config = RobustConfig(alpha=best_key.alpha, eta=best_key.eta, lam=best_key.lam)
    return GridSearchResult(config=config, kernel=kernel, q_ls=best_key.q_ls,
                            family=best_key.family, mean_r2=best_key.mean_r2,
                            table=tuple(table))
