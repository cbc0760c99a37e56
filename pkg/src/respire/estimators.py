"""Scikit-learn style estimators over (op1, op2, temperature) features.

All three calibrators accept an (n, 3) design matrix with columns x1, x2
and raw temperature, expose fit / predict / get_params, and resolve any
data-dependent quantities (temperature normalization, kernel length
scales) from the training data alone.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .kernels import KernelSpec, cross_kernel, gram, lengthscale_candidates
from .robust import RobustConfig, fit_respire
from .spr import FitProblem, predict as spr_predict

__all__ = ["RespireRegressor", "RidgeCalibrator", "KernelRidgeCalibrator"]


def _columns(X):
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] != 3:
        raise ValueError(f"expected 3 feature columns (x1, x2, temp), got {X.shape[1]}")
    return X[:, 0], X[:, 1], X[:, 2]


class RespireRegressor(RegressorMixin, BaseEstimator):
    """Outlier-resistant semi-parametric calibration model.

    Parameters
    ----------
    family : str
        Kernel family over the normalized temperature.
    ls_quantile : float
        Pairwise-distance quantile used to resolve the length scale from
        the training temperatures; ignored when ``length_scale`` is set.
    length_scale : float or None
        Explicit kernel length scale (in normalized temperature units).
    lam : float
        Ridge weight of the dual solve.
    alpha : float
        Assumed corruption fraction for the robust loop; 0 disables it.
    eta : float
        Correction step size of the robust loop.
    """

    def __init__(self, family: str = "matern32", ls_quantile: float = 0.5,
                 length_scale=None, lam: float = 1.0, alpha: float = 0.0,
                 eta: float = 1.0, max_iters: int = 50, tol: float = 1e-6):
        self.family = family
        self.ls_quantile = ls_quantile
        self.length_scale = length_scale
        self.lam = lam
        self.alpha = alpha
        self.eta = eta
        self.max_iters = max_iters
        self.tol = tol

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        x1, x2, temp = _columns(X)
        zmin, zmax = float(temp.min()), float(temp.max())
        scale = zmax - zmin
        if scale <= 0.0:
            scale = 1.0
        z = (temp - zmin) / scale
        if self.length_scale is not None:
            ls = float(self.length_scale)
        else:
            ls = lengthscale_candidates(z, [self.ls_quantile])[0]
        spec = KernelSpec(self.family, ls)
        cfg = RobustConfig(alpha=self.alpha, eta=self.eta, lam=self.lam,
                           max_iters=self.max_iters, tol=self.tol)
        fit = fit_respire(FitProblem(x1=x1, x2=x2, z=z, y=y), spec, cfg,
                          norm_params=(zmin, zmax))
        self.model_ = fit.model
        self.corruption_ = fit.corruption
        self.n_iter_ = fit.iterations
        self.converged_ = fit.converged
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        x1, x2, temp = _columns(X)
        return spr_predict(self.model_, x1, x2, temp)


class RidgeCalibrator(RegressorMixin, BaseEstimator):
    """Linear ridge regression on (x1, x2, temp) with a free intercept."""

    def __init__(self, lam: float = 1.0):
        self.lam = lam

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if self.lam <= 0.0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        mu = X.mean(axis=0)
        ybar = float(y.mean())
        Xc = X - mu
        d = X.shape[1]
        w = np.linalg.solve(Xc.T @ Xc + self.lam * np.eye(d), Xc.T @ (y - ybar))
        self.coef_ = w
        self.intercept_ = ybar - float(mu @ w)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        return X @ self.coef_ + self.intercept_


class KernelRidgeCalibrator(RegressorMixin, BaseEstimator):
    """Kernel ridge regression on the full (x1, x2, temp) feature vector.

    Each feature column is min-max normalized to [0, 1] from the training
    data before distances are taken (the same convention the
    semi-parametric model applies to temperature), so the length-scale
    quantile heuristic is not dominated by whichever column has the
    widest raw units.
    """

    def __init__(self, family: str = "gaussian", ls_quantile: float = 0.5,
                 length_scale=None, lam: float = 1.0):
        self.family = family
        self.ls_quantile = ls_quantile
        self.length_scale = length_scale
        self.lam = lam

    def _normalize(self, X):
        return (X - self.col_min_) / self.col_scale_

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if self.lam <= 0.0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        self.col_min_ = X.min(axis=0)
        scale = X.max(axis=0) - self.col_min_
        scale[scale <= 0.0] = 1.0
        self.col_scale_ = scale
        Xn = self._normalize(X)
        if self.length_scale is not None:
            ls = float(self.length_scale)
        else:
            ls = lengthscale_candidates(Xn, [self.ls_quantile])[0]
        self.spec_ = KernelSpec(self.family, ls)
        K = gram(self.spec_, Xn)
        n = X.shape[0]
        self.X_train_ = Xn
        self.dual_coef_ = np.linalg.solve(K + self.lam * np.eye(n), y)
        return self

    def predict(self, X):
        check_is_fitted(self, "dual_coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.X_train_.shape[1]:
            raise ValueError(f"expected {self.X_train_.shape[1]} feature columns, "
                             f"got {X.shape[1]}")
        K = cross_kernel(self.spec_, self._normalize(X), self.X_train_)
        return K @ self.dual_coef_
