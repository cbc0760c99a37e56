"""Semi-parametric regression core.

Fits the model y = w1(z) x1 + w2(z) x2 + b(z) where the three weight
functions vary smoothly with an auxiliary variable z through a Mercer
kernel.  All computation happens in the dual: with Gram matrix G over the
train z values and Xi = diag(xi), the coefficient vector beta minimizes

    beta' (G + X1 G X1 + X2 G X2) beta + lam ||beta||^2 - 2 lam beta' y

whose stationarity system (M + lam I) beta = lam y is solved by a
symmetric positive-definite factorization.  The fitted weight functions
are carried by the coefficient vectors m = X1 beta / lam, n = X2 beta /
lam and o = beta / lam.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kernels import KernelSpec, cross_kernel, gram

__all__ = [
    "FitProblem",
    "SemiParamModel",
    "fit_spr",
    "dual_objective",
    "predict",
    "weight_curves",
    "compress",
]


def _column(name: str, values, n: int | None = None) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"{name} must be a 1-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    if n is not None and a.shape[0] != n:
        raise ValueError(f"{name} has length {a.shape[0]}, expected {n}")
    return a


@dataclass(frozen=True)
class FitProblem:
    """Aligned training columns: signals x1, x2, auxiliary z and target y."""

    x1: np.ndarray
    x2: np.ndarray
    z: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x1 = _column("x1", self.x1)
        if x1.shape[0] < 1:
            raise ValueError("FitProblem needs at least one record")
        n = x1.shape[0]
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", _column("x2", self.x2, n))
        object.__setattr__(self, "z", _column("z", self.z, n))
        object.__setattr__(self, "y", _column("y", self.y, n))

    def __len__(self) -> int:
        return self.x1.shape[0]


@dataclass(frozen=True)
class SemiParamModel:
    """Fitted model state.

    Attributes
    ----------
    kernel : KernelSpec
    lam : float
        Ridge weight used in the dual solve.
    z_train : ndarray
        Normalized auxiliary values the coefficients are anchored to.
    m, n, o : ndarray
        Coefficient vectors for the two signal weights and the offset.
    norm_params : tuple (z_min, z_max)
        Affine normalization applied to raw auxiliary values at predict
        time; (0.0, 1.0) means raw values are used as-is.
    """

    kernel: KernelSpec
    lam: float
    z_train: np.ndarray
    m: np.ndarray
    n: np.ndarray
    o: np.ndarray
    norm_params: tuple

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError(f"lam must be finite and > 0, got {self.lam!r}")
        z = _column("z_train", self.z_train)
        n_pts = z.shape[0]
        object.__setattr__(self, "z_train", z)
        object.__setattr__(self, "m", _column("m", self.m, n_pts))
        object.__setattr__(self, "n", _column("n", self.n, n_pts))
        object.__setattr__(self, "o", _column("o", self.o, n_pts))
        zmin, zmax = (float(v) for v in self.norm_params)
        if not (np.isfinite(zmin) and np.isfinite(zmax)):
            raise ValueError("norm_params must be finite")
        object.__setattr__(self, "norm_params", (zmin, zmax))

    def normalize_z(self, z_raw):
        """Map raw auxiliary values to the train normalization."""
        zmin, zmax = self.norm_params
        scale = zmax - zmin
        if scale <= 0.0:
            scale = 1.0
        return (np.asarray(z_raw, dtype=float) - zmin) / scale


class _DualSolver:
    """Factored stationarity system, reusable across right-hand sides.

    Holds M = G + X1 G X1 + X2 G X2 and a Cholesky factorization of
    (M + lam I) so that repeated solves against corrected targets (the
    robust loop, grid search) cost one triangular solve each.
    """

    def __init__(self, x1, x2, G, lam):
        self.x1 = x1
        self.x2 = x2
        self.lam = lam
        self.M = G + G * np.outer(x1, x1) + G * np.outer(x2, x2)
        n = G.shape[0]
        self._factor = cho_factor(self.M + lam * np.eye(n), lower=True)

    def solve_beta(self, y: np.ndarray) -> np.ndarray:
        return cho_solve(self._factor, self.lam * y)

    def coefficients(self, beta: np.ndarray):
        o = beta / self.lam
        return self.x1 * o, self.x2 * o, o

    def train_predictions(self, beta: np.ndarray) -> np.ndarray:
        return self.M @ (beta / self.lam)


def fit_spr(problem: FitProblem, spec: KernelSpec, lam: float,
            norm_params=(0.0, 1.0)) -> SemiParamModel:
    """Solve the dual system and package the fitted coefficient vectors.

    ``problem.z`` must already be expressed in the normalization described
    by ``norm_params``; the default identity means z is used raw.
    """
    lam = float(lam)
    if not (np.isfinite(lam) and lam > 0.0):
        raise ValueError(f"lam must be finite and > 0, got {lam!r}")
    G = gram(spec, problem.z)
    solver = _DualSolver(problem.x1, problem.x2, G, lam)
    beta = solver.solve_beta(problem.y)
    m, n, o = solver.coefficients(beta)
    return SemiParamModel(kernel=spec, lam=lam, z_train=problem.z,
                          m=m, n=n, o=o, norm_params=tuple(norm_params))


def dual_objective(problem: FitProblem, spec: KernelSpec, lam: float,
                   beta) -> float:
    """Value of the dual objective at an arbitrary coefficient vector."""
    beta = _column("beta", beta, len(problem))
    G = gram(spec, problem.z)
    M = G + G * np.outer(problem.x1, problem.x1) + G * np.outer(problem.x2, problem.x2)
    return float(beta @ (M @ beta) + lam * (beta @ beta) - 2.0 * lam * (beta @ problem.y))


def predict(model: SemiParamModel, x1, x2, z_raw):
    """Predict targets for new signal pairs and raw auxiliary values.

    Scalar inputs return a float; array inputs of a common shape (n,)
    return an ndarray.  z is normalized with the model's train statistics
    and may fall outside [0, 1]; it is used as-is.
    """
    scalar = np.ndim(x1) == 0 and np.ndim(x2) == 0 and np.ndim(z_raw) == 0
    zn = model.normalize_z(z_raw)
    K = cross_kernel(model.kernel, zn, model.z_train)
    if scalar:
        return float((K @ model.m) * float(x1) + (K @ model.n) * float(x2) + K @ model.o)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return (K @ model.m) * x1 + (K @ model.n) * x2 + K @ model.o


def weight_curves(model: SemiParamModel, z_grid):
    """Sampled weight functions (w1, w2, b) over a grid of raw z values."""
    zg = np.atleast_1d(np.asarray(z_grid, dtype=float))
    K = cross_kernel(model.kernel, model.normalize_z(zg), model.z_train)
    return K @ model.m, K @ model.n, K @ model.o


def compress(model: SemiParamModel, problem: FitProblem, n_keep: int) -> SemiParamModel:
    """Sparsify the model to the ``n_keep`` largest-|beta| anchor points.

    The retained coefficients are refit by ridge-stabilized least squares
    against the original targets restricted to the support columns of M;
    ties in |beta| break toward the lower index, so supports nest as
    n_keep grows.
    """
    n_pts = len(problem)
    n_keep = int(n_keep)
    if not 1 <= n_keep <= n_pts:
        raise ValueError(f"n_keep must be in [1, {n_pts}], got {n_keep}")
    beta = model.o * model.lam
    order = np.argsort(-np.abs(beta), kind="stable")
    support = np.sort(order[:n_keep])

    G = gram(model.kernel, problem.z)
    M = G + G * np.outer(problem.x1, problem.x1) + G * np.outer(problem.x2, problem.x2)
    rho = 1e-8 * float(np.trace(M)) / n_pts
    A = M[:, support]
    lhs = A.T @ A + rho * np.eye(n_keep)
    gamma = cho_solve(cho_factor(lhs, lower=True), A.T @ problem.y)

    o = np.zeros(n_pts)
    o[support] = gamma
    return SemiParamModel(kernel=model.kernel, lam=model.lam, z_train=problem.z,
                          m=problem.x1 * o, n=problem.x2 * o, o=o,
                          norm_params=model.norm_params)
