"""Stationary Mercer kernels over the auxiliary variable.

Provides the Gaussian kernel and the Matern family at smoothness 1/2, 3/2
and 5/2, together with Gram / cross-kernel evaluation and the quantile
heuristic used to propose length-scale candidates from data.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

__all__ = [
    "FAMILIES",
    "KernelSpec",
    "kernel_eval",
    "gram",
    "cross_kernel",
    "lengthscale_candidates",
]

FAMILIES = ("gaussian", "matern12", "matern32", "matern52")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family name plus a strictly positive length scale."""

    family: str
    length_scale: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(
                f"unknown kernel family {self.family!r}; expected one of {FAMILIES}"
            )
        ls = float(self.length_scale)
        if not np.isfinite(ls) or ls <= 0.0:
            raise ValueError(f"length_scale must be finite and > 0, got {self.length_scale!r}")
        object.__setattr__(self, "length_scale", ls)


def _as_points(x) -> np.ndarray:
    """Coerce scalars / 1-D vectors / 2-D arrays to an (n, d) float array."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    elif a.ndim != 2:
        raise ValueError(f"points must be at most 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("points must be finite")
    return a


def _apply(spec: KernelSpec, d: np.ndarray) -> np.ndarray:
    """Evaluate the kernel on an array of nonnegative distances."""
    ls = spec.length_scale
    if spec.family == "gaussian":
        return np.exp(-(d * d) / (2.0 * ls * ls))
    if spec.family == "matern12":
        return np.exp(-d / ls)
    if spec.family == "matern32":
        s = np.sqrt(3.0) * d / ls
        return (1.0 + s) * np.exp(-s)
    # matern52
    s = np.sqrt(5.0) * d / ls
    return (1.0 + s + (s * s) / 3.0) * np.exp(-s)


def kernel_eval(spec: KernelSpec, z: float, z2: float) -> float:
    """Evaluate k(z, z2) for a single pair of auxiliary values."""
    d = cdist(_as_points(z), _as_points(z2))
    return float(_apply(spec, d)[0, 0])


def gram(spec: KernelSpec, zs) -> np.ndarray:
    """Gram matrix K with K[i, j] = k(zs[i], zs[j]).

    Parameters
    ----------
    zs : array-like, shape (n,) or (n, d)
        Auxiliary values; rows are points when 2-D.

    Returns
    -------
    ndarray of shape (n, n), symmetric with unit diagonal.
    """
    pts = _as_points(zs)
    if pts.shape[0] < 1:
        raise ValueError("gram requires at least one point")
    K = _apply(spec, cdist(pts, pts))
    np.fill_diagonal(K, 1.0)
    return K


def cross_kernel(spec: KernelSpec, z_new, zs) -> np.ndarray:
    """Kernel values between new auxiliary points and a stored set.

    ``z_new`` may be a scalar (returns shape (n,)) or a vector of m points
    (returns shape (m, n)).  Matches ``gram`` bit-for-bit on shared pairs.
    """
    pts = _as_points(zs)
    new = np.asarray(z_new, dtype=float)
    scalar = new.ndim == 0
    K = _apply(spec, cdist(_as_points(z_new), pts))
    return K[0] if scalar else K


def lengthscale_candidates(features, quantiles) -> list:
    """Length-scale candidates from quantiles of pairwise distances.

    Computes the multiset of Euclidean distances over unordered pairs of
    feature vectors and reads off the requested lower (type-1) quantiles.
    A quantile that lands on an exact zero (duplicated points) is replaced
    by the smallest positive pairwise distance.

    Parameters
    ----------
    features : array-like, shape (m,) or (m, d)
        At least two feature vectors.
    quantiles : sequence of floats in [0, 1]

    Returns
    -------
    list of float, one strictly positive candidate per quantile, order
    preserved.
    """
    pts = _as_points(features)
    if pts.shape[0] < 2:
        raise ValueError("lengthscale_candidates requires at least two feature vectors")
    qs = [float(q) for q in quantiles]
    for q in qs:
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"quantiles must lie in [0, 1], got {q}")
    dists = pdist(pts)
    positive = dists[dists > 0.0]
    if positive.size == 0:
        raise ValueError("all feature vectors are identical; no positive pairwise distance")
    smallest_positive = float(positive.min())
    out = []
    for q in qs:
        val = float(np.quantile(dists, q, method="inverted_cdf"))
        out.append(val if val > 0.0 else smallest_positive)
    return out
