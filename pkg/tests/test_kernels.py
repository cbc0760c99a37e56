import numpy as np
import pytest

from respire.kernels import (FAMILIES, KernelSpec, cross_kernel, gram,
                             kernel_eval, lengthscale_candidates)


def test_families_tuple():
    assert FAMILIES == ("gaussian", "matern12", "matern32", "matern52")


def test_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("laplacian", 1.0)
    with pytest.raises(ValueError):
        KernelSpec("gaussian", 0.0)
    with pytest.raises(ValueError):
        KernelSpec("gaussian", -2.0)
    with pytest.raises(ValueError):
        KernelSpec("gaussian", float("nan"))


def test_kernel_at_zero_distance_is_one():
    for family in FAMILIES:
        spec = KernelSpec(family, 0.7)
        assert kernel_eval(spec, 0.3, 0.3) == 1.0


def test_kernel_point_values():
    # closed-form values computed independently from the formulas
    cases = [
        (("gaussian", 1.0), 0.0, 1.0, 0.6065306597126334),
        (("gaussian", np.sqrt(2.0)), 0.0, 2.0, 0.36787944117144233),
        (("matern12", 1.0), 0.0, 1.0, 0.36787944117144233),
        (("matern12", 2.0), 1.0, 4.0, 0.22313016014842982),
        (("matern32", 1.0), 0.0, 0.5, 0.7848876539574506),
        (("matern32", 1.0), 0.0, 1.0, 0.4833577245965077),
        (("matern52", 1.0), 0.0, 0.5, 0.8286491424181255),
        (("matern52", 1.0), 0.0, 1.0, 0.5239941088318203),
    ]
    for (family, ls), z1, z2, expected in cases:
        got = kernel_eval(KernelSpec(family, ls), z1, z2)
        assert got == pytest.approx(expected, abs=1e-15), (family, ls, z2)


def test_kernel_symmetry_and_decay():
    spec = KernelSpec("matern52", 0.4)
    assert kernel_eval(spec, 0.1, 0.9) == kernel_eval(spec, 0.9, 0.1)
    vals = [kernel_eval(spec, 0.0, d) for d in (0.0, 0.2, 0.5, 1.0, 3.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(0.0 < v <= 1.0 for v in vals)


def test_gram_shape_symmetry_unit_diagonal():
    z = np.array([0.0, 0.3, 0.35, 0.9])
    for family in FAMILIES:
        K = gram(KernelSpec(family, 0.5), z)
        assert K.shape == (4, 4)
        assert np.array_equal(K, K.T)
        assert np.array_equal(np.diag(K), np.ones(4))


def test_gram_positive_semidefinite():
    rng = np.random.default_rng(3)
    z = rng.uniform(0.0, 1.0, 40)
    for family in FAMILIES:
        K = gram(KernelSpec(family, 0.3), z)
        low = np.linalg.eigvalsh(K)[0]
        assert low > -1e-10, family


def test_cross_kernel_matches_gram_rows():
    z = np.array([0.1, 0.4, 0.8, 0.85])
    spec = KernelSpec("matern32", 0.25)
    K = gram(spec, z)
    C = cross_kernel(spec, z, z)
    # off-diagonal entries agree bitwise; gram pins the diagonal to 1
    off = ~np.eye(4, dtype=bool)
    assert np.array_equal(K[off], C[off])


def test_cross_kernel_shapes():
    z_train = np.array([0.0, 0.5, 1.0])
    spec = KernelSpec("gaussian", 1.0)
    row = cross_kernel(spec, 0.25, z_train)
    assert row.shape == (3,)
    block = cross_kernel(spec, np.array([0.25, 0.75]), z_train)
    assert block.shape == (2, 3)
    assert np.array_equal(block[0], row)


def test_gram_rejects_nonfinite():
    with pytest.raises(ValueError):
        gram(KernelSpec("gaussian", 1.0), np.array([0.0, np.nan]))


def test_lengthscale_candidates_enumerated():
    # pairwise distances of [0, 1, 3] are {1, 2, 3}; lower quantiles are
    # read off the sorted multiset directly
    z = np.array([0.0, 1.0, 3.0])
    got = lengthscale_candidates(z, [0.1, 1.0 / 3.0, 0.5, 0.9])
    assert got == [1.0, 1.0, 2.0, 3.0]


def test_lengthscale_zero_quantile_replaced():
    # duplicated points put a zero in the distance multiset; candidates
    # must stay strictly positive
    z = np.array([0.0, 0.0, 1.0])
    got = lengthscale_candidates(z, [0.1])
    assert got == [1.0]


def test_lengthscale_identical_points_rejected():
    with pytest.raises(ValueError):
        lengthscale_candidates(np.array([2.0, 2.0, 2.0]), [0.5])


def test_lengthscale_validates_inputs():
    with pytest.raises(ValueError):
        lengthscale_candidates(np.array([1.0]), [0.5])
    with pytest.raises(ValueError):
        lengthscale_candidates(np.array([0.0, 1.0]), [1.5])


def test_lengthscale_accepts_feature_rows():
    pts = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert lengthscale_candidates(pts, [0.5]) == [5.0]
