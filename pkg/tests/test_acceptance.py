"""Acceptance gate: one test per release criterion.

Each test prints a single "criterion N ...: PASS/FAIL" verdict before its
assertions fire, so `pytest tests/test_acceptance.py -s` reads as a
checklist.  Tolerances and trial counts are pinned here on purpose; do
not loosen them to make a regression green.
"""

import time

import numpy as np
import pytest

from respire import dataio
from respire.cli import main as cli_main
from respire.dataio import AlignedDataset, temporal_split
from respire.evaluation import (overfit_flag, r2, robust_r2, smoothness_index,
                                win_counts)
from respire.kernels import (FAMILIES, KernelSpec, gram, kernel_eval,
                             lengthscale_candidates)
from respire.robust import RobustConfig, corruption_budget, fit_respire, hard_threshold
from respire.spr import FitProblem, compress, dual_objective, fit_spr, predict
from respire.synthlab import (SynthSpec, check_eigen_bounds, check_psd_closure,
                              geometric_decay, make_calibration_dataset,
                              plant_outliers, recovery_experiment, shift_targets)
from respire.transfer import (apply_adapter, fit_adapter, run_sensor_scenarios,
                              scenario_kind)


def _verdict(num: int, name: str, ok: bool) -> bool:
    print(f"criterion {num:2d} ({name}): {'PASS' if ok else 'FAIL'}")
    return ok


def _fit_on(train, alpha, lam=1.0, eta=1.0, family="matern32", q=0.5):
    ls = lengthscale_candidates(train.z, [q])[0]
    problem = FitProblem(x1=train.x1, x2=train.x2, z=train.z, y=train.y)
    cfg = RobustConfig(alpha=alpha, eta=eta, lam=lam)
    return fit_respire(problem, KernelSpec(family, ls), cfg,
                       norm_params=train.norm_params)


# --- 1: dual solver vs gradient-descent oracle -------------------------------

def _gd_minimize(A, b, max_iters=200_000):
    # steepest descent with exact line search on x'Ax - 2b'x
    x = np.zeros_like(b)
    tol = 1e-10 * max(1.0, float(np.linalg.norm(b)))
    for _ in range(max_iters):
        g = 2.0 * (A @ x - b)
        if float(np.linalg.norm(g)) <= tol:
            break
        Ag = A @ g
        x = x - (g @ g) / (2.0 * (g @ Ag)) * g
    return x


def test_criterion_1_dual_solver_matches_descent_oracle():
    rng = np.random.default_rng(20260815)
    t0 = time.perf_counter()
    worst_diff, worst_resid_ratio, worst_obj_gap = 0.0, 0.0, -np.inf
    for trial in range(50):
        n = int(rng.integers(2, 41))
        z = rng.uniform(0.0, 1.0, n)
        x1, x2 = rng.normal(0.0, 1.0, n), rng.normal(0.0, 1.0, n)
        y = rng.normal(0.0, 1.0, n)
        lam = float(rng.uniform(0.5, 2.0))
        spec = KernelSpec(FAMILIES[trial % 4], float(rng.uniform(0.3, 1.2)))
        problem = FitProblem(x1=x1, x2=x2, z=z, y=y)

        model = fit_spr(problem, spec, lam)
        beta = model.o * lam

        G = gram(spec, z)
        M = G + G * np.outer(x1, x1) + G * np.outer(x2, x2)
        oracle = _gd_minimize(M + lam * np.eye(n), lam * y)

        worst_diff = max(worst_diff, float(np.linalg.norm(beta - oracle)))
        resid = float(np.linalg.norm((M + lam * np.eye(n)) @ beta - lam * y))
        worst_resid_ratio = max(worst_resid_ratio,
                                resid / (lam * float(np.linalg.norm(y))))
        worst_obj_gap = max(worst_obj_gap,
                            dual_objective(problem, spec, lam, beta)
                            - dual_objective(problem, spec, lam, oracle))
    elapsed = time.perf_counter() - t0

    ok = worst_diff <= 1e-6 and worst_resid_ratio <= 1e-8 and elapsed < 10.0
    assert _verdict(1, "dual solver matches descent oracle", ok), (
        f"worst |beta - oracle| = {worst_diff:.3e}, worst residual ratio = "
        f"{worst_resid_ratio:.3e}, worst objective gap = {worst_obj_gap:.3e}, "
        f"elapsed = {elapsed:.1f}s")


# --- 2: noiseless recovery ----------------------------------------------------

def test_criterion_2_noiseless_recovery():
    t0 = time.perf_counter()
    good = 0
    details = []
    for seed in range(20):
        res = recovery_experiment(SynthSpec(seed=seed))
        ok = (res.final_error <= 1e-4 and res.support_recovered
              and geometric_decay(res.errors))
        good += ok
        details.append((seed, res.final_error, res.support_recovered, ok))
    elapsed = time.perf_counter() - t0

    ok = good >= 19 and elapsed < 120.0
    assert _verdict(2, "noiseless recovery with geometric decay", ok), (
        f"{good}/20 seeds recovered in {elapsed:.1f}s; failures: "
        f"{[d for d in details if not d[3]]}")


# --- 3: noise floor -----------------------------------------------------------

def test_criterion_3_noisy_recovery_within_noise_floor():
    bad = []
    for seed in range(20):
        res = recovery_experiment(SynthSpec(noise_sigma=0.1, seed=seed))
        bound = 7.0 * res.noise_norm + 1e-4
        if res.final_error > bound:
            bad.append((seed, res.final_error, bound))
    ok = not bad
    assert _verdict(3, "noisy recovery within 7x noise floor", ok), (
        f"seeds over the bound: {bad}")


# --- 4: closure and eigenvalue interlacing suites -----------------------------

def test_criterion_4_psd_and_eigen_suites():
    t0 = time.perf_counter()
    psd = check_psd_closure(trials=500, dim=8)
    eig = check_eigen_bounds(trials=200, dim=8, k=3, s=3)
    elapsed = time.perf_counter() - t0

    ok = bool(psd) and bool(eig) and elapsed < 30.0
    assert _verdict(4, "psd closure and eigen bound suites", ok), (
        f"psd failures: {psd.failures[:3]}, eigen failures: {eig.failures[:3]}, "
        f"elapsed = {elapsed:.1f}s")


# --- 5: outlier resistance ----------------------------------------------------

def test_criterion_5_outlier_resistance():
    wins = 0
    rows = []
    for seed in range(10):
        ds = make_calibration_dataset(n=500, seed=seed)
        train, test = temporal_split(ds, 0.8)
        y_bad, _ = plant_outliers(train.y, 0.05, scale=8.0, seed=seed)
        dirty = AlignedDataset(t=train.t, x1=train.x1, x2=train.x2,
                               temp_c=train.temp_c, y=y_bad)
        scores = {}
        for alpha in (0.0, 0.05):
            fit = _fit_on(dirty, alpha)
            scores[alpha] = r2(test.y, predict(fit.model, test.x1, test.x2,
                                               test.temp_c))
        win = scores[0.05] >= 0.95 and scores[0.0] <= scores[0.05] - 0.05
        wins += win
        rows.append((seed, round(scores[0.05], 4), round(scores[0.0], 4)))
    ok = wins >= 8
    assert _verdict(5, "robust fit beats plain fit on 5% outliers", ok), (
        f"{wins}/10 wins; (seed, r2_robust, r2_plain) = {rows}")


# --- 6: compression -----------------------------------------------------------

def test_criterion_6_compression_retention_and_nesting():
    gaps, nested = [], True
    for seed in range(3):
        ds = make_calibration_dataset(n=500, seed=seed)
        train, test = temporal_split(ds, 0.8)
        fit = _fit_on(train, 0.0)
        full = r2(test.y, predict(fit.model, test.x1, test.x2, test.temp_c))
        problem = FitProblem(x1=train.x1, x2=train.x2, z=train.z, y=train.y)
        n = len(train)
        supports = []
        for level in (1.0, 0.5, 0.25, 0.1, 0.05):
            n_keep = max(1, int(np.floor(level * n + 0.5)))
            cm = compress(fit.model, problem, n_keep)
            supports.append(frozenset(np.nonzero(cm.o)[0]))
            if level == 0.1:
                ten = r2(test.y, predict(cm, test.x1, test.x2, test.temp_c))
                gaps.append(full - ten)
        nested = nested and all(small <= big for big, small
                                in zip(supports, supports[1:]))
    ok = nested and all(g <= 0.02 for g in gaps)
    assert _verdict(6, "10% compression within 0.02 and supports nest", ok), (
        f"r2 gaps at 10% retention: {[round(g, 4) for g in gaps]}, "
        f"nesting: {nested}")


# --- 7: adapter fixes affine target shift -------------------------------------

def test_criterion_7_adapter_recovers_shifted_targets():
    ds = make_calibration_dataset(n=500, seed=0)
    shifted = shift_targets(ds, scale=1.2, offset=0.5)
    train, test = temporal_split(shifted, 0.8)
    fit = _fit_on(temporal_split(ds, 0.8)[0], 0.0)
    preds_train = predict(fit.model, train.x1, train.x2, train.temp_c)
    preds_test = predict(fit.model, test.x1, test.x2, test.temp_c)

    pre = r2(test.y, preds_test)
    adapter = fit_adapter(preds_train, train.y)
    post = r2(test.y, apply_adapter(adapter, preds_test))

    ok = pre < 0.5 and post >= 0.95
    assert _verdict(7, "adapter recovers x1.2+0.5 target shift", ok), (
        f"pre-adapter r2 = {pre:.4f}, post-adapter r2 = {post:.4f}")


# --- 8: sensor swap detection and shuffle roughness ----------------------------

def test_criterion_8_sensor_swap_and_shuffle_roughness():
    ds = make_calibration_dataset(n=400, seed=3)
    swapped = AlignedDataset(t=ds.t, x1=ds.x2, x2=ds.x1,
                             temp_c=ds.temp_c, y=ds.y)
    fit = _fit_on(temporal_split(ds, 0.8)[0], 0.0)
    sc = run_sensor_scenarios(ds, swapped, fit.model)
    swap_ok = abs(sc.s4 - sc.s1) <= 1e-6 and sc.s3 < sc.s4

    # both fits share lam=0.1: a lighter ridge lets the shuffled fit
    # actually chase its labels, which is the wiggle the flag measures
    rougher = 0
    for seed in range(10):
        small = make_calibration_dataset(n=200, seed=seed)
        train, _ = temporal_split(small, 0.8)
        clean = _fit_on(train, 0.0, lam=0.1)
        rng = np.random.default_rng(seed)
        scrambled = AlignedDataset(t=train.t, x1=train.x1, x2=train.x2,
                                   temp_c=train.temp_c,
                                   y=rng.permutation(train.y))
        noisy = _fit_on(scrambled, 0.0, lam=0.1)
        total = lambda m: sum(overfit_flag(m).indices.values())
        rougher += total(noisy.model) > total(clean.model)

    ok = swap_ok and rougher == 10
    assert _verdict(8, "op-swap map restores r2; shuffles are rougher", ok), (
        f"s1={sc.s1:.4f} s3={sc.s3:.4f} s4={sc.s4:.4f} "
        f"|s4-s1|={abs(sc.s4 - sc.s1):.2e}; rougher {rougher}/10")


# --- 9: frozen worked examples ------------------------------------------------

def test_criterion_9_frozen_examples_hold():
    checks = []

    checks.append(kernel_eval(KernelSpec("gaussian", 1.0), 0.0, 1.0)
                  == pytest.approx(0.6065306597126334, abs=1e-15))
    checks.append(lengthscale_candidates(np.array([0.0, 1.0, 3.0]),
                                         [0.1, 1.0 / 3.0, 0.5, 0.9])
                  == [1.0, 1.0, 2.0, 3.0])

    model = fit_spr(FitProblem(x1=[2.0], x2=[3.0], z=[0.4], y=[5.0]),
                    KernelSpec("gaussian", 0.5), lam=2.0)
    checks.append(model.o[0] == pytest.approx(0.3125, abs=1e-15))
    checks.append(predict(model, 2.0, 3.0, 0.4) == pytest.approx(4.375, abs=1e-14))

    checks.append(np.array_equal(
        hard_threshold(np.array([3.0, -1.0, 4.0, 1.0, -5.0]), 2),
        [0.0, 0.0, 4.0, 0.0, -5.0]))
    checks.append(corruption_budget(0.29, 100) == 29)

    checks.append(r2([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 5.0])
                  == pytest.approx(0.8, abs=1e-15))
    y = np.arange(10, dtype=float)
    yhat = y.copy()
    yhat[3] += 10.0
    checks.append(r2(y, yhat) == pytest.approx(-0.21212121212121213, abs=1e-15))
    checks.append(robust_r2(y, yhat, 0.1) == pytest.approx(1.0, abs=1e-15))
    checks.append(win_counts({"A": {"e1": 0.9, "e2": 0.8},
                              "B": {"e1": 0.895, "e2": 0.7}}) == {"A": 2, "B": 1})
    checks.append(smoothness_index([0.0, 1.0, 0.0]) == pytest.approx(2.0, abs=1e-15))

    checks.append([scenario_kind("siteA-01", t) for t in
                   ("siteA-01", "siteA-02", "siteB-01", "siteB-02")]
                  == ["SS", "SX", "XS", "XX"])

    ok = all(checks)
    assert _verdict(9, "frozen worked examples hold", ok), (
        f"failed checks at positions {[i for i, c in enumerate(checks) if not c]}")


# --- 10: CLI determinism ------------------------------------------------------

CFG = """respire-config v1
train_frac = 0.8
cv_folds = 3
grid.families = matern32
grid.alphas = 0.0,0.05
grid.q_ls = 0.5
grid.etas = 1.0
grid.lams = 0.5,1.0
"""


def test_criterion_10_cli_outputs_are_byte_identical(tmp_path):
    aligned = str(tmp_path / "aligned.csv")
    dataio.write_aligned_csv(make_calibration_dataset(n=80, seed=1), aligned)
    other = str(tmp_path / "other.csv")
    dataio.write_aligned_csv(make_calibration_dataset(n=80, seed=2), other)
    cfg = str(tmp_path / "run.cfg")
    with open(cfg, "w") as fh:
        fh.write(CFG + "methods = RR\nadapter = off\n"
                 f"dataset.siteA-01 = {aligned}\ndataset.siteB-02 = {other}\n")

    ds = make_calibration_dataset(n=40, seed=4)
    sensor, ref = str(tmp_path / "sensor.csv"), str(tmp_path / "ref.csv")
    with open(sensor, "w") as fh:
        fh.write("timestamp,op1_mv,op2_mv,temp_c\n")
        for i in range(len(ds)):
            fh.write(f"{ds.t[i].isoformat()},{float(ds.x1[i])!r},"
                     f"{float(ds.x2[i])!r},{float(ds.temp_c[i])!r}\n")
    with open(ref, "w") as fh:
        fh.write("timestamp,co_ref\n")
        for i in range(len(ds)):
            fh.write(f"{ds.t[i].isoformat()},{float(ds.y[i])!r}\n")

    model = str(tmp_path / "model.txt")
    assert cli_main(["fit", aligned, model, "--config", cfg]) == 0

    runs = {
        "ingest": lambda out: ["ingest", sensor, ref, out],
        "fit": lambda out: ["fit", aligned, out, "--config", cfg],
        "evaluate": lambda out: ["evaluate", model, aligned, "--out", out],
        "tune": lambda out: ["tune", aligned, out, "--config", cfg],
        "compress": lambda out: ["compress", model, aligned, out,
                                 "--levels", "1.0,0.25"],
        "diagnose": lambda out: ["diagnose", model, out],
        "transfer-matrix": lambda out: ["transfer-matrix", out, "--config", cfg],
        "sensor-transfer": lambda out: ["sensor-transfer", aligned, aligned, out,
                                        "--config", cfg],
        "synth-verify": lambda out: ["synth-verify", "--psd-trials", "5",
                                     "--eigen-trials", "3",
                                     "--recovery-seeds", "1",
                                     "--noisy-seeds", "1", "--decay-csv", out],
    }
    mismatched = []
    for name, argv in runs.items():
        out_a = str(tmp_path / f"{name}-a.out")
        out_b = str(tmp_path / f"{name}-b.out")
        assert cli_main(argv(out_a)) == 0, name
        assert cli_main(argv(out_b)) == 0, name
        if open(out_a, "rb").read() != open(out_b, "rb").read():
            mismatched.append(name)

    ok = not mismatched
    assert _verdict(10, "cli outputs byte-identical on rerun", ok), (
        f"non-deterministic commands: {mismatched}")
