"""Command-line pipeline driver.

Subcommands cover the full workflow: ingest raw CSVs, fit and tune on a
train split, evaluate, sweep transfer scenarios, compress and diagnose
fitted models, and run the synthetic verification suites.  Exit codes:
0 success, 1 failed verification assertions, 2 usage or input errors.
All file outputs are deterministic functions of the inputs and seed.
"""

import argparse
import math
import sys

import numpy as np

from . import dataio, model_io
from .config import RunConfig, load_config
from .evaluation import (evaluate_predictions, overfit_flag, r2, win_counts,
                         write_report_csv)
from .robust import fit_respire
from .spr import FitProblem, compress, predict, weight_curves
from .synthlab import (SynthSpec, check_eigen_bounds, check_psd_closure,
                       geometric_decay, recovery_experiment)
from .transfer import (ScenarioCell, fit_adapter, apply_adapter,
                       run_sensor_scenarios, scenario_kind, _scenario_rows)
from .tuning import grid_search

__all__ = ["main"]


def _cfg(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    for name in ("train_frac", "cv_folds", "min_points"):
        val = getattr(args, name, None)
        if val is not None:
            overrides[name] = val
    if overrides:
        cfg = RunConfig(**{**cfg.__dict__, **overrides})
    return cfg


def _fit_on_train(train, cfg):
    """Grid-search on the train split, then fit it with the winning cell."""
    result = grid_search(train, cfg.grid, k=cfg.cv_folds)
    problem = FitProblem(x1=train.x1, x2=train.x2, z=train.z, y=train.y)
    fit = fit_respire(problem, result.kernel, result.config,
                      norm_params=train.norm_params)
    return result, fit


def cmd_ingest(args) -> int:
    sensor = dataio.read_sensor_csv(args.sensor_csv, sensor_id=args.sensor_id)
    ref = dataio.read_reference_csv(args.reference_csv)
    rs = dataio.resample_average(sensor, args.window_minutes, args.min_valid_frac)
    rr = dataio.resample_reference(ref, args.window_minutes, args.min_valid_frac)
    ds = dataio.align(rs, rr)
    dataio.write_aligned_csv(ds, args.out_csv)
    print(f"sensor records:    {len(sensor)}")
    print(f"reference records: {len(ref)}")
    print(f"sensor windows:    {len(rs)}")
    print(f"reference windows: {len(rr)}")
    print(f"aligned records:   {len(ds)}")
    print(f"wrote {args.out_csv}")
    return 0


def cmd_fit(args) -> int:
    cfg = _cfg(args)
    ds = dataio.read_aligned_csv(args.aligned_csv)
    if len(ds) < cfg.min_points:
        raise ValueError(
            f"refusing to fit: {len(ds)} aligned points < minimum {cfg.min_points}")
    train, test = dataio.temporal_split(ds, cfg.train_frac)
    result, fit = _fit_on_train(train, cfg)
    # persist the effective target correction eta*c so downstream refits
    # (compress) can rebuild the exact fit targets without knowing eta
    correction = result.config.eta * fit.corruption
    model_io.save_model(fit.model, args.model_out,
                        corruption=correction if np.any(correction != 0.0) else None)
    train_r2 = r2(train.y, predict(fit.model, train.x1, train.x2, train.temp_c))
    test_r2 = r2(test.y, predict(fit.model, test.x1, test.x2, test.temp_c))
    print(f"selected: family={result.family} q_ls={result.q_ls} "
          f"length_scale={result.kernel.length_scale:.6g} alpha={result.config.alpha} "
          f"eta={result.config.eta} lambda={result.config.lam}")
    print(f"cv mean r2: {result.mean_r2:.6f}")
    print(f"train r2:   {train_r2:.6f}")
    print(f"test r2:    {test_r2:.6f}")
    print(f"wrote {args.model_out}")
    return 0


def _select_split(ds, split, train_frac):
    if split == "all":
        return ds, None
    train, test = dataio.temporal_split(ds, train_frac)
    return (test, train) if split == "test" else (train, train)


def cmd_evaluate(args) -> int:
    model, _ = model_io.load_model(args.model)
    ds = dataio.read_aligned_csv(args.aligned_csv)
    eval_ds, train_ds = _select_split(ds, args.split, args.train_frac)
    yhat = predict(model, eval_ds.x1, eval_ds.x2, eval_ds.temp_c)
    if args.adapter:
        if train_ds is None:
            train_ds, _ = dataio.temporal_split(ds, args.train_frac)
        adapter = fit_adapter(
            predict(model, train_ds.x1, train_ds.x2, train_ds.temp_c), train_ds.y)
        yhat = apply_adapter(adapter, yhat)
        print(f"adapter: a={adapter.a:.6f} b={adapter.b:.6f}")
    dataset_id = args.dataset_id or args.aligned_csv
    report = evaluate_predictions(eval_ds.y, yhat, method_id=args.method_id,
                                  dataset_id=dataset_id)
    print(f"n:  {report.n}")
    print(f"r2: {report.r2:.6f}")
    for delta, val in report.robust_curve:
        print(f"robust_r2({delta}): {val:.6f}")
    if args.out:
        write_report_csv(report, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_tune(args) -> int:
    cfg = _cfg(args)
    ds = dataio.read_aligned_csv(args.aligned_csv)
    train, _ = dataio.temporal_split(ds, cfg.train_frac)
    result = grid_search(train, cfg.grid, k=cfg.cv_folds)
    k = cfg.cv_folds
    with open(args.table_out, "w", newline="") as fh:
        fold_cols = ",".join(f"fold_{i + 1}" for i in range(k))
        fh.write(f"family,q_ls,alpha,eta,lambda,mean_r2,{fold_cols},error\n")
        for cell in result.table:
            folds = list(cell.fold_r2) + [float("nan")] * (k - len(cell.fold_r2))
            fh.write(",".join([cell.family, repr(cell.q_ls), repr(cell.alpha),
                               repr(cell.eta), repr(cell.lam), repr(cell.mean_r2)]
                              + [repr(v) for v in folds] + [cell.error]) + "\n")
    print(f"best: family={result.family} q_ls={result.q_ls} "
          f"length_scale={result.kernel.length_scale:.6g} alpha={result.config.alpha} "
          f"eta={result.config.eta} lambda={result.config.lam} "
          f"mean_r2={result.mean_r2:.6f}")
    print(f"wrote {args.table_out}")
    return 0


def cmd_transfer_matrix(args) -> int:
    if not args.config:
        raise ValueError("transfer-matrix requires --config with dataset entries")
    cfg = _cfg(args)
    if len(cfg.datasets) < 2:
        raise ValueError(f"transfer-matrix needs >= 2 datasets, got {len(cfg.datasets)}")
    loaded, load_errors = {}, {}
    for name, path in cfg.datasets.items():
        try:
            loaded[name] = dataio.read_aligned_csv(path)
        except ValueError as exc:
            load_errors[name] = str(exc)
    settings = {"on": (True,), "off": (False,), "both": (False, True)}[cfg.adapter]
    rows = list(_scenario_rows(loaded, cfg.methods, settings,
                               cfg.train_frac, cfg.cv_folds, cfg.grid)) if loaded else []
    for source in cfg.datasets:
        for method in cfg.methods:
            for target in cfg.datasets:
                if source in load_errors or target in load_errors:
                    bad = source if source in load_errors else target
                    for use_adapter in settings:
                        rows.append(ScenarioCell(
                            method, source, target, scenario_kind(source, target),
                            use_adapter, float("nan"), float("nan"), 0,
                            f"dataset {bad} failed to load: {load_errors[bad]}"))

    with open(args.out_csv, "w", newline="") as fh:
        fh.write("method,source,target,kind,adapter,r2,robust_r2_at_0.05,n_test\n")
        for row in rows:
            ok = not row.error
            fh.write(",".join([
                row.method, row.source, row.target, row.kind,
                "on" if row.adapter else "off",
                repr(row.r2) if ok else "",
                repr(row.robust_r2_05) if ok else "",
                str(row.n_test),
            ]) + "\n")

    scores = {}
    for row in rows:
        if not row.error and math.isfinite(row.r2):
            key = (row.source, row.target, row.kind, row.adapter)
            scores.setdefault(row.method, {})[key] = row.r2
    if scores:
        wins = win_counts(scores)
        summary = " ".join(f"{m}={wins.get(m, 0)}" for m in cfg.methods if m in wins)
        print(f"win counts: {summary}")
    failures = [row for row in rows if row.error]
    for row in failures:
        print(f"cell error: method={row.method} source={row.source} "
              f"target={row.target} adapter={'on' if row.adapter else 'off'}: {row.error}")
    print(f"wrote {args.out_csv} ({len(rows)} rows, {len(failures)} failed)")
    return 1 if rows and len(failures) == len(rows) else 0


def cmd_sensor_transfer(args) -> int:
    cfg = _cfg(args)
    source = dataio.read_aligned_csv(args.source_csv)
    target = dataio.read_aligned_csv(args.target_csv)
    sid, tid = args.source_id, args.target_id
    lines = []
    for a_id, a_ds, b_id, b_ds in ((sid, source, tid, target), (tid, target, sid, source)):
        a_train, _ = dataio.temporal_split(a_ds, cfg.train_frac)
        _, fit = _fit_on_train(a_train, cfg)
        sc = run_sensor_scenarios(a_ds, b_ds, fit.model, cfg.train_frac)
        lines.append((f"{a_id}->{b_id}", sc))
    with open(args.out_csv, "w", newline="") as fh:
        fh.write("direction,s1,s2,s3,s4,s5\n")
        for direction, sc in lines:
            fh.write(direction + "," + ",".join(repr(v) for v in sc.values()) + "\n")
    for direction, sc in lines:
        print(f"{direction}: " + " ".join(
            f"s{i + 1}={v:.4f}" for i, v in enumerate(sc.values())))
    print(f"wrote {args.out_csv}")
    return 0


def cmd_compress(args) -> int:
    cfg = _cfg(args)
    model, corruption = model_io.load_model(args.model)
    ds = dataio.read_aligned_csv(args.aligned_csv)
    train, test = dataio.temporal_split(ds, cfg.train_frac)
    n = len(train)
    if model.z_train.shape[0] != n:
        raise ValueError(f"model was fit on {model.z_train.shape[0]} points but the "
                         f"train split has {n}; check --train-frac and the input csv")
    z = model.normalize_z(train.temp_c)
    if not np.allclose(z, model.z_train, atol=1e-10):
        raise ValueError("train split does not match the model's training data")
    y = train.y - corruption if corruption is not None else train.y
    problem = FitProblem(x1=train.x1, x2=train.x2, z=model.z_train, y=y)
    levels = (tuple(float(v) for v in args.levels.split(","))
              if args.levels else cfg.compression_levels)
    rows = []
    for level in levels:
        if not 0.0 < level <= 1.0:
            raise ValueError(f"compression level must lie in (0, 1], got {level}")
        n_keep = max(1, int(math.floor(level * n + 0.5)))
        cm = compress(model, problem, n_keep)
        score = r2(test.y, predict(cm, test.x1, test.x2, test.temp_c))
        rows.append((level, n_keep, score))
    with open(args.out_csv, "w", newline="") as fh:
        fh.write("level,n_keep,r2\n")
        for level, n_keep, score in rows:
            fh.write(f"{repr(level)},{n_keep},{repr(score)}\n")
    for level, n_keep, score in rows:
        print(f"level={level} n_keep={n_keep} test_r2={score:.6f}")
    print(f"wrote {args.out_csv}")
    return 0


def cmd_diagnose(args) -> int:
    model, _ = model_io.load_model(args.model)
    zmin, zmax = model.norm_params
    lo = zmin + float(model.z_train.min()) * (zmax - zmin)
    hi = zmin + float(model.z_train.max()) * (zmax - zmin)
    if hi <= lo:
        hi = lo + 1.0
    grid = np.linspace(lo, hi, args.n_grid)
    w1, w2, b = weight_curves(model, grid)
    with open(args.out_csv, "w", newline="") as fh:
        fh.write("z,w1,w2,b\n")
        for i in range(grid.shape[0]):
            fh.write(",".join(repr(float(v)) for v in (grid[i], w1[i], w2[i], b[i])) + "\n")
    diag = overfit_flag(model, tau=args.tau, n_grid=args.n_grid)
    for name in ("w1", "w2", "b"):
        print(f"smoothness {name}: {diag.indices[name]:.4f}")
    print(f"overfit flag (tau={args.tau}): {'FLAGGED' if diag.flagged else 'ok'}")
    print(f"wrote {args.out_csv}")
    return 0


def cmd_synth_verify(args) -> int:
    failed = []

    psd = check_psd_closure(trials=args.psd_trials, dim=args.dim, seed=args.seed)
    print(f"psd closure: {'PASS' if psd else 'FAIL'} "
          f"({psd.n_trials} trials, {len(psd.failures)} violations)")
    if not psd:
        trial, detail = psd.failures[0]
        print(f"  first violation at trial {trial}: {detail}")
        failed.append("psd closure")

    eig = check_eigen_bounds(trials=args.eigen_trials, dim=args.dim, seed=args.seed)
    print(f"eigen bounds: {'PASS' if eig else 'FAIL'} "
          f"({eig.n_trials} trials, {len(eig.failures)} violations)")
    if not eig:
        trial, detail = eig.failures[0]
        print(f"  first violation at trial {trial}: {detail}")
        failed.append("eigen bounds")

    decay_rows = []

    def recovery_suite(tag, sigma, seeds, allowed_failures):
        bad = []
        for seed in range(seeds):
            res = recovery_experiment(SynthSpec(noise_sigma=sigma, seed=seed))
            ok = res.recovered and res.support_recovered
            if sigma == 0.0:
                ok = ok and geometric_decay(res.errors)
            if not ok:
                bad.append(seed)
            for i, (err, raw) in enumerate(zip(res.errors, res.raw_errors)):
                decay_rows.append((tag, seed, i, err, raw))
        status = "PASS" if len(bad) <= allowed_failures else "FAIL"
        print(f"{tag} recovery: {status} ({seeds - len(bad)}/{seeds} seeds)")
        if bad:
            print(f"  failing seeds: {','.join(str(s) for s in bad)}")
        if status == "FAIL":
            failed.append(f"{tag} recovery")

    recovery_suite("noiseless", 0.0, args.recovery_seeds, args.recovery_seeds // 20)
    recovery_suite("noisy", args.noise_sigma, args.noisy_seeds, 0)

    if args.decay_csv:
        with open(args.decay_csv, "w", newline="") as fh:
            fh.write("regime,seed,iteration,subspace_error,raw_error\n")
            for tag, seed, i, err, raw in decay_rows:
                fh.write(f"{tag},{seed},{i},{repr(err)},{repr(raw)}\n")
        print(f"wrote {args.decay_csv}")

    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return 1
    print("all suites passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="respire",
        description="Outlier-resistant semi-parametric sensor calibration.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="resample and align raw sensor/reference CSVs")
    p.add_argument("sensor_csv")
    p.add_argument("reference_csv")
    p.add_argument("out_csv")
    p.add_argument("--window-minutes", type=int, default=15)
    p.add_argument("--min-valid-frac", type=float, default=0.5)
    p.add_argument("--sensor-id", default="0000")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="tune on the train split and fit a model")
    p.add_argument("aligned_csv")
    p.add_argument("model_out")
    p.add_argument("--config")
    p.add_argument("--train-frac", type=float)
    p.add_argument("--cv-folds", type=int)
    p.add_argument("--min-points", type=int)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="score a model on an aligned CSV")
    p.add_argument("model")
    p.add_argument("aligned_csv")
    p.add_argument("--split", choices=("test", "train", "all"), default="test")
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--adapter", action="store_true",
                   help="fit an affine adapter on the train split first")
    p.add_argument("--out", help="write a report CSV here")
    p.add_argument("--method-id", default="RESPIRE")
    p.add_argument("--dataset-id", default="")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tune", help="grid-search the train split, dump the CV table")
    p.add_argument("aligned_csv")
    p.add_argument("table_out")
    p.add_argument("--config")
    p.add_argument("--train-frac", type=float)
    p.add_argument("--cv-folds", type=int)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("transfer-matrix",
                       help="sweep all (source, target) dataset pairs per method")
    p.add_argument("out_csv")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_transfer_matrix)

    p = sub.add_parser("sensor-transfer",
                       help="run the five sensor-replacement scenarios both ways")
    p.add_argument("source_csv")
    p.add_argument("target_csv")
    p.add_argument("out_csv")
    p.add_argument("--config")
    p.add_argument("--train-frac", type=float)
    p.add_argument("--cv-folds", type=int)
    p.add_argument("--source-id", default="source")
    p.add_argument("--target-id", default="target")
    p.set_defaults(func=cmd_sensor_transfer)

    p = sub.add_parser("compress", help="retention sweep for a fitted model")
    p.add_argument("model")
    p.add_argument("aligned_csv")
    p.add_argument("out_csv")
    p.add_argument("--levels", help="comma-separated retention fractions")
    p.add_argument("--config")
    p.add_argument("--train-frac", type=float)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("diagnose", help="weight curves and smoothness diagnostics")
    p.add_argument("model")
    p.add_argument("out_csv")
    p.add_argument("--tau", type=float, default=3.0)
    p.add_argument("--n-grid", type=int, default=200)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("synth-verify", help="run the synthetic verification suites")
    p.add_argument("--psd-trials", type=int, default=500)
    p.add_argument("--eigen-trials", type=int, default=200)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--recovery-seeds", type=int, default=20)
    p.add_argument("--noisy-seeds", type=int, default=20)
    p.add_argument("--noise-sigma", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decay-csv")
    p.set_defaults(func=cmd_synth_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
