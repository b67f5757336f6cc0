"""Command-line front end.

Exit codes: 0 success, 1 validation error, 2 runtime/numeric error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .analysis import (
    CONVERGED,
    DIVERGED,
    VICINITY,
    memorization_test,
    nearest_neighbor,
    residual_variance,
)
from .dataset import load_csv, save_csv, uniform_toy
from .errors import ErrorModel, sample_batch_with_error
from .exceptions import ExactSIError, InsufficientDataError, ValidationError
from .experiments import (
    CONFIG_SCHEMA_DOC,
    get_preset,
    load_config,
    preset_names,
    run_experiment,
    verify,
)
from .fields import log_density, log_weights, score, velocity, velocity_two_sided
from .samplers import SamplerConfig, sample_batch
from .schedules import available_kinds, make_schedule, validate_schedule

__all__ = ["main"]


def _schedule_from_args(args):
    params = {}
    for item in args.schedule_param or []:
        if "=" not in item:
            raise ValidationError(f"--schedule-param needs key=value, got {item!r}")
        key, val = item.split("=", 1)
        try:
            params[key] = float(val)
        except ValueError:
            raise ValidationError(f"--schedule-param {key}: {val!r} is not a number") from None
    return make_schedule(args.schedule, **params)


def _parse_vec(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise ValidationError(f"expected comma-separated reals, got {text!r}") from None


def _error_model_from_args(args) -> ErrorModel | None:
    if not getattr(args, "error_family", None):
        return None
    direction = "random"
    fixed = None
    spec = getattr(args, "error_direction", "random") or "random"
    if spec.startswith("fixed:"):
        direction = "fixed"
        fixed = tuple(_parse_vec(spec.split(":", 1)[1]))
    elif spec != "random":
        raise ValidationError(f"--error-direction must be 'random' or 'fixed:x,y,...', got {spec!r}")
    return ErrorModel(
        family=args.error_family,
        lam=args.error_lambda,
        direction=direction,
        fixed_direction=fixed,
        seed=args.error_seed,
        clip=args.error_clip,
    )


def _cmd_schedules_list(args) -> int:
    from .schedules import GAMMA_FORMULAS

    for kind in available_kinds():
        print(f"{kind:<8s} alpha = 1-t, beta = t, {GAMMA_FORMULAS[kind]}")
    return 0


def _cmd_dataset_gen(args) -> int:
    ts = uniform_toy(args.n, args.d, args.seed, scale=args.scale)
    save_csv(ts, args.out)
    print(f"wrote {args.n} x {args.d} anchors to {args.out}")
    return 0


def _cmd_dataset_validate(args) -> int:
    ts = load_csv(args.path, header=args.header)
    print(f"OK: {ts.n} anchors of dimension {ts.d}, all finite, no duplicates")
    return 0


def _cmd_field_eval(args) -> int:
    s = _schedule_from_args(args)
    X = load_csv(args.train)
    z = _parse_vec(args.z)
    if args.which == "two-sided":
        if not args.train_y:
            raise ValidationError("--which two-sided needs --train-y")
        Y = load_csv(args.train_y)
        fv = velocity_two_sided(z, args.t, X, Y, s)
        payload = {"value": fv.vector.tolist()}
        weights = fv.weights
    elif args.which == "logdensity":
        payload = {"value": log_density(z, args.t, X, s)}
        weights = log_weights(z, args.t, X, s)
    else:
        fv = velocity(z, args.t, X, s) if args.which == "velocity" else score(z, args.t, X, s)
        payload = {"value": fv.vector.tolist()}
        weights = fv.weights
    payload["weights"] = weights.w.tolist()
    payload["argmax"] = weights.argmax
    print(json.dumps(payload))
    return 0


def _cmd_sample(args) -> int:
    s = _schedule_from_args(args)
    X = load_csv(args.train)
    cfg = SamplerConfig(
        steps=args.n_steps,
        t_end=args.t_end,
        mode=args.mode,
        record_trajectory=bool(args.trajectories),
        master_seed=args.seed,
    )
    model = _error_model_from_args(args)
    if model is not None:
        if args.mode != "deterministic":
            raise ValidationError("error injection applies to deterministic mode")
        trajs = sample_batch_with_error(cfg, model, X, s, args.count, threads=args.threads)
    else:
        trajs = sample_batch(cfg, X, s, args.count, threads=args.threads)
    from .experiments import _write_endpoints, _write_trajectories

    _write_endpoints(args.out, trajs, X)
    print(f"wrote {args.count} endpoints to {args.out}")
    if args.trajectories:
        _write_trajectories(args.trajectories, trajs, X.d, with_eps=model is not None)
        print(f"wrote trajectories to {args.trajectories}")
    n_div = sum(t.diverged for t in trajs)
    if n_div:
        print(f"{n_div} trajectories diverged (flagged in the CSV)")
    return 0


def _load_samples(path):
    """Endpoint CSVs (with header) or raw coordinate matrices both work."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith("sample_id"):
        cols = first.strip().split(",")
        zcols = [i for i, c in enumerate(cols) if c.startswith("z_")]
        div_col = cols.index("diverged") if "diverged" in cols else None
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return rows[:, zcols], (rows[:, div_col].astype(bool) if div_col is not None else None)
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    return rows, None


def _cmd_analyze(args) -> int:
    X = load_csv(args.train)
    Z, diverged = _load_samples(args.samples)
    if Z.shape[1] != X.d:
        raise ValidationError(
            f"samples have dimension {Z.shape[1]} but training set has d={X.d}"
        )
    r_div = args.r_div if args.r_div is not None else 10.0 * (1.0 + X.max_norm())
    classes = []
    per_sample = []
    for k, z in enumerate(Z):
        flagged = bool(diverged[k]) if diverged is not None else False
        nn = nearest_neighbor(z, X)
        if flagged or float(np.sqrt((z**2).sum())) > r_div:
            cls = DIVERGED
        elif nn.d1 <= args.tol_conv:
            cls = CONVERGED
        else:
            cls = VICINITY
        classes.append(cls)
        per_sample.append(
            {
                "id": k,
                "nearest_idx": nn.index1,
                "nearest_dist": nn.d1,
                "second_idx": nn.index2,
                "second_dist": nn.d2,
                "class": cls,
            }
        )
    report = {
        "count": len(Z),
        "threshold": args.threshold,
        "classes": {
            "converged": classes.count(CONVERGED),
            "vicinity": classes.count(VICINITY),
            "diverged": classes.count(DIVERGED),
        },
        "memorized_fraction": None,
        "sigma2_hat": None,
        "per_sample": per_sample,
    }
    if X.n >= 2:
        memo = memorization_test(Z, X, threshold=args.threshold)
        report["memorized_fraction"] = memo.memorized_fraction
        for entry, flag in zip(per_sample, memo.memorized):
            entry["memorized"] = bool(flag)
    try:
        sigma2, means, _ = residual_variance(Z, X)
        report["sigma2_hat"] = sigma2
        report["residual_means"] = [float(v) for v in means]
    except InsufficientDataError:
        pass
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"wrote report to {args.report}")
    return 0


def _cmd_experiment(args) -> int:
    if args.action == "list":
        for name in preset_names():
            print(name)
        return 0
    target = args.target
    if target is None:
        raise ValidationError("experiment run needs a preset name or a config path")
    if target in preset_names():
        cfg = get_preset(target, out_dir=args.out_dir, seed=args.seed)
    else:
        cfg = load_config(target)
        if args.out_dir is not None:
            cfg = cfg.__class__(**{**cfg.to_dict(), "out_dir": args.out_dir})
        if args.seed is not None:
            cfg = cfg.__class__(**{**cfg.to_dict(), "seed": args.seed})
    manifest = run_experiment(cfg, threads=args.threads)
    print(f"experiment {cfg.name}: wrote {len(manifest.files)} files to {cfg.out_dir}")
    print(json.dumps(manifest.summary, indent=2, default=str))
    return 0


def _cmd_verify(args) -> int:
    report = verify(args.suite)
    for line in report.lines():
        print(line)
    n_fail = sum(not c.passed for c in report.checks)
    print(f"{len(report.checks) - n_fail}/{len(report.checks)} checks passed")
    return 0 if report.passed else 3


def _cmd_schema(args) -> int:
    print(CONFIG_SCHEMA_DOC, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="exactsi",
        description="Exact finite-sample interpolant fields, samplers, and analysis.",
    )
    p.add_argument("--version", action="version", version=f"exactsi {__version__}")
    p.add_argument("--threads", type=int, default=1, help="worker threads for batches")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("schedules", help="schedule family utilities")
    ps_sub = ps.add_subparsers(dest="action", required=True)
    ps_sub.add_parser("list", help="list available schedule kinds").set_defaults(
        fn=_cmd_schedules_list
    )

    pd = sub.add_parser("dataset", help="anchor-set utilities")
    pd_sub = pd.add_subparsers(dest="action", required=True)
    pg = pd_sub.add_parser("gen", help="generate a uniform toy set")
    pg.add_argument("--n", type=int, required=True)
    pg.add_argument("--d", type=int, required=True)
    pg.add_argument("--seed", type=int, required=True)
    pg.add_argument("--scale", type=float, default=1.0)
    pg.add_argument("--out", required=True)
    pg.set_defaults(fn=_cmd_dataset_gen)
    pv = pd_sub.add_parser("validate", help="validate an anchor CSV")
    pv.add_argument("path")
    pv.add_argument("--header", action="store_true", help="skip one header line")
    pv.set_defaults(fn=_cmd_dataset_validate)

    pf = sub.add_parser("field", help="evaluate closed-form fields")
    pf_sub = pf.add_subparsers(dest="action", required=True)
    pe = pf_sub.add_parser("eval", help="evaluate a field at one point")
    pe.add_argument("--which", required=True,
                    choices=["velocity", "score", "logdensity", "two-sided"])
    pe.add_argument("--z", required=True, help="comma-separated coordinates")
    pe.add_argument("--t", type=float, required=True)
    pe.add_argument("--schedule", required=True, choices=available_kinds())
    pe.add_argument("--schedule-param", action="append", metavar="KEY=VALUE")
    pe.add_argument("--train", required=True, help="anchor CSV")
    pe.add_argument("--train-y", help="second anchor CSV (two-sided)")
    pe.set_defaults(fn=_cmd_field_eval)

    pm = sub.add_parser("sample", help="run the samplers")
    pm.add_argument("--mode", default="deterministic",
                    choices=["deterministic", "stochastic"])
    pm.add_argument("--schedule", required=True, choices=available_kinds())
    pm.add_argument("--schedule-param", action="append", metavar="KEY=VALUE")
    pm.add_argument("--train", required=True)
    pm.add_argument("--n-steps", type=int, default=2000)
    pm.add_argument("--t-end", type=float, default=1e-3)
    pm.add_argument("--count", type=int, default=1)
    pm.add_argument("--seed", type=int, default=0)
    pm.add_argument("--out", required=True, help="endpoint CSV path")
    pm.add_argument("--trajectories", help="also record full trajectories to this CSV")
    pm.add_argument("--error-family",
                    choices=["bounded", "gamma-scaled", "density-inverse"])
    pm.add_argument("--error-lambda", type=float, default=0.0)
    pm.add_argument("--error-direction", default="random",
                    help="'random' or 'fixed:x,y,...'")
    pm.add_argument("--error-seed", type=int, default=0)
    pm.add_argument("--error-clip", type=float, default=1e12)
    pm.set_defaults(fn=_cmd_sample)

    pa = sub.add_parser("analyze", help="nearest-anchor metrics for endpoints")
    pa.add_argument("--samples", required=True)
    pa.add_argument("--train", required=True)
    pa.add_argument("--report", required=True)
    pa.add_argument("--tol-conv", type=float, default=1e-2)
    pa.add_argument("--r-div", type=float, default=None)
    pa.add_argument("--threshold", type=float, default=1.0 / 3.0)
    pa.set_defaults(fn=_cmd_analyze)

    px = sub.add_parser("experiment", help="run named experiment presets or configs")
    px.add_argument("action", choices=["run", "list"])
    px.add_argument("target", nargs="?", help="preset name or config JSON path")
    px.add_argument("--out-dir", default=None)
    px.add_argument("--seed", type=int, default=None)
    px.set_defaults(fn=_cmd_experiment)

    pv2 = sub.add_parser("verify", help="run the cross-module verification suite")
    pv2.add_argument("suite", nargs="?", default="all",
                     choices=["oracles", "invariants", "all"])
    pv2.set_defaults(fn=_cmd_verify)

    pc = sub.add_parser("config-schema", help="print the experiment config schema")
    pc.set_defaults(fn=_cmd_schema)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ExactSIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
