"""Named, reproducible experiments and the cross-module verification suite.

An experiment config is a flat JSON document (see ``CONFIG_SCHEMA_DOC``)
naming a schedule, a dataset, sampler settings, an optional error model,
and analysis thresholds.  Running one writes, into its output directory:

    endpoints.csv     sample_id, z_0..z_{d-1}, nearest_idx, nearest_dist, diverged
    trajectories.csv  sample_id, t, z_0..z_{d-1} [, eps_norm, clipped]   (optional)
    report.json       aggregate metrics and the per-sample breakdown
    scatter.svg       anchors vs endpoints, classes color-coded (d = 2 only)
    manifest.json     config hash, file list, duration, version, summary

Identical config + seed gives byte-identical endpoints.csv.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    CONVERGED,
    DIVERGED,
    VICINITY,
    classify_endpoints,
    fd_score_oracle,
    mc_velocity_oracle,
    memorization_test,
    nearest_neighbor,
    residual_variance,
)
from .dataset import TrainingSet, load_csv, uniform_toy
from .errors import ErrorModel, sample_batch_with_error
from .exceptions import ValidationError
from .fields import log_density, log_weights, score, velocity
from .plotting import emit_scatter
from .samplers import (
    DRAW,
    TO_X,
    TO_Y,
    SamplerConfig,
    sample_batch,
    sample_deterministic,
    sample_stochastic,
    sample_two_sided_batch,
)
from .schedules import Schedule, coeffs, make_schedule, noise_variance, validate_schedule

__all__ = [
    "ExperimentConfig",
    "RunManifest",
    "PRESETS",
    "preset_names",
    "load_config",
    "config_from_dict",
    "run_experiment",
    "verify",
    "VerifyReport",
]

CONFIG_SCHEMA_DOC = """\
Config keys (JSON object):
  name      str, experiment label
  seed      int, master seed for sampling substreams
  schedule  {"kind": str, "params": {str: float}}
  dataset   {"kind": "uniform", "n": int, "d": int, "seed": int,
             "scale": float = 1, "offset": [float] = 0}
          | {"kind": "csv", "path": str}
          | {"kind": "inline", "points": [[float]]}
  sampler   {"steps": int, "t_end": float, "mode": "deterministic"|"stochastic",
             "count": int, "record_trajectory": bool = false}
  error     null | {"family": "bounded"|"gamma-scaled"|"density-inverse",
                    "lambda": float, "direction": "random"|"fixed",
                    "fixed_direction": [float] | null, "seed": int = 0,
                    "clip": float = 1e12}
  two_sided null | {"dataset_y": <dataset>, "runs_per_direction": int,
                    "jitter": float = 1e-3}
  analysis  {"tol_conv": float = 1e-2, "r_div": float | null,
             "memo_threshold": float = 1/3}
  out_dir   str
"""


def _require(cond: bool, path: str, msg: str):
    if not cond:
        raise ValidationError(f"config error at {path}: {msg}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, JSON-round-trippable experiment description."""

    name: str
    seed: int
    schedule: dict
    dataset: dict
    sampler: dict
    error: dict | None = None
    two_sided: dict | None = None
    analysis: dict = dc_field(default_factory=dict)
    out_dir: str = "runs/out"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "schedule": self.schedule,
            "dataset": self.dataset,
            "sampler": self.sampler,
            "error": self.error,
            "two_sided": self.two_sided,
            "analysis": self.analysis,
            "out_dir": self.out_dir,
        }

    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _check_dataset_spec(spec: dict, path: str):
    _require(isinstance(spec, dict), path, "must be an object")
    kind = spec.get("kind")
    _require(kind in ("uniform", "csv", "inline"), f"{path}.kind", "one of uniform|csv|inline")
    if kind == "uniform":
        for key in ("n", "d", "seed"):
            _require(isinstance(spec.get(key), int), f"{path}.{key}", "integer required")
    elif kind == "csv":
        _require(isinstance(spec.get("path"), str), f"{path}.path", "string required")
    else:
        _require(isinstance(spec.get("points"), list), f"{path}.points", "list required")


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Validate a raw config dict; errors name the offending key path."""
    _require(isinstance(doc, dict), "$", "config must be a JSON object")
    known = {
        "name", "seed", "schedule", "dataset", "sampler",
        "error", "two_sided", "analysis", "out_dir",
    }
    extra = set(doc) - known
    _require(not extra, "$", f"unknown keys {sorted(extra)}")
    _require(isinstance(doc.get("name"), str), "$.name", "string required")
    _require(isinstance(doc.get("seed"), int), "$.seed", "integer required")

    sched = doc.get("schedule")
    _require(isinstance(sched, dict), "$.schedule", "object required")
    _require(isinstance(sched.get("kind"), str), "$.schedule.kind", "string required")
    params = sched.get("params", {})
    _require(isinstance(params, dict), "$.schedule.params", "object required")

    _check_dataset_spec(doc.get("dataset"), "$.dataset")

    samp = doc.get("sampler")
    _require(isinstance(samp, dict), "$.sampler", "object required")
    for key in ("steps", "count"):
        _require(isinstance(samp.get(key), int), f"$.sampler.{key}", "integer required")
    _require(
        isinstance(samp.get("t_end"), (int, float)), "$.sampler.t_end", "number required"
    )
    _require(
        samp.get("mode") in ("deterministic", "stochastic"),
        "$.sampler.mode",
        "deterministic|stochastic",
    )

    err = doc.get("error")
    if err is not None:
        _require(isinstance(err, dict), "$.error", "object or null")
        _require(
            err.get("family") in ("bounded", "gamma-scaled", "density-inverse"),
            "$.error.family",
            "bounded|gamma-scaled|density-inverse",
        )
        _require(
            isinstance(err.get("lambda"), (int, float)), "$.error.lambda", "number required"
        )

    two = doc.get("two_sided")
    if two is not None:
        _require(isinstance(two, dict), "$.two_sided", "object or null")
        _check_dataset_spec(two.get("dataset_y"), "$.two_sided.dataset_y")
        _require(
            isinstance(two.get("runs_per_direction"), int),
            "$.two_sided.runs_per_direction",
            "integer required",
        )

    ana = doc.get("analysis", {})
    _require(isinstance(ana, dict), "$.analysis", "object required")

    return ExperimentConfig(
        name=doc["name"],
        seed=doc["seed"],
        schedule={"kind": sched["kind"], "params": dict(params)},
        dataset=dict(doc["dataset"]),
        sampler=dict(samp),
        error=dict(err) if err else None,
        two_sided=dict(two) if two else None,
        analysis=dict(ana),
        out_dir=str(doc.get("out_dir", "runs/out")),
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(doc)


def _build_dataset(spec: dict) -> TrainingSet:
    if spec["kind"] == "uniform":
        return uniform_toy(
            spec["n"], spec["d"], spec["seed"],
            scale=spec.get("scale", 1.0),
            offset=np.asarray(spec.get("offset", 0.0), dtype=float),
        )
    if spec["kind"] == "csv":
        return load_csv(spec["path"])
    return TrainingSet(points=np.asarray(spec["points"], dtype=float))


def _build_schedule(spec: dict) -> Schedule:
    return make_schedule(spec["kind"], **spec.get("params", {}))


def _build_error(spec: dict | None) -> ErrorModel | None:
    if spec is None:
        return None
    return ErrorModel(
        family=spec["family"],
        lam=float(spec["lambda"]),
        direction=spec.get("direction", "random"),
        fixed_direction=tuple(spec["fixed_direction"]) if spec.get("fixed_direction") else None,
        seed=int(spec.get("seed", 0)),
        clip=float(spec.get("clip", 1e12)),
    )


@dataclass
class RunManifest:
    config_hash: str
    files: list[str]
    duration_seconds: float
    version: str
    summary: dict

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "files": self.files,
            "duration_seconds": self.duration_seconds,
            "version": self.version,
            "summary": self.summary,
        }


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_endpoints(path, trajectories, X: TrainingSet):
    with open(path, "w", encoding="utf-8") as fh:
        cols = ["sample_id"] + [f"z_{j}" for j in range(X.d)]
        cols += ["nearest_idx", "nearest_dist", "diverged"]
        fh.write(",".join(cols) + "\n")
        for tr in trajectories:
            nn = nearest_neighbor(tr.endpoint, X)
            row = [str(tr.seed)] + [_fmt(v) for v in tr.endpoint]
            row += [str(nn.index1), _fmt(nn.d1), "1" if tr.diverged else "0"]
            fh.write(",".join(row) + "\n")


def _write_trajectories(path, trajectories, d: int, with_eps: bool):
    with open(path, "w", encoding="utf-8") as fh:
        cols = ["sample_id", "t"] + [f"z_{j}" for j in range(d)]
        if with_eps:
            cols += ["eps_norm", "clipped"]
        fh.write(",".join(cols) + "\n")
        for tr in trajectories:
            if tr.states is None:
                continue
            for k, (t, state) in enumerate(zip(tr.times, tr.states)):
                row = [str(tr.seed), _fmt(t)] + [_fmt(v) for v in state]
                if with_eps:
                    if tr.eps_norms is not None and k < len(tr.eps_norms):
                        row += [_fmt(tr.eps_norms[k]), "1" if tr.eps_clipped[k] else "0"]
                    else:
                        row += ["", ""]
                fh.write(",".join(row) + "\n")


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> RunManifest:
    """Execute the configured pipeline and emit all artifacts."""
    started = time.time()
    s = _build_schedule(cfg.schedule)
    rep = validate_schedule(s)
    # the quad family intentionally breaks gamma(1)=0 (it exists as the
    # divergent error-regime exemplar); that one check is downgraded to a
    # warning, everything else is fatal before any sampling begins
    warnings = []
    fatal = []
    for name, ok, detail in rep.checks:
        if ok:
            continue
        (warnings if name == "gamma(1)=0" else fatal).append(f"{name}: {detail}")
    if fatal:
        raise ValidationError("schedule failed validation: " + "; ".join(fatal))
    X = _build_dataset(cfg.dataset)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []
    ana = cfg.analysis
    tol_conv = float(ana.get("tol_conv", 1e-2))
    r_div = ana.get("r_div")
    memo_thr = float(ana.get("memo_threshold", 1.0 / 3.0))

    if cfg.two_sided is not None:
        summary = _run_two_sided_experiment(cfg, s, X, out, files, tol_conv, memo_thr)
    else:
        summary = _run_one_sided_experiment(
            cfg, s, X, out, files, tol_conv, r_div, memo_thr, threads
        )
    if warnings:
        summary["schedule_warnings"] = warnings

    manifest = RunManifest(
        config_hash=cfg.hash(),
        files=sorted(files + ["manifest.json"]),
        duration_seconds=round(time.time() - started, 3),
        version=__version__,
        summary=summary,
    )
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)
        fh.write("\n")
    return manifest


def _run_one_sided_experiment(cfg, s, X, out, files, tol_conv, r_div, memo_thr, threads):
    samp = cfg.sampler
    scfg = SamplerConfig(
        steps=int(samp["steps"]),
        t_end=float(samp["t_end"]),
        mode=samp["mode"],
        record_trajectory=bool(samp.get("record_trajectory", False)),
        master_seed=int(cfg.seed),
    )
    model = _build_error(cfg.error)
    count = int(samp["count"])
    if model is not None:
        trajectories = sample_batch_with_error(scfg, model, X, s, count, threads=threads)
    else:
        trajectories = sample_batch(scfg, X, s, count, threads=threads)

    _write_endpoints(out / "endpoints.csv", trajectories, X)
    files.append("endpoints.csv")
    if scfg.record_trajectory:
        _write_trajectories(
            out / "trajectories.csv", trajectories, X.d, with_eps=model is not None
        )
        files.append("trajectories.csv")

    endpoints = np.vstack([tr.endpoint for tr in trajectories])
    classes, class_idx = classify_endpoints(trajectories, X, tol_conv=tol_conv, r_div=r_div)
    report = {
        "count": count,
        "threshold": memo_thr,
        "classes": {
            "converged": classes.count(CONVERGED),
            "vicinity": classes.count(VICINITY),
            "diverged": classes.count(DIVERGED),
        },
        "sigma2_hat": None,
        "memorized_fraction": None,
        "noise_variance_target": noise_variance(s) if scfg.mode == "stochastic" else None,
        "per_sample": [],
    }
    memo_flags = [None] * count
    if X.n >= 2:
        memo = memorization_test(endpoints, X, threshold=memo_thr)
        report["memorized_fraction"] = memo.memorized_fraction
        memo_flags = [bool(v) for v in memo.memorized]
    alive = np.array([not tr.diverged for tr in trajectories])
    if alive.sum() >= 30:
        sigma2, means, _ = residual_variance(endpoints[alive], X)
        report["sigma2_hat"] = sigma2
        report["residual_means"] = [float(v) for v in means]
    for k, tr in enumerate(trajectories):
        nn = nearest_neighbor(tr.endpoint, X)
        report["per_sample"].append(
            {
                "id": tr.seed,
                "nearest_idx": nn.index1,
                "nearest_dist": nn.d1,
                "second_idx": nn.index2,
                "second_dist": nn.d2,
                "memorized": memo_flags[k],
                "class": classes[k],
                "anchor": class_idx[k],
            }
        )
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    files.append("report.json")

    if X.d == 2:
        emit_scatter(
            list(zip(endpoints, classes)), X, out / "scatter.svg", title=cfg.name
        )
        files.append("scatter.svg")

    return {
        "classes": report["classes"],
        "memorized_fraction": report["memorized_fraction"],
        "sigma2_hat": report["sigma2_hat"],
        "diverged": int((~alive).sum()),
    }


def _run_two_sided_experiment(cfg, s, X, out, files, tol_conv, memo_thr):
    two = cfg.two_sided
    Y = _build_dataset(two["dataset_y"])
    samp = cfg.sampler
    scfg = SamplerConfig(
        steps=int(samp["steps"]),
        t_end=float(samp["t_end"]),
        mode="deterministic",
        record_trajectory=bool(samp.get("record_trajectory", False)),
        master_seed=int(cfg.seed),
    )
    runs = int(two["runs_per_direction"])
    jitter = float(two.get("jitter", 1e-3))
    rng = np.random.default_rng(cfg.seed)
    summary = {}
    for direction, src, tgt, fname in (
        (TO_X, Y, X, "endpoints_to_x.csv"),
        (TO_Y, X, Y, "endpoints_to_y.csv"),
    ):
        idx = np.arange(runs) % src.n
        starts = src.points[idx] + jitter * rng.standard_normal((runs, src.d))
        trajectories = sample_two_sided_batch(scfg, X, Y, s, direction, starts)
        _write_endpoints(out / fname, trajectories, tgt)
        files.append(fname)
        dists = np.array(
            [nearest_neighbor(tr.endpoint, tgt).d1 for tr in trajectories]
        )
        summary[direction] = {
            "within_tol": float((dists <= tol_conv).mean()),
            "median_dist": float(np.median(dists)),
        }
        if tgt.d == 2:
            endpoints = np.vstack([tr.endpoint for tr in trajectories])
            svg = fname.replace(".csv", ".svg")
            emit_scatter(
                [(e, None) for e in endpoints], tgt, out / svg,
                title=f"{cfg.name} {direction}",
            )
            files.append(svg)
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump({"count": 2 * runs, "directions": summary}, fh, indent=2)
        fh.write("\n")
    files.append("report.json")
    return summary


# --------------------------------------------------------------------------
# presets: one per reproduced figure panel plus mechanism demos
# --------------------------------------------------------------------------

def _toy5(seed=7):
    return {"kind": "uniform", "n": 5, "d": 2, "seed": seed}


def _p(name, schedule_kind, params=None, *, dataset=None, steps=2000, t_end=1e-3,
       mode="deterministic", count=500, record=False, error=None, two_sided=None,
       seed=20240717, analysis=None):
    return {
        "name": name,
        "seed": seed,
        "schedule": {"kind": schedule_kind, "params": params or {}},
        "dataset": dataset or _toy5(),
        "sampler": {
            "steps": steps,
            "t_end": t_end,
            "mode": mode,
            "count": count,
            "record_trajectory": record,
        },
        "error": error,
        "two_sided": two_sided,
        "analysis": analysis or {},
        "out_dir": f"runs/{name}",
    }


def _err(family, lam, seed=101):
    return {"family": family, "lambda": lam, "direction": "random", "seed": seed}


PRESETS: dict[str, dict] = {
    # exact-field generation
    "fig1a": _p("fig1a", "sqrt", count=500),
    "fig1b": _p("fig1b", "sqrt", {"zeta_const": 0.008}, mode="stochastic", count=2000),
    "fig1c": _p("fig1c", "sqrt", {"zeta_const": 0.0395}, mode="stochastic", count=2000),
    # bounded error: endpoints stay on the anchors at any magnitude
    "fig2-lam1": _p("fig2-lam1", "linear", error=_err("bounded", 1.0)),
    "fig2-lam5": _p("fig2-lam5", "linear", error=_err("bounded", 5.0)),
    "fig2-lam25": _p("fig2-lam25", "linear", error=_err("bounded", 25.0)),
    # gamma-scaled error: the three endpoint regimes
    "fig3-converge": _p(
        "fig3-converge", "sqrt", steps=200_000, t_end=1e-5, count=300,
        error=_err("gamma-scaled", 1.0),
    ),
    "fig3-vicinity": _p(
        "fig3-vicinity", "poly", steps=20_000, t_end=1e-4, count=300,
        error=_err("gamma-scaled", 1.0),
    ),
    "fig3-diverge": _p(
        "fig3-diverge", "quad", steps=20_000, t_end=1e-4, count=300,
        error=_err("gamma-scaled", 1.0),
    ),
    # density-inverse error at the quoted magnitudes
    "fig4-lam1e-2": _p(
        "fig4-lam1e-2", "linear", count=100, record=True,
        error=_err("density-inverse", 1e-2),
    ),
    "fig4-lam1e-4": _p(
        "fig4-lam1e-4", "linear", count=100, record=True,
        error=_err("density-inverse", 1e-4),
    ),
    "fig4-lam1e-10": _p(
        "fig4-lam1e-10", "linear", count=100, record=True,
        error=_err("density-inverse", 1e-10),
    ),
    # density-inverse error at this geometry's actual underfit threshold
    "fig4-underfit-demo": _p(
        "fig4-underfit-demo", "linear", count=100, record=True,
        error=_err("density-inverse", 3.0),
    ),
    "fig4-intermediate-demo": _p(
        "fig4-intermediate-demo", "linear", count=100, record=True,
        error=_err("density-inverse", 1.0),
    ),
    # both ends empirical
    "two-sided": _p(
        "two-sided", "sqrt", steps=100_000, t_end=1e-5,
        dataset={"kind": "uniform", "n": 3, "d": 2, "seed": 11},
        two_sided={
            "dataset_y": {"kind": "uniform", "n": 3, "d": 2, "seed": 12},
            "runs_per_direction": 200,
            "jitter": 1e-3,
        },
    ),
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str, out_dir: str | None = None, seed: int | None = None) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; available: {preset_names()}")
    doc = json.loads(json.dumps(PRESETS[name]))
    if out_dir is not None:
        doc["out_dir"] = out_dir
    if seed is not None:
        doc["seed"] = seed
    return config_from_dict(doc)


# --------------------------------------------------------------------------
# verification suite
# --------------------------------------------------------------------------

@dataclass
class VerifyCheck:
    name: str
    measured: float
    tolerance: float
    passed: bool


@dataclass
class VerifyReport:
    checks: list[VerifyCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            out.append(
                f"[{status}] {c.name:<52s} measured={c.measured:.3e}  tol={c.tolerance:.1e}"
            )
        return out


def _check(name, measured, tol) -> VerifyCheck:
    return VerifyCheck(name=name, measured=float(measured), tolerance=tol,
                       passed=bool(measured <= tol))


def _oracle_checks() -> list[VerifyCheck]:
    rng = np.random.default_rng(2024)
    X2 = uniform_toy(5, 2, seed=7)
    sqrt_s = make_schedule("sqrt")
    lin_s = make_schedule("linear")

    worst = 0.0
    for _ in range(100):
        t = rng.uniform(0.05, 0.95)
        z = rng.uniform(-2.0, 3.0, size=2)
        sc = score(z, t, X2, sqrt_s).vector
        fd = fd_score_oracle(z, t, X2, sqrt_s)
        worst = max(worst, float(np.abs(sc - fd).max() / max(np.abs(fd).max(), 1e-10)))
    checks = [_check("score matches finite-difference log-density gradient", worst, 1e-6)]

    X1 = TrainingSet(points=rng.uniform(0, 1, (4, 1)))
    for s, label in ((lin_s, "gamma=0"), (sqrt_s, "gamma=sqrt")):
        worst = 0.0
        for _ in range(50):
            t = rng.uniform(0.05, 0.95)
            z = rng.uniform(-1.5, 2.5)
            v = velocity(np.array([z]), t, X1, s).vector[0]
            o = mc_velocity_oracle(z, t, X1, s, nodes=128)
            worst = max(worst, abs(v - o) / max(abs(o), 1e-12))
        checks.append(_check(f"velocity matches quadrature oracle ({label})", worst, 1e-3))

    # mixture identity: score == sum_i w_i (alpha X_i - z) / C3
    worst = 0.0
    for _ in range(100):
        t = rng.uniform(0.05, 0.95)
        z = rng.uniform(-2.0, 3.0, size=2)
        c = coeffs(sqrt_s, t)
        wts = log_weights(z, t, X2, sqrt_s)
        direct = (wts.w @ (float(sqrt_s.alpha(t)) * X2.points) - z * 1.0) / c.c3
        sc = score(z, t, X2, sqrt_s).vector
        worst = max(worst, float(np.abs(sc - direct).max()))
    checks.append(_check("score equals mixture-gradient identity", worst, 1e-10))

    # 1-D normalization of exp(log_density) by direct quadrature
    X1b = TrainingSet(points=np.array([[0.1], [0.7]]))
    grid = np.linspace(-8.0, 9.0, 20001)
    vals = np.array([np.exp(log_density(np.array([g]), 0.4, X1b, sqrt_s)) for g in grid])
    mass = float(np.trapezoid(vals, grid))
    checks.append(_check("log-density integrates to one (1-D)", abs(mass - 1.0), 1e-6))
    return checks


def _invariant_checks() -> list[VerifyCheck]:
    rng = np.random.default_rng(77)
    checks: list[VerifyCheck] = []

    # coefficient identity c2 = c1 alpha - c3 alpha' on a fine grid, all kinds
    worst = 0.0
    for kind in ("linear", "sqrt", "poly", "poly-sq", "quad"):
        s = make_schedule(kind)
        for t in np.linspace(1e-3, 1.0, 1000):
            c = coeffs(s, float(t))
            lhs = c.c2
            rhs = c.c1 * float(s.alpha(t)) - c.c3 * float(s.alpha_dot(t))
            worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1.0))
    checks.append(_check("coefficient identity c2 = c1*a - c3*a'", worst, 1e-12))

    # schedule validation: every built-in passes, except quad whose single
    # intended violation is the gamma(1)=0 boundary (divergence exemplar)
    bad = 0
    for kind in ("linear", "sqrt", "poly", "poly-sq"):
        if not validate_schedule(make_schedule(kind)).passed:
            bad += 1
    quad_fail = [n for n, ok, _ in validate_schedule(make_schedule("quad")).checks if not ok]
    if quad_fail != ["gamma(1)=0"]:
        bad += 1
    checks.append(_check("built-in schedules validate as intended", float(bad), 0.0))

    # noise variance of constant zeta
    nv = noise_variance(make_schedule("sqrt", zeta_const=0.008))
    checks.append(_check("noise_variance(zeta=0.008) = 0.016", abs(nv - 0.016), 1e-10))

    # weight normalization
    X2 = uniform_toy(5, 2, seed=7)
    s = make_schedule("sqrt")
    worst = 0.0
    for _ in range(50):
        t = rng.uniform(0.01, 1.0)
        z = rng.uniform(-2, 3, size=2)
        w = log_weights(z, t, X2, s).w
        worst = max(worst, abs(float(w.sum()) - 1.0))
    checks.append(_check("softmax weights sum to one", worst, 1e-12))

    # sampler determinism: identical seeds give identical endpoints
    cfg = SamplerConfig(steps=200, t_end=1e-3, mode="deterministic", master_seed=5)
    b1 = sample_batch(cfg, X2, s, 8)
    b2 = sample_batch(cfg, X2, s, 8, chunk_size=3)
    delta = max(
        float(np.abs(t1.endpoint - t2.endpoint).max()) for t1, t2 in zip(b1, b2)
    )
    checks.append(_check("batch determinism across chunkings", delta, 0.0))

    # zeta == 0 degeneracy: stochastic path equals deterministic path
    cfg_d = SamplerConfig(steps=300, t_end=1e-3, mode="deterministic",
                          record_trajectory=True, master_seed=9)
    cfg_s = SamplerConfig(steps=300, t_end=1e-3, mode="stochastic",
                          record_trajectory=True, master_seed=9)
    td = sample_deterministic(cfg_d, X2, s)
    tst = sample_stochastic(cfg_s, X2, s)
    delta = float(np.abs(td.states - tst.states).max())
    checks.append(_check("zeta=0 stochastic equals deterministic", delta, 1e-15))

    # n=1 linear schedule: Euler is exact, endpoint = t_end * start
    X1 = TrainingSet(points=np.array([[0.0]]))
    cfg1 = SamplerConfig(steps=128, t_end=1e-3, mode="deterministic", master_seed=1)
    tr = sample_deterministic(cfg1, X1, make_schedule("linear"), start=np.array([1.0]))
    delta = abs(float(tr.endpoint[0]) - cfg1.t_end)
    checks.append(_check("n=1 linear ODE integrates exactly", delta, 1e-12))
    return checks


def verify(suite: str = "all") -> VerifyReport:
    """Run the cross-module verification checks: 'oracles', 'invariants', 'all'."""
    suite = suite.lower()
    if suite not in ("oracles", "invariants", "all"):
        raise ValidationError(f"suite must be oracles|invariants|all, got {suite!r}")
    checks: list[VerifyCheck] = []
    if suite in ("oracles", "all"):
        checks += _oracle_checks()
    if suite in ("invariants", "all"):
        checks += _invariant_checks()
    return VerifyReport(checks=checks)
