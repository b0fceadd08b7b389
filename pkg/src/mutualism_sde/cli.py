"""Command line entry point: ``mutualism-sde <command> [--config FILE] [--key value ...]``.

Commands
--------
classify          regime and margins as JSON on stdout
equilibria        boundary and interior equilibria (stdout + equilibria.json)
simulate          one trajectory -> trajectory.csv
ensemble          Monte Carlo ensemble -> replicates.csv, summary.json
verify-envelopes  pathwise sandwich check for each replicate -> sandwich.json
converge          strong-order study on the GBM reduction -> convergence.csv/.json
figure            the four reference-figure noise settings -> panel_{a,b,c,d}.csv, panels.json

Every command except ``classify`` also writes ``manifest.json`` into
``out_dir``. Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 verification failure. Errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    moment_check,
    path_stats,
    permanence_check,
    regime_concordance,
    run_ensemble,
    strong_convergence,
)
from .config import CONFIG_KEYS, RunConfig, parse_config
from .envelopes import build_envelopes, check_sandwich
from .errors import ConstraintViolation, MutualismError
from .integrate import simulate
from .model import (
    FIGURE1_NOISE,
    Regime,
    classify,
    equilibria,
    moment_bound,
    norm_moment_bound,
    persistence_limits,
)
from .noise import generate

__all__ = ["main", "write_trajectory_csv", "write_json", "build_manifest"]

ENSEMBLE_HEADER = "replicate,time_avg_x,time_avg_y,log_growth_x,log_growth_y,clamp_count,failed"
CONVERGE_HORIZON = 1.0
CONVERGE_FINE_STEPS = 2 ** 10
CONVERGE_LEVELS = 7


class UsageError(MutualismError):
    pass


def _fmt(v) -> str:
    return "%.17g" % v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    if isinstance(obj, Regime):
        return obj.value
    return obj


def write_json(path: Path, obj) -> None:
    text = json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def write_trajectory_csv(path: Path, traj) -> None:
    data = np.column_stack([traj.times, traj.xs, traj.ys])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,x,y\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",", newline="\n")


def write_ensemble_csv(path: Path, summary) -> None:
    lines = [ENSEMBLE_HEADER]
    for j, s in enumerate(summary.stats):
        fields = [s.time_avg_x, s.time_avg_y, s.log_growth_x, s.log_growth_y]
        lines.append(",".join([str(j), *map(_fmt, fields), str(s.clamp_count), str(int(s.failed))]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def analytic_quantities(cfg: RunConfig) -> dict:
    p = cfg.params
    eq = equilibria(p)
    return {
        "e_star": list(eq.e_star),
        "equilibrium_residual": eq.residual,
        "margins": list(classify(p).margins),
        "moment_bounds": {
            str(k): {"x": moment_bound(p, k, 1), "y": moment_bound(p, k, 2), "norm": norm_moment_bound(p, k)}
            for k in cfg.k_list
        },
        "persistence_limits": persistence_limits(p).as_dict(),
    }


def build_manifest(cfg: RunConfig, command: str, outputs: list, failures: int = 0, extra: dict | None = None) -> dict:
    manifest = {
        "tool": "mutualism_sde",
        "version": __version__,
        "command": command,
        "config": cfg.as_dict(),
        "classification": classify(cfg.params).as_dict(),
        "analytic": analytic_quantities(cfg),
        "outputs": sorted(outputs),
        "replicate_failures": failures,
    }
    if extra:
        manifest.update(extra)
    return manifest


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print(obj) -> None:
    print(json.dumps(_jsonable(obj), allow_nan=False))


def cmd_classify(cfg: RunConfig, workers: int = 1) -> int:
    _print(classify(cfg.params).as_dict())
    return 0


def cmd_equilibria(cfg: RunConfig, workers: int = 1) -> int:
    eq = equilibria(cfg.params)
    out = _out_dir(cfg)
    write_json(out / "equilibria.json", eq.as_dict())
    write_json(out / "manifest.json", build_manifest(cfg, "equilibria", ["equilibria.json"]))
    _print(eq.as_dict())
    return 0


def cmd_simulate(cfg: RunConfig, workers: int = 1) -> int:
    if cfg.replicates != 1:
        raise ConstraintViolation("replicates", "simulate produces a single trajectory; use ensemble")
    path = generate(cfg.seed, 0, cfg.dt, cfg.n_steps)
    traj = simulate(cfg.params, cfg.scheme, path)
    out = _out_dir(cfg)
    write_trajectory_csv(out / "trajectory.csv", traj)
    extra = {"clamp_count": traj.clamp_count}
    write_json(out / "manifest.json", build_manifest(cfg, "simulate", ["trajectory.csv"], extra=extra))
    _print({"outputs": ["trajectory.csv", "manifest.json"], "clamp_count": traj.clamp_count})
    return 0


def ensemble_summary_dict(summary, cfg: RunConfig) -> dict:
    p = cfg.params
    stats = {}
    for name in ("time_avg_x", "time_avg_y", "log_growth_x", "log_growth_y", "min_norm", "max_norm"):
        mean, se = summary.mean_se(name)
        stats[name] = {"mean": mean, "se": se}
    n_ok = int(summary.ok.sum())
    if n_ok >= 10 / cfg.epsilon:
        permanence = permanence_check(summary, cfg.epsilon).as_dict()
    else:
        permanence = {"skipped": f"needs at least {math.ceil(10 / cfg.epsilon)} replicates"}
    return {
        "n_replicates": summary.n_replicates,
        "failures": summary.failures,
        "classification": classify(p).as_dict(),
        "regime_concordance": regime_concordance(summary, p),
        "statistics": stats,
        "moments": [moment_check(summary, p, k).as_dict() for k in cfg.k_list],
        "norm_quantiles": summary.quantiles(),
        "permanence": permanence,
        "clamp_total": int(summary.column("clamp_count", include_failed=True).sum()),
    }


def cmd_ensemble(cfg: RunConfig, workers: int = 1) -> int:
    summary = run_ensemble(
        cfg.params, cfg.scheme, cfg.replicates, cfg.dt, cfg.t_end, cfg.burn, cfg.seed, cfg.k_list, workers=workers
    )
    out = _out_dir(cfg)
    write_ensemble_csv(out / "replicates.csv", summary)
    write_json(out / "summary.json", ensemble_summary_dict(summary, cfg))
    files = ["replicates.csv", "summary.json"]
    write_json(out / "manifest.json", build_manifest(cfg, "ensemble", files, failures=summary.failures))
    _print({"outputs": files + ["manifest.json"], "failures": summary.failures})
    return 0


def cmd_verify_envelopes(cfg: RunConfig, workers: int = 1) -> int:
    p = cfg.params
    rel_tol = 10 * cfg.dt
    reports = []
    for j in range(cfg.replicates):
        path = generate(cfg.seed, j, cfg.dt, cfg.n_steps)
        report = check_sandwich(simulate(p, cfg.scheme, path), build_envelopes(p, path), rel_tol)
        reports.append({"replicate": j, **report.as_dict()})
    passed = all(r["passed"] for r in reports)
    out = _out_dir(cfg)
    write_json(out / "sandwich.json", {"rel_tol": rel_tol, "passed": passed, "replicates": reports})
    write_json(out / "manifest.json", build_manifest(cfg, "verify-envelopes", ["sandwich.json"]))
    _print({"passed": passed, "outputs": ["sandwich.json", "manifest.json"]})
    return 0 if passed else 3


def cmd_converge(cfg: RunConfig, workers: int = 1) -> int:
    study = strong_convergence(
        cfg.params, n_paths=cfg.replicates, seed=cfg.seed, horizon=CONVERGE_HORIZON,
        fine_steps=CONVERGE_FINE_STEPS, levels=CONVERGE_LEVELS,
    )
    out = _out_dir(cfg)
    lines = ["dt,error_milstein,error_euler"]
    for i, dt in enumerate(study.dts):
        lines.append(",".join(map(_fmt, (dt, study.errors["milstein"][i], study.errors["euler"][i]))))
    (out / "convergence.csv").write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    write_json(out / "convergence.json", {"horizon": CONVERGE_HORIZON, **study.as_dict()})
    files = ["convergence.csv", "convergence.json"]
    write_json(out / "manifest.json", build_manifest(cfg, "converge", files))
    _print({"passed": study.passed, "slopes": study.slopes, "outputs": files + ["manifest.json"]})
    return 0 if study.passed else 3


def cmd_figure(cfg: RunConfig, workers: int = 1) -> int:
    out = _out_dir(cfg)
    panels = {}
    files = []
    for panel, (a1, a2) in FIGURE1_NOISE.items():
        p = cfg.params.replace(alpha1=a1, alpha2=a2)
        traj = simulate(p, cfg.scheme, generate(cfg.seed, 0, cfg.dt, cfg.n_steps))
        name = f"panel_{panel}.csv"
        write_trajectory_csv(out / name, traj)
        files.append(name)
        stats = path_stats(traj, cfg.burn)
        predicted = classify(p)
        entry = {
            "alpha1": a1,
            "alpha2": a2,
            "classification": predicted.as_dict(),
            "empirical_outcome": stats.outcome.value,
            "agrees": None if predicted.tag is Regime.BOUNDARY else stats.outcome is predicted.tag,
            "time_avg": [stats.time_avg_x, stats.time_avg_y],
            "terminal": [stats.x_end, stats.y_end],
            "clamp_count": traj.clamp_count,
        }
        if a1 == 0 and a2 == 0:
            e_star = equilibria(p).e_star
            entry["e_star"] = list(e_star)
            entry["terminal_distance_to_e_star"] = max(abs(stats.x_end - e_star[0]), abs(stats.y_end - e_star[1]))
        panels[panel] = entry
    write_json(out / "panels.json", panels)
    files.append("panels.json")
    assumptions = {"assumptions": {"x0": cfg.x0, "y0": cfg.y0, "t_end": cfg.t_end,
                                   "note": "initial densities and horizon are not stated for the reference figure"}}
    write_json(out / "manifest.json", build_manifest(cfg, "figure", files, extra=assumptions))
    _print({"outputs": files + ["manifest.json"],
            "agreement": {k: v["agrees"] for k, v in panels.items()}})
    return 0


COMMANDS = {
    "classify": cmd_classify,
    "equilibria": cmd_equilibria,
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "verify-envelopes": cmd_verify_envelopes,
    "converge": cmd_converge,
    "figure": cmd_figure,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mutualism-sde", description="Stochastic mutualism model toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        cmd = sub.add_parser(name, help=func.__name__.replace("cmd_", ""))
        cmd.add_argument("--config", help="flat key = value configuration file")
        cmd.add_argument("--workers", type=int, default=1, help="worker processes (never changes output)")
        for key in CONFIG_KEYS:
            flags = [f"--{key}"]
            if "_" in key:
                flags.append(f"--{key.replace('_', '-')}")
            cmd.add_argument(*flags, dest=f"cfg_{key}", metavar="VALUE", default=None)
    return parser


def _error_payload(exc) -> dict:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": getattr(exc, "exit_code", 1)}
    for attr in ("key", "line", "step"):
        if getattr(exc, attr, None) is not None:
            payload[attr] = getattr(exc, attr)
    return payload


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
        overrides = {key: getattr(args, f"cfg_{key}") for key in CONFIG_KEYS if getattr(args, f"cfg_{key}") is not None}
        cfg = parse_config(text, overrides)
        if args.workers < 1:
            raise ConstraintViolation("workers", "must be >= 1")
        return COMMANDS[args.command](cfg, workers=args.workers)
    except MutualismError as exc:
        code = exc.exit_code
        err = exc
    except OSError as exc:
        code, err = 1, exc
    except ValueError as exc:
        code, err = 1, exc
    payload = _error_payload(err)
    payload["exit_code"] = code
    print(json.dumps(payload), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
