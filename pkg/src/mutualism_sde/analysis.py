"""Path statistics, Monte Carlo ensembles and empirical checks of the asymptotic results.

Ensembles are simulated in fixed blocks of ``BLOCK_SIZE`` replicates, each
block advancing all of its replicates together as numpy vectors. Replicate
``j`` always uses noise stream ``j`` and always lands in block
``j // BLOCK_SIZE``, so a summary is bit-identical whatever the number of
worker processes.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy.integrate import trapezoid

from .errors import ConstraintViolation, EnsembleFailure
from .integrate import CLAMP_FRACTION, Scheme, Trajectory, exact_gbm, make_stepper, simulate
from .model import ModelParams, Regime, classify, moment_bound, norm_moment_bound
from .noise import coarsen, generate, standard_normals

__all__ = [
    "EXTINCT_TIME_AVG",
    "EXTINCT_TERMINAL",
    "PathStats",
    "EnsembleSummary",
    "MomentReport",
    "PermanenceReport",
    "path_stats",
    "is_extinct",
    "run_ensemble",
    "regime_concordance",
    "moment_check",
    "permanence_check",
    "holder_diagnostic",
    "ConvergenceStudy",
    "strong_convergence",
    "MILSTEIN_SLOPE_WINDOW",
    "EULER_SLOPE_WINDOW",
]

EXTINCT_TIME_AVG = 0.01
EXTINCT_TERMINAL = 1e-3
MAX_FAILURE_FRACTION = 0.10
BLOCK_SIZE = 64
CHUNK_STEPS = 4096
QUANTILE_LEVELS = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)


@dataclasses.dataclass(frozen=True)
class PathStats:
    t_end: float
    t_burn: float
    time_avg_x: float
    time_avg_y: float
    log_growth_x: float
    log_growth_y: float
    min_norm: float
    max_norm: float
    clamp_count: int
    x_end: float
    y_end: float
    failed: bool = False

    @property
    def x_extinct(self) -> bool:
        return is_extinct(self.time_avg_x, self.x_end)

    @property
    def y_extinct(self) -> bool:
        return is_extinct(self.time_avg_y, self.y_end)

    @property
    def outcome(self) -> Regime:
        return Regime.from_outcome(self.x_extinct, self.y_extinct)


def is_extinct(time_avg, terminal):
    """Finite-time extinction call: small post-burn-in average and a tiny terminal value."""
    return (time_avg < EXTINCT_TIME_AVG) & (terminal < EXTINCT_TERMINAL)


def _burn_index(t_burn, dt, n_steps):
    n_burn = int(round(t_burn / dt))
    if not 0 <= n_burn < n_steps:
        raise ValueError(f"need 0 <= t_burn < t_end, got t_burn={t_burn}, t_end={n_steps * dt}")
    return n_burn


def path_stats(traj: Trajectory, t_burn: float | None = None) -> PathStats:
    """Summary statistics of one trajectory.

    Time averages use the trapezoid rule over ``[t_burn, t_end]``; log-growth
    rates are ``ln z(t_end) / t_end``; norm extrema are taken over the same
    post-burn-in window. ``t_burn`` defaults to a quarter of ``t_end``.
    """
    if t_burn is None:
        t_burn = traj.t_end / 4
    n_burn = _burn_index(t_burn, traj.dt, traj.n_steps)
    xs, ys = traj.xs, traj.ys
    if not (np.all(xs > 0) and np.all(ys > 0)):
        raise ConstraintViolation("trajectory", "non-positive samples; log-growth undefined")
    window = (traj.n_steps - n_burn) * traj.dt
    wx, wy = xs[n_burn:], ys[n_burn:]
    norms = np.hypot(wx, wy)
    return PathStats(
        t_end=traj.t_end,
        t_burn=n_burn * traj.dt,
        time_avg_x=float(trapezoid(wx, dx=traj.dt) / window),
        time_avg_y=float(trapezoid(wy, dx=traj.dt) / window),
        log_growth_x=math.log(xs[-1]) / traj.t_end,
        log_growth_y=math.log(ys[-1]) / traj.t_end,
        min_norm=float(norms.min()),
        max_norm=float(norms.max()),
        clamp_count=traj.clamp_count,
        x_end=float(xs[-1]),
        y_end=float(ys[-1]),
    )


def _run_block(p, scheme, dt, n_steps, n_burn, seed, streams):
    """Advance the replicates ``streams`` together and return per-replicate arrays."""
    scheme = Scheme(scheme)
    B = len(streams)
    log_space = scheme is Scheme.LOG_EULER
    step = make_stepper(p, scheme, exp=np.exp)
    sq = math.sqrt(dt)
    n_half = n_steps // 2

    a = np.full(B, math.log(p.x0) if log_space else p.x0)
    b = np.full(B, math.log(p.y0) if log_space else p.y0)
    floor_x, floor_y = CLAMP_FRACTION * p.x0, CLAMP_FRACTION * p.y0
    clamps = np.zeros(B, dtype=np.int64)
    failed = np.zeros(B, dtype=bool)
    integ_x = np.zeros(B)
    integ_y = np.zeros(B)
    min_norm = np.full(B, np.inf)
    max_norm = np.zeros(B)
    half_x = np.full(B, p.x0)
    half_y = np.full(B, p.y0)
    end_x = np.full(B, p.x0)
    end_y = np.full(B, p.y0)

    with np.errstate(all="ignore"):
        for s0 in range(0, n_steps, CHUNK_STEPS):
            L = min(CHUNK_STEPS, n_steps - s0)
            dw1 = sq * np.stack([standard_normals(seed, j, 0, s0, L) for j in streams], axis=1)
            dw2 = sq * np.stack([standard_normals(seed, j, 1, s0, L) for j in streams], axis=1)
            A = np.empty((L + 1, B))
            Bb = np.empty((L + 1, B))
            A[0], Bb[0] = a, b
            for i in range(L):
                a, b = step(a, b, dw1[i], dw2[i], dt)
                if not log_space:
                    neg = a <= 0
                    if neg.any():
                        clamps += neg
                        a = np.where(neg, floor_x, a)
                    neg = b <= 0
                    if neg.any():
                        clamps += neg
                        b = np.where(neg, floor_y, b)
                A[i + 1] = a
                Bb[i + 1] = b
            if log_space:
                X, Y = np.exp(A), np.exp(Bb)
            else:
                X, Y = A, Bb
            bad = ~(np.isfinite(X).all(axis=0) & np.isfinite(Y).all(axis=0) & (X > 0).all(axis=0) & (Y > 0).all(axis=0))
            if bad.any():
                failed |= bad
                # failed replicates are restarted from x0 only to keep arithmetic finite
                a = np.where(failed, math.log(p.x0) if log_space else p.x0, a)
                b = np.where(failed, math.log(p.y0) if log_space else p.y0, b)

            i0 = max(0, n_burn - s0)
            if i0 < L:
                sx, sy = X[i0:], Y[i0:]
                integ_x += dt * (sx.sum(axis=0) - 0.5 * (sx[0] + sx[-1]))
                integ_y += dt * (sy.sum(axis=0) - 0.5 * (sy[0] + sy[-1]))
                norms = np.hypot(sx, sy)
                min_norm = np.minimum(min_norm, norms.min(axis=0))
                max_norm = np.maximum(max_norm, norms.max(axis=0))
            if s0 <= n_half <= s0 + L:
                half_x, half_y = X[n_half - s0].copy(), Y[n_half - s0].copy()
            end_x, end_y = X[-1].copy(), Y[-1].copy()

    if n_steps == 0:
        min_norm[:] = max_norm[:] = math.hypot(p.x0, p.y0)
    window = (n_steps - n_burn) * dt
    t_end = n_steps * dt
    with np.errstate(all="ignore"):
        out = {
            "time_avg_x": integ_x / window,
            "time_avg_y": integ_y / window,
            "log_growth_x": np.log(end_x) / t_end,
            "log_growth_y": np.log(end_y) / t_end,
            "min_norm": min_norm,
            "max_norm": max_norm,
            "clamp_count": clamps,
            "x_end": end_x,
            "y_end": end_y,
            "x_half": half_x,
            "y_half": half_y,
            "failed": failed,
        }
    for key, arr in out.items():
        if arr.dtype.kind == "f":
            arr[failed] = np.nan
    return out


def _run_block_args(args):
    return _run_block(*args)


@dataclasses.dataclass(frozen=True, eq=False)
class EnsembleSummary:
    params: ModelParams
    scheme: Scheme
    dt: float
    t_end: float
    t_burn: float
    seed: int
    k_list: tuple
    stats: list
    x_half: np.ndarray
    y_half: np.ndarray

    @property
    def n_replicates(self) -> int:
        return len(self.stats)

    @property
    def ok(self) -> np.ndarray:
        return ~np.array([s.failed for s in self.stats], dtype=bool)

    @property
    def failures(self) -> int:
        return int((~self.ok).sum())

    def column(self, name, include_failed=False) -> np.ndarray:
        values = np.array([getattr(s, name) for s in self.stats], dtype=float)
        return values if include_failed else values[self.ok]

    @property
    def x_end(self) -> np.ndarray:
        return self.column("x_end")

    @property
    def y_end(self) -> np.ndarray:
        return self.column("y_end")

    @property
    def norm_end(self) -> np.ndarray:
        return np.hypot(self.x_end, self.y_end)

    @property
    def norm_half(self) -> np.ndarray:
        return np.hypot(self.x_half[self.ok], self.y_half[self.ok])

    def mean_se(self, name) -> tuple[float, float]:
        return _mean_se(self.column(name))

    def moments(self, k) -> dict:
        """Empirical ``E[x^k]``, ``E[y^k]``, ``E[|X|^k]`` at ``t_end`` with standard errors."""
        return {
            "x": _mean_se(self.x_end ** k),
            "y": _mean_se(self.y_end ** k),
            "norm": _mean_se(self.norm_end ** k),
        }

    def quantiles(self, levels=QUANTILE_LEVELS) -> dict:
        return {float(q): float(v) for q, v in zip(levels, np.quantile(self.norm_end, levels))}


def _mean_se(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n == 0:
        return math.nan, math.nan
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def run_ensemble(
    p: ModelParams,
    scheme: Scheme | str = Scheme.MILSTEIN,
    n_replicates: int = 100,
    dt: float = 1e-3,
    t_end: float = 200.0,
    t_burn: float | None = None,
    seed: int = 42,
    k_list=(1, 2, 3),
    workers: int = 1,
) -> EnsembleSummary:
    """Simulate ``n_replicates`` independent paths and collect their statistics.

    Replicate ``j`` is driven by noise stream ``j``. Replicates whose state
    leaves the finite range are marked failed and excluded from aggregates.

    Raises
    ------
    EnsembleFailure
        If more than 10% of the replicates failed.
    """
    if n_replicates < 1:
        raise ValueError("n_replicates must be >= 1")
    scheme = Scheme(scheme)
    n_steps = int(round(t_end / dt))
    if not math.isclose(n_steps * dt, t_end, rel_tol=1e-9):
        raise ValueError(f"t_end={t_end} is not a multiple of dt={dt}")
    if t_burn is None:
        t_burn = t_end / 4
    n_burn = _burn_index(t_burn, dt, n_steps)
    blocks = [
        (p, scheme, dt, n_steps, n_burn, seed, list(range(j, min(j + BLOCK_SIZE, n_replicates))))
        for j in range(0, n_replicates, BLOCK_SIZE)
    ]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block_args, blocks))
    else:
        results = [_run_block(*b) for b in blocks]
    merged = {k: np.concatenate([r[k] for r in results]) for k in results[0]}

    stats = [
        PathStats(
            t_end=n_steps * dt,
            t_burn=n_burn * dt,
            time_avg_x=float(merged["time_avg_x"][j]),
            time_avg_y=float(merged["time_avg_y"][j]),
            log_growth_x=float(merged["log_growth_x"][j]),
            log_growth_y=float(merged["log_growth_y"][j]),
            min_norm=float(merged["min_norm"][j]),
            max_norm=float(merged["max_norm"][j]),
            clamp_count=int(merged["clamp_count"][j]),
            x_end=float(merged["x_end"][j]),
            y_end=float(merged["y_end"][j]),
            failed=bool(merged["failed"][j]),
        )
        for j in range(n_replicates)
    ]
    summary = EnsembleSummary(
        params=p,
        scheme=scheme,
        dt=dt,
        t_end=n_steps * dt,
        t_burn=n_burn * dt,
        seed=seed,
        k_list=tuple(k_list),
        stats=stats,
        x_half=merged["x_half"],
        y_half=merged["y_half"],
    )
    if summary.failures > MAX_FAILURE_FRACTION * n_replicates:
        raise EnsembleFailure(f"{summary.failures} of {n_replicates} replicates failed")
    return summary


def regime_concordance(summary: EnsembleSummary, p: ModelParams | None = None) -> float | None:
    """Fraction of successful replicates whose empirical outcome matches ``classify``.

    Returns None in the boundary regime, where no outcome is predicted.
    """
    tag = classify(p or summary.params).tag
    if tag is Regime.BOUNDARY:
        return None
    outcomes = [s.outcome for s in summary.stats if not s.failed]
    return sum(o is tag for o in outcomes) / len(outcomes)


@dataclasses.dataclass(frozen=True)
class MomentReport:
    k: float
    rows: dict  # name -> dict(empirical, se, bound, passed)

    @property
    def passed(self) -> bool:
        return all(row["passed"] for row in self.rows.values())

    def as_dict(self) -> dict:
        return {"k": self.k, "passed": self.passed, **self.rows}


def moment_check(summary: EnsembleSummary, p: ModelParams, k) -> MomentReport:
    """Compare terminal empirical moments with the asymptotic moment bounds.

    A row passes when ``empirical <= bound * (1 + 2 * se / empirical)``.
    """
    bounds = {
        "x": moment_bound(p, k, 1),
        "y": moment_bound(p, k, 2),
        "norm": norm_moment_bound(p, k),
    }
    rows = {}
    for name, (mean, se) in summary.moments(k).items():
        rel_se = se / mean if mean > 0 else 0.0
        rows[name] = {
            "empirical": mean,
            "se": se,
            "bound": bounds[name],
            "passed": bool(mean <= bounds[name] * (1 + 2 * rel_se)),
        }
    return MomentReport(k, rows)


@dataclasses.dataclass(frozen=True)
class PermanenceReport:
    epsilon: float
    beta1: float
    beta2: float
    beta1_half: float
    beta2_half: float
    passed: bool

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def permanence_check(summary: EnsembleSummary, epsilon: float, stability: float = 0.2) -> PermanenceReport:
    """Empirical permanence bounds from quantiles of ``|X|``.

    ``beta1`` is the ``epsilon`` quantile of ``|X(t_end)|`` and ``beta2`` the
    ``1 - epsilon`` quantile. The check passes when ``beta1 > 0`` and both
    quantiles at ``t_end`` are within ``stability`` (relative) of the same
    quantiles at ``t_end / 2``.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    n = int(summary.ok.sum())
    if n < 10 / epsilon:
        raise ValueError(f"need at least {math.ceil(10 / epsilon)} replicates for epsilon={epsilon}, have {n}")
    b1, b2 = np.quantile(summary.norm_end, [epsilon, 1 - epsilon])
    h1, h2 = np.quantile(summary.norm_half, [epsilon, 1 - epsilon])

    def stable(now, before):
        return abs(now - before) <= stability * max(now, before)

    passed = bool(b1 > 0 and stable(b1, h1) and stable(b2, h2))
    return PermanenceReport(epsilon, float(b1), float(b2), float(h1), float(h2), passed)


def holder_diagnostic(traj: Trajectory, gamma: float) -> tuple[float, float]:
    """Empirical Hoelder modulus ``max_L max_k |z(t_{k+L}) - z(t_k)| / (L dt)**gamma``.

    Lags run over powers of two up to the path length; one value per species.
    """
    if not 0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 1/2)")
    out = []
    for z in (traj.xs, traj.ys):
        best = 0.0
        lag = 1
        while lag <= traj.n_steps:
            diff = np.abs(z[lag:] - z[:-lag]).max()
            best = max(best, float(diff) / (lag * traj.dt) ** gamma)
            lag *= 2
        out.append(best)
    return tuple(out)


MILSTEIN_SLOPE_WINDOW = (0.8, 1.2)
EULER_SLOPE_WINDOW = (0.35, 0.65)


@dataclasses.dataclass(frozen=True, eq=False)
class ConvergenceStudy:
    dts: np.ndarray
    #: scheme name -> mean terminal max-norm error at each dt
    errors: dict
    slopes: dict
    #: worst relative deviation of log-Euler from the exact solution, all levels and grid points
    log_euler_rel_error: float

    @property
    def passed(self) -> bool:
        lo, hi = MILSTEIN_SLOPE_WINDOW
        ok = lo <= self.slopes["milstein"] <= hi
        lo, hi = EULER_SLOPE_WINDOW
        return ok and lo <= self.slopes["euler"] <= hi and self.log_euler_rel_error <= 1e-12

    def as_dict(self) -> dict:
        return {
            "dts": self.dts.tolist(),
            "errors": {k: v.tolist() for k, v in self.errors.items()},
            "slopes": dict(self.slopes),
            "log_euler_rel_error": self.log_euler_rel_error,
            "passed": self.passed,
        }


def strong_convergence(
    p: ModelParams,
    n_paths: int = 50,
    seed: int = 42,
    horizon: float = 1.0,
    fine_steps: int = 2 ** 10,
    levels: int = 7,
) -> ConvergenceStudy:
    """Strong error of each scheme on the geometric Brownian motion reduction.

    ``b_i`` and ``eps_i`` of ``p`` are replaced by zero so the exact solution
    is available. Every path is generated once on the finest grid and
    coarsened by factors ``1, 2, ..., 2**(levels - 1)``, so all step sizes see
    the same Brownian motion. The error at a level is the mean over paths of
    the max-norm terminal error; slopes come from a least-squares fit of
    log error against log dt.
    """
    if fine_steps % 2 ** (levels - 1):
        raise ValueError("fine_steps must be divisible by 2**(levels - 1)")
    gbm = p.replace(b1=0.0, b2=0.0, eps1=0.0, eps2=0.0)
    factors = [2 ** i for i in range(levels)]
    dt_fine = horizon / fine_steps
    dts = np.array([f * dt_fine for f in factors])
    errors = {name: np.zeros(levels) for name in ("milstein", "euler")}
    worst_log = 0.0
    for j in range(n_paths):
        fine = generate(seed, j, dt_fine, fine_steps)
        for i, f in enumerate(factors):
            path = coarsen(fine, f)
            exact = exact_gbm(gbm, path)
            for name in errors:
                traj = simulate(gbm, name, path)
                err = max(abs(traj.xs[-1] - exact.xs[-1]), abs(traj.ys[-1] - exact.ys[-1]))
                errors[name][i] += err / n_paths
            traj = simulate(gbm, Scheme.LOG_EULER, path)
            rel = max(np.max(np.abs(traj.xs / exact.xs - 1)), np.max(np.abs(traj.ys / exact.ys - 1)))
            worst_log = max(worst_log, float(rel))
    slopes = {name: float(np.polyfit(np.log(dts), np.log(err), 1)[0]) for name, err in errors.items()}
    return ConvergenceStudy(dts, errors, slopes, worst_log)
