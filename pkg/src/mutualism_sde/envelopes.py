"""Closed-form stochastic logistic envelopes and the pathwise sandwich check.

Each species is bounded above and below by a stochastic logistic process
driven by the same Brownian path,

    dZ = Z (r - damp Z) dt + alpha Z dW,  Z(0) = z0,

whose solution is

    Z(t) = E(t) / (1 / z0 + damp * int_0^t E(s) ds),
    E(t) = exp((r - alpha**2 / 2) t + alpha W(t)).

The upper process uses ``damp = eps_i``, the lower ``damp = b_i / K_i + eps_i``.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import GridMismatch, IntegratorFailure
from .integrate import Trajectory
from .model import ModelParams
from .noise import BrownianPath

__all__ = [
    "EnvelopeSet",
    "SandwichReport",
    "stochastic_logistic_exact",
    "build_envelopes",
    "check_sandwich",
]


def stochastic_logistic_exact(r, damp, alpha, z0, dt, W) -> np.ndarray:
    """Evaluate the stochastic logistic closed form on a uniform grid.

    Parameters
    ----------
    r, damp, alpha : float
        Growth rate, quadratic damping coefficient and noise intensity.
    z0 : float
        Initial value, > 0.
    dt : float
        Grid spacing.
    W : array_like
        Brownian motion on the grid, ``W[0] == 0``.

    Notes
    -----
    The time integral is the trapezoid rule on the grid. Everything is
    evaluated as logarithms (``logaddexp.accumulate`` for the running
    integral), so exponents of several hundred are harmless.
    """
    if not z0 > 0:
        raise ValueError("z0 must be > 0")
    W = np.asarray(W, dtype=float)
    t = np.arange(len(W)) * dt
    g = (r - alpha ** 2 / 2) * t + alpha * W
    with np.errstate(divide="ignore"):
        log_half_dt = math.log(dt / 2)
        log_damp = math.log(damp) if damp > 0 else -math.inf
    # log of int_0^{t_k} E(s) ds, with the k = 0 entry equal to log(0)
    log_int = np.empty_like(g)
    log_int[0] = -math.inf
    if len(g) > 1:
        log_int[1:] = np.logaddexp.accumulate(log_half_dt + np.logaddexp(g[:-1], g[1:]))
    log_den = np.logaddexp(-math.log(z0), log_damp + log_int)
    out = np.exp(g - log_den)
    if not np.all(np.isfinite(out)):
        raise IntegratorFailure("envelope evaluation overflowed")
    return out


@dataclasses.dataclass(frozen=True, eq=False)
class EnvelopeSet:
    times: np.ndarray
    lam_hi: np.ndarray
    lam_lo: np.ndarray
    th_hi: np.ndarray
    th_lo: np.ndarray


def build_envelopes(p: ModelParams, path: BrownianPath) -> EnvelopeSet:
    """The four comparison processes for ``x`` (lam_*) and ``y`` (th_*)."""
    W1, W2 = path.W1, path.W2
    dt = path.dt
    return EnvelopeSet(
        times=path.times,
        lam_hi=stochastic_logistic_exact(p.r1, p.eps1, p.alpha1, p.x0, dt, W1),
        lam_lo=stochastic_logistic_exact(p.r1, p.b1 / p.K1 + p.eps1, p.alpha1, p.x0, dt, W1),
        th_hi=stochastic_logistic_exact(p.r2, p.eps2, p.alpha2, p.y0, dt, W2),
        th_lo=stochastic_logistic_exact(p.r2, p.b2 / p.K2 + p.eps2, p.alpha2, p.y0, dt, W2),
    )


@dataclasses.dataclass(frozen=True)
class SandwichReport:
    rel_tol: float
    #: largest relative excursion outside [lo, hi], before applying rel_tol
    max_violation_x: float
    max_violation_y: float
    #: first grid index breaching the tolerance band, or None
    first_violation_x: int | None
    first_violation_y: int | None

    @property
    def passed(self) -> bool:
        return self.first_violation_x is None and self.first_violation_y is None

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["passed"] = self.passed
        return d


def _violations(z, lo, hi, rel_tol):
    excess = np.maximum((z - hi) / hi, (lo - z) / lo)
    worst = float(max(0.0, excess.max())) if len(z) else 0.0
    bad = np.flatnonzero((z > hi * (1 + rel_tol)) | (z < lo * (1 - rel_tol)))
    return worst, (int(bad[0]) if len(bad) else None)


def check_sandwich(traj: Trajectory, env: EnvelopeSet, rel_tol: float) -> SandwichReport:
    """Check ``lo (1 - rel_tol) <= z <= hi (1 + rel_tol)`` for both species."""
    if len(traj.times) != len(env.times) or not np.array_equal(traj.times, env.times):
        raise GridMismatch("trajectory and envelopes live on different grids")
    vx, ix = _violations(traj.xs, env.lam_lo, env.lam_hi, rel_tol)
    vy, iy = _violations(traj.ys, env.th_lo, env.th_hi, rel_tol)
    return SandwichReport(rel_tol, vx, vy, ix, iy)
