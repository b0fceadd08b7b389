"""Time stepping for the stochastic mutualism system.

Three schemes share one driver:

* Euler-Maruyama,
* Milstein (diagonal noise, so no Levy areas; the correction term is
  ``alpha**2 / 2 * z * (dW**2 - dt)``),
* log-Euler: Euler on ``u = ln x``, ``v = ln y``, which keeps both populations
  strictly positive by construction.

The two direct schemes can step below zero when ``alpha * sqrt(dt)`` is large.
Such a component is clamped to ``1e-12`` times its initial value and the event
is counted in the trajectory.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np

from .errors import ConstraintViolation, IntegratorFailure
from .model import ModelParams, State
from .noise import BrownianPath

__all__ = [
    "Scheme",
    "Trajectory",
    "CLAMP_FRACTION",
    "make_stepper",
    "step_euler",
    "step_milstein",
    "step_log_euler",
    "simulate",
    "exact_gbm",
]

CLAMP_FRACTION = 1e-12


class Scheme(str, enum.Enum):
    EULER = "euler"
    MILSTEIN = "milstein"
    LOG_EULER = "log_euler"

    @classmethod
    def _missing_(cls, value):
        aliases = {
            "eulermaruyama": cls.EULER,
            "euler_maruyama": cls.EULER,
            "em": cls.EULER,
            "logeuler": cls.LOG_EULER,
        }
        if isinstance(value, str):
            return aliases.get(value.lower().replace("-", "_"), None) or {
                m.value: m for m in cls}.get(value.lower())
        return None


@dataclasses.dataclass(frozen=True, eq=False)
class Trajectory:
    dt: float
    n_steps: int
    times: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    scheme: Scheme | None
    path_key: tuple[int, int] | None = None
    clamp_count: int = 0

    @property
    def t_end(self) -> float:
        return self.n_steps * self.dt


def make_stepper(p: ModelParams, scheme: Scheme, exp=math.exp):
    """Return ``step(a, b, dw1, dw2, dt) -> (a', b')`` for ``scheme``.

    For the direct schemes ``(a, b)`` is ``(x, y)``; for log-Euler it is
    ``(ln x, ln y)``. Inputs may be floats or same-shape arrays; ``exp`` must
    match (``math.exp`` or ``numpy.exp``). No clamping happens here.
    """
    scheme = Scheme(scheme)
    r1, r2, b1, b2 = p.r1, p.r2, p.b1, p.b2
    K1, K2, e1, e2 = p.K1, p.K2, p.eps1, p.eps2
    a1, a2 = p.alpha1, p.alpha2
    h1, h2 = a1 * a1 / 2, a2 * a2 / 2

    if scheme is Scheme.LOG_EULER:
        m1, m2 = r1 - h1, r2 - h2

        def step(u, v, dw1, dw2, dt):
            x, y = exp(u), exp(v)
            return (u + (m1 - b1 * x / (K1 + y) - e1 * x) * dt + a1 * dw1,
                    v + (m2 - b2 * y / (K2 + x) - e2 * y) * dt + a2 * dw2)

        return step

    milstein = scheme is Scheme.MILSTEIN

    def step(x, y, dw1, dw2, dt):
        fx = r1 - b1 * x / (K1 + y) - e1 * x
        fy = r2 - b2 * y / (K2 + x) - e2 * y
        x_new = x + x * fx * dt + a1 * x * dw1
        y_new = y + y * fy * dt + a2 * y * dw2
        if milstein:
            x_new = x_new + h1 * x * (dw1 * dw1 - dt)
            y_new = y_new + h2 * y * (dw2 * dw2 - dt)
        return x_new, y_new

    return step


def _check_positive(s):
    x, y = s
    if not (x > 0 and y > 0):
        raise ConstraintViolation("state", f"populations must be > 0, got {tuple(s)}")
    return float(x), float(y)


def _direct_step(scheme, s, p, dW, dt):
    if not dt > 0:
        raise ValueError("dt must be > 0")
    x, y = _check_positive(s)
    x, y = make_stepper(p, scheme)(x, y, dW[0], dW[1], dt)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise IntegratorFailure("state left the finite range")
    if x <= 0:
        x = CLAMP_FRACTION * p.x0
    if y <= 0:
        y = CLAMP_FRACTION * p.y0
    return State(x, y)


def step_milstein(s, p: ModelParams, dW, dt: float) -> State:
    """One Milstein step from ``s`` with Brownian increments ``dW = (dW1, dW2)``."""
    return _direct_step(Scheme.MILSTEIN, s, p, dW, dt)


def step_euler(s, p: ModelParams, dW, dt: float) -> State:
    return _direct_step(Scheme.EULER, s, p, dW, dt)


def step_log_euler(s, p: ModelParams, dW, dt: float) -> State:
    """One Euler step of the log-transformed system, returned in population units."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    x, y = _check_positive(s)
    u, v = make_stepper(p, Scheme.LOG_EULER)(math.log(x), math.log(y), dW[0], dW[1], dt)
    try:
        return State(math.exp(u), math.exp(v))
    except OverflowError:
        raise IntegratorFailure("exponent range exhausted") from None


def simulate(p: ModelParams, scheme: Scheme | str, path: BrownianPath) -> Trajectory:
    """Integrate the system over the whole grid of ``path``.

    Raises
    ------
    IntegratorFailure
        With the failing step index, if the state overflows.
    """
    scheme = Scheme(scheme)
    step = make_stepper(p, scheme)
    n, dt = path.n_steps, path.dt
    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    xs[0], ys[0] = p.x0, p.y0
    dw1 = path.inc1.tolist()
    dw2 = path.inc2.tolist()
    clamps = 0

    if scheme is Scheme.LOG_EULER:
        u, v = math.log(p.x0), math.log(p.y0)
        for k in range(n):
            u, v = step(u, v, dw1[k], dw2[k], dt)
            try:
                xs[k + 1] = math.exp(u)
                ys[k + 1] = math.exp(v)
            except OverflowError:
                raise IntegratorFailure("exponent range exhausted", step=k) from None
    else:
        x, y = p.x0, p.y0
        fx, fy = CLAMP_FRACTION * p.x0, CLAMP_FRACTION * p.y0
        isfinite = math.isfinite
        for k in range(n):
            x, y = step(x, y, dw1[k], dw2[k], dt)
            if not (isfinite(x) and isfinite(y)):
                raise IntegratorFailure("state left the finite range", step=k)
            if x <= 0:
                x = fx
                clamps += 1
            if y <= 0:
                y = fy
                clamps += 1
            xs[k + 1] = x
            ys[k + 1] = y

    return Trajectory(dt, n, path.times, xs, ys, scheme, path.key, clamps)


def exact_gbm(p: ModelParams, path: BrownianPath) -> Trajectory:
    """Closed-form solution when ``b_i = eps_i = 0`` (two independent GBMs)."""
    if p.b1 or p.b2 or p.eps1 or p.eps2:
        raise ConstraintViolation("b/eps", "exact solution needs b1 = b2 = eps1 = eps2 = 0")
    t = path.times
    xs = p.x0 * np.exp((p.r1 - p.alpha1 ** 2 / 2) * t + p.alpha1 * path.W1)
    ys = p.y0 * np.exp((p.r2 - p.alpha2 ** 2 / 2) * t + p.alpha2 * path.W2)
    return Trajectory(path.dt, path.n_steps, t, xs, ys, None, path.key)
