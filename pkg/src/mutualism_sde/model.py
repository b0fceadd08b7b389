"""Model parameters, vector fields, equilibria and the closed-form analytic quantities.

The stochastic mutualism system is

    dx = x (r1 - b1 x / (K1 + y) - eps1 x) dt + alpha1 x dW1
    dy = y (r2 - b2 y / (K2 + x) - eps2 y) dt + alpha2 y dW2

with independent Brownian motions W1, W2. Setting alpha1 = alpha2 = 0 gives
the deterministic saturating-mutualism ODE.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from typing import NamedTuple

import numpy as np

from .errors import ConstraintViolation, NoConvergence

__all__ = [
    "ModelParams",
    "State",
    "Regime",
    "RegimeClassification",
    "EquilibriumSet",
    "PersistenceLimits",
    "FIGURE1_BASE",
    "FIGURE1_NOISE",
    "figure1_params",
    "drift",
    "diffusion",
    "equilibria",
    "classify",
    "moment_bound",
    "norm_moment_bound",
    "persistence_limits",
]


@dataclasses.dataclass(frozen=True)
class ModelParams:
    """Constants of the mutualism model plus the initial state.

    ``b_i`` and ``eps_i`` may be zero: those degenerate settings give the
    decoupled logistic and the pure geometric Brownian motion reductions used
    for verification. Everything else must be strictly positive, except the
    noise intensities which may be zero (deterministic limit).
    """

    r1: float
    r2: float
    b1: float
    b2: float
    K1: float
    K2: float
    eps1: float
    eps2: float
    alpha1: float = 0.0
    alpha2: float = 0.0
    x0: float = 0.5
    y0: float = 0.5

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ConstraintViolation(f.name, f"not a number: {value!r}") from None
            if not math.isfinite(value):
                raise ConstraintViolation(f.name, f"must be finite, got {value!r}")
            object.__setattr__(self, f.name, value)
        for name in ("r1", "r2", "K1", "K2", "x0", "y0"):
            if getattr(self, name) <= 0:
                raise ConstraintViolation(name, f"must be > 0, got {getattr(self, name)!r}")
        for name in ("b1", "b2", "eps1", "eps2", "alpha1", "alpha2"):
            if getattr(self, name) < 0:
                raise ConstraintViolation(name, f"must be >= 0, got {getattr(self, name)!r}")

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def species(self, i: int):
        """Return ``(r, b, K, eps, alpha, z0)`` for species 1 (x) or 2 (y)."""
        if i == 1:
            return self.r1, self.b1, self.K1, self.eps1, self.alpha1, self.x0
        if i == 2:
            return self.r2, self.b2, self.K2, self.eps2, self.alpha2, self.y0
        raise ValueError(f"species must be 1 or 2, got {i!r}")


class State(NamedTuple):
    x: float
    y: float


# Reference figure: common constants, the four noise settings,
# and assumed initial densities (the figure does not state them).
FIGURE1_BASE = dict(r1=1.2, r2=1.0, eps1=0.8, eps2=0.7, b1=0.7, b2=0.9, K1=2.0, K2=2.0, x0=0.5, y0=0.5)
FIGURE1_NOISE = {
    "a": (0.0, 0.0),
    "b": (2.2, 1.8),
    "c": (0.1, 1.6),
    "d": (0.01, 0.01),
}


def figure1_params(panel: str = "d", **overrides) -> ModelParams:
    alpha1, alpha2 = FIGURE1_NOISE[panel]
    values = dict(FIGURE1_BASE, alpha1=alpha1, alpha2=alpha2)
    values.update(overrides)
    return ModelParams(**values)


def _check_state(s):
    x, y = s
    if np.any(np.isnan(x)) or np.any(np.isnan(y)):
        raise ConstraintViolation("state", "NaN population density")
    return x, y


def drift(s, p: ModelParams) -> State:
    """Drift of the SDE, ``(x f1(x, y), y f2(x, y))``.

    Works elementwise when ``s`` holds arrays.
    """
    x, y = _check_state(s)
    fx = p.r1 - p.b1 * x / (p.K1 + y) - p.eps1 * x
    fy = p.r2 - p.b2 * y / (p.K2 + x) - p.eps2 * y
    return State(x * fx, y * fy)


def diffusion(s, p: ModelParams) -> State:
    x, y = _check_state(s)
    return State(p.alpha1 * x, p.alpha2 * y)


def _per_capita(z, p: ModelParams) -> np.ndarray:
    x, y = z
    return np.array([
        p.r1 - p.b1 * x / (p.K1 + y) - p.eps1 * x,
        p.r2 - p.b2 * y / (p.K2 + x) - p.eps2 * y,
    ])


def _jacobian(z, p: ModelParams) -> np.ndarray:
    x, y = z
    return np.array([
        [-p.b1 / (p.K1 + y) - p.eps1, p.b1 * x / (p.K1 + y) ** 2],
        [p.b2 * y / (p.K2 + x) ** 2, -p.b2 / (p.K2 + x) - p.eps2],
    ])


class RegimeClassification(NamedTuple):
    tag: "Regime"
    margins: tuple[float, float]

    def as_dict(self) -> dict:
        return {"tag": self.tag.value, "margins": list(self.margins)}


class Regime(str, enum.Enum):
    PERMANENT = "Permanent"
    X_EXTINCT_Y_PERSISTENT = "XExtinctYPersistent"
    Y_EXTINCT_X_PERSISTENT = "YExtinctXPersistent"
    BOTH_EXTINCT = "BothExtinct"
    BOUNDARY = "Boundary"

    @property
    def x_extinct(self) -> bool | None:
        return {"Permanent": False, "YExtinctXPersistent": False,
                "XExtinctYPersistent": True, "BothExtinct": True}.get(self.value)

    @property
    def y_extinct(self) -> bool | None:
        return {"Permanent": False, "XExtinctYPersistent": False,
                "YExtinctXPersistent": True, "BothExtinct": True}.get(self.value)

    @classmethod
    def from_outcome(cls, x_extinct: bool, y_extinct: bool) -> "Regime":
        if x_extinct and y_extinct:
            return cls.BOTH_EXTINCT
        if x_extinct:
            return cls.X_EXTINCT_Y_PERSISTENT
        if y_extinct:
            return cls.Y_EXTINCT_X_PERSISTENT
        return cls.PERMANENT


def classify(p: ModelParams) -> RegimeClassification:
    """Persistence/extinction regime from the signs of ``r_i - alpha_i**2 / 2``.

    A margin that is exactly zero is not covered by either the persistence or
    the extinction result, so it yields ``Regime.BOUNDARY``.
    """
    m1 = p.r1 - p.alpha1 ** 2 / 2
    m2 = p.r2 - p.alpha2 ** 2 / 2
    if m1 == 0 or m2 == 0:
        tag = Regime.BOUNDARY
    else:
        tag = Regime.from_outcome(m1 < 0, m2 < 0)
    return RegimeClassification(tag, (m1, m2))


@dataclasses.dataclass(frozen=True)
class EquilibriumSet:
    e1: tuple[float, float]
    e2: tuple[float, float]
    e3: tuple[float, float]
    e_star: tuple[float, float]
    residual: float
    newton: tuple[float, float] | None
    fixed_point: tuple[float, float]
    newton_iterations: int
    fixed_point_iterations: int

    def as_dict(self) -> dict:
        return {
            "e1": list(self.e1),
            "e2": list(self.e2),
            "e3": list(self.e3),
            "e_star": list(self.e_star),
            "residual": self.residual,
            "newton": None if self.newton is None else list(self.newton),
            "fixed_point": list(self.fixed_point),
        }


def _newton(p: ModelParams, z0, tol, max_iter=200):
    z = np.asarray(z0, dtype=float)
    F = _per_capita(z, p)
    for it in range(1, max_iter + 1):
        step = np.linalg.solve(_jacobian(z, p), -F)
        fnorm = np.max(np.abs(F))
        t = 1.0
        for _ in range(60):
            trial = z + t * step
            if np.all(trial > 0):
                F_trial = _per_capita(trial, p)
                if np.max(np.abs(F_trial)) < fnorm or fnorm <= tol:
                    break
            t *= 0.5
        else:
            return None, it
        z, F = trial, F_trial
        if np.max(np.abs(F)) <= tol and np.max(np.abs(t * step)) <= tol * max(1.0, np.max(z)):
            return z, it
    return None, max_iter


def _fixed_point(p: ModelParams, tol, max_iter=100_000):
    x, y = p.r1 / (p.eps1 + p.b1 / p.K1), p.r2 / (p.eps2 + p.b2 / p.K2)
    for it in range(1, max_iter + 1):
        x_new = p.r1 / (p.eps1 + p.b1 / (p.K1 + y))
        y_new = p.r2 / (p.eps2 + p.b2 / (p.K2 + x_new))
        delta = max(abs(x_new - x), abs(y_new - y))
        x, y = x_new, y_new
        if delta <= 1e-3 * tol * max(1.0, x, y):
            return np.array([x, y]), it
    raise NoConvergence(f"fixed-point iteration did not converge in {max_iter} iterations")


def equilibria(p: ModelParams, tol: float = 1e-10) -> EquilibriumSet:
    """Boundary equilibria in closed form and the interior equilibrium.

    The interior point is found by damped Newton (step halving, at most 200
    iterations) started from the boundary values, and independently by the
    monotone fixed-point map ``x <- r1 / (eps1 + b1 / (K1 + y))``,
    ``y <- r2 / (eps2 + b2 / (K2 + x))``. The two must agree within
    ``10 * tol`` (relative once coordinates exceed 1); Newton's answer is
    reported when it converged.

    Raises
    ------
    NoConvergence
        If neither branch reaches residual ``<= tol`` or they disagree.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    for i in (1, 2):
        if p.species(i)[3] <= 0:
            raise ConstraintViolation(f"eps{i}", "equilibria need a positive self-limitation coefficient")
    e2 = (p.r1 / (p.eps1 + p.b1 / p.K1), 0.0)
    e3 = (0.0, p.r2 / (p.eps2 + p.b2 / p.K2))

    fp, fp_iter = _fixed_point(p, tol)
    with np.errstate(over="ignore", invalid="ignore"):
        nz, n_iter = _newton(p, (e2[0], e3[1]), tol)
    if nz is not None and np.max(np.abs(nz - fp)) > 10 * tol * max(1.0, np.max(fp)):
        raise NoConvergence(f"Newton {nz.tolist()} and fixed-point {fp.tolist()} disagree")
    z = nz if nz is not None else fp
    residual = float(np.max(np.abs(_per_capita(z, p))))
    if residual > tol:
        raise NoConvergence(f"interior equilibrium residual {residual:g} exceeds tol {tol:g}")
    return EquilibriumSet(
        e1=(0.0, 0.0),
        e2=e2,
        e3=e3,
        e_star=(float(z[0]), float(z[1])),
        residual=residual,
        newton=None if nz is None else (float(nz[0]), float(nz[1])),
        fixed_point=(float(fp[0]), float(fp[1])),
        newton_iterations=n_iter,
        fixed_point_iterations=fp_iter,
    )


def moment_bound(p: ModelParams, k: float, species: int) -> float:
    """Asymptotic bound on ``E[z**k]`` for species 1 or 2.

    ``H(k) = eps**-k * ((1 + k r + k (k - 1) alpha**2 / 2) / (k + 1)) ** (k + 1)``
    """
    if k <= 0:
        raise ValueError("moment order k must be > 0")
    r, _, _, eps, alpha, _ = p.species(species)
    base = (1 + k * r + k * (k - 1) / 2 * alpha ** 2) / (k + 1)
    if eps == 0:
        return math.inf
    # log space: eps ** k underflows for tiny eps
    log_h = (k + 1) * math.log(base) - k * math.log(eps)
    return math.exp(log_h) if log_h < 709 else math.inf


def norm_moment_bound(p: ModelParams, k: float) -> float:
    """Bound on ``E[|X|**k]``: ``2**(k/2) * (H1(k) + H2(k))``."""
    return 2 ** (k / 2) * (moment_bound(p, k, 1) + moment_bound(p, k, 2))


class PersistenceLimits(NamedTuple):
    #: lower bounds on the long-run time average when both margins are positive
    lower_x: float
    lower_y: float
    #: exact time-average limit of one species once the other is extinct
    single_x: float
    single_y: float

    def as_dict(self) -> dict:
        return self._asdict()


def persistence_limits(p: ModelParams) -> PersistenceLimits:
    m1 = p.r1 - p.alpha1 ** 2 / 2
    m2 = p.r2 - p.alpha2 ** 2 / 2
    return PersistenceLimits(
        lower_x=p.K1 * m1 / (p.b1 + p.eps1 * p.K1),
        lower_y=p.K2 * m2 / (p.b2 + p.eps2 * p.K2),
        single_x=m1 / (p.b1 / p.K1 + p.eps1),
        single_y=m2 / (p.b2 / p.K2 + p.eps2),
    )
