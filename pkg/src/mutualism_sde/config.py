"""Flat ``key = value`` run configuration.

Example::

    # reference figure, panel (c)
    r1 = 1.2
    alpha1 = 0.1
    alpha2 = 1.6
    k_list = 1, 2, 3

Keys are the snake-case field names of :class:`RunConfig`. Unknown keys,
unparsable values and values violating a model invariant raise errors that
name the key and, for file input, the line.
"""

from __future__ import annotations

import dataclasses
import math

from .errors import ConstraintViolation, MalformedValue, UnknownKey
from .integrate import Scheme
from .model import FIGURE1_BASE, FIGURE1_NOISE, ModelParams

__all__ = ["RunConfig", "parse_config", "CONFIG_KEYS"]

_PARAM_KEYS = {
    "r1": "r1", "r2": "r2", "b1": "b1", "b2": "b2", "k1": "K1", "k2": "K2",
    "eps1": "eps1", "eps2": "eps2", "alpha1": "alpha1", "alpha2": "alpha2",
    "x0": "x0", "y0": "y0",
}


@dataclasses.dataclass(frozen=True)
class RunConfig:
    r1: float = FIGURE1_BASE["r1"]
    r2: float = FIGURE1_BASE["r2"]
    b1: float = FIGURE1_BASE["b1"]
    b2: float = FIGURE1_BASE["b2"]
    k1: float = FIGURE1_BASE["K1"]
    k2: float = FIGURE1_BASE["K2"]
    eps1: float = FIGURE1_BASE["eps1"]
    eps2: float = FIGURE1_BASE["eps2"]
    alpha1: float = FIGURE1_NOISE["d"][0]
    alpha2: float = FIGURE1_NOISE["d"][1]
    x0: float = FIGURE1_BASE["x0"]
    y0: float = FIGURE1_BASE["y0"]
    scheme: Scheme = Scheme.MILSTEIN
    dt: float = 0.001
    t_end: float = 200.0
    t_burn: float | None = None
    seed: int = 42
    replicates: int = 1
    k_list: tuple = (1, 2, 3)
    epsilon: float = 0.05
    out_dir: str = "out"

    def __post_init__(self):
        for key in ("b1", "b2", "eps1", "eps2"):
            if not getattr(self, key) > 0:
                raise ConstraintViolation(key, f"must be > 0, got {getattr(self, key)!r}")
        try:
            self.params
        except ConstraintViolation as exc:
            key = exc.key.lower()
            raise ConstraintViolation(key, str(exc).split(": ", 1)[-1]) from None
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConstraintViolation("dt", f"must be > 0, got {self.dt!r}")
        if not self.t_end > 0:
            raise ConstraintViolation("t_end", f"must be > 0, got {self.t_end!r}")
        n = round(self.t_end / self.dt)
        if not math.isclose(n * self.dt, self.t_end, rel_tol=1e-9):
            raise ConstraintViolation("t_end", f"{self.t_end!r} is not a multiple of dt={self.dt!r}")
        if self.t_burn is not None and not 0 <= self.t_burn < self.t_end:
            raise ConstraintViolation("t_burn", f"must satisfy 0 <= t_burn < t_end, got {self.t_burn!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConstraintViolation("seed", f"must fit in 64 unsigned bits, got {self.seed!r}")
        if self.replicates < 1:
            raise ConstraintViolation("replicates", f"must be >= 1, got {self.replicates!r}")
        if not self.k_list or any(not k > 0 for k in self.k_list):
            raise ConstraintViolation("k_list", f"moment orders must be > 0, got {self.k_list!r}")
        if not 0 < self.epsilon < 1:
            raise ConstraintViolation("epsilon", f"must lie in (0, 1), got {self.epsilon!r}")

    @property
    def params(self) -> ModelParams:
        return ModelParams(**{name: getattr(self, key) for key, name in _PARAM_KEYS.items()})

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    @property
    def burn(self) -> float:
        return self.t_end / 4 if self.t_burn is None else self.t_burn

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["scheme"] = self.scheme.value
        d["k_list"] = list(self.k_list)
        d["t_burn"] = self.burn
        return d


CONFIG_KEYS = tuple(f.name for f in dataclasses.fields(RunConfig))


def _number(text):
    value = float(text)
    return int(value) if value.is_integer() and "." not in text and "e" not in text.lower() else value


def _convert(key, text):
    text = text.strip()
    if key == "scheme":
        try:
            return Scheme(text)
        except ValueError:
            raise ValueError(f"unknown scheme {text!r}; choose from {[s.value for s in Scheme]}") from None
    if key in ("seed", "replicates"):
        return int(text)
    if key == "k_list":
        return tuple(_number(part) for part in text.split(",") if part.strip())
    if key == "out_dir":
        if not text:
            raise ValueError("empty path")
        return text
    if key == "t_burn" and text.lower() in ("", "none", "default"):
        return None
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("not a finite number")
    return value


def parse_config(text: str = "", overrides: dict | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from file text, then apply ``overrides``.

    ``overrides`` maps keys to raw strings (as given on the command line) or
    to already-typed values; they win over the file.

    Raises
    ------
    UnknownKey, MalformedValue, ConstraintViolation
    """
    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MalformedValue(line, "expected 'key = value'", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise UnknownKey(key, "unknown configuration key", lineno)
        try:
            values[key] = _convert(key, value)
        except ValueError as exc:
            raise MalformedValue(key, str(exc), lineno) from None
        lines[key] = lineno
    for key, value in (overrides or {}).items():
        if key not in CONFIG_KEYS:
            raise UnknownKey(key, "unknown configuration key")
        try:
            values[key] = _convert(key, value) if isinstance(value, str) else value
        except ValueError as exc:
            raise MalformedValue(key, str(exc)) from None
        lines.pop(key, None)
    try:
        return RunConfig(**values)
    except ConstraintViolation as exc:
        if exc.line is None and exc.key in lines:
            raise ConstraintViolation(exc.key, str(exc).split(": ", 1)[-1], lines[exc.key]) from None
        raise
