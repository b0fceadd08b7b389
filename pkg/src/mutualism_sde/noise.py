"""Seed-reproducible Brownian increments for the two driving noises.

Every Gaussian is a pure function of ``(seed, stream_id, component, index)``:
the Philox counter-based generator is keyed by the seed and by
``2 * stream_id + component``, its output word ``index`` is mapped to a
uniform on (0, 1) and then through the inverse normal CDF. Any slice of any
replicate's noise can therefore be regenerated without replaying earlier
draws, and results never depend on the order in which replicates are run.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.special import ndtri

from .errors import NonDivisible

__all__ = ["BrownianPath", "standard_normals", "generate", "coarsen"]

_U64 = 2 ** 64
_WORDS_PER_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter value


def _key(seed: int, stream_id: int, component: int) -> np.ndarray:
    seed, stream_id = int(seed), int(stream_id)
    if not 0 <= seed < _U64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    if not 0 <= stream_id < _U64 // 2:
        raise ValueError(f"stream_id out of range: {stream_id}")
    if component not in (0, 1):
        raise ValueError("component must be 0 or 1")
    return np.array([seed, 2 * stream_id + component], dtype=np.uint64)


def standard_normals(seed: int, stream_id: int, component: int, start: int, count: int) -> np.ndarray:
    """Standard normal draws number ``start .. start + count - 1`` of one stream."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be non-negative")
    if count == 0:
        return np.empty(0)
    block, skip = divmod(start, _WORDS_PER_BLOCK)
    bitgen = np.random.Philox(key=_key(seed, stream_id, component), counter=[block, 0, 0, 0])
    raw = bitgen.random_raw(skip + count)[skip:]
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u)


@dataclasses.dataclass(frozen=True, eq=False)
class BrownianPath:
    """Increments of two independent Wiener processes on a uniform grid."""

    dt: float
    n_steps: int
    inc1: np.ndarray
    inc2: np.ndarray
    seed: int
    stream_id: int

    def __post_init__(self):
        if len(self.inc1) != self.n_steps or len(self.inc2) != self.n_steps:
            raise ValueError("increment arrays must have n_steps entries")
        for arr in (self.inc1, self.inc2):
            arr.flags.writeable = False

    @property
    def t_end(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def W1(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.inc1)))

    @property
    def W2(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.inc2)))

    @property
    def key(self) -> tuple[int, int]:
        return self.seed, self.stream_id


def generate(seed: int, stream_id: int, dt: float, n_steps: int) -> BrownianPath:
    """Brownian increments ``N(0, dt)`` for replicate ``stream_id``."""
    if not dt > 0 or not math.isfinite(dt):
        raise ValueError(f"dt must be > 0, got {dt!r}")
    if n_steps < 0:
        raise ValueError(f"n_steps must be >= 0, got {n_steps!r}")
    n_steps = int(n_steps)
    scale = math.sqrt(dt)
    inc1 = scale * standard_normals(seed, stream_id, 0, 0, n_steps)
    inc2 = scale * standard_normals(seed, stream_id, 1, 0, n_steps)
    return BrownianPath(float(dt), n_steps, inc1, inc2, int(seed), int(stream_id))


def coarsen(path: BrownianPath, factor: int) -> BrownianPath:
    """Sum consecutive blocks of ``factor`` increments (step ``factor * dt``)."""
    factor = int(factor)
    if factor < 1:
        raise ValueError("factor must be a positive integer")
    if path.n_steps % factor:
        raise NonDivisible(f"factor {factor} does not divide n_steps {path.n_steps}")
    if factor == 1:
        return path
    n = path.n_steps // factor
    inc1 = path.inc1.reshape(n, factor).sum(axis=1)
    inc2 = path.inc2.reshape(n, factor).sum(axis=1)
    return BrownianPath(path.dt * factor, n, inc1, inc2, path.seed, path.stream_id)
