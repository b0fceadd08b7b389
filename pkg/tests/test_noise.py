import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mutualism_sde.errors import NonDivisible
from mutualism_sde.noise import coarsen, generate, standard_normals


def test_empty_path():
    path = generate(42, 0, 0.01, 0)
    assert len(path.inc1) == len(path.inc2) == 0
    assert path.W1.tolist() == [0.0]


def test_bitwise_reproducible():
    a = generate(42, 0, 1e-3, 5000)
    b = generate(42, 0, 1e-3, 5000)
    assert a.inc1.tobytes() == b.inc1.tobytes()
    assert a.inc2.tobytes() == b.inc2.tobytes()


def test_streams_and_components_differ():
    a = generate(42, 0, 1e-3, 100)
    b = generate(42, 1, 1e-3, 100)
    assert not np.array_equal(a.inc1, b.inc1)
    assert not np.array_equal(a.inc1, a.inc2)


@settings(max_examples=30)
@given(st.integers(0, 2000), st.integers(0, 300), st.integers(0, 2 ** 64 - 1), st.integers(0, 1000))
def test_slices_are_pure_functions_of_index(start, count, seed, stream):
    whole = standard_normals(seed, stream, 1, 0, start + count)
    assert np.array_equal(standard_normals(seed, stream, 1, start, count), whole[start:])


def test_prefix_extension():
    short = generate(7, 3, 0.01, 100)
    long = generate(7, 3, 0.01, 1000)
    assert np.array_equal(short.inc1, long.inc1[:100])


def test_rejects_bad_dt():
    with pytest.raises(ValueError):
        generate(1, 0, 0.0, 10)


def test_gaussian_moments():
    dt, n = 1e-3, 10 ** 6
    path = generate(42, 0, dt, n)
    assert abs(path.inc1.mean()) <= 4 * math.sqrt(dt / n)
    assert abs(path.inc1.var() / dt - 1) <= 0.01
    corr = np.corrcoef(path.inc1, path.inc2)[0, 1]
    assert abs(corr) <= 4 / math.sqrt(n)


def test_read_only():
    path = generate(1, 0, 0.1, 4)
    with pytest.raises(ValueError):
        path.inc1[0] = 1.0


class TestCoarsen:
    def test_identity(self):
        path = generate(1, 0, 0.1, 12)
        assert coarsen(path, 1) is path

    def test_full_collapse(self):
        path = generate(1, 0, 0.1, 12)
        c = coarsen(path, 12)
        assert c.n_steps == 1 and c.dt == pytest.approx(1.2)
        assert c.inc1[0] == pytest.approx(path.W1[-1], rel=1e-12)

    def test_non_divisible(self):
        with pytest.raises(NonDivisible):
            coarsen(generate(1, 0, 0.1, 10), 3)

    def test_prefix_sums_match(self):
        path = generate(5, 2, 1e-3, 4096)
        for f in (2, 4, 16, 64):
            c = coarsen(path, f)
            fine = path.W1[::f]
            scale = np.abs(path.inc1).sum()
            assert np.max(np.abs(c.W1 - fine)) <= 1e-12 * scale

    def test_commutes(self):
        path = generate(5, 2, 1e-3, 4096)
        a = coarsen(coarsen(path, 4), 8)
        b = coarsen(path, 32)
        scale = np.abs(path.inc2).sum()
        assert np.max(np.abs(a.W2 - b.W2)) <= 1e-12 * scale
        assert a.dt == pytest.approx(b.dt, rel=1e-15)
