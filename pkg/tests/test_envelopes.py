import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from mutualism_sde.envelopes import build_envelopes, check_sandwich, stochastic_logistic_exact
from mutualism_sde.errors import GridMismatch
from mutualism_sde.integrate import Trajectory, simulate
from mutualism_sde.model import figure1_params
from mutualism_sde.noise import coarsen, generate


def test_pure_growth():
    t = np.arange(1001) * 1e-3
    z = stochastic_logistic_exact(1.2, 0.0, 0.0, 0.5, 1e-3, np.zeros(1001))
    np.testing.assert_allclose(z, 0.5 * np.exp(1.2 * t), rtol=1e-14)


def test_deterministic_logistic_against_runge_kutta():
    r, damp, z0, dt, n = 1.2, 0.8, 0.5, 1e-4, 50_000
    z = stochastic_logistic_exact(r, damp, 0.0, z0, dt, np.zeros(n + 1))
    t = np.arange(n + 1) * dt
    ref = solve_ivp(lambda _, u: u * (r - damp * u), (0, t[-1]), [z0], t_eval=t[::500],
                    method="DOP853", rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(z[::500], ref.y[0], rtol=1e-8)


def test_large_exponents_survive():
    path = generate(1, 0, 1e-2, 20_000)
    z = stochastic_logistic_exact(5.0, 0.1, 0.2, 0.5, path.dt, path.W1)
    assert np.all(np.isfinite(z)) and np.all(z > 0)
    assert z[-1] == pytest.approx(50.0, rel=0.5)


def _milstein_residual(r, damp, alpha, z0, path):
    z = stochastic_logistic_exact(r, damp, alpha, z0, path.dt, path.W1)
    dw = path.inc1
    pred = z[:-1] + z[:-1] * (r - damp * z[:-1]) * path.dt + alpha * z[:-1] * dw \
        + 0.5 * alpha ** 2 * z[:-1] * (dw ** 2 - path.dt)
    return np.max(np.abs(pred - z[1:]))


def test_closed_form_solves_the_sde():
    fine = generate(4, 0, 2.5e-4, 8000)
    res = [_milstein_residual(1.2, 0.8, 0.5, 0.5, coarsen(fine, f)) for f in (4, 2, 1)]
    assert res[0] / res[1] > 1.6 and res[1] / res[2] > 1.6


class TestEnvelopes:
    def test_coincide_without_competition(self):
        p = figure1_params("d", b1=0.0, b2=0.0)
        env = build_envelopes(p, generate(2, 0, 1e-3, 1000))
        assert np.array_equal(env.lam_hi, env.lam_lo) and np.array_equal(env.th_hi, env.th_lo)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 1000), st.sampled_from("abcd"))
    def test_ordering_and_positivity(self, seed, panel):
        env = build_envelopes(figure1_params(panel), generate(seed, 0, 1e-2, 500))
        assert np.all(env.lam_lo <= env.lam_hi) and np.all(env.th_lo <= env.th_hi)
        assert np.all(env.lam_lo > 0) and np.all(env.th_lo > 0)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 1000))
    def test_monotone_in_initial_value(self, seed):
        path = generate(seed, 0, 1e-2, 500)
        a = stochastic_logistic_exact(1.2, 0.8, 0.5, 0.5, path.dt, path.W1)
        b = stochastic_logistic_exact(1.2, 0.8, 0.5, 1.0, path.dt, path.W1)
        assert np.all(b >= a)


class TestSandwich:
    @pytest.mark.parametrize("scheme", ["log_euler", "milstein"])
    def test_passes_on_same_path(self, scheme):
        p = figure1_params("d")
        path = generate(42, 0, 1e-3, 10_000)
        report = check_sandwich(simulate(p, scheme, path), build_envelopes(p, path), 10 * path.dt)
        assert report.passed

    def test_negative_control_other_seed(self):
        p = figure1_params("c")
        path = generate(42, 0, 1e-3, 10_000)
        other = build_envelopes(p, generate(43, 0, 1e-3, 10_000))
        report = check_sandwich(simulate(p, "log_euler", path), other, 10 * path.dt)
        assert not report.passed
        assert report.max_violation_x > 0.01 or report.max_violation_y > 0.01

    def test_envelope_as_trajectory(self):
        p = figure1_params("d")
        path = generate(42, 0, 1e-3, 1000)
        env = build_envelopes(p, path)
        traj = Trajectory(path.dt, path.n_steps, path.times, env.lam_hi, env.th_hi, None)
        report = check_sandwich(traj, env, 0.0)
        assert report.passed and report.max_violation_x == 0.0

    def test_grid_mismatch(self):
        p = figure1_params("d")
        env = build_envelopes(p, generate(1, 0, 1e-3, 100))
        with pytest.raises(GridMismatch):
            check_sandwich(simulate(p, "milstein", generate(1, 0, 1e-3, 50)), env, 0.01)

    def test_violation_shrinks_under_refinement_with_large_noise(self):
        p = figure1_params("b")
        total = np.zeros(2)
        for seed in range(10):
            fine = generate(seed, 0, 5e-4, 20_000)
            for i, path in enumerate((coarsen(fine, 2), fine)):
                r = check_sandwich(simulate(p, "milstein", path), build_envelopes(p, path), 10 * path.dt)
                total[i] += r.max_violation_x + r.max_violation_y
        assert total[1] < total[0]
