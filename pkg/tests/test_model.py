import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mutualism_sde.errors import ConstraintViolation
from mutualism_sde.model import (
    ModelParams,
    Regime,
    State,
    classify,
    diffusion,
    drift,
    equilibria,
    figure1_params,
    moment_bound,
    norm_moment_bound,
    persistence_limits,
)

from conftest import E_STAR_FIG1

pos = st.floats(0.05, 5.0)


@st.composite
def params(draw, alpha=st.floats(0.0, 3.0)):
    return ModelParams(
        r1=draw(pos), r2=draw(pos), b1=draw(pos), b2=draw(pos), K1=draw(pos), K2=draw(pos),
        eps1=draw(pos), eps2=draw(pos), alpha1=draw(alpha), alpha2=draw(alpha),
    )


class TestParams:
    def test_negative_noise_rejected(self):
        with pytest.raises(ConstraintViolation, match="alpha1"):
            figure1_params(alpha1=-1.0)

    @pytest.mark.parametrize("name", ["r1", "K2", "x0", "y0"])
    def test_strictly_positive_fields(self, name):
        with pytest.raises(ConstraintViolation, match=name):
            figure1_params(**{name: 0.0})

    def test_nan_rejected(self):
        with pytest.raises(ConstraintViolation):
            figure1_params(r1=float("nan"))


class TestDrift:
    def test_zero_x_component(self, fig1):
        dx, dy = drift(State(0.0, 5.0), fig1)
        assert dx == 0.0
        assert dy == 5.0 * (1.0 - 0.9 * 5.0 / 2.0 - 0.7 * 5.0)

    def test_figure1_unit_state(self, fig1):
        dx, dy = drift((1.0, 1.0), fig1)
        assert dx == pytest.approx(0.1666667, abs=1e-7)
        assert dy == pytest.approx(0.0, abs=1e-15)

    def test_vanishes_at_interior_equilibrium(self, fig1):
        eq = equilibria(fig1)
        assert np.max(np.abs(drift(eq.e_star, fig1))) <= 10 * eq.residual + 1e-15

    def test_rejects_nan(self, fig1):
        with pytest.raises(ConstraintViolation):
            drift((math.nan, 1.0), fig1)

    @given(params(), st.floats(0, 10))
    def test_boundary_components_vanish(self, p, z):
        assert drift((0.0, z), p)[0] == 0.0
        assert drift((z, 0.0), p)[1] == 0.0
        assert diffusion((0.0, z), p)[0] == 0.0
        assert diffusion((z, 0.0), p)[1] == 0.0


class TestDiffusion:
    def test_origin(self, fig1):
        assert diffusion((0.0, 0.0), fig1.replace(alpha1=1, alpha2=1)) == (0.0, 0.0)

    def test_panel_b_amplitudes(self):
        assert diffusion((1.0, 1.0), figure1_params("b")) == (2.2, 1.8)

    def test_deterministic(self, fig1):
        assert diffusion((3.0, 4.0), fig1) == (0.0, 0.0)


class TestEquilibria:
    def test_figure1_interior(self, fig1):
        eq = equilibria(fig1)
        assert eq.e_star == pytest.approx(E_STAR_FIG1, abs=1e-12)
        assert eq.residual <= 1e-10
        assert np.max(np.abs(np.subtract(eq.newton, eq.fixed_point))) <= 1e-9

    def test_boundary_closed_forms(self, fig1):
        eq = equilibria(fig1)
        assert eq.e1 == (0.0, 0.0)
        assert eq.e2 == (pytest.approx(1.0434783, abs=1e-7), 0.0)
        assert eq.e3 == (0.0, 1.0 / (0.7 + 0.45))

    def test_decoupled(self, fig1):
        p = fig1.replace(b1=0.0, b2=0.0)
        assert equilibria(p).e_star == pytest.approx((1.2 / 0.8, 1.0 / 0.7), rel=1e-14)

    def test_needs_self_limitation(self, fig1):
        with pytest.raises(ConstraintViolation):
            equilibria(fig1.replace(eps1=0.0))

    @settings(max_examples=50, deadline=None)
    @given(params())
    def test_branches_agree_and_dominate_boundary(self, p):
        tol = 1e-10
        eq = equilibria(p, tol)
        assert eq.residual <= tol
        assert np.max(np.abs(np.subtract(eq.newton, eq.fixed_point))) <= 10 * tol
        assert eq.e_star[0] > eq.e2[0] and eq.e_star[1] > eq.e3[1]


class TestClassify:
    @pytest.mark.parametrize("panel, tag, margins", [
        ("a", Regime.PERMANENT, (1.2, 1.0)),
        ("b", Regime.BOTH_EXTINCT, (-1.22, -0.62)),
        ("c", Regime.Y_EXTINCT_X_PERSISTENT, (1.195, -0.28)),
        ("d", Regime.PERMANENT, (1.19995, 0.99995)),
    ])
    def test_figure1_panels(self, panel, tag, margins):
        c = classify(figure1_params(panel))
        assert c.tag is tag
        assert c.margins == pytest.approx(margins, abs=1e-12)

    def test_x_extinct(self):
        assert classify(figure1_params("b", alpha2=0.01)).tag is Regime.X_EXTINCT_Y_PERSISTENT

    def test_exact_zero_margin_is_boundary(self):
        c = classify(figure1_params(r1=2.0, alpha1=2.0))
        assert c.margins[0] == 0.0
        assert c.tag is Regime.BOUNDARY

    @given(params(), st.floats(0.1, 10))
    def test_scale_invariance(self, p, s):
        q = p.replace(b1=p.b1 * s, b2=p.b2 * s, K1=p.K1 * s, K2=p.K2 * s, eps1=p.eps1 * s, eps2=p.eps2 * s)
        assert classify(q) == classify(p)


class TestMomentBound:
    def test_species1_first_moment(self, fig1):
        assert moment_bound(fig1, 1, 1) == pytest.approx(1.5125, rel=1e-14)

    def test_species2_first_moment(self, fig1):
        assert moment_bound(fig1, 1, 2) == pytest.approx(1.4285714, abs=1e-7)

    def test_first_moment_ignores_noise(self, fig1):
        assert moment_bound(figure1_params("b"), 1, 1) == moment_bound(fig1, 1, 1)

    def test_norm_bound(self, fig1):
        assert norm_moment_bound(fig1, 2) == 2 * (moment_bound(fig1, 2, 1) + moment_bound(fig1, 2, 2))

    @pytest.mark.parametrize("k", [0.5, 1, 2, 3])
    def test_increasing_in_growth_rate(self, fig1, k):
        rs = np.linspace(0.1, 5, 50)
        values = [moment_bound(fig1.replace(r1=r), k, 1) for r in rs]
        assert np.all(np.diff(values) > 0)

    def test_rejects_nonpositive_order(self, fig1):
        with pytest.raises(ValueError):
            moment_bound(fig1, 0, 1)


class TestPersistenceLimits:
    def test_single_species_limit(self, fig1):
        lim = persistence_limits(fig1.replace(alpha2=0.01))
        assert lim.single_y == pytest.approx(0.8695217, abs=1e-7)

    def test_lower_bound(self, fig1):
        lim = persistence_limits(fig1.replace(alpha1=0.01))
        assert lim.lower_x == pytest.approx(1.0434348, abs=1e-7)

    def test_zero_margin(self, fig1):
        lim = persistence_limits(fig1.replace(r1=2.0, alpha1=2.0))
        assert lim.lower_x == 0.0 and lim.single_x == 0.0

    def test_negative_when_extinct(self):
        lim = persistence_limits(figure1_params("b"))
        assert lim.lower_x < 0 and lim.single_y < 0
