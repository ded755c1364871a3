"""Perfect gas coefficients, assumption validators and fluctuation maps."""

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowmach.gas import (
    CoefficientSet,
    MaterialLaw,
    coefficients_from_config,
    from_fluctuation,
    gamma_of,
    perfect_gas,
    symmetrizer_weights,
    to_fluctuation,
    validate_assumptions,
    validate_symmetrizer,
)
from lowmach.spectral import SpectralField, make_grid, random_band_limited_field
from lowmach.state import PrimitiveState, StateU


def const(value):
    return lambda *x: np.full(np.broadcast(*x).shape, float(value))


def constant_set(**overrides):
    fns = dict(
        g1=const(1), g2=const(1), g3=const(1), chi1=const(0.5), chi2=const(1), chi3=const(1),
        beta=const(1), zeta=const(1), eta=const(0),
    )
    fns.update(overrides)
    return CoefficientSet(**fns)


class TestMaterialLaw:
    def test_constant(self):
        np.testing.assert_array_equal(MaterialLaw(2.5)(np.array([0.5, 3.0])), [2.5, 2.5])

    def test_power(self):
        assert MaterialLaw(2.0, 0.5)(np.array(4.0)) == pytest.approx(4.0)

    @pytest.mark.parametrize("block", [{"law": "power", "coef": 3.0, "exponent": 0.7}, {"law": "constant", "coef": 2.0}])
    def test_config_round_trip(self, block):
        law = MaterialLaw.from_config(block)
        assert MaterialLaw.from_config(law.to_config()) == law

    def test_bare_number(self):
        assert MaterialLaw.from_config(0.25) == MaterialLaw(0.25, 0.0)

    def test_unknown_law(self):
        with pytest.raises(ValueError, match="unknown material law 'cubic'"):
            MaterialLaw.from_config({"law": "cubic"})


class TestPerfectGas:
    def test_gamma(self):
        assert gamma_of(perfect_gas(R=1.0, C_V=1.5)) == pytest.approx(5 / 3)

    def test_reference_values(self):
        """At ``T = P = 1``: ``g = (1/gamma, 1/R, C_V/R)``, ``chi = ((gamma-1)/gamma, 1, 1)``."""
        ref = perfect_gas(R=2.0, C_V=3.0).reference()
        gamma = 1 + 2 / 3
        expected = dict(g1=1 / gamma, g2=0.5, g3=1.5, chi1=(gamma - 1) / gamma, chi2=1, chi3=1, beta=1, zeta=1, eta=0)
        for key, value in expected.items():
            assert ref[key] == pytest.approx(value, rel=1e-15), key

    def test_pointwise_values(self):
        c = perfect_gas(R=1.0, C_V=2.5, k_fn=MaterialLaw(1.0, 0.5))
        th, wp = np.array(0.3), np.array(-0.2)
        T, P = math.exp(0.3), math.exp(-0.2)
        gamma = 1.4
        assert float(c.g2(th, wp)) == pytest.approx(1 / T)
        assert float(c.chi1(wp)) == pytest.approx((gamma - 1) / (gamma * P))
        assert float(c.chi3(wp)) == pytest.approx(1 / P)
        assert float(c.beta(th)) == pytest.approx(T**1.5)

    def test_closed_form_potentials(self):
        c = perfect_gas(R=1.0, C_V=1.5)
        assert float(c.S(np.array(0.4), np.array(0.5))) == pytest.approx(1.5 * 0.4 - 0.5 * 0.6)
        assert float(c.varrho(np.array(0.4), np.array(0.5))) == pytest.approx(0.1 * 0.6)

    @pytest.mark.parametrize("R, C_V", [(0.0, 1.5), (1.0, -1.0)])
    def test_nonpositive_constants(self, R, C_V):
        with pytest.raises(ValueError, match="R and C_V must be positive"):
            perfect_gas(R=R, C_V=C_V)

    def test_negative_alpha(self):
        with pytest.raises(ValueError, match="alpha must be nonnegative"):
            perfect_gas(alpha=-1.0)

    def test_config_round_trip(self):
        c = perfect_gas(R=0.7, C_V=2.0, k_fn=MaterialLaw(1.2, 0.5), eta_fn=MaterialLaw(-0.3))
        again = coefficients_from_config(c.to_config())
        assert again.reference() == c.reference()
        assert again.to_config() == c.to_config()

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="available: perfect-gas"):
            coefficients_from_config({"preset": "van-der-waals"})

    def test_gamma_of_custom_set(self):
        with pytest.raises(ValueError, match="not a perfect gas"):
            gamma_of(constant_set())

    @settings(max_examples=40, deadline=None)
    @given(th=st.floats(-3, 3), wp=st.floats(-3, 3), R=st.floats(0.1, 5), C_V=st.floats(0.1, 5))
    def test_varrho_inverse(self, th, wp, R, C_V):
        c = perfect_gas(R=R, C_V=C_V)
        rho = c.varrho(np.array(th), np.array(wp))
        assert float(c.wp_from_rho(np.array(th), rho)) == pytest.approx(wp, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(wp=st.floats(-5, 5), R=st.floats(0.1, 5), C_V=st.floats(0.1, 5))
    def test_chi_ratio_is_constant(self, wp, R, C_V):
        c = perfect_gas(R=R, C_V=C_V)
        gamma = 1 + R / C_V
        ratio = float(c.chi1(np.array(wp)) / c.chi3(np.array(wp)))
        assert ratio == pytest.approx((gamma - 1) / gamma, rel=1e-14)
        assert ratio < 1


class TestValidateAssumptions:
    def test_perfect_gas_passes_every_clause(self):
        rep = validate_assumptions(perfect_gas())
        assert rep.passed
        assert all(c.status == "pass" for c in rep.clauses)
        assert len(rep.clauses) == 12

    def test_identity_errors_far_below_tolerance(self):
        """Central differences of linear potentials are exact up to roundoff."""
        rep = validate_assumptions(perfect_gas(), tol=1e-10)
        assert rep.passed

    def test_runs_within_a_second(self):
        t0 = time.perf_counter()
        validate_assumptions(perfect_gas(k_fn=MaterialLaw(1, 0.7)), n_samples=100)
        assert time.perf_counter() - t0 < 1.0

    def test_equal_chi_fails_with_zero_margin(self):
        rep = validate_assumptions(constant_set(chi1=const(1.0)))
        clause = rep["A3 chi1 < chi3"]
        assert clause.status == "fail"
        assert clause.margin == 0.0
        assert clause.worst_point is not None
        assert not rep.passed

    def test_missing_potentials_are_not_checked(self):
        rep = validate_assumptions(constant_set())
        assert rep["compat dS"].status == "not checked"
        assert rep["compat dvarrho"].status == "not checked"
        assert rep.passed

    def test_wrong_potential_reports_worst_point(self):
        c = constant_set(S=lambda th, wp: th - wp + 0.1 * th**2)
        clause = validate_assumptions(c)["compat dS/dth = g3"]
        assert clause.status == "fail"
        # the error 0.2 |th| peaks on the box edge
        assert abs(clause.worst_point[0]) == pytest.approx(1.0)

    def test_negative_eta_plus_zeta(self):
        rep = validate_assumptions(constant_set(eta=const(-1.5)))
        assert rep["A2 eta + zeta > 0"].margin == pytest.approx(-0.5)

    def test_too_few_samples(self):
        with pytest.raises(ValueError, match="at least 100 samples"):
            validate_assumptions(perfect_gas(), n_samples=50)

    def test_report_serializes(self):
        rep = validate_assumptions(perfect_gas())
        data = rep.to_dict()
        assert data["passed"] is True
        assert data["clauses"][0]["name"] == "A1 g_i > 0"
        assert rep.table().splitlines()[0].startswith("clause")

    def test_unknown_clause(self):
        with pytest.raises(KeyError):
            validate_assumptions(perfect_gas())["A9"]


class TestSymmetrizer:
    @pytest.mark.parametrize("eps", [1.0, 0.1, 0.01])
    def test_weights_positive_for_perfect_gas(self, eps):
        assert validate_symmetrizer(perfect_gas(), eps).passed

    def test_pressure_gradient_decomposition(self):
        """``eps grad p = gamma1 grad theta + gamma2 grad rho`` with ``rho = varrho(theta, eps p)``."""
        c = perfect_gas(R=1.0, C_V=1.5)
        th, wp = np.array(0.2), np.array(-0.1)
        g1w, g2w, *_ = symmetrizer_weights(c, th, wp, 0.5)
        h = 1e-6
        drho_dth = (c.varrho(th + h, wp) - c.varrho(th - h, wp)) / (2 * h)
        drho_dwp = (c.varrho(th, wp + h) - c.varrho(th, wp - h)) / (2 * h)
        # d wp = gamma1 d th + gamma2 d rho for every direction
        assert float(g2w * drho_dwp) == pytest.approx(1.0, rel=1e-8)
        assert float(g1w + g2w * drho_dth) == pytest.approx(0.0, abs=1e-8)

    def test_delta2_scales_with_eps_squared(self):
        c = perfect_gas()
        z = np.zeros(())
        assert float(symmetrizer_weights(c, z, z, 0.1)[3]) == pytest.approx(0.01)


class TestFluctuationMaps:
    grid = make_grid(2, 16)

    def primitive(self, seed):
        P = SpectralField.from_values(self.grid, np.exp(random_band_limited_field(seed, self.grid, 3, (0.0, 0.3)).values))
        T = SpectralField.from_values(self.grid, np.exp(random_band_limited_field(seed + 1, self.grid, 3, (0.0, 0.3)).values))
        v = tuple(random_band_limited_field(seed + 2 + i, self.grid, 3) for i in range(2))
        return PrimitiveState(P, v, T)

    def test_reference_state_maps_to_zero(self):
        one = SpectralField.from_values(self.grid, np.full(self.grid.shape, 2.0))
        z = SpectralField.zeros(self.grid)
        u = to_fluctuation(PrimitiveState(one, (z, z), one), 0.1, Pbar=2.0, Tbar=2.0)
        assert np.max(np.abs(u.to_array())) == 0.0

    def test_doubled_pressure(self):
        two = SpectralField.from_values(self.grid, np.full(self.grid.shape, 2.0))
        one = SpectralField.from_values(self.grid, np.ones(self.grid.shape))
        z = SpectralField.zeros(self.grid)
        u = to_fluctuation(PrimitiveState(two, (z, z), one), 0.05)
        np.testing.assert_allclose(u.p.values, math.log(2) / 0.05, rtol=1e-14)

    @pytest.mark.parametrize("seed", [1, 7, 42])
    def test_round_trip(self, seed):
        state = self.primitive(seed)
        back = from_fluctuation(to_fluctuation(state, 0.2, 1.5, 0.7), 0.2, 1.5, 0.7)
        np.testing.assert_allclose(back.to_array(), state.to_array(), atol=1e-12)

    def test_inverse_round_trip(self):
        f = [random_band_limited_field(s, self.grid, 3) for s in range(4)]
        u = StateU(f[0], (f[1], f[2]), f[3])
        back = to_fluctuation(from_fluctuation(u, 0.3), 0.3)
        np.testing.assert_allclose(back.to_array(), u.to_array(), atol=1e-12)

    @pytest.mark.parametrize("kwargs", [{"eps": 0.0}, {"eps": 0.1, "Pbar": -1.0}, {"eps": 0.1, "Tbar": 0.0}])
    def test_nonpositive_parameters(self, kwargs):
        with pytest.raises(ValueError, match="must be positive"):
            to_fluctuation(self.primitive(0), **kwargs)

    def test_nonpositive_temperature_rejected(self):
        neg = SpectralField.from_values(self.grid, -np.ones(self.grid.shape))
        one = SpectralField.from_values(self.grid, np.ones(self.grid.shape))
        z = SpectralField.zeros(self.grid)
        with pytest.raises(ValueError, match="temperature must be positive"):
            PrimitiveState(one, (z, z), neg)
