"""Grids, fields, multipliers and the random field generator."""

import math

import numpy as np
import pytest
import scipy.fft as sfft
from hypothesis import given, settings
from hypothesis import strategies as st

from lowmach.spectral import (
    MultiplierSymbol,
    SpectralField,
    apply_multiplier,
    bessel_symbol,
    bump_profile,
    compose,
    curl,
    dealias,
    derivative,
    div,
    grad,
    japanese_bracket,
    laplacian,
    make_grid,
    mollifier_symbol,
    mollifier_values,
    multiply,
    random_band_limited_field,
)


@pytest.fixture
def grid2():
    return make_grid(2, 16)


class TestSpectralGrid:
    def test_shape_spacing_and_volume(self):
        """A 2D grid of 32 points on a box of side 4 has spacing 1/8."""
        g = make_grid(2, 32, 4.0)
        assert g.shape == (32, 32)
        assert g.size == 1024
        assert g.spacing == pytest.approx(0.125)
        assert g.cell_volume == pytest.approx(0.125**2)

    def test_wavenumbers_scale_with_box(self):
        g = make_grid(1, 8, 4 * math.pi)
        np.testing.assert_allclose(g.wavenumbers[0], 0.5 * np.fft.fftfreq(8, 1 / 8))

    def test_nyquist_row_has_zero_derivative_symbol(self):
        """The unpaired Nyquist frequency must not be differentiated."""
        g = make_grid(1, 8)
        assert g.derivative_symbols[0][4] == 0
        assert g.derivative_symbols[0][3] == 3j

    def test_dealias_mask_keeps_two_thirds(self):
        g = make_grid(1, 12)
        kept = np.fft.fftfreq(12, 1 / 12)[g.dealias_mask]
        assert sorted(kept) == [-4, -3, -2, -1, 0, 1, 2, 3, 4]

    @pytest.mark.parametrize(
        "d, n, L, match",
        [
            (4, 16, 1.0, "dimension"),
            (2, 15, 1.0, "even"),
            (2, 6, 1.0, "at least 8"),
            (2, 16, 0.0, "box length"),
        ],
    )
    def test_invalid_grid_rejected(self, d, n, L, match):
        with pytest.raises(ValueError, match=match):
            make_grid(d, n, L)


class TestSpectralField:
    def test_round_trip_values(self, grid2):
        rng = np.random.default_rng(0)
        vals = rng.standard_normal(grid2.shape)
        u = SpectralField.from_values(grid2, vals)
        np.testing.assert_allclose(SpectralField(grid2, u.coeffs).values, vals, atol=1e-13)

    def test_coefficient_convention(self):
        """``cos(3x)`` has coefficient 1/2 at k = +-3."""
        g = make_grid(1, 16)
        u = SpectralField.from_values(g, np.cos(3 * g.coordinates[0]))
        assert u.coeffs[3] == pytest.approx(0.5)
        assert u.coeffs[-3] == pytest.approx(0.5)

    def test_coefficients_are_read_only(self, grid2):
        u = SpectralField.zeros(grid2)
        with pytest.raises(ValueError):
            u.coeffs[0, 0] = 1.0

    def test_linear_operations(self, grid2):
        x, y = grid2.coordinates
        u = SpectralField.from_values(grid2, np.sin(x))
        v = SpectralField.from_values(grid2, np.cos(y))
        np.testing.assert_allclose((2.0 * u - v).values, 2 * np.sin(x) - np.cos(y), atol=1e-13)
        np.testing.assert_allclose((-u + v).values, np.cos(y) - np.sin(x), atol=1e-13)

    def test_field_times_field_rejected(self, grid2):
        u = SpectralField.zeros(grid2)
        with pytest.raises(TypeError, match="multiply"):
            u * u

    def test_mismatched_grids_rejected(self):
        u = SpectralField.zeros(make_grid(1, 8))
        v = SpectralField.zeros(make_grid(1, 16))
        with pytest.raises(ValueError, match="different grids"):
            u + v

    def test_wrong_shape_rejected(self, grid2):
        with pytest.raises(ValueError, match="does not match"):
            SpectralField(grid2, np.zeros((4, 4)))


class TestCalculus:
    def test_derivative_of_trigonometric_field(self):
        """``d/dx sin(2 pi k x / L) = (2 pi k / L) cos(...)`` on a non-unit box."""
        L = 3.0
        g = make_grid(1, 32, L)
        x = g.coordinates[0]
        u = SpectralField.from_values(g, np.sin(2 * np.pi * 3 * x / L))
        expected = (2 * np.pi * 3 / L) * np.cos(2 * np.pi * 3 * x / L)
        np.testing.assert_allclose(derivative(u, 0).values, expected, atol=1e-12)

    def test_div_grad_is_laplacian(self, grid2):
        u = random_band_limited_field(3, grid2, 4)
        np.testing.assert_allclose(div(grad(u)).coeffs, laplacian(u).coeffs, atol=1e-14)

    def test_laplacian_eigenvalue(self):
        g = make_grid(2, 16)
        x, y = g.coordinates
        u = SpectralField.from_values(g, np.sin(2 * x) * np.cos(3 * y))
        np.testing.assert_allclose(laplacian(u).values, -13 * u.values, atol=1e-12)

    def test_curl_of_gradient_vanishes(self, grid2):
        u = random_band_limited_field(4, grid2, 5)
        c = curl(grad(u))
        for row in c:
            for entry in row:
                assert np.max(np.abs(entry.coeffs)) < 1e-14

    def test_curl_is_antisymmetric(self, grid2):
        w = [random_band_limited_field(s, grid2, 4) for s in (1, 2)]
        c = curl(w)
        np.testing.assert_allclose(c[0][1].coeffs, -c[1][0].coeffs)
        assert np.all(c[0][0].coeffs == 0)

    def test_div_needs_dim_components(self, grid2):
        with pytest.raises(ValueError, match="expected 2 components"):
            div([SpectralField.zeros(grid2)])

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31), axis=st.integers(0, 1))
    def test_derivative_is_antisymmetric(self, seed, axis):
        """``<d u, w> = -<u, d w>`` in the grid inner product."""
        g = make_grid(2, 12)
        u = random_band_limited_field(seed, g, 3, zero_mean=False)
        w = random_band_limited_field(seed + 1, g, 3, zero_mean=False)
        lhs = np.mean(derivative(u, axis).values * w.values)
        rhs = -np.mean(u.values * derivative(w, axis).values)
        assert lhs == pytest.approx(rhs, abs=1e-13)


class TestMultipliers:
    def test_apply_multiplier_scales_coefficients(self, grid2):
        u = random_band_limited_field(5, grid2, 4)
        q = MultiplierSymbol(lambda xi: 2.0 + 0 * xi[0], 0.0)
        np.testing.assert_allclose(apply_multiplier(q, u).coeffs, 2 * u.coeffs)

    def test_symbol_product_adds_orders(self):
        q = bessel_symbol(0.5, 1.0) * bessel_symbol(0.5, -3.0)
        assert q.order == -2.0
        g = make_grid(1, 16)
        expected = (1 + 0.25 * g.wavenumbers[0] ** 2) ** -1
        np.testing.assert_allclose(q.on(g), np.broadcast_to(expected, g.shape))

    def test_bessel_symbol_at_h_zero_is_identity(self, grid2):
        assert np.all(bessel_symbol(0.0, 4.0).on(grid2) == 1.0)

    def test_bound_symbol_rejects_other_grid(self):
        q = MultiplierSymbol(lambda xi: 1.0, 0.0, make_grid(1, 8))
        with pytest.raises(ValueError, match="different grid"):
            q.on(make_grid(1, 16))

    def test_nonfinite_symbol_rejected(self, grid2):
        q = MultiplierSymbol(lambda xi: np.full(xi[0].shape, np.inf), -1.0)
        with pytest.raises(ValueError, match="not finite"):
            q.on(grid2)

    @pytest.mark.parametrize("h", [0.0, 1.5])
    def test_mollifier_scale_range(self, h):
        with pytest.raises(ValueError, match="mollifier scale"):
            mollifier_symbol(h)

    def test_bessel_scale_range(self):
        with pytest.raises(ValueError, match="Bessel scale"):
            bessel_symbol(-0.1, 1.0)

    def test_bump_profile_plateau_and_support(self):
        r = np.array([0.0, 1.0, 1.5, 2.0, 3.0])
        vals = bump_profile(r)
        assert vals[0] == 1.0 and vals[1] == 1.0
        assert vals[2] == pytest.approx(0.5)
        assert vals[3] == 0.0 and vals[4] == 0.0

    def test_bump_profile_is_monotone(self):
        r = np.linspace(0, 3, 301)
        assert np.all(np.diff(bump_profile(r)) <= 0)

    def test_mollifier_symbol_matches_values(self, grid2):
        np.testing.assert_array_equal(mollifier_symbol(0.25).on(grid2), mollifier_values(grid2, 0.25))

    @settings(max_examples=30, deadline=None)
    @given(k=st.integers(1, 6))
    def test_projection_identity_on_symbols(self, k):
        """``j(h xi) j(h xi / 2) = j(h xi)`` exactly, since ``j = 1`` on the unit ball."""
        g = make_grid(2, 32)
        h = 2.0**-k
        jh = mollifier_values(g, h)
        assert np.max(np.abs(jh * mollifier_values(g, h / 2) - jh)) == 0.0

    def test_japanese_bracket_at_origin(self, grid2):
        assert japanese_bracket(grid2)[0, 0] == 1.0


class TestProducts:
    def test_multiply_exact_for_band_limited_factors(self):
        g = make_grid(1, 24)
        x = g.coordinates[0]
        u = SpectralField.from_values(g, np.cos(2 * x))
        v = SpectralField.from_values(g, np.sin(3 * x))
        np.testing.assert_allclose(multiply(u, v).values, np.cos(2 * x) * np.sin(3 * x), atol=1e-13)

    def test_multiply_removes_aliased_modes(self):
        g = make_grid(1, 16)
        x = g.coordinates[0]
        u = SpectralField.from_values(g, np.cos(5 * x))
        out = multiply(u, u)
        # cos^2(5x) = (1 + cos 10x)/2 and mode 10 aliases onto -6, outside the mask
        np.testing.assert_allclose(out.values, 0.5, atol=1e-14)

    def test_dealias_is_idempotent(self, grid2):
        u = random_band_limited_field(1, grid2, 5)
        once = dealias(u)
        np.testing.assert_array_equal(dealias(once).coeffs, once.coeffs)

    def test_compose_constant_function(self, grid2):
        u = random_band_limited_field(1, grid2, 3)
        np.testing.assert_allclose(compose(lambda a: 0 * a + 2.0, u).values, 2.0, atol=1e-14)


class TestRandomField:
    def test_deterministic_given_seed(self, grid2):
        a = random_band_limited_field(7, grid2, 4)
        b = random_band_limited_field(7, grid2, 4)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)

    def test_band_and_mean(self):
        g = make_grid(2, 24)
        u = random_band_limited_field(2, g, 3)
        kint = np.sqrt(sum(k * k for k in g.integer_wavenumbers))
        assert np.all(u.coeffs[kint > 3] == 0)
        assert u.coeffs[0, 0] == 0

    def test_sobolev_target(self, grid2):
        u = random_band_limited_field(3, grid2, 4, sobolev_target=(2.0, 0.7))
        w = japanese_bracket(grid2) ** 4
        assert math.sqrt(np.sum(w * np.abs(u.coeffs) ** 2)) == pytest.approx(0.7, rel=1e-13)

    def test_zero_target_gives_zero_field(self, grid2):
        u = random_band_limited_field(3, grid2, 4, sobolev_target=(0.0, 0.0))
        assert not np.any(u.coeffs)

    def test_band_above_dealiased_range_rejected(self, grid2):
        with pytest.raises(ValueError, match="band"):
            random_band_limited_field(0, grid2, 6)

    def test_negative_target_rejected(self, grid2):
        with pytest.raises(ValueError, match="nonnegative"):
            random_band_limited_field(0, grid2, 2, sobolev_target=(0.0, -1.0))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31), d=st.integers(1, 3))
    def test_coefficients_are_hermitian(self, seed, d):
        """``c_{-k} = conj(c_k)`` exactly, so the field is real."""
        g = make_grid(d, 8)
        c = random_band_limited_field(seed, g, 2, zero_mean=False).coeffs
        axes = tuple(range(d))
        mirrored = np.roll(np.flip(c, axes), 1, axes)
        np.testing.assert_array_equal(c, np.conj(mirrored))


class TestHandValues:
    def test_one_dimensional_frequencies(self):
        g = make_grid(1, 8)
        assert sorted(g.wavenumbers[0].tolist()) == [-4, -3, -2, -1, 0, 1, 2, 3]

    def test_largest_component_on_64_grid(self):
        g = make_grid(2, 64)
        assert np.max(np.abs(g.wavenumbers[0])) == 32

    def test_odd_points_rejected(self):
        with pytest.raises(ValueError, match="even"):
            make_grid(1, 7)

    def test_mollifier_plateau_and_cutoff_values(self):
        g = make_grid(1, 16)
        assert mollifier_values(g, 0.1)[5] == 1.0
        assert mollifier_values(g, 1.0)[3] == 0.0

    def test_bessel_value(self):
        g = make_grid(1, 16)
        assert bessel_symbol(1.0, -2.0).on(g)[3] == pytest.approx(0.1, rel=1e-15)

    def test_zero_order_bessel_is_identity(self, grid2):
        u = random_band_limited_field(2, grid2, 4)
        np.testing.assert_array_equal(apply_multiplier(bessel_symbol(0.5, 0.0), u).coeffs, u.coeffs)

    def test_derivative_symbol_maps_sine_to_cosine(self, grid2):
        x = grid2.coordinates[0]
        u = SpectralField.from_values(grid2, np.sin(x))
        q = MultiplierSymbol(lambda xi: 1j * xi[0], 1.0)
        np.testing.assert_allclose(apply_multiplier(q, u).values, np.cos(x), atol=1e-12)

    def test_gradient_of_constant_is_zero(self, grid2):
        u = SpectralField.from_values(grid2, np.full(grid2.shape, 3.0))
        assert all(np.max(np.abs(g.coeffs)) < 1e-15 for g in grad(u))

    def test_laplacian_of_product_of_sines(self, grid2):
        x, y = grid2.coordinates
        u = SpectralField.from_values(grid2, np.sin(x) * np.sin(y))
        np.testing.assert_allclose(div(grad(u)).values, -2 * u.values, atol=1e-12)

    def test_high_single_mode_is_removed(self):
        g = make_grid(1, 16)
        u = SpectralField.from_values(g, np.cos(7 * g.coordinates[0]))
        assert np.max(np.abs(dealias(u).coeffs)) < 1e-15

    def test_quarter_band_field_is_kept(self):
        g = make_grid(2, 16)
        u = random_band_limited_field(9, g, 4)
        np.testing.assert_array_equal(dealias(u).coeffs, u.coeffs)

    def test_rescaled_generator_hits_target(self):
        g = make_grid(2, 32)
        u = random_band_limited_field(1, g, 8, sobolev_target=(4.0, 1.0))
        w = japanese_bracket(g) ** 8
        assert math.sqrt(np.sum(w * np.abs(u.coeffs) ** 2)) == pytest.approx(1.0, abs=1e-10)


class TestMultiplierInvariants:
    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_parseval(self, seed):
        g = make_grid(2, 16)
        u = random_band_limited_field(seed, g, 5, zero_mean=False)
        physical = math.sqrt(np.mean(u.values**2))
        spectral = math.sqrt(np.sum(np.abs(u.coeffs) ** 2))
        assert physical == pytest.approx(spectral, rel=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31), m1=st.floats(-3, 3), m2=st.floats(-3, 3), h=st.floats(0, 1))
    def test_composition_matches_product_symbol(self, seed, m1, m2, h):
        g = make_grid(2, 16)
        u = random_band_limited_field(seed, g, 5)
        q1, q2 = bessel_symbol(h, m1), bessel_symbol(h, m2)
        twice = apply_multiplier(q1, apply_multiplier(q2, u))
        np.testing.assert_allclose(twice.coeffs, apply_multiplier(q1 * q2, u).coeffs, rtol=1e-14, atol=0)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31), k=st.integers(0, 6))
    def test_mollified_real_field_stays_real(self, seed, k):
        g = make_grid(2, 16)
        u = random_band_limited_field(seed, g, 5)
        full = sfft.ifftn(mollifier_values(g, 2.0**-k) * u.coeffs, norm="forward")
        assert np.max(np.abs(full.imag)) <= 1e-14

    @settings(max_examples=20, deadline=None)
    @given(h=st.sampled_from([2.0**-k for k in range(7)]), r=st.floats(0, 4))
    def test_high_frequency_symbol_bound(self, h, r):
        """``(1 - j(h xi)) <xi>^-r <= h^r`` at every grid wavenumber."""
        g = make_grid(2, 64)
        lhs = (1 - mollifier_values(g, h)) * japanese_bracket(g) ** (-r)
        assert np.max(lhs) <= h**r * (1 + 1e-14)
