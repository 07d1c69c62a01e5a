"""Quantizer grid construction, application, and step-size design."""

import math

import numpy as np
import pytest

from quantprecode.quantizer import (
    QuantizerSpec,
    design_step_size,
    gaussian_distortion,
    quantize_matrix,
    quantize_scalar,
)


def numeric_distortion(levels, step, variance):
    """Independent distortion reference by dense numerical integration.

    Integrates (x - Q(x))^2 phi(x / sigma) / sigma over a +-12 sigma range
    with the trapezoid rule on a fine grid, reusing only the public
    quantizer application (not its closed-form distortion path).
    """
    sigma = math.sqrt(variance)
    spec = QuantizerSpec.create(levels, step)
    x = np.linspace(-12.0 * sigma, 12.0 * sigma, 400_001)
    q = spec.labels[np.searchsorted(spec.thresholds, x, side="right")]
    pdf = np.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
    return float(np.trapezoid((x - q) ** 2 * pdf, x))


class TestGrid:
    def test_labels_and_thresholds_l4(self):
        spec = QuantizerSpec.create(4, 1.0)
        np.testing.assert_allclose(spec.labels, [-1.5, -0.5, 0.5, 1.5])
        np.testing.assert_allclose(spec.thresholds, [-1.0, 0.0, 1.0])

    def test_labels_odd_level_count_contains_zero(self):
        spec = QuantizerSpec.create(5, 0.5)
        np.testing.assert_allclose(spec.labels, [-1.0, -0.5, 0.0, 0.5, 1.0])
        assert 0.0 in spec.labels

    def test_symmetry(self):
        for levels in (2, 3, 4, 7, 8):
            spec = QuantizerSpec.create(levels, 0.37)
            np.testing.assert_allclose(spec.labels, -spec.labels[::-1], atol=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            QuantizerSpec.create(1, 1.0)
        with pytest.raises(ValueError):
            QuantizerSpec.create(2.0, 1.0)
        with pytest.raises(ValueError):
            QuantizerSpec.create(4, 0.0)
        with pytest.raises(ValueError):
            QuantizerSpec.create(4, float("nan"))

    def test_manifest_roundtrip(self):
        spec = QuantizerSpec.create(3, 0.25)
        d = spec.to_manifest()
        assert d["levels"] == 3 and d["step"] == 0.25
        np.testing.assert_allclose(d["labels"], spec.labels)


class TestApply:
    def test_half_open_cells_take_upper_label(self):
        # A value sitting exactly on a threshold belongs to the upper cell.
        spec = QuantizerSpec.create(4, 1.0)
        assert quantize_scalar(spec, 0.0 + 0.0j) == 0.5 + 0.5j
        assert quantize_scalar(spec, 1.0 - 1.0j) == 1.5 - 0.5j

    def test_clipping_beyond_grid(self):
        spec = QuantizerSpec.create(4, 1.0)
        assert quantize_scalar(spec, 99.0 - 99.0j) == 1.5 - 1.5j

    def test_nearest_label(self, rng):
        spec = QuantizerSpec.create(8, 0.3)
        x = rng.uniform(-2.0, 2.0, size=500)
        q = np.array([quantize_scalar(spec, v).real for v in x])
        # Brute-force nearest; random draws never hit a threshold exactly.
        expect = spec.labels[np.argmin(np.abs(x[:, None] - spec.labels[None, :]), axis=1)]
        np.testing.assert_array_equal(q, expect)

    def test_matrix_membership_and_idempotence(self, rng):
        spec = QuantizerSpec.create(4, 0.7)
        w = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        p = quantize_matrix(spec, w)
        assert np.isin(p.real, spec.labels).all()
        assert np.isin(p.imag, spec.labels).all()
        np.testing.assert_array_equal(quantize_matrix(spec, p), p)

    def test_matrix_matches_scalar(self, rng):
        spec = QuantizerSpec.create(3, 0.5)
        w = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        p = quantize_matrix(spec, w)
        for idx in np.ndindex(w.shape):
            assert p[idx] == quantize_scalar(spec, w[idx])


class TestDistortion:
    def test_matches_numeric_integration(self):
        for levels, step, var in [(2, 1.6, 1.0), (4, 1.0, 1.0), (8, 0.05, 1.0 / 128.0)]:
            closed = gaussian_distortion(levels, step, var)
            ref = numeric_distortion(levels, step, var)
            assert closed == pytest.approx(ref, rel=1e-6)

    def test_matches_monte_carlo(self):
        spec = QuantizerSpec.create(4, 0.9957)
        draws = np.random.default_rng(7).standard_normal(1_000_000)
        q = spec.labels[np.searchsorted(spec.thresholds, draws, side="right")]
        empirical = float(np.mean((draws - q) ** 2))
        assert gaussian_distortion(4, 0.9957, 1.0) == pytest.approx(empirical, rel=5e-3)

    def test_scale_equivariance_exact(self):
        # Scaling the variance by 4 and the step by 2 rescales the error
        # by exactly 4: every float op commutes with powers of two.
        a = gaussian_distortion(8, 0.3, 0.5)
        b = gaussian_distortion(8, 0.6, 2.0)
        assert b == 4.0 * a

    def test_validation(self):
        with pytest.raises(ValueError):
            gaussian_distortion(4, 1.0, 0.0)
        with pytest.raises(ValueError):
            gaussian_distortion(4, 1.0, -1.0)


class TestDesign:
    def test_one_bit_closed_form(self):
        # With labels +-step/2 the distortion is minimized at
        # step/2 = E|x| = sigma * sqrt(2/pi), a textbook closed form.
        expect = 2.0 * math.sqrt(2.0 / math.pi)
        assert design_step_size(2, 1.0) == pytest.approx(expect, abs=2e-5)

    @pytest.mark.parametrize("levels", [3, 4, 5, 8])
    def test_beats_dense_grid_scan(self, levels):
        step = design_step_size(levels, 1.0)
        d_opt = gaussian_distortion(levels, step, 1.0)
        grid = np.linspace(0.02, 3.9, 1500)
        d_grid = np.array([gaussian_distortion(levels, s, 1.0) for s in grid])
        # The designed step must essentially match the best grid point and
        # the grid minimizer must sit next to it.
        assert d_opt <= d_grid.min() * (1.0 + 1e-6)
        assert abs(grid[np.argmin(d_grid)] - step) < 2.0 * (grid[1] - grid[0])

    def test_doubling_exact(self):
        for levels in (2, 5, 8):
            assert design_step_size(levels, 4.0 * 0.37) == 2.0 * design_step_size(levels, 0.37)

    def test_scales_with_sigma(self):
        s1 = design_step_size(8, 1.0)
        s2 = design_step_size(8, 1.0 / 128.0)
        assert s2 == pytest.approx(s1 / math.sqrt(128.0), rel=1e-9)

    def test_shrinks_with_levels(self):
        steps = [design_step_size(levels, 1.0) for levels in (2, 4, 8, 16)]
        assert all(a > b for a, b in zip(steps, steps[1:]))

    def test_validation(self):
        with pytest.raises(ValueError):
            design_step_size(1, 1.0)
        with pytest.raises(ValueError):
            design_step_size(4, 0.0)
        with pytest.raises(ValueError):
            design_step_size(4, math.inf)
