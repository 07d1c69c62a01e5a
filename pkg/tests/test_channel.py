"""Channel drawing, pilot-based estimation, and SNR-to-variance mapping."""

import numpy as np
import pytest

from quantprecode.channel import (
    draw_channel,
    estimate_channel,
    gamma_from_snr,
    snr_schedule,
)


def test_shapes_and_perfect_csi():
    state = draw_channel(3, 5, 1.0, 42)
    assert state.h_true.shape == (3, 5)
    assert state.n_ues == 3 and state.n_antennas == 5
    np.testing.assert_array_equal(state.h_hat, state.h_true)
    assert state.h_hat is not state.h_true


def test_deterministic_in_seed():
    a = draw_channel(2, 4, 1.0, [1234, 0, 0])
    b = draw_channel(2, 4, 1.0, [1234, 0, 0])
    c = draw_channel(2, 4, 1.0, [1234, 1, 0])
    np.testing.assert_array_equal(a.h_true, b.h_true)
    assert not np.array_equal(a.h_true, c.h_true)


def test_gamma_rescales_same_realization():
    base = draw_channel(2, 4, 1.0, 99)
    scaled = draw_channel(2, 4, [4.0, 9.0], 99)
    np.testing.assert_allclose(scaled.h_true[0], 2.0 * base.h_true[0], rtol=1e-12)
    np.testing.assert_allclose(scaled.h_true[1], 3.0 * base.h_true[1], rtol=1e-12)


def test_entry_variance():
    gamma = np.array([0.5, 2.0])
    draws = np.stack(
        [draw_channel(2, 8, gamma, [5, t]).h_true for t in range(3000)]
    )
    var = np.mean(np.abs(draws) ** 2, axis=(0, 2))
    # 3000 x 8 samples per UE: the relative sampling error is well under 5%.
    np.testing.assert_allclose(var, gamma, rtol=0.05)
    mean = np.mean(draws, axis=(0, 2))
    np.testing.assert_allclose(mean, 0.0, atol=0.05)


def test_validation():
    with pytest.raises(ValueError):
        draw_channel(0, 4, 1.0, 1)
    with pytest.raises(ValueError):
        draw_channel(2, 4, [1.0, -1.0], 1)
    with pytest.raises(ValueError):
        draw_channel(2, 4, [1.0, 1.0, 1.0], 1)
    with pytest.raises(ValueError):
        draw_channel(2, 4, 1.0, 1, noise_power=0.0)


class TestEstimate:
    def test_infinite_pilot_power_is_noiseless(self):
        state = draw_channel(2, 3, 1.0, 7, pilot_power=np.inf)
        est = estimate_channel(state, 11)
        np.testing.assert_array_equal(est.h_hat, state.h_true)

    def test_mixed_pilot_power_rejected(self):
        state = draw_channel(2, 3, 1.0, 7, pilot_power=[np.inf, 1.0])
        with pytest.raises(ValueError):
            estimate_channel(state, 11)

    def test_estimate_statistics(self):
        # Entry-wise MMSE: var(h_hat) = qbar g^2 / (N0 + qbar g) and the
        # error h - h_hat is uncorrelated with the estimate.
        gamma, qbar, n0 = 2.0, 0.5, 1.0
        hats, errs = [], []
        for t in range(4000):
            state = draw_channel(1, 8, gamma, [3, t], noise_power=n0, pilot_power=qbar)
            est = estimate_channel(state, [4, t])
            hats.append(est.h_hat)
            errs.append(est.h_true - est.h_hat)
        hats = np.concatenate(hats, axis=None)
        errs = np.concatenate(errs, axis=None)
        var_hat = qbar * gamma**2 / (n0 + qbar * gamma)
        assert np.mean(np.abs(hats) ** 2) == pytest.approx(var_hat, rel=0.05)
        assert np.mean(np.abs(errs) ** 2) == pytest.approx(gamma - var_hat, rel=0.05)
        cross = np.mean(hats * np.conj(errs))
        assert abs(cross) < 0.02

    def test_estimate_quality_improves_with_pilot_power(self):
        gamma = 1.0
        errors = []
        for qbar in (0.1, 10.0, 1000.0):
            total = 0.0
            for t in range(300):
                state = draw_channel(1, 4, gamma, [8, t], pilot_power=qbar)
                est = estimate_channel(state, [9, t])
                total += float(np.sum(np.abs(est.h_true - est.h_hat) ** 2))
            errors.append(total)
        assert errors[0] > errors[1] > errors[2]

    def test_true_channel_untouched(self):
        state = draw_channel(2, 3, 1.0, 7, pilot_power=1.0)
        est = estimate_channel(state, 11)
        np.testing.assert_array_equal(est.h_true, state.h_true)
        assert not np.array_equal(est.h_hat, est.h_true)


class TestSnrSchedule:
    def test_documented_example(self):
        np.testing.assert_allclose(snr_schedule(10.0, 4, 10.0), [7.5, 10.0, 12.5, 15.0])

    def test_zero_spread(self):
        np.testing.assert_array_equal(snr_schedule(5.0, 3, 0.0), [5.0, 5.0, 5.0])

    def test_single_ue(self):
        np.testing.assert_array_equal(snr_schedule(12.0, 1, 10.0), [12.0])

    def test_odd_k_symmetric(self):
        sched = snr_schedule(0.0, 3, 6.0)
        np.testing.assert_allclose(sched, [-2.0, 0.0, 2.0])

    def test_validation(self):
        with pytest.raises(ValueError):
            snr_schedule(0.0, 0)
        with pytest.raises(ValueError):
            snr_schedule(0.0, 2, -1.0)


def test_gamma_from_snr():
    # rho = q * gamma / N0, so gamma = rho * N0 / q.
    assert gamma_from_snr(10.0, 2.0, 4.0) == pytest.approx(10.0 * 2.0 / 4.0)
    np.testing.assert_allclose(gamma_from_snr([0.0, 20.0], 1.0, 1.0), [1.0, 100.0])
