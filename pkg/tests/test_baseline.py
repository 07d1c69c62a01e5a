"""WF precoder, receiver factors, and the quantize-then-scale baseline."""

import numpy as np
import pytest

from conftest import random_channel
from quantprecode.baseline import (
    PrecodingResult,
    beta_opt,
    beta_wf,
    frobenius_power,
    unaware_precoder,
    wf_infinite_precoder,
    wf_precoder,
)
from quantprecode.metrics import mse_closed_form, sum_rate
from quantprecode.quantizer import QuantizerSpec, design_step_size


def wf_reference(h, q, n0):
    """Textbook form via an explicit inverse instead of a solve."""
    k = h.shape[0]
    g = h @ h.conj().T + (k * n0 / q) * np.eye(k)
    w = h.conj().T @ np.linalg.inv(g)
    return np.sqrt(q / frobenius_power(w)) * w


def test_frobenius_power():
    p = np.array([[1.0 + 2.0j], [3.0 - 4.0j]])
    assert frobenius_power(p) == pytest.approx(1 + 4 + 9 + 16)


class TestWfPrecoder:
    def test_scalar_case(self):
        # K = M = 1, h = 1, q = 1, N0 = 1: the regularized inverse gives
        # w = 1/2 and budget normalization rescales it to exactly 1.
        w = wf_precoder(np.array([[1.0 + 0.0j]]), 1.0, 1.0)
        assert w.shape == (1, 1)
        assert w[0, 0] == pytest.approx(1.0)

    def test_matches_explicit_inverse(self, rng):
        h = random_channel(rng, 3, 6)
        w = wf_precoder(h, 2.0, 0.3)
        np.testing.assert_allclose(w, wf_reference(h, 2.0, 0.3), atol=1e-10)

    def test_full_budget(self, rng):
        h = random_channel(rng, 4, 8)
        w = wf_precoder(h, 3.0, 0.5)
        assert frobenius_power(w) == pytest.approx(3.0, rel=1e-12)

    def test_zero_forcing_limit(self, rng):
        # Vanishing noise turns the regularized inverse into a pseudoinverse:
        # H W becomes diagonal.
        h = random_channel(rng, 3, 8)
        w = wf_precoder(h, 1.0, 1e-12)
        g = h @ w
        off = g - np.diag(np.diagonal(g))
        assert np.max(np.abs(off)) < 1e-6 * np.min(np.abs(np.diagonal(g)))

    def test_mrt_limit(self, rng):
        # Overwhelming noise reduces the inverse to a scaled identity, so
        # each column aligns with the matched filter h_k^H.
        h = random_channel(rng, 3, 8)
        w = wf_precoder(h, 1.0, 1e9)
        mf = h.conj().T
        for k in range(3):
            a, b = w[:, k], mf[:, k]
            corr = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
            assert corr == pytest.approx(1.0, abs=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            wf_precoder(np.ones((2, 2)), 0.0, 1.0)
        with pytest.raises(ValueError):
            wf_precoder(np.ones(4), 1.0, 1.0)


class TestBetaOpt:
    def test_scalar_case(self):
        # h = p = 1, N0 = 1: beta = 1 / (1 + 1).
        beta = beta_opt(np.array([[1.0 + 0j]]), np.array([[1.0 + 0j]]), 1.0)
        assert beta[0] == pytest.approx(0.5)

    def test_is_per_ue_mse_minimizer(self, rng):
        # Perturbing any single beta_k in any axis direction cannot reduce
        # the closed-form MSE.
        h = random_channel(rng, 3, 5)
        p = random_channel(rng, 5, 3)
        beta = beta_opt(h, p, 0.7)
        base = mse_closed_form(h, p, beta, 0.7)
        for k in range(3):
            for delta in (1e-3, -1e-3, 1e-3j, -1e-3j):
                tweaked = beta.copy()
                tweaked[k] += delta
                assert mse_closed_form(h, p, tweaked, 0.7) >= base - 1e-12

    def test_closed_form(self, rng):
        h = random_channel(rng, 2, 4)
        p = random_channel(rng, 4, 2)
        g = h @ p
        beta = beta_opt(h, p, 0.3)
        for k in range(2):
            expect = np.conj(g[k, k]) / (np.sum(np.abs(g[k, :]) ** 2) + 0.3)
            assert beta[k] == pytest.approx(expect)


class TestBetaWf:
    def test_scalar_case(self):
        beta = beta_wf(np.array([[1.0 + 0j]]), 1.0, 1.0)
        assert beta[0] == pytest.approx(0.5)

    def test_real_nonnegative(self, rng):
        for _ in range(20):
            h = random_channel(rng, 4, 8)
            beta = beta_wf(h, 1.5, 0.2)
            assert np.isrealobj(beta)
            assert np.all(beta >= 0.0)

    def test_matched_to_wf_precoder(self, rng):
        # beta_wf evaluates the per-UE MSE minimizer at the budget-scaled WF
        # precoder, so recomputing beta_opt there cannot improve the MSE.
        h = random_channel(rng, 3, 6)
        w = wf_precoder(h, 2.0, 0.4)
        beta = beta_wf(h, 2.0, 0.4)
        base = mse_closed_form(h, w, beta, 0.4)
        for k in range(3):
            for delta in (1e-3, -1e-3, 1e-3j, -1e-3j):
                tweaked = beta.astype(np.complex128)
                tweaked[k] += delta
                assert mse_closed_form(h, w, tweaked, 0.4) >= base - 1e-12


class TestUnaware:
    def test_entries_on_grid_and_budget_restored(self, rng):
        h = random_channel(rng, 3, 6)
        q = 2.0
        step = design_step_size(8, q / (2 * 3 * 6))
        spec = QuantizerSpec.create(8, step)
        res = unaware_precoder(h, q, 0.5, spec)
        assert res.scheme == "unaware_wf"
        assert np.isin(res.p.real, spec.labels).all()
        assert np.isin(res.p.imag, spec.labels).all()
        assert frobenius_power(res.p_effective) == pytest.approx(q, rel=1e-12)
        np.testing.assert_allclose(res.beta, beta_wf(h, q, 0.5))

    def test_fine_grid_approaches_infinite_resolution(self, rng):
        # With 2^14 levels the grid loss is negligible and the quantized
        # baseline recovers the unquantized WF sum rate.
        h = random_channel(rng, 4, 16)
        q, n0 = 1.0, 0.01
        step = design_step_size(2**14, q / (2 * 4 * 16))
        spec = QuantizerSpec.create(2**14, step)
        coarse = unaware_precoder(h, q, n0, spec)
        ideal = wf_infinite_precoder(h, q, n0)
        r_c = sum_rate(h, coarse.p_effective, n0)
        r_i = sum_rate(h, ideal.p_effective, n0)
        assert r_c == pytest.approx(r_i, rel=0.01)

    def test_coarse_grid_loses_rate(self, rng):
        h = random_channel(rng, 4, 16)
        q, n0 = 1.0, 0.001
        step = design_step_size(2, q / (2 * 4 * 16))
        spec = QuantizerSpec.create(2, step)
        res = unaware_precoder(h, q, n0, spec)
        ideal = wf_infinite_precoder(h, q, n0)
        assert sum_rate(h, res.p_effective, n0) < sum_rate(h, ideal.p_effective, n0)


def test_wf_infinite_precoder(rng):
    h = random_channel(rng, 3, 6)
    res = wf_infinite_precoder(h, 2.0, 0.4)
    assert res.scheme == "wf_infinite"
    assert res.alpha == 1.0
    np.testing.assert_allclose(res.p, wf_precoder(h, 2.0, 0.4))
    assert frobenius_power(res.p_effective) == pytest.approx(2.0, rel=1e-12)


def test_precoding_result_validation():
    with pytest.raises(ValueError):
        PrecodingResult(p=np.eye(2), beta=np.ones(2), alpha=1.0, scheme="nope")
    res = PrecodingResult(p=2.0 * np.eye(2), beta=np.ones(2), alpha=0.5, scheme="sphere")
    np.testing.assert_allclose(res.p_effective, np.eye(2))
