"""Continuous WF precoding, receiver factors, and the quantization-unaware baseline.

The BBU computes a regularized-inverse (Wiener filter) precoder from its CSI,
normalizes it to the full power budget, and, in the unaware baseline, simply
pushes it through the fronthaul quantizer. The AAS then rescales the quantized
matrix back to the budget. All K x K systems are handled by linear solves on
the regularized Gram matrix; no explicit inverse is formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quantizer import QuantizerSpec, quantize_matrix

__all__ = [
    "SCHEMES",
    "PrecodingResult",
    "frobenius_power",
    "wf_precoder",
    "beta_opt",
    "beta_wf",
    "unaware_precoder",
    "wf_infinite_precoder",
]

SCHEMES = ("wf_infinite", "unaware_wf", "sphere", "heuristic", "oracle")


@dataclass(frozen=True, eq=False)
class PrecodingResult:
    """Precoder output plus the receiver factors that go with it.

    p is M x K; the effective transmit matrix is alpha * p and must respect
    the power budget. beta holds the per-UE receiver factors (diagonal of B).
    diagnostics is scheme-specific and may be None.
    """

    p: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    alpha: float
    scheme: str
    diagnostics: dict | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")

    @property
    def p_effective(self) -> np.ndarray:
        return self.alpha * self.p


def frobenius_power(p: np.ndarray) -> float:
    """Squared Frobenius norm, the transmit power of a precoding matrix."""
    p = np.asarray(p)
    return float(np.sum(p.real**2 + p.imag**2))


def _check_channel(h_hat: np.ndarray) -> np.ndarray:
    h_hat = np.asarray(h_hat, dtype=np.complex128)
    if h_hat.ndim != 2:
        raise ValueError(f"channel must be a K x M matrix, got shape {h_hat.shape}")
    return h_hat


def _regularized_gram(h_hat: np.ndarray, power_budget: float, noise_power: float) -> np.ndarray:
    k = h_hat.shape[0]
    return h_hat @ h_hat.conj().T + (k * noise_power / power_budget) * np.eye(k)


def wf_precoder(h_hat: np.ndarray, power_budget: float, noise_power: float) -> np.ndarray:
    """WF precoder W = H^H (H H^H + (K N0 / q) I)^-1, scaled so ||W||_F^2 = q.

    The unnormalized regularized inverse is an internal step; the returned
    matrix always carries the full power budget so that its entries match the
    dynamic range the fronthaul quantizer was designed for.
    """
    h_hat = _check_channel(h_hat)
    if power_budget <= 0.0 or noise_power <= 0.0:
        raise ValueError("power_budget and noise_power must be positive")
    gram = _regularized_gram(h_hat, power_budget, noise_power)
    # W = H^H G^-1 = (G^-1 H)^H because G is Hermitian.
    w_un = np.linalg.solve(gram, h_hat).conj().T
    return w_un * np.sqrt(power_budget / frobenius_power(w_un))


def beta_opt(h: np.ndarray, p: np.ndarray, noise_power: float) -> np.ndarray:
    """MSE-optimal receiver factor per UE for a fixed precoder.

    UE k observes y_k = sum_i [HP]_{k,i} s_i + n_k, so the scalar factor
    minimizing E|s_k - beta_k y_k|^2 is

        beta_k = conj([HP]_kk) / (sum_i |[HP]_{k,i}|^2 + N0),

    the conjugate direct gain over that UE's total received power plus noise.
    """
    h = _check_channel(h)
    p = np.asarray(p, dtype=np.complex128)
    g = h @ p
    direct = np.conj(np.diagonal(g))
    received = np.sum(g.real**2 + g.imag**2, axis=1)
    return direct / (received + noise_power)


def beta_wf(h_hat: np.ndarray, power_budget: float, noise_power: float) -> np.ndarray:
    """Receiver factors matched to the full-power WF precoder.

    Evaluates the MSE-optimal factor (see beta_opt) at P = WF precoder scaled
    to the budget. For the WF solution the direct gains are real and
    non-negative, so the result is returned as a real non-negative vector.
    """
    h_hat = _check_channel(h_hat)
    w = wf_precoder(h_hat, power_budget, noise_power)
    beta = beta_opt(h_hat, w, noise_power)
    # H P = c (H H^H) G^-1 has a real PSD-product diagonal; the imaginary
    # residue is solver roundoff.
    return np.maximum(beta.real, 0.0)


def unaware_precoder(
    h_hat: np.ndarray,
    power_budget: float,
    noise_power: float,
    spec: QuantizerSpec,
) -> PrecodingResult:
    """Quantize-then-scale baseline: P = Q(W), alpha restores the budget.

    For even L the labels exclude zero, so the quantized matrix is never all
    zero and alpha = sqrt(q / ||P||_F^2) is finite.
    """
    w = wf_precoder(h_hat, power_budget, noise_power)
    p = quantize_matrix(spec, w)
    alpha = float(np.sqrt(power_budget / frobenius_power(p)))
    return PrecodingResult(
        p=p,
        beta=beta_wf(h_hat, power_budget, noise_power),
        alpha=alpha,
        scheme="unaware_wf",
    )


def wf_infinite_precoder(
    h_hat: np.ndarray,
    power_budget: float,
    noise_power: float,
) -> PrecodingResult:
    """Infinite-resolution reference: the WF precoder sent without quantization."""
    w = wf_precoder(h_hat, power_budget, noise_power)
    return PrecodingResult(
        p=w,
        beta=beta_wf(h_hat, power_budget, noise_power),
        alpha=1.0,
        scheme="wf_infinite",
    )
