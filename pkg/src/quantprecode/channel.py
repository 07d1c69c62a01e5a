"""Fading channel generation, pilot-based MMSE estimation, and SNR handling.

Per-UE SNR is realized by scaling the channel variance gamma_k = rho_k * N0 / q
while the power budget q and noise power N0 stay fixed. That keeps the
per-antenna precoder input variance q/(KM), and with it the quantizer design,
independent of the operating SNR.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChannelState",
    "draw_channel",
    "estimate_channel",
    "snr_schedule",
    "gamma_from_snr",
]


@dataclass(frozen=True, eq=False)
class ChannelState:
    """True channel, CSI, and the scalar system parameters tied to them.

    h_true and h_hat are K x M (UE k, antenna m). gamma holds the per-UE
    channel variances, pilot_power the per-UE pilot powers q_bar_k. Under
    perfect CSI h_hat equals h_true exactly.
    """

    h_true: np.ndarray = field(repr=False)
    h_hat: np.ndarray = field(repr=False)
    gamma: np.ndarray
    noise_power: float
    power_budget: float
    pilot_power: np.ndarray

    @property
    def n_ues(self) -> int:
        return self.h_true.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.h_true.shape[1]


def _as_per_ue(value, k: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(k, float(arr))
    if arr.shape != (k,):
        raise ValueError(f"{name} must be a scalar or length-{k} vector, got shape {arr.shape}")
    if not np.all(arr > 0.0):
        raise ValueError(f"{name} entries must be positive")
    return arr


def draw_channel(
    k: int,
    m: int,
    gamma,
    rng_seed,
    noise_power: float = 1.0,
    power_budget: float = 1.0,
    pilot_power=None,
) -> ChannelState:
    """Draw H with i.i.d. circular complex Gaussian rows, variance gamma_k.

    The returned state is in perfect-CSI mode (h_hat == h_true); follow with
    estimate_channel for pilot-based CSI. The raw standard-normal draw depends
    only on rng_seed, so the same seed with different gamma yields the same
    underlying realization rescaled row by row.

    Parameters
    ----------
    k, m : int
        Number of UEs and transmit antennas.
    gamma : float or array_like
        Per-UE channel variance, scalar or length-k.
    rng_seed : int, sequence of int, SeedSequence, or Generator
        Anything accepted by numpy.random.default_rng.
    """
    if k < 1 or m < 1:
        raise ValueError(f"dimensions must be at least 1, got k={k}, m={m}")
    gamma = _as_per_ue(gamma, k, "gamma")
    if noise_power <= 0.0 or power_budget <= 0.0:
        raise ValueError("noise_power and power_budget must be positive")
    pilot = (
        np.full(k, float(power_budget))
        if pilot_power is None
        else _as_per_ue(pilot_power, k, "pilot_power")
    )
    rng = np.random.default_rng(rng_seed)
    z = (rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))) / np.sqrt(2.0)
    h = np.sqrt(gamma)[:, None] * z
    return ChannelState(
        h_true=h,
        h_hat=h.copy(),
        gamma=gamma,
        noise_power=float(noise_power),
        power_budget=float(power_budget),
        pilot_power=pilot,
    )


def estimate_channel(state: ChannelState, rng_seed) -> ChannelState:
    """Replace h_hat with the per-entry MMSE estimate from noisy pilots.

    The pilot observation is ybar = sqrt(q_bar_k) * h + n with n drawn
    CN(0, N0) per entry, and the estimate is
    h_hat = sqrt(q_bar_k) * gamma_k / (N0 + q_bar_k * gamma_k) * ybar,
    giving entry variance q_bar_k * gamma_k^2 / (N0 + q_bar_k * gamma_k).
    Infinite pilot power is treated as noiseless CSI and returns h_hat equal
    to h_true.
    """
    k, m = state.h_true.shape
    if np.all(np.isinf(state.pilot_power)):
        return ChannelState(
            h_true=state.h_true,
            h_hat=state.h_true.copy(),
            gamma=state.gamma,
            noise_power=state.noise_power,
            power_budget=state.power_budget,
            pilot_power=state.pilot_power,
        )
    if np.any(np.isinf(state.pilot_power)):
        raise ValueError("pilot_power must be all finite or all infinite")
    rng = np.random.default_rng(rng_seed)
    noise = np.sqrt(state.noise_power / 2.0) * (
        rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))
    )
    root_pilot = np.sqrt(state.pilot_power)
    ybar = root_pilot[:, None] * state.h_true + noise
    weight = root_pilot * state.gamma / (state.noise_power + state.pilot_power * state.gamma)
    return ChannelState(
        h_true=state.h_true,
        h_hat=weight[:, None] * ybar,
        gamma=state.gamma,
        noise_power=state.noise_power,
        power_budget=state.power_budget,
        pilot_power=state.pilot_power,
    )


def snr_schedule(median_snr_db: float, k: int, spread_db: float = 0.0) -> np.ndarray:
    """Per-UE SNRs equally spaced in dB around a median.

    UE j gets median + o_j * spread / k where the offsets o_j are the k
    consecutive integers ending at floor(k/2); for k = 4 that is
    {-1, 0, 1, 2}, so (median 10, spread 10) yields {7.5, 10, 12.5, 15} dB.
    The symmetric index set has k + 1 members for even k, so this picks the
    upper-heavy k-element subset.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if spread_db < 0.0:
        raise ValueError(f"spread_db must be non-negative, got {spread_db}")
    start = k // 2 - k + 1
    offsets = start + np.arange(k, dtype=np.float64)
    return median_snr_db + offsets * spread_db / k


def gamma_from_snr(snr_db, noise_power: float, power_budget: float) -> np.ndarray:
    """Channel variance realizing a target SNR rho = q * gamma / N0."""
    rho = 10.0 ** (np.asarray(snr_db, dtype=np.float64) / 10.0)
    return rho * noise_power / power_budget
