"""Low-complexity quantization-aware refinement of the unaware precoder.

Starting from the quantized WF matrix, UEs are visited in order of the
interference their column generates, and each entry is re-quantized by
checking the four grid points built from the nearest and second-nearest
labels of its continuous value per real dimension. A candidate is kept only
if the full-power sum rate on the available CSI strictly improves, so the
result can never fall below the unaware baseline on that CSI.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baseline import PrecodingResult, beta_wf, frobenius_power, wf_precoder
from .metrics import sum_rate
from .quantizer import QuantizerSpec, quantize_matrix

__all__ = [
    "ORDERING_RULES",
    "RefinementPlan",
    "generated_interference",
    "received_interference",
    "four_candidates",
    "heuristic_precode",
]

ORDERING_RULES = ("generated_interference", "random", "received_interference")


@dataclass(frozen=True)
class RefinementPlan:
    """Which UEs to refine, in what order.

    ue_order, when given, is an explicit 0-based visit order and wins over
    ordering_rule; otherwise the rule computes the order from the starting
    precoder. rng_seed feeds numpy.random.default_rng for the random rule.
    Only the first s_users entries of the order are refined.
    """

    s_users: int
    ordering_rule: str = "generated_interference"
    ue_order: tuple | None = None
    rng_seed: object = None

    def __post_init__(self):
        if self.ordering_rule not in ORDERING_RULES:
            raise ValueError(
                f"ordering_rule must be one of {ORDERING_RULES}, got {self.ordering_rule!r}"
            )
        if self.s_users < 1:
            raise ValueError(f"s_users must be at least 1, got {self.s_users}")
        if self.ue_order is not None and sorted(self.ue_order) != list(range(len(self.ue_order))):
            raise ValueError(f"ue_order must be a 0-based permutation, got {self.ue_order!r}")


def generated_interference(h: np.ndarray, p_hat: np.ndarray) -> np.ndarray:
    """Interference power each UE's column inflicts on the other UEs.

    GI_k = sum over i != k of |[H P_hat]_{i,k}|^2 with P_hat the effective
    (scaled) precoder.
    """
    g = np.asarray(h, dtype=np.complex128) @ np.asarray(p_hat, dtype=np.complex128)
    powers = g.real**2 + g.imag**2
    return np.sum(powers, axis=0) - np.diagonal(powers)


def received_interference(h: np.ndarray, p_hat: np.ndarray) -> np.ndarray:
    """Interference power each UE receives from the other UEs' columns."""
    g = np.asarray(h, dtype=np.complex128) @ np.asarray(p_hat, dtype=np.complex128)
    powers = g.real**2 + g.imag**2
    return np.sum(powers, axis=1) - np.diagonal(powers)


def _axis_candidates(spec: QuantizerSpec, x: float) -> tuple[float, float]:
    """Nearest and second-nearest label to a real value.

    Nearest follows the quantizer's half-open cell rule, so it always equals
    the incumbent produced by quantize. The second-nearest is the closer of
    the two adjacent labels, taking the smaller one on an exact midpoint tie;
    at the grid edges it is the single interior neighbor.
    """
    z = int(np.searchsorted(spec.thresholds, x, side="right"))
    nearest = float(spec.labels[z])
    if z == 0:
        second = float(spec.labels[1])
    elif z == spec.levels - 1:
        second = float(spec.labels[z - 1])
    else:
        below = float(spec.labels[z - 1])
        above = float(spec.labels[z + 1])
        second = below if abs(x - below) <= abs(x - above) else above
    return nearest, second


def four_candidates(spec: QuantizerSpec, w: complex) -> list[complex]:
    """The four grid points built from per-axis nearest and second labels.

    Ordered deterministically: (nearest, nearest) first, then the imaginary
    alternative, then the real alternative, then both. The first entry equals
    quantize_scalar(spec, w).
    """
    w = complex(w)
    re_near, re_second = _axis_candidates(spec, w.real)
    im_near, im_second = _axis_candidates(spec, w.imag)
    return [
        complex(re, im)
        for re in (re_near, re_second)
        for im in (im_near, im_second)
    ]


def _visit_order(plan: RefinementPlan, h_hat, p, alpha, k: int) -> np.ndarray:
    if plan.ue_order is not None:
        if len(plan.ue_order) != k:
            raise ValueError(f"ue_order must permute all {k} UEs, got {plan.ue_order!r}")
        return np.asarray(plan.ue_order, dtype=np.int64)
    if plan.ordering_rule == "random":
        rng = np.random.default_rng(
            np.random.SeedSequence(plan.rng_seed) if plan.rng_seed is not None else None
        )
        return rng.permutation(k)
    if plan.ordering_rule == "generated_interference":
        scores = generated_interference(h_hat, alpha * p)
    else:
        scores = received_interference(h_hat, alpha * p)
    # Stable sort by decreasing score; ties keep the lower UE index.
    return np.argsort(-scores, kind="stable")


def heuristic_precode(
    h_hat: np.ndarray,
    power_budget: float,
    noise_power: float,
    spec: QuantizerSpec,
    plan: RefinementPlan,
    candidate_fn=None,
    record_trace: bool = False,
) -> PrecodingResult:
    """Per-element four-candidate ascent from the quantize-then-scale start.

    For each of the first s_users UEs in the planned order and each antenna
    in ascending index, the entry's candidates are evaluated with all other
    entries fixed; the power scaling is recomputed for every candidate so
    each comparison happens at the full budget. Strict improvement in the
    CSI-side sum rate is required to move, so ties keep the incumbent and the
    final rate never falls below the starting one.

    candidate_fn replaces four_candidates (same signature) for testing;
    record_trace stores the rate after every element visit in diagnostics.
    """
    h_hat = np.asarray(h_hat, dtype=np.complex128)
    k, m = h_hat.shape
    if plan.s_users > k:
        raise ValueError(f"plan.s_users={plan.s_users} exceeds the UE count {k}")
    if candidate_fn is None:
        candidate_fn = four_candidates

    w = wf_precoder(h_hat, power_budget, noise_power)
    p = quantize_matrix(spec, w)
    alpha = float(np.sqrt(power_budget / frobenius_power(p)))
    rate = sum_rate(h_hat, alpha * p, noise_power)

    order = _visit_order(plan, h_hat, p, alpha, k)
    trace = [rate] if record_trace else None
    for col in order[: plan.s_users]:
        for row in range(m):
            for cand in candidate_fn(spec, w[row, col]):
                if cand == p[row, col]:
                    continue
                p_try = p.copy()
                p_try[row, col] = cand
                alpha_try = float(np.sqrt(power_budget / frobenius_power(p_try)))
                rate_try = sum_rate(h_hat, alpha_try * p_try, noise_power)
                if rate_try > rate:
                    p, alpha, rate = p_try, alpha_try, rate_try
            if record_trace:
                trace.append(rate)

    diagnostics = {"ue_order": [int(v) for v in order], "csi_sum_rate": rate}
    if record_trace:
        diagnostics["rate_trace"] = trace
    return PrecodingResult(
        p=p,
        beta=beta_wf(h_hat, power_budget, noise_power),
        alpha=alpha,
        scheme="heuristic",
        diagnostics=diagnostics,
    )
