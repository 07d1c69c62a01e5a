"""Ground-truth references: exhaustive searches at tiny scale, capacity math.

The enumeration routines exist to certify the sphere precoder, so they favor
directness over speed and refuse problem sizes whose grid has more than 2^20
points. Ties between equal-objective candidates always resolve to the
lexicographically smallest label-index vector, making every result unique and
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantizer import QuantizerSpec

__all__ = [
    "OracleSizeError",
    "InfeasibleBudgetError",
    "FronthaulBudget",
    "capacity_separate",
    "capacity_joint",
    "exhaustive_fixed_lambda",
    "exhaustive_constrained",
]

_MAX_GRID = 2**20


class OracleSizeError(RuntimeError):
    """Enumeration would exceed the 2^20-point guard."""


class InfeasibleBudgetError(RuntimeError):
    """Every grid point violates the power budget."""


@dataclass(frozen=True)
class FronthaulBudget:
    """Inputs of the fronthaul-capacity comparison.

    tau is the number of symbol vectors per coherence block, n_precoder the
    bits per real precoder dimension, se the bits per data symbol, and n_res
    the resolution multiplier when precoded samples are sent instead.
    """

    m: int
    k: int
    tau: int
    n_precoder: int
    se: float
    n_res: float

    def __post_init__(self):
        for name in ("m", "k", "tau", "n_precoder", "se", "n_res"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")


def capacity_separate(b: FronthaulBudget) -> float:
    """Bits per block when the precoder and symbols cross separately."""
    return 2 * b.m * b.k * b.n_precoder + b.tau * b.k * b.se


def capacity_joint(b: FronthaulBudget) -> float:
    """Bits per block when precoded antenna samples cross instead."""
    return b.m * b.tau * b.n_res * b.se


def _guard_size(levels: int, m: int, k: int) -> None:
    if levels ** (2 * m * k) > _MAX_GRID:
        raise OracleSizeError(
            f"grid has {levels}^(2*{m}*{k}) points, beyond the 2^20 guard"
        )


def _column_candidates(spec: QuantizerSpec, m: int) -> np.ndarray:
    """All real label vectors of length 2m, in lexicographic index order."""
    n = 2 * m
    count = spec.levels**n
    idx = np.unravel_index(np.arange(count), (spec.levels,) * n)
    return spec.labels[np.stack(idx, axis=1)]


def _column_tables(h, beta, lam, spec):
    """Per-column quadratic objectives and powers over all candidates.

    Column i of P contributes a_i^H V a_i - 2 Re(h_i^T a_i) with
    V = (BH)^H BH + lambda I and h_i the plain transpose of row i of BH.
    """
    h = np.asarray(h, dtype=np.complex128)
    beta = np.asarray(beta, dtype=np.complex128).reshape(-1)
    k, m = h.shape
    bh = beta[:, None] * h
    v = bh.conj().T @ bh + lam * np.eye(m)
    cand_real = _column_candidates(spec, m)
    cand = cand_real[:, 0::2] + 1j * cand_real[:, 1::2]
    quad = np.einsum("nm,mj,nj->n", cand.conj(), v, cand).real
    power = np.sum(cand_real**2, axis=1)
    objectives = [quad - 2.0 * (cand @ bh[i, :]).real for i in range(k)]
    return cand, objectives, power


def exhaustive_fixed_lambda(
    h: np.ndarray,
    beta: np.ndarray,
    lam: float,
    spec: QuantizerSpec,
    power_budget: float | None = None,
    joint: bool = False,
) -> np.ndarray:
    """Global minimizer of the fixed-lambda objective by full enumeration.

    The objective separates over columns, so the default enumerates each
    column's levels^(2M) candidates independently. joint=True instead loops
    over every levels^(2MK) precoding matrix and evaluates the trace form
    directly; it exists to certify the separability once on micro instances.
    power_budget is accepted for signature parity with the constrained
    search; the fixed-lambda problem does not use it.
    """
    h = np.asarray(h, dtype=np.complex128)
    k, m = h.shape
    _guard_size(spec.levels, m, k)

    if joint:
        beta_arr = np.asarray(beta, dtype=np.complex128).reshape(-1)
        bh = beta_arr[:, None] * h
        v = bh.conj().T @ bh + lam * np.eye(m)
        n = 2 * m * k
        best_obj = np.inf
        best_p = None
        labels = spec.labels
        for flat in range(spec.levels**n):
            idx = np.unravel_index(flat, (spec.levels,) * n)
            a_real = labels[np.array(idx)]
            p = (a_real[0::2] + 1j * a_real[1::2]).reshape(k, m).T
            obj = float(np.trace(p.conj().T @ v @ p).real) - 2.0 * float(
                np.trace(bh @ p).real
            )
            if obj < best_obj:
                best_obj = obj
                best_p = p
        return best_p

    cand, objectives, _ = _column_tables(h, beta, lam, spec)
    p = np.empty((m, k), dtype=np.complex128)
    for i in range(k):
        p[:, i] = cand[int(np.argmin(objectives[i]))]
    return p


def exhaustive_constrained(
    h: np.ndarray,
    beta: np.ndarray,
    spec: QuantizerSpec,
    power_budget: float,
) -> np.ndarray:
    """Minimizer of the fixed-beta MSE subject to ||P||_F^2 <= power_budget.

    The power constraint couples the columns, so the per-column objective
    tables are combined over all column combinations before masking out the
    infeasible ones. Raises InfeasibleBudgetError when no grid point fits the
    budget.
    """
    h = np.asarray(h, dtype=np.complex128)
    k, m = h.shape
    _guard_size(spec.levels, m, k)

    cand, objectives, power = _column_tables(h, beta, 0.0, spec)
    n_cand = cand.shape[0]

    total_obj = objectives[0]
    total_power = power
    for i in range(1, k):
        total_obj = (total_obj[:, None] + objectives[i][None, :]).ravel()
        total_power = (total_power[:, None] + power[None, :]).ravel()

    feasible = total_power <= power_budget
    if not np.any(feasible):
        raise InfeasibleBudgetError(
            f"no grid point satisfies ||P||_F^2 <= {power_budget}"
        )
    masked = np.where(feasible, total_obj, np.inf)
    flat = int(np.argmin(masked))

    p = np.empty((m, k), dtype=np.complex128)
    for i in reversed(range(k)):
        p[:, i] = cand[flat % n_cand]
        flat //= n_cand
    return p
