"""Optimal quantization-aware precoding via sphere decoding.

For fixed receiver factors B and multiplier lambda, the precoding problem
separates into K integer least-squares problems, one per column:

    minimize  a^H (H^H B^H B H + lambda I) a - h_i^T a - (h_i^T a)^H

with a ranging over the complex label grid. Writing the regularized matrix as
R^H R (Cholesky) and e_i = (h_i^T R^-1)^H turns each into a closest-point
search ||e_i - R a||^2 solved exactly by Schnorr-Euchner sphere decoding on
the interleaved real expansion. A bisection on lambda then drives the total
power to the budget.

The enumeration kernel is compiled (Cython) when available; set the
environment variable QPL_PURE_PYTHON=1 before import to force the pure-Python
reference. Both produce bit-identical results.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from . import _sesd_py
from .baseline import PrecodingResult, beta_opt, beta_wf, frobenius_power
from .quantizer import QuantizerSpec

__all__ = [
    "KERNEL_BACKEND",
    "DEFAULT_NODE_BUDGET",
    "SubproblemInstance",
    "SphereSolution",
    "LagrangeState",
    "build_subproblems",
    "sesd_solve",
    "solve_fixed_lambda",
    "sphere_precode",
]

if os.environ.get("QPL_PURE_PYTHON", "").strip().lower() in {"1", "true", "yes"}:
    _kernel = _sesd_py.sesd_kernel
    KERNEL_BACKEND = "python"
else:
    try:
        from . import _sesd_cy

        _kernel = _sesd_cy.sesd_kernel
        KERNEL_BACKEND = "compiled"
    except ImportError:  # extension not built; fall back to the reference
        _kernel = _sesd_py.sesd_kernel
        KERNEL_BACKEND = "python"

# Relative inflation applied to warm-start radii so a bound taken from a
# known lattice point always keeps that point strictly inside the sphere.
_RADIUS_SLACK = 1e-12
_RADIUS_FLOOR = 1e-300

# Default cap on enumeration nodes per precoder solve. Typical trees at the
# reference scale (M=16, K=4, L=8) stay one to two orders of magnitude below
# it; the cap only truncates the lambda refinement on rare degenerate
# realizations whose exact trees run into the billions of nodes.
DEFAULT_NODE_BUDGET = 250_000_000


class _NodeBudgetExhausted(Exception):
    """Internal: the node budget ran out mid-enumeration."""

    def __init__(self, nodes: int):
        super().__init__("node budget exhausted")
        self.nodes = nodes


# Sentinel returned by the lambda-search evaluator when the budget ran out.
_BUDGET = object()


@dataclass(frozen=True, eq=False)
class SubproblemInstance:
    """One column's real-valued closest-point system fed to the SESD kernel.

    r_real is the 2M x 2M interleaved real expansion of the complex Cholesky
    factor (ordering Re, Im per antenna), upper triangular with positive
    diagonal; its 2 x 2 diagonal blocks are multiples of the identity.
    column_index is 1-based.
    """

    r_real: np.ndarray = field(repr=False)
    e_real: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    step: float
    column_index: int


@dataclass(frozen=True, eq=False)
class SphereSolution:
    """Result of one SESD run: minimizing label vector and search effort."""

    a_real: np.ndarray = field(repr=False)
    objective: float
    nodes_visited: int
    first_leaf: np.ndarray | None = field(repr=False, default=None)


@dataclass(frozen=True)
class LagrangeState:
    """Where the lambda search ended: multiplier, power, bracket, effort."""

    lam: float
    power: float
    bracket: tuple[float, float]
    iterations: int
    converged: bool = True


def _real_expand_triangular(r: np.ndarray) -> np.ndarray:
    """Interleaved real expansion of a complex upper-triangular matrix."""
    m = r.shape[0]
    # The Cholesky diagonal is real; drop any stored zero imaginary part so
    # the expanded matrix is exactly upper triangular.
    r = r.copy()
    di = np.arange(m)
    r[di, di] = r[di, di].real
    out = np.zeros((2 * m, 2 * m))
    out[0::2, 0::2] = r.real
    out[0::2, 1::2] = -r.imag
    out[1::2, 0::2] = r.imag
    out[1::2, 1::2] = r.real
    return out


def _real_expand_vector(v: np.ndarray) -> np.ndarray:
    out = np.empty(2 * v.shape[0])
    out[0::2] = v.real
    out[1::2] = v.imag
    return out


def interleaved_to_complex(a_real: np.ndarray) -> np.ndarray:
    """Inverse of the interleaved real expansion for vectors."""
    return a_real[0::2] + 1j * a_real[1::2]


def build_subproblems(
    h: np.ndarray,
    beta: np.ndarray,
    lam: float,
    spec: QuantizerSpec,
) -> list[SubproblemInstance]:
    """Cholesky-reduce the fixed-lambda objective into K per-column systems.

    h_i is the plain transpose (no conjugation) of row i of B H, matching the
    h_i^T a_i form of the separable objective, and e_i solves R^H e_i =
    conj(h_i). Raises numpy.linalg.LinAlgError when H^H B^H B H + lambda I is
    not positive definite, which the lambda search treats as "lambda too
    small".
    """
    h = np.asarray(h, dtype=np.complex128)
    beta = np.asarray(beta, dtype=np.complex128).reshape(-1)
    k, m = h.shape
    if beta.shape[0] != k:
        raise ValueError(f"beta must have length {k}, got {beta.shape[0]}")
    if lam < 0.0:
        raise ValueError(f"lambda must be non-negative, got {lam}")

    bh = beta[:, None] * h
    v_hat = bh.conj().T @ bh + lam * np.eye(m)
    chol_lower = np.linalg.cholesky(v_hat)
    r = chol_lower.conj().T
    r_real = _real_expand_triangular(r)

    instances = []
    for i in range(k):
        h_i = bh[i, :]
        e_i = solve_triangular(r, np.conj(h_i), trans="C", lower=False)
        instances.append(
            SubproblemInstance(
                r_real=r_real,
                e_real=_real_expand_vector(e_i),
                labels=spec.labels,
                step=spec.step,
                column_index=i + 1,
            )
        )
    return instances


def _run_kernel(inst, initial_radius, node_budget):
    """One kernel invocation plus the unbounded rerun when the warm-start
    radius excluded every lattice point. Returns (solution, aborted);
    node_budget covers both passes, and an aborted run certifies nothing.
    """
    r_real = np.ascontiguousarray(inst.r_real, dtype=np.float64)
    e_real = np.ascontiguousarray(inst.e_real, dtype=np.float64)
    labels = np.ascontiguousarray(inst.labels, dtype=np.float64)
    best, r_opt, nodes, found, first, aborted = _kernel(
        r_real, e_real, labels, inst.step, initial_radius, node_budget
    )
    if not found and not aborted:
        remaining = 0 if node_budget <= 0 else max(node_budget - nodes, 1)
        best, r_opt, extra, found, first, aborted = _kernel(
            r_real, e_real, labels, inst.step, math.inf, remaining
        )
        nodes += extra
    sol = SphereSolution(
        a_real=best,
        objective=float(r_opt),
        nodes_visited=int(nodes),
        first_leaf=first,
    )
    return sol, aborted


def sesd_solve(inst: SubproblemInstance, initial_radius: float = math.inf) -> SphereSolution:
    """Exact minimizer of ||e_real - R_real a||^2 over the label grid.

    initial_radius only accelerates pruning: if the bound excludes every
    lattice point the search silently reruns unbounded, so the returned
    solution is always the global minimizer. first_leaf reports the first
    full-depth candidate of the final enumeration pass, which for an
    unbounded run is the clipped nulling-and-cancelling (Babai) point.
    """
    sol, _ = _run_kernel(inst, initial_radius, 0)
    return sol


def _solve_columns(h, beta, lam, spec, warm_start, node_budget=0):
    """Run the K per-column searches; returns P plus per-column bookkeeping.

    node_budget > 0 caps the summed enumeration effort over the columns.
    Hitting the cap raises _NodeBudgetExhausted carrying the nodes spent;
    the partial precoder is discarded because it certifies nothing.
    """
    instances = build_subproblems(h, beta, lam, spec)
    k = len(instances)
    m = h.shape[1]
    p = np.empty((m, k), dtype=np.complex128)
    residuals = np.empty(k)
    e_sq = np.empty(k)
    nodes = np.empty(k, dtype=np.int64)
    spent = 0
    for i, inst in enumerate(instances):
        radius = math.inf
        if warm_start is not None:
            a_prev = _real_expand_vector(np.asarray(warm_start[:, i]))
            resid = inst.e_real - inst.r_real @ a_prev
            radius = float(resid @ resid) * (1.0 + _RADIUS_SLACK) + _RADIUS_FLOOR
        budget_left = 0 if node_budget <= 0 else max(node_budget - spent, 1)
        sol, aborted = _run_kernel(inst, radius, budget_left)
        spent += sol.nodes_visited
        if aborted:
            raise _NodeBudgetExhausted(spent)
        p[:, i] = interleaved_to_complex(sol.a_real)
        residuals[i] = sol.objective
        e_sq[i] = float(inst.e_real @ inst.e_real)
        nodes[i] = sol.nodes_visited
    return p, residuals, e_sq, nodes


def solve_fixed_lambda(
    h: np.ndarray,
    beta: np.ndarray,
    lam: float,
    spec: QuantizerSpec,
    warm_start: np.ndarray | None = None,
):
    """Exact minimizer of the fixed-lambda objective over the label grid.

    Returns (p, power, objective) where objective is the quadratic part
    sum_i (||e_i - R a_i||^2 - ||e_i||^2), i.e. the Lagrangian without its
    constant -lambda*q shift. warm_start (a previous P on the same grid)
    seeds the per-column search radii; it never changes the result, only the
    enumeration effort.
    """
    p, residuals, e_sq, _ = _solve_columns(
        np.asarray(h, dtype=np.complex128), beta, lam, spec, warm_start
    )
    objective = float(np.sum(residuals - e_sq))
    return p, frobenius_power(p), objective


class _Iterate:
    """One evaluated lambda point inside the search."""

    __slots__ = ("lam", "p", "power", "objective", "mse", "nodes")

    def __init__(self, lam, p, power, objective, mse, nodes):
        self.lam = lam
        self.p = p
        self.power = power
        self.objective = objective
        self.mse = mse
        self.nodes = nodes


def _fixed_beta_mse(objective, power, lam, k, noise_power, beta):
    """Closed-form MSE of an iterate from its Lagrangian bookkeeping.

    The quadratic objective contains lambda*||P||^2 inside the regularized
    matrix; removing it and adding the constant K + N0 * sum |beta_k|^2
    recovers the fixed-beta mean squared error.
    """
    beta_sq = float(np.sum(np.abs(np.asarray(beta)) ** 2))
    return objective - lam * power + k + noise_power * beta_sq


def sphere_precode(
    h: np.ndarray,
    h_hat: np.ndarray,
    power_budget: float,
    noise_power: float,
    spec: QuantizerSpec,
    refine_beta: int = 0,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> PrecodingResult:
    """Quantization-aware precoder: per-column SESD inside a lambda bisection.

    Receiver factors are fixed to beta_wf(h_hat); the search starts at
    lambda = 1, expands the bracket by doubling or halving until it straddles
    the power budget, then bisects. A lambda is accepted once the power lands
    in [q(1-1e-3), q] or the bracket width falls below 1e-8 * max(1, lambda);
    among all feasible iterates seen, the one with the lowest fixed-beta MSE
    is returned. The true channel h is accepted for signature symmetry with
    the other schemes but never used; precoding decisions see h_hat only.

    refine_beta > 0 re-runs the search that many times with beta updated to
    beta_opt of the previous solution (single-digit gains at best; off by
    default).

    node_budget caps the total enumeration nodes per search (0 disables).
    Every evaluated lambda is still solved exactly; once the budget runs out
    the bisection stops and the best feasible iterate found so far is
    returned, flagged via diagnostics["budget_exhausted"] and a
    non-converged Lagrange state. The cap only engages after the first
    feasible iterate, so a precoder is always produced. The default leaves
    typical searches untouched and truncates only degenerate realizations
    whose exact trees would take orders of magnitude longer than the median.
    """
    h_hat = np.asarray(h_hat, dtype=np.complex128)
    k = h_hat.shape[0]
    if power_budget <= 0.0 or noise_power <= 0.0:
        raise ValueError("power_budget and noise_power must be positive")
    if refine_beta < 0:
        raise ValueError("refine_beta must be non-negative")
    if node_budget < 0:
        raise ValueError("node_budget must be non-negative (0 disables)")

    beta = beta_wf(h_hat, power_budget, noise_power)
    result = _lambda_search(h_hat, beta, power_budget, noise_power, spec, node_budget)
    for _ in range(refine_beta):
        beta = beta_opt(h_hat, result[0].p, noise_power)
        result = _lambda_search(
            h_hat, beta, power_budget, noise_power, spec, node_budget
        )
    best, state, trace, nodes_total, evals, exhausted = result

    return PrecodingResult(
        p=best.p,
        beta=np.asarray(beta),
        alpha=1.0,
        scheme="sphere",
        diagnostics={
            "lagrange": state,
            "lambda": best.lam,
            "power": best.power,
            "mse_fixed_beta": best.mse,
            "lambda_trace": trace,
            "nodes_per_column": best.nodes,
            "nodes_total": int(nodes_total),
            "evaluations": int(evals),
            "node_budget": int(node_budget),
            "budget_exhausted": bool(exhausted),
            "kernel_backend": KERNEL_BACKEND,
        },
    )


def _lambda_search(h_hat, beta, q, noise_power, spec, node_budget=0):
    """Bracket and bisect the power-constraint multiplier.

    Returns (best iterate, LagrangeState, lambda trace, total nodes, evals,
    budget_exhausted). power(lambda) is non-increasing, so doubling from 1
    reaches feasibility and halving reaches infeasibility unless the problem
    sits on a plateau, which the width criterion then accepts.

    node_budget > 0 bounds the cumulative enumeration effort. Each evaluated
    lambda is exact; when the budget runs out mid-probe that probe is
    discarded, the search stops, and the best feasible iterate stands with
    converged=False.
    """
    k = h_hat.shape[0]
    max_expand = 60
    power_window = 1e-3
    width_tol = 1e-8

    trace = []
    nodes_total = 0
    best = None
    warm = None
    exhausted = False

    def evaluate(lam):
        nonlocal nodes_total, warm, best, exhausted
        # The cap engages only once a feasible incumbent exists, so the
        # search always has something to return. Pre-feasible probes sit on
        # the large-lambda side where trees are small.
        remaining = 0
        if node_budget > 0 and best is not None:
            remaining = max(node_budget - nodes_total, 1)
        try:
            p, residuals, e_sq, nodes = _solve_columns(
                h_hat, beta, lam, spec, warm, remaining
            )
        except np.linalg.LinAlgError:
            trace.append((lam, math.nan))
            return None
        except _NodeBudgetExhausted as stop:
            nodes_total += stop.nodes
            trace.append((lam, math.nan))
            exhausted = True
            return _BUDGET
        power = frobenius_power(p)
        objective = float(np.sum(residuals - e_sq))
        mse = _fixed_beta_mse(objective, power, lam, k, noise_power, beta)
        it = _Iterate(lam, p, power, objective, mse, [int(v) for v in nodes])
        trace.append((lam, power))
        nodes_total += int(np.sum(nodes))
        warm = p
        if power <= q and (best is None or it.mse < best.mse):
            best = it
        return it

    def in_window(it):
        return it is not None and q * (1.0 - power_window) <= it.power <= q

    def budget_exit(bracket, iterations):
        # evaluate() only enforces the cap once best exists.
        assert best is not None
        state = LagrangeState(best.lam, best.power, bracket, iterations, False)
        return best, state, trace, nodes_total, iterations, True

    lam = 1.0
    it = evaluate(lam)
    iterations = 1
    lo = hi = None  # lo: infeasible side (power > q), hi: feasible side
    lo_power = None
    hi_power = None

    if it is _BUDGET:
        return budget_exit((lam, lam), iterations)
    if in_window(it):
        state = LagrangeState(it.lam, it.power, (lam, lam), iterations, True)
        return best, state, trace, nodes_total, iterations, False

    if it.power > q:
        lo = lam
        lo_power = it.power
        for _ in range(max_expand):
            lam *= 2.0
            it = evaluate(lam)
            iterations += 1
            if it is _BUDGET:
                return budget_exit((lo, lam), iterations)
            if it.power <= q:
                hi = lam
                hi_power = it.power
                break
            lo = lam
            lo_power = it.power
        if hi is None:
            raise RuntimeError(
                "power cannot be brought within budget; the smallest grid "
                "point already exceeds q"
            )
        if in_window(it):
            state = LagrangeState(it.lam, it.power, (lo, hi), iterations, True)
            return best, state, trace, nodes_total, iterations, False
    else:
        hi = lam
        hi_power = it.power
        for _ in range(max_expand):
            lam *= 0.5
            it = evaluate(lam)
            iterations += 1
            if it is _BUDGET:
                return budget_exit((lam, hi), iterations)
            if it is None:
                # Cholesky failure: lambda hit its numerical floor.
                lo = lam
                break
            if it.power > q:
                lo = lam
                lo_power = it.power
                break
            hi = lam
            hi_power = it.power
            if in_window(it):
                state = LagrangeState(it.lam, it.power, (lam, hi), iterations, True)
                return best, state, trace, nodes_total, iterations, False
        if lo is None:
            # Power stays under budget across the whole expansion range:
            # the constraint is inactive and the last iterate stands.
            state = LagrangeState(it.lam, it.power, (lam, hi), iterations, True)
            return best, state, trace, nodes_total, iterations, False

    converged = False
    stall = 0
    while iterations < 200:
        if hi - lo <= width_tol * max(1.0, hi):
            converged = True
            break
        lam = 0.5 * (lo + hi)
        it = evaluate(lam)
        iterations += 1
        if it is _BUDGET:
            return budget_exit((lo, hi), iterations)
        if it is None:
            lo = lam
            continue
        if it.power > q:
            if it.power == lo_power:
                stall += 1
            else:
                stall = 0
                lo_power = it.power
            lo = lam
        else:
            if it.power == hi_power:
                stall += 1
            else:
                stall = 0
                hi_power = it.power
            hi = lam
            if in_window(it):
                converged = True
                break
        if stall >= 6:
            # The power curve is piecewise constant in lambda. Once probes
            # keep landing on the same two plateaus flanking the bracket,
            # narrowing it further only re-solves those lattice points and
            # the best feasible iterate cannot change.
            converged = True
            break

    if best is None:
        raise RuntimeError("lambda search found no feasible precoder")
    state = LagrangeState(best.lam, best.power, (lo, hi), iterations, converged)
    return best, state, trace, nodes_total, iterations, exhausted
