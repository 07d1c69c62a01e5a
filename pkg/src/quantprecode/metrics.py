"""Performance metrics and the Monte-Carlo experiment harness.

Rates are always evaluated on the true channel, also under imperfect CSI; the
precoders only ever see the estimate. Randomness follows one master seed with
per-trial sub-streams derived through a fixed counter scheme,

    SeedSequence([master_seed, trial_index, purpose])

with purpose 0 for the channel draw, 1 for pilot noise, and 2 for the
heuristic's random UE ordering. The channel sub-stream does not include the
SNR point, so an SNR sweep reuses the same underlying realizations scaled to
each operating point, and trials are independent of execution order under a
parallel worker pool.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baseline import SCHEMES
from .channel import draw_channel, estimate_channel, gamma_from_snr, snr_schedule

__all__ = [
    "per_ue_sinr",
    "sum_rate",
    "mse_closed_form",
    "TrialOutcome",
    "ExperimentReport",
    "normalize_config",
    "run_experiment",
    "write_csv",
    "write_manifest",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "scheme",
    "snr_db",
    "trials",
    "mean_sum_rate",
    "ci_half_width",
    "mean_mse",
    "mean_wall_time_s",
)

_PURPOSE_CHANNEL = 0
_PURPOSE_PILOT = 1
_PURPOSE_ORDERING = 2

_DEFAULT_SCHEMES = ("wf_infinite", "sphere", "heuristic", "unaware_wf")
_DEFAULT_SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
_ORDERINGS = {
    "gi": "generated_interference",
    "random": "random",
    "ri": "received_interference",
    "generated_interference": "generated_interference",
    "received_interference": "received_interference",
}


def per_ue_sinr(h: np.ndarray, p_hat: np.ndarray, noise_power: float) -> np.ndarray:
    """SINR of each UE under effective precoder p_hat on channel h."""
    h = np.asarray(h, dtype=np.complex128)
    g = h @ np.asarray(p_hat, dtype=np.complex128)
    powers = g.real**2 + g.imag**2
    signal = np.diagonal(powers)
    interference = np.sum(powers, axis=1) - signal
    return signal / (interference + noise_power)


def sum_rate(h: np.ndarray, p_hat: np.ndarray, noise_power: float) -> float:
    """Sum over UEs of log2(1 + SINR_k), in bits/s/Hz."""
    return float(np.sum(np.log2(1.0 + per_ue_sinr(h, p_hat, noise_power))))


def mse_closed_form(h: np.ndarray, p: np.ndarray, beta, noise_power: float) -> float:
    """E ||s - B(HPs + n)||^2 for unit-power uncorrelated symbols.

    Expanding with E[ss^H] = I and E[nn^H] = N0 I gives

        ||BHP||_F^2 - 2 Re tr(BHP) + K + N0 * sum_k |beta_k|^2.

    The constant term is K + N0 * sum |beta_k|^2: the identity contributes
    tr(I_K) = K and the filtered noise contributes N0 per receiver factor.
    """
    h = np.asarray(h, dtype=np.complex128)
    p = np.asarray(p, dtype=np.complex128)
    beta = np.asarray(beta, dtype=np.complex128).reshape(-1)
    k = h.shape[0]
    bhp = beta[:, None] * (h @ p)
    quad = float(np.sum(bhp.real**2 + bhp.imag**2))
    cross = float(np.trace(bhp).real)
    beta_sq = float(np.sum(beta.real**2 + beta.imag**2))
    return quad - 2.0 * cross + k + noise_power * beta_sq


@dataclass(frozen=True)
class TrialOutcome:
    """Metrics of one (scheme, SNR, trial) cell.

    seed is the trial index; combined with the master seed it identifies the
    sub-streams that produced the realization.
    """

    scheme: str
    snr_db: float
    sum_rate: float
    mse: float
    per_ue_sinr: tuple
    seed: int
    wall_time_s: float
    extras: dict | None = None


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregated experiment output, regenerable from (config, seed)."""

    config: dict
    master_seed: int
    rows: list = field(repr=False)
    outcomes: list = field(repr=False)
    diagnostics: dict = field(repr=False)


def _positive_int(value, name):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def _positive_float(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a number, got {value!r}") from None
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return value


def normalize_config(config: dict) -> dict:
    """Validate a flat experiment config and fill in defaults.

    Unknown keys are errors. Returns a new dict; the input is not modified.
    """
    if not isinstance(config, dict):
        raise ValueError(f"config must be a dict, got {type(config).__name__}")
    known = {
        "experiment", "out", "m", "k", "levels", "n0", "q", "gamma", "snr_db",
        "snr_spread_db", "csi", "pilot_power", "schemes", "trials", "seed",
        "s_users", "ordering", "refine_beta", "timing", "jobs",
    }
    unknown = set(config) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")

    cfg = {}
    cfg["experiment"] = config.get("experiment")
    cfg["out"] = config.get("out")
    cfg["m"] = _positive_int(config.get("m", 16), "m")
    cfg["k"] = _positive_int(config.get("k", 4), "k")
    cfg["levels"] = _positive_int(config.get("levels", 8), "levels")
    if cfg["levels"] < 2:
        raise ValueError("levels must be at least 2")
    cfg["n0"] = _positive_float(config.get("n0", 1.0), "n0")
    cfg["q"] = _positive_float(config.get("q", 1.0), "q")

    snr = config.get("snr_db", list(_DEFAULT_SNR_GRID))
    if isinstance(snr, (int, float)) and not isinstance(snr, bool):
        snr = [snr]
    try:
        snr = [float(v) for v in snr]
    except (TypeError, ValueError):
        raise ValueError(f"snr_db must be a number or list of numbers, got {snr!r}") from None
    if not snr:
        raise ValueError("snr_db must contain at least one value")
    cfg["snr_db"] = snr

    gamma = config.get("gamma")
    if gamma is not None:
        gamma_arr = np.asarray(gamma, dtype=np.float64).reshape(-1)
        if gamma_arr.size not in (1, cfg["k"]) or not np.all(gamma_arr > 0.0):
            raise ValueError("gamma must be a positive scalar or length-k list")
        if len(snr) != 1:
            raise ValueError(
                "gamma fixes the channel variance directly; give a single "
                "snr_db value to label the rows"
            )
        gamma = [float(v) for v in gamma_arr]
    cfg["gamma"] = gamma

    spread = config.get("snr_spread_db", 0.0)
    spread = float(spread)
    if spread < 0.0:
        raise ValueError(f"snr_spread_db must be non-negative, got {spread}")
    cfg["snr_spread_db"] = spread

    csi = config.get("csi", "perfect")
    if csi not in ("perfect", "estimated"):
        raise ValueError(f"csi must be 'perfect' or 'estimated', got {csi!r}")
    cfg["csi"] = csi

    pilot = config.get("pilot_power")
    cfg["pilot_power"] = None if pilot is None else _positive_float(pilot, "pilot_power")

    schemes = list(config.get("schemes", _DEFAULT_SCHEMES))
    if not schemes:
        raise ValueError("schemes must contain at least one entry")
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}, expected one of {SCHEMES}")
    if len(set(schemes)) != len(schemes):
        raise ValueError("schemes must not repeat")
    cfg["schemes"] = schemes

    cfg["trials"] = _positive_int(config.get("trials", 200), "trials")
    seed = config.get("seed", 1234)
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    cfg["seed"] = int(seed)

    s_users = config.get("s_users")
    if s_users is not None:
        s_users = _positive_int(s_users, "s_users")
        if s_users > cfg["k"]:
            raise ValueError(f"s_users must be at most k={cfg['k']}, got {s_users}")
    cfg["s_users"] = s_users

    ordering = config.get("ordering", "gi")
    if ordering not in _ORDERINGS:
        raise ValueError(f"ordering must be one of {sorted(set(_ORDERINGS))}, got {ordering!r}")
    cfg["ordering"] = _ORDERINGS[ordering]

    refine = config.get("refine_beta", 0)
    if not isinstance(refine, (int, np.integer)) or isinstance(refine, bool) or refine < 0:
        raise ValueError(f"refine_beta must be a non-negative integer, got {refine!r}")
    cfg["refine_beta"] = int(refine)

    timing = config.get("timing", True)
    if not isinstance(timing, bool):
        raise ValueError(f"timing must be a bool, got {timing!r}")
    cfg["timing"] = timing

    jobs = config.get("jobs")
    cfg["jobs"] = None if jobs is None else _positive_int(jobs, "jobs")
    return cfg


def _resolve_jobs(cfg: dict) -> int:
    if cfg["jobs"] is not None:
        return cfg["jobs"]
    env = os.environ.get("QPL_JOBS", "").strip()
    if env:
        try:
            jobs = int(env)
        except ValueError:
            raise ValueError(f"QPL_JOBS must be an integer, got {env!r}") from None
        if jobs < 1:
            raise ValueError(f"QPL_JOBS must be positive, got {jobs}")
        return jobs
    return os.cpu_count() or 1


def _trial_gamma(cfg: dict, snr_db: float) -> np.ndarray:
    if cfg["gamma"] is not None:
        gamma = np.asarray(cfg["gamma"], dtype=np.float64)
        if gamma.size == 1:
            gamma = np.full(cfg["k"], float(gamma))
        return gamma
    per_ue_snr = snr_schedule(snr_db, cfg["k"], cfg["snr_spread_db"])
    return gamma_from_snr(per_ue_snr, cfg["n0"], cfg["q"])


def _compute_precoder(scheme: str, state, spec, cfg: dict, trial: int):
    # Imported lazily: heuristic evaluates candidates through sum_rate in
    # this module, so a top-level import would be circular.
    from .baseline import beta_wf, unaware_precoder, wf_infinite_precoder, PrecodingResult
    from .heuristic import RefinementPlan, heuristic_precode
    from .oracle import exhaustive_constrained
    from .sphere import sphere_precode

    q, n0 = cfg["q"], cfg["n0"]
    if scheme == "wf_infinite":
        return wf_infinite_precoder(state.h_hat, q, n0)
    if scheme == "unaware_wf":
        return unaware_precoder(state.h_hat, q, n0, spec)
    if scheme == "sphere":
        return sphere_precode(
            state.h_true, state.h_hat, q, n0, spec, refine_beta=cfg["refine_beta"]
        )
    if scheme == "heuristic":
        plan = RefinementPlan(
            s_users=cfg["s_users"] if cfg["s_users"] is not None else cfg["k"],
            ordering_rule=cfg["ordering"],
            rng_seed=(cfg["seed"], trial, _PURPOSE_ORDERING),
        )
        return heuristic_precode(state.h_hat, q, n0, spec, plan)
    if scheme == "oracle":
        beta = beta_wf(state.h_hat, q, n0)
        p = exhaustive_constrained(state.h_hat, beta, spec, q)
        return PrecodingResult(p=p, beta=beta, alpha=1.0, scheme="oracle")
    raise ValueError(f"unknown scheme {scheme!r}")


def _run_trial(cfg: dict, spec, snr_db: float, trial: int) -> list:
    gamma = _trial_gamma(cfg, snr_db)
    state = draw_channel(
        cfg["k"],
        cfg["m"],
        gamma,
        np.random.SeedSequence([cfg["seed"], trial, _PURPOSE_CHANNEL]),
        noise_power=cfg["n0"],
        power_budget=cfg["q"],
        pilot_power=cfg["pilot_power"],
    )
    if cfg["csi"] == "estimated":
        state = estimate_channel(
            state, np.random.SeedSequence([cfg["seed"], trial, _PURPOSE_PILOT])
        )

    outcomes = []
    for scheme in cfg["schemes"]:
        t0 = time.perf_counter()
        result = _compute_precoder(scheme, state, spec, cfg, trial)
        elapsed = time.perf_counter() - t0
        p_hat = result.alpha * result.p
        sinr = per_ue_sinr(state.h_true, p_hat, cfg["n0"])
        rate = float(np.sum(np.log2(1.0 + sinr)))
        mse = mse_closed_form(state.h_true, p_hat, result.beta, cfg["n0"])
        extras = None
        if result.diagnostics is not None and scheme == "sphere":
            extras = {
                "nodes_total": result.diagnostics["nodes_total"],
                "evaluations": result.diagnostics["evaluations"],
                "lambda": result.diagnostics["lambda"],
                "budget_exhausted": result.diagnostics["budget_exhausted"],
            }
        outcomes.append(
            TrialOutcome(
                scheme=scheme,
                snr_db=snr_db,
                sum_rate=rate,
                mse=mse,
                per_ue_sinr=tuple(float(v) for v in sinr),
                seed=trial,
                wall_time_s=elapsed if cfg["timing"] else 0.0,
                extras=extras,
            )
        )
    return outcomes


def _trial_worker(args):
    cfg, snr_db, trial = args
    from .quantizer import QuantizerSpec, design_step_size

    step = design_step_size(cfg["levels"], cfg["q"] / (2.0 * cfg["k"] * cfg["m"]))
    spec = QuantizerSpec.create(cfg["levels"], step)
    return _run_trial(cfg, spec, snr_db, trial)


def run_experiment(config: dict) -> ExperimentReport:
    """Run the configured Monte-Carlo sweep and aggregate per (scheme, SNR).

    The precoder input variance is q/(KM) per complex entry, so the quantizer
    step is designed once per run from q/(2KM) per real dimension. Trials may
    execute on a process pool (config key "jobs", env QPL_JOBS); outcomes are
    reduced in fixed (SNR, trial) order, so parallelism never changes the
    report.
    """
    cfg = normalize_config(config)
    from .quantizer import QuantizerSpec, design_step_size

    step = design_step_size(cfg["levels"], cfg["q"] / (2.0 * cfg["k"] * cfg["m"]))
    spec = QuantizerSpec.create(cfg["levels"], step)

    tasks = [(snr, trial) for snr in cfg["snr_db"] for trial in range(cfg["trials"])]
    jobs = _resolve_jobs(cfg)
    if jobs == 1:
        per_task = [_run_trial(cfg, spec, snr, trial) for snr, trial in tasks]
    else:
        args = [(cfg, snr, trial) for snr, trial in tasks]
        chunk = max(1, len(args) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_task = list(pool.map(_trial_worker, args, chunksize=chunk))
    outcomes = [out for group in per_task for out in group]

    rows = []
    diagnostics = {}
    for scheme in cfg["schemes"]:
        scheme_outcomes = [o for o in outcomes if o.scheme == scheme]
        diag = {"kernel_backend": None}
        if scheme == "sphere" and scheme_outcomes and scheme_outcomes[0].extras:
            from .sphere import KERNEL_BACKEND

            diag = {
                "kernel_backend": KERNEL_BACKEND,
                "mean_nodes_total": float(
                    np.mean([o.extras["nodes_total"] for o in scheme_outcomes])
                ),
                "mean_lambda_evaluations": float(
                    np.mean([o.extras["evaluations"] for o in scheme_outcomes])
                ),
                "budget_exhausted_trials": int(
                    sum(o.extras["budget_exhausted"] for o in scheme_outcomes)
                ),
            }
        diagnostics[scheme] = diag
        for snr in cfg["snr_db"]:
            cell = [o for o in scheme_outcomes if o.snr_db == snr]
            rates = np.array([o.sum_rate for o in cell])
            mses = np.array([o.mse for o in cell])
            walls = np.array([o.wall_time_s for o in cell])
            n = len(cell)
            ci = 1.96 * float(np.std(rates, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
            rows.append(
                {
                    "scheme": scheme,
                    "snr_db": snr,
                    "trials": n,
                    "mean_sum_rate": float(np.mean(rates)),
                    "ci_half_width": ci,
                    "mean_mse": float(np.mean(mses)),
                    "mean_wall_time_s": float(np.mean(walls)),
                }
            )
    return ExperimentReport(
        config=cfg,
        master_seed=cfg["seed"],
        rows=rows,
        outcomes=outcomes,
        diagnostics=diagnostics,
    )


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(report: ExperimentReport, path) -> None:
    """Write the aggregate rows with the fixed column set, '.' decimals."""
    lines = [",".join(CSV_COLUMNS)]
    for row in report.rows:
        lines.append(",".join(_format_value(row[c]) for c in CSV_COLUMNS))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_manifest(report: ExperimentReport, path) -> None:
    """Write the JSON manifest from which the CSV can be regenerated."""
    import json

    from . import __version__

    payload = {
        "config": report.config,
        "master_seed": report.master_seed,
        "version": __version__,
        "csv_columns": list(CSV_COLUMNS),
        "diagnostics": report.diagnostics,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
