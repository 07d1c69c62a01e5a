"""Command-line experiment runner.

Each subcommand is one experiment preset; flags override the optional JSON
config file, which overrides the preset. Experiments that sweep a design
dimension (ordering rules, K*L splits, CSI modes) expand into one CSV plus
manifest pair per variant inside the output directory.

Exit codes: 0 success, 2 configuration error, 3 runtime or size-guard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

__all__ = ["EXPERIMENTS", "RunConfig", "main"]

EXPERIMENTS = (
    "sumrate_vs_snr",
    "heuristic_ordering",
    "kl_product",
    "imperfect_csi",
    "pathloss",
    "oracle_check",
    "capacity",
)

_PRESETS = {
    "sumrate_vs_snr": {
        "m": 16, "k": 4, "levels": 8,
        "snr_db": [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
        "trials": 200,
        "schemes": ["wf_infinite", "sphere", "heuristic", "unaware_wf"],
    },
    "heuristic_ordering": {
        "m": 16, "k": 4, "levels": 8,
        "snr_db": [30.0],
        "trials": 500,
        "schemes": ["heuristic"],
    },
    "kl_product": {
        "m": 16,
        "snr_db": [0.0, 10.0, 20.0, 30.0, 40.0],
        "trials": 100,
        "schemes": ["heuristic"],
    },
    "imperfect_csi": {
        "m": 16, "k": 4, "levels": 8,
        "snr_db": [0.0, 10.0, 20.0, 30.0],
        "trials": 100,
        "schemes": ["sphere"],
    },
    "pathloss": {
        "m": 16, "k": 4, "levels": 8,
        "snr_db": [0.0, 10.0, 20.0, 30.0],
        "snr_spread_db": 10.0,
        "trials": 100,
        "schemes": ["wf_infinite", "sphere", "heuristic", "unaware_wf"],
    },
}

# (K, L) splits of the K*L = 20 degrees-of-freedom study.
_KL_PAIRS = ((10, 2), (5, 4), (4, 5), (2, 10))


class RunConfig:
    """Resolved experiment run: name plus one config dict per variant."""

    def __init__(self, experiment: str, out_dir: Path, variants):
        self.experiment = experiment
        self.out_dir = out_dir
        self.variants = variants  # list of (variant_name, config_dict)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantprecode",
        description="Fronthaul-quantization-aware MU-MIMO precoding experiments",
    )
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key-value JSON config file")
    common.add_argument("--m", type=int, help="transmit antennas")
    common.add_argument("--k", type=int, help="UEs")
    common.add_argument("--levels", type=int, help="quantizer levels per real dimension")
    common.add_argument("--snr-db", type=float, nargs="+", help="SNR grid in dB")
    common.add_argument("--trials", type=int, help="Monte-Carlo trials per SNR point")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--schemes", nargs="+", help="schemes to evaluate")
    common.add_argument("--s-users", type=int, help="UEs refined by the heuristic")
    common.add_argument("--ordering", choices=["gi", "random", "ri"], help="heuristic UE ordering")
    common.add_argument("--csi", choices=["perfect", "estimated"], help="CSI mode")
    common.add_argument("--pilot-power", type=float, help="per-UE pilot power")
    common.add_argument(
        "--refine-beta", type=int, help="receiver-factor refinement passes for the sphere scheme"
    )
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--jobs", type=int, help="worker processes (env QPL_JOBS)")
    common.add_argument(
        "--no-timing",
        action="store_true",
        help="record zero wall times so reruns are byte-identical",
    )

    for name in ("sumrate_vs_snr", "heuristic_ordering", "kl_product", "imperfect_csi", "pathloss"):
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")

    oc = sub.add_parser(
        "oracle_check",
        aliases=["oracle-check"],
        help="run the exhaustive-search agreement suites",
    )
    oc.add_argument("--trials", type=int, default=50, help="seeds per suite")
    oc.add_argument("--seed", type=int, default=1234, help="master seed")

    cap = sub.add_parser("capacity", help="print the fronthaul capacity comparison")
    cap.add_argument("--m", type=int, default=16)
    cap.add_argument("--k", type=int, default=4)
    cap.add_argument("--tau", type=int, default=200)
    cap.add_argument("--n-precoder", type=int, default=3)
    cap.add_argument("--se", type=float, default=4.0)
    cap.add_argument("--n-res", type=float, default=3.0)
    return parser


_FLAG_KEYS = (
    ("m", "m"),
    ("k", "k"),
    ("levels", "levels"),
    ("snr_db", "snr_db"),
    ("trials", "trials"),
    ("seed", "seed"),
    ("schemes", "schemes"),
    ("s_users", "s_users"),
    ("ordering", "ordering"),
    ("csi", "csi"),
    ("pilot_power", "pilot_power"),
    ("refine_beta", "refine_beta"),
    ("jobs", "jobs"),
)


def _variants(experiment: str, base: dict):
    if experiment == "heuristic_ordering":
        k = int(base.get("k", 4))
        pairs = []
        for s in dict.fromkeys((k, max(1, k // 2))):
            for ordering in ("gi", "random"):
                pairs.append(
                    (f"{experiment}_s{s}_{ordering}", {"s_users": s, "ordering": ordering})
                )
        return pairs
    if experiment == "kl_product":
        return [(f"{experiment}_k{k}_l{l}", {"k": k, "levels": l}) for k, l in _KL_PAIRS]
    if experiment == "imperfect_csi":
        return [(f"{experiment}_{mode}", {"csi": mode}) for mode in ("perfect", "estimated")]
    return [(experiment, {})]


def _assemble_run(args) -> RunConfig:
    base = dict(_PRESETS[args.experiment])
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise ValueError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ValueError("config file must hold a JSON object")
        base.update(file_cfg)
    for flag, key in _FLAG_KEYS:
        value = getattr(args, flag)
        if value is not None:
            base[key] = value
    if args.no_timing:
        base["timing"] = False
    base["experiment"] = args.experiment
    base.pop("out", None)

    from .metrics import normalize_config

    variants = []
    for name, extra in _variants(args.experiment, base):
        cfg = {**base, **extra}
        variants.append((name, normalize_config(cfg)))
    return RunConfig(args.experiment, args.out, variants)


def _run_experiments(run: RunConfig) -> int:
    from .metrics import run_experiment, write_csv, write_manifest

    run.out_dir.mkdir(parents=True, exist_ok=True)
    for name, cfg in run.variants:
        report = run_experiment(cfg)
        csv_path = run.out_dir / f"{name}.csv"
        manifest_path = run.out_dir / f"{name}.manifest.json"
        write_csv(report, csv_path)
        write_manifest(report, manifest_path)
        print(f"{name}: wrote {csv_path} and {manifest_path}")
    return 0


def _run_capacity(args) -> int:
    from .oracle import FronthaulBudget, capacity_joint, capacity_separate

    budget = FronthaulBudget(
        m=args.m, k=args.k, tau=args.tau,
        n_precoder=args.n_precoder, se=args.se, n_res=args.n_res,
    )
    separate = capacity_separate(budget)
    joint = capacity_joint(budget)

    def fmt(v):
        return str(int(v)) if float(v).is_integer() else repr(float(v))

    print(f"separate={fmt(separate)} joint={fmt(joint)} ratio={joint / separate:.2f}")
    return 0


def _run_oracle_check(args) -> int:
    from .oracle import (
        FronthaulBudget,
        capacity_joint,
        capacity_separate,
        exhaustive_fixed_lambda,
    )
    from .quantizer import QuantizerSpec, design_step_size
    from .sphere import build_subproblems, sesd_solve, solve_fixed_lambda

    rng = np.random.default_rng(args.seed)
    trials = args.trials

    def random_case(m, k, levels):
        h = (rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))) / np.sqrt(2.0)
        beta = 0.2 + rng.random(k)
        lam = float(2.0 ** rng.uniform(-2.0, 2.0))
        step = design_step_size(levels, 1.0 / (2.0 * k * m))
        return h, beta, lam, QuantizerSpec.create(levels, step)

    def objective(h, beta, lam, p):
        bh = np.asarray(beta)[:, None] * h
        v = bh.conj().T @ bh + lam * np.eye(h.shape[1])
        return float(np.trace(p.conj().T @ v @ p).real) - 2.0 * float(np.trace(bh @ p).real)

    failures = 0
    passed = 0
    for _ in range(trials):
        h, beta, lam, spec = random_case(2, 1, 4)
        insts = build_subproblems(h, beta, lam, spec)
        p_sesd = np.stack(
            [sol.a_real[0::2] + 1j * sol.a_real[1::2] for sol in map(sesd_solve, insts)],
            axis=1,
        )
        p_ref = exhaustive_fixed_lambda(h, beta, lam, spec)
        ok = abs(objective(h, beta, lam, p_sesd) - objective(h, beta, lam, p_ref)) < 1e-9
        passed += ok
        failures += not ok
    print(f"sesd vs per-column exhaustive: {passed}/{trials} pass")

    joint_pass = 0
    for _ in range(trials):
        h, beta, lam, spec = random_case(2, 2, 2)
        p_sp, _, _ = solve_fixed_lambda(h, beta, lam, spec)
        p_joint = exhaustive_fixed_lambda(h, beta, lam, spec, joint=True)
        ok = abs(objective(h, beta, lam, p_sp) - objective(h, beta, lam, p_joint)) < 1e-9
        joint_pass += ok
        failures += not ok
    print(f"solve_fixed_lambda vs joint exhaustive: {joint_pass}/{trials} pass")

    sep_pass = 0
    for _ in range(trials):
        h, beta, lam, spec = random_case(1, 2, 2)
        p_col = exhaustive_fixed_lambda(h, beta, lam, spec)
        p_joint = exhaustive_fixed_lambda(h, beta, lam, spec, joint=True)
        ok = abs(objective(h, beta, lam, p_col) - objective(h, beta, lam, p_joint)) < 1e-9
        sep_pass += ok
        failures += not ok
    print(f"per-column vs joint enumeration: {sep_pass}/{trials} pass")

    budget = FronthaulBudget(m=16, k=4, tau=200, n_precoder=3, se=4.0, n_res=3.0)
    cap_ok = capacity_separate(budget) == 3584 and capacity_joint(budget) == 38400
    failures += not cap_ok
    print(f"capacity arithmetic: {'pass' if cap_ok else 'FAIL'}")

    if failures:
        print(f"{failures} failures", file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.experiment == "capacity":
        return _run_capacity(args)
    if args.experiment in ("oracle_check", "oracle-check"):
        return _run_oracle_check(args)

    try:
        run = _assemble_run(args)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        return _run_experiments(run)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, np.linalg.LinAlgError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
