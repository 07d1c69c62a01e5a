"""Benchmark the compiled SESD kernel against the pure-Python reference.

Builds a batch of per-column sphere-decoding instances at a configurable
system size, runs both kernels on identical inputs, verifies bit-identical
outputs, and reports wall times plus the speedup. Run from the repo root:

    python3 benchmarks/compare_kernels.py
    python3 benchmarks/compare_kernels.py --m 8 --k 4 --levels 8 --instances 40
"""

import argparse
import math
import time

import numpy as np

from quantprecode import _sesd_py
from quantprecode.baseline import beta_wf
from quantprecode.quantizer import QuantizerSpec, design_step_size
from quantprecode.sphere import build_subproblems

try:
    from quantprecode import _sesd_cy
except ImportError:
    _sesd_cy = None


def build_batch(m, k, levels, instances, seed):
    rng = np.random.default_rng(seed)
    step = design_step_size(levels, 1.0 / (2.0 * k * m))
    spec = QuantizerSpec.create(levels, step)
    batch = []
    while len(batch) < instances:
        h = (rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))) / np.sqrt(2.0)
        beta = beta_wf(h, 1.0, 1.0)
        lam = float(2.0 ** rng.uniform(-3.0, 1.0))
        for inst in build_subproblems(h, beta, lam, spec):
            batch.append(
                (
                    np.ascontiguousarray(inst.r_real),
                    np.ascontiguousarray(inst.e_real),
                    np.ascontiguousarray(inst.labels),
                    inst.step,
                )
            )
    return batch[:instances]


def run(kernel, batch):
    t0 = time.perf_counter()
    results = [kernel(r, e, labels, step, math.inf, 0) for r, e, labels, step in batch]
    return time.perf_counter() - t0, results


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--m", type=int, default=6, help="transmit antennas")
    parser.add_argument("--k", type=int, default=3, help="UEs")
    parser.add_argument("--levels", type=int, default=8, help="quantizer levels")
    parser.add_argument("--instances", type=int, default=30, help="columns to solve")
    parser.add_argument("--seed", type=int, default=2024, help="batch seed")
    args = parser.parse_args()

    batch = build_batch(args.m, args.k, args.levels, args.instances, args.seed)
    dims = 2 * args.m
    print(
        f"{len(batch)} instances, {dims} real dimensions, "
        f"{args.levels} levels per dimension"
    )

    py_time, py_results = run(_sesd_py.sesd_kernel, batch)
    nodes = sum(r[2] for r in py_results)
    print(f"pure python : {py_time:8.3f} s  ({nodes:,} nodes)")

    if _sesd_cy is None:
        print("compiled extension not built; run pip install -e . first")
        return

    cy_time, cy_results = run(_sesd_cy.sesd_kernel, batch)
    print(f"compiled    : {cy_time:8.3f} s  ({sum(r[2] for r in cy_results):,} nodes)")

    for i, (py, cy) in enumerate(zip(py_results, cy_results)):
        same = (
            np.array_equal(py[0], cy[0])
            and py[1] == cy[1]
            and py[2] == cy[2]
            and py[3] == cy[3]
        )
        if not same:
            raise SystemExit(f"MISMATCH on instance {i}: kernels disagree")
    print(f"outputs bit-identical across {len(batch)} instances")
    print(f"speedup     : {py_time / cy_time:8.1f}x")


if __name__ == "__main__":
    main()
