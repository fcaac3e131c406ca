#!/usr/bin/env python3
"""Benchmark the compiled rollout kernel against the numpy fallback.

Runs the batch-reactor closed loop at several horizons with a fixed
pseudo-random DoS mask and reports wall time per backend plus speedup.

Usage: python benchmarks/bench_rollout.py [--repeats N]
"""

import argparse
import time

import numpy as np

from etcdos import _rollout_py, compute_certificate, load_scenario

try:
    from etcdos import _rollout as _rollout_cy
except ImportError:
    _rollout_cy = None


def make_workload(horizon: int):
    sc = load_scenario("scenarios/batch_reactor.json")
    cert = compute_certificate(sc.synthesis)
    plant = sc.config.plant
    a_eff = np.ascontiguousarray(
        np.broadcast_to(plant.A + 0.1 * np.eye(plant.n),
                        (horizon, plant.n, plant.n)).copy())
    rng = np.random.default_rng(0)
    dos = (rng.random(horizon) < 0.1).astype(np.uint8)
    dos[0] = 0
    return a_eff, plant.B, cert.K, dos, cert.mu, sc.config.x0


def bench(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    print(f"{'horizon':>10} {'python (ms)':>14} {'cython (ms)':>14} {'speedup':>9}")
    for horizon in (120, 2_000, 50_000):
        workload = make_workload(horizon)
        t_py = bench(_rollout_py.rollout, workload, args.repeats)
        if _rollout_cy is None:
            print(f"{horizon:>10} {t_py * 1e3:>14.3f} {'(not built)':>14} {'-':>9}")
            continue
        t_cy = bench(_rollout_cy.rollout, workload, args.repeats)
        out_py = _rollout_py.rollout(*workload)
        out_cy = _rollout_cy.rollout(*workload)
        assert np.array_equal(out_py[5], out_cy[5]), "event flags diverged"
        assert np.allclose(out_py[0], out_cy[0], rtol=1e-10, atol=1e-14)
        print(f"{horizon:>10} {t_py * 1e3:>14.3f} {t_cy * 1e3:>14.3f} "
              f"{t_py / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
