#!/usr/bin/env python3
"""Benchmark the stepping kernels: compiled extension vs pure Python.

The full-order hot loop (leg chains, mass/bias assembly, contact, RK4
substeps) dominates every full-order scenario, which is why it exists in
both forms.  Typical result on a laptop-class core: ~100x.

Usage: python benchmarks/bench_step.py [n_substeps]
"""

import sys
import time

import numpy as np

from thrustbiped.contact import GroundParams
from thrustbiped.engine import Stepper, compiled_available
from thrustbiped.gait import GaitConfig
from thrustbiped.morphology import default_morphology
from thrustbiped.simulate import Scenario, run_scenario, standing_state


def bench_kernel(n_sub: int = 5000):
    morph = default_morphology()
    ground = GroundParams()
    state = standing_state(morph, GaitConfig(), drop_height=0.002, stagger=0.06)
    u_j = np.array([0.5, -0.5, 1.0, -1.0, 2.0, -2.0])
    u_t = np.array([0.0, 0.2, 6.0, 0.1, 0.0, 6.0])

    rows = []
    for label, force_pure, n in (("compiled", False, n_sub), ("python", True, max(200, n_sub // 25))):
        if label == "compiled" and not compiled_available():
            print("compiled kernel not built; skipping")
            continue
        stepper = Stepper(morph, ground, force_pure=force_pure)
        stepper.run(state.x, u_j, u_t, 10, 1e-4)  # warm up
        t0 = time.perf_counter()
        stepper.run(state.x, u_j, u_t, n, 1e-4)
        dt = time.perf_counter() - t0
        rows.append((stepper.backend, n, dt, n / dt))

    print(f"{'backend':<10}{'substeps':>10}{'wall [s]':>12}{'substeps/s':>14}{'us/substep':>12}")
    for backend, n, dt, rate in rows:
        print(f"{backend:<10}{n:>10}{dt:>12.3f}{rate:>14.0f}{1e6 * dt / n:>12.1f}")
    if len(rows) == 2:
        print(f"speedup: {rows[0][3] / rows[1][3]:.1f}x")
    return rows


def bench_scenario():
    s = Scenario(name="bench", plant="full_order", duration=2.0, stepping=True,
                 drop_height=0.005, log_rate=200.0)
    t0 = time.perf_counter()
    _, metrics = run_scenario(s)
    dt = time.perf_counter() - t0
    print(f"\nfull-order closed loop: 2.0 s simulated in {dt:.2f} s wall "
          f"({2.0 / dt:.2f}x realtime), steps={metrics.steps}, fell={metrics.fell}")


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 5000
    bench_kernel(n)
    bench_scenario()
