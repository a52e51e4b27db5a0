#!/usr/bin/env python3
"""Benchmark the pattern kernels: numba backend vs pure-numpy fallback.

Times the separable steered-grid kernel and the generic direct kernel on a
representative hemisphere quadrature, at the desk-scale array sizes.  Run:

    python benchmarks/bench_kernels.py [--step-deg 1.0] [--repeat 3]

Setting LERIS_NO_NUMBA=1 in the environment would force the numpy backend
globally; this script switches backends explicitly instead.
"""

import argparse
import math
import time

import numpy as np

from leris import kernels
from leris.mmwave import GridSpec, LerisPanel, steering_phase_profile

K0 = 2 * math.pi / 0.01
TX = np.array([3.0, -2.0, 5.0])
RX = np.array([1.2, 0.9, 4.0])


def time_call(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--step-deg", type=float, default=1.0)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    grid = GridSpec(step_deg=args.step_deg)
    theta, phi = grid.axes()
    print(f"grid: {theta.size} x {phi.size} directions "
          f"({args.step_deg} deg step), best of {args.repeat}")
    print(f"numba available: {kernels.HAVE_NUMBA}")

    rows = []
    for side in (16, 50):
        panel = LerisPanel(id=1, center=(0, 5, 1.5), normal=(1, 0, 0),
                           m_rows=side, n_cols=side)
        prof = steering_phase_profile(panel, 0.6, 1.9, TX, RX, K0)
        for name, call in (
            ("separable", lambda: kernels.separable_power_grid(
                theta, phi, 0.6, 1.9, side, side, K0,
                panel.element_side_m, TX, RX)),
            ("direct", lambda: kernels.direct_power_grid(
                theta, phi, prof.phases, K0, panel.element_side_m, TX, RX)),
        ):
            timings = {}
            ref = {}
            for backend in ("numba", "numpy"):
                if backend == "numba" and not kernels.HAVE_NUMBA:
                    continue
                prev = kernels.set_backend(backend)
                try:
                    if backend == "numba":
                        call()                      # JIT warm-up
                    timings[backend], ref[backend] = time_call(call, args.repeat)
                finally:
                    kernels.set_backend(prev)
            if len(ref) == 2:
                scale = max(float(np.max(np.abs(ref["numpy"]))), 1.0)
                dev = float(np.max(np.abs(ref["numba"] - ref["numpy"]))) / scale
            else:
                dev = float("nan")
            rows.append((side * side, name, timings.get("numba"),
                         timings.get("numpy"), dev))

    print(f"\n{'MN':>6} {'kernel':>10} {'numba [ms]':>12} {'numpy [ms]':>12} "
          f"{'speedup':>8} {'max dev':>10}")
    for mn, name, t_nb, t_np, dev in rows:
        nb = f"{1e3 * t_nb:12.1f}" if t_nb else " " * 12
        sp = f"{t_np / t_nb:8.1f}" if t_nb else " " * 8
        print(f"{mn:>6} {name:>10} {nb} {1e3 * t_np:12.1f} {sp} {dev:10.1e}")


if __name__ == "__main__":
    main()
