"""Benchmark: compiled integration core vs pure-numpy fallback.

Runs the same storage simulation on both backends and reports wall
time, accepted steps and throughput.  Invoke:

    python benchmarks/bench_integrator.py [--nodes N] [--t-end T]
"""

import argparse
import math
import time

import numpy as np

from mrqm import _kernel_py
from mrqm.model import (SystemParams, derive_params, make_pulse,
                        params_for_gamma_sigma, sample_atoms)
from mrqm.matching import matched_params
from mrqm.dynamics import build_system

try:
    from mrqm import _kernel
except ImportError:
    _kernel = None


def build_case(nodes):
    p = SystemParams(kappa=1.0, gamma_c=0.0, gamma_b=0.0, gamma_a=0.0,
                     g=1.0, f=0.1, M=8, delta=1.25, delta_in_atomic=100.0,
                     N_a=10**6)
    p = params_for_gamma_sigma(p, 2.0)
    dp = derive_params(p)
    p, _ = matched_params(p, dp, impedance=True, spectral=True)
    sysm = build_system(p, dp, sample_atoms(p.delta_in_atomic, nodes))
    pulse = make_pulse(W_in=1.0, dt_s=1.0, t0=3.5)
    return p, sysm, pulse


def run(kernel, sysm, pulse, t_end):
    p = sysm.params
    rec_ts = np.arange(0.0, t_end, 0.02)
    t0 = time.perf_counter()
    rec, y, status, _, nstep, nrej = kernel.integrate_dp5(
        sysm.zero_state(), 0.0, rec_ts, p.M, sysm.n_nodes,
        complex(sysm.diag_a),
        np.ascontiguousarray(sysm.diag_b, dtype=np.complex128),
        np.ascontiguousarray(sysm.diag_s, dtype=np.complex128),
        float(p.g), float(sysm.f_node), math.sqrt(p.kappa),
        pulse.peak_amplitude, pulse.t0, pulse.dt_s, pulse.carrier_offset,
        p.gamma_c, p.gamma_b, p.gamma_a, 1e-8, 1e-12, 1e-3, 0.02)
    wall = time.perf_counter() - t0
    assert status == 0
    return wall, nstep, rec


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=201)
    ap.add_argument("--t-end", type=float, default=6.0)
    args = ap.parse_args()

    p, sysm, pulse = build_case(args.nodes)
    dim = sysm.dim + 5
    print(f"system: M={p.M}, nodes={args.nodes}, state dim={dim}, "
          f"t_end={args.t_end}")

    wall_py, steps_py, rec_py = run(_kernel_py, sysm, pulse, args.t_end)
    print(f"python backend : {wall_py:8.2f} s   {steps_py:8d} steps   "
          f"{steps_py / wall_py:10.0f} steps/s")

    if _kernel is None:
        print("cython backend : not built (pip install -e . "
              "--no-build-isolation)")
        return

    wall_cy, steps_cy, rec_cy = run(_kernel, sysm, pulse, args.t_end)
    print(f"cython backend : {wall_cy:8.2f} s   {steps_cy:8d} steps   "
          f"{steps_cy / wall_cy:10.0f} steps/s")
    print(f"speedup        : {wall_py / wall_cy:8.1f}x")
    gap = np.max(np.abs(rec_py - rec_cy))
    print(f"max |record difference| = {gap:.3e}")


if __name__ == "__main__":
    main()
