#!/usr/bin/env python3
"""Compare the jit and plain-numpy cubic kernels, then whole solver steps.

The kernel comparison runs both backends in this process.  The whole-step
comparison has to spawn subprocesses because the solver binds its backend
at import time (MTIFP_NUMBA=0 forces numpy, =1 requires the jit path).
"""

import os
import statistics
import subprocess
import sys
import time

import numpy as np

from mtifp._kernels import numba_backend, numpy_backend

SIZES = (256, 1024, 4096)
REPEATS = 200
LAM = 1.0

STEP_SNIPPET = """\
import time
from mtifp.solver import SolverConfig, propagate
cfg = SolverConfig(n={n}, eps=0.5, tau=1e-3, t_final=0.1)
propagate(cfg)
best = 1e9
for _ in range(5):
    t0 = time.perf_counter()
    propagate(cfg)
    best = min(best, (time.perf_counter() - t0) / cfg.n_steps)
print(best)
"""


def bench_call(fn, args):
    fn(*args)  # warm: jit compilation on first use
    samples = []
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def kernel_table():
    jit = numba_backend()
    plain = numpy_backend()
    if jit is None:
        print("numba backend unavailable; kernel comparison skipped")
        return
    rng = np.random.default_rng(7)
    print(f"{'kernel':<18}{'n':>6}{'numpy':>12}{'numba':>12}{'speedup':>9}")
    for n in SIZES:
        zp = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        zm = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        zpd = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        zmd = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        cases = (("cubic_f", (zp, zm, LAM)),
                 ("cubic_bundle", (zp, zm, zpd, zmd, LAM)),
                 ("cubic_difference", (zp, zm, LAM)))
        for name, args in cases:
            t_np = bench_call(plain[name], args)
            t_jit = bench_call(jit[name], args)
            print(f"{name:<18}{n:>6}{t_np * 1e6:>10.1f}us"
                  f"{t_jit * 1e6:>10.1f}us{t_np / t_jit:>9.2f}x")


def step_seconds(n, flag):
    env = dict(os.environ, MTIFP_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", STEP_SNIPPET.format(n=n)],
                         capture_output=True, text=True, env=env, check=True)
    return float(out.stdout.strip())


def step_table():
    print()
    print(f"{'whole step':<18}{'n':>6}{'numpy':>12}{'numba':>12}{'speedup':>9}")
    for n in (256, 1024):
        t_np = step_seconds(n, "0")
        t_jit = step_seconds(n, "1")
        print(f"{'propagate':<18}{n:>6}{t_np * 1e6:>10.1f}us"
              f"{t_jit * 1e6:>10.1f}us{t_np / t_jit:>9.2f}x")


if __name__ == "__main__":
    kernel_table()
    step_table()
