"""Compare the numba and pure-numpy kernel paths.

Each backend runs in its own interpreter (the choice is made at import time
from ``QHINF_DISABLE_NUMBA``). Timings exclude the first call, which for the
numba path includes compilation (or loading from the on-disk cache).

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from qhinf import backend
from qhinf.config import bundled_config, load_config
from qhinf.freq import error_system, freq_response, linf_norm, select_channel
from qhinf.hinf import design_robust_estimator
from qhinf.model import apply_uncertainty
from qhinf.oracle import kalman_by_flow

def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0

repeat = int(sys.argv[1])
cfg = load_config(bundled_config("example1"))
est = design_robust_estimator(cfg.plant, cfg.uncertainty, cfg.synthesis, cfg.S).estimator
dA, dB, dC = apply_uncertainty(cfg.plant, cfg.uncertainty, 1.0)
sys_ = select_channel(error_system(cfg.plant, dA, dB, dC, cfg.S, est), 0)
grid = np.logspace(-3, 3, 20000)
p = cfg.plant

cases = {
    "freq_response (20k points)": lambda: freq_response(sys_, grid),
    "linf_norm (grid + golden section)": lambda: linf_norm(sys_),
    "Riccati flow oracle (RK4)": lambda: kalman_by_flow(p.A, p.B, p.C, cfg.S),
}
out = {"backend": backend(), "cases": {}}
for name, fn in cases.items():
    t0 = time.perf_counter(); fn(); first = time.perf_counter() - t0
    best = min(_timed(fn) for _ in range(repeat)) if repeat else first
    out["cases"][name] = {"first": first, "best": best}
print(json.dumps(out))
"""


def run_backend(disable, repeat):
    env = dict(os.environ, QHINF_DISABLE_NUMBA="1" if disable else "0")
    cp = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                        capture_output=True, text=True, check=True)
    return json.loads(cp.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    jit = run_backend(False, args.repeat)
    ref = run_backend(True, args.repeat)
    if jit["backend"] != "numba":
        print("numba is not installed; only the numpy path is available")
    width = max(len(k) for k in ref["cases"])
    print(f"{'kernel':<{width}}  {'numpy [ms]':>11}  {jit['backend'] + ' [ms]':>11}  {'speed-up':>8}  {'1st call':>9}")
    for name, r in ref["cases"].items():
        j = jit["cases"][name]
        print(f"{name:<{width}}  {1e3 * r['best']:11.2f}  {1e3 * j['best']:11.2f}  "
              f"{r['best'] / j['best']:7.1f}x  {1e3 * j['first']:8.0f}ms")


if __name__ == "__main__":
    main()
