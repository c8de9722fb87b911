"""Compare the numba and pure-numpy kernel backends.

Each backend runs in its own interpreter because the choice is made at import
time from ``DISMETRICS_DISABLE_NUMBA``. Timings exclude the first (compiling)
call.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, timeit
import numpy as np
from dismetrics import _accel, kernels

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
cases = {}

mu = rng.normal(size=20000)
sd = rng.uniform(0.05, 1.5, size=20000)
cases["bin_masses N=20000 B=100"] = lambda: kernels.bin_masses(mu, sd, -4, 4, 100)

means = rng.normal(size=(2000, 3))
stds = rng.uniform(0.1, 1.0, size=(2000, 3))
z = rng.normal(size=(10000, 3))
cases["mixture_logpdf M=10000 N=2000 d=3"] = lambda: kernels.mixture_logpdf(z, means, stds)

out = {"backend": _accel.backend()}
for name, fn in cases.items():
    fn()
    out[name] = min(timeit.repeat(fn, number=1, repeat=repeat))
print(json.dumps(out))
"""


def run(disable, repeat):
    env = dict(os.environ)
    if disable:
        env["DISMETRICS_DISABLE_NUMBA"] = "1"
    else:
        env.pop("DISMETRICS_DISABLE_NUMBA", None)
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast, slow = run(False, args.repeat), run(True, args.repeat)
    print(f"{'kernel':36s} {fast['backend']:>10s} {slow['backend']:>10s} {'speedup':>8s}")
    for name in fast:
        if name == "backend":
            continue
        print(f"{name:36s} {fast[name]:9.4f}s {slow[name]:9.4f}s {slow[name] / fast[name]:7.1f}x")


if __name__ == "__main__":
    main()
