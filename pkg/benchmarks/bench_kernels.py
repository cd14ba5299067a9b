"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 200] [--flow]

Per-kernel timings are measured in one process (both variants are always
importable).  With ``--flow`` the standard perturbed run is also timed end to
end in two subprocesses, one per value of CEAFLOW_BACKEND.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ceaflow import _kernels, diffops
from ceaflow.curve import CurveSpec, make_fourier

FLOW_SNIPPET = """
import time
from ceaflow import curve, flow, _kernels
c = curve.make_fourier(curve.CurveSpec(kind="fourier", cos_coeffs=(0.1,)), 256)
flow.run(c, flow.FlowParams(t_end=0.01), monitor_every=10**9)  # warm up / compile
t0 = time.perf_counter()
tr = flow.run(c, flow.FlowParams(), monitor_every=50)
print(_kernels.BACKEND, time.perf_counter() - t0, tr.steps_accepted)
"""


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=max(3, repeat // 50), number=number)) / number


def kernel_table(repeat):
    rows = []
    rng = np.random.default_rng(0)
    for n in (256, 512, 2048):
        curve = make_fourier(CurveSpec(kind="fourier", cos_coeffs=(0.1, 0.02)), n)
        H = diffops.fine_derivatives(curve.h, (0, 1, 2, 3, 4), 2 * n)
        for name in ("expanded_rhs", "jacobian_coeffs"):
            f_np = getattr(_kernels, name + "_numpy")
            f_nb = getattr(_kernels, name + "_numba")
            f_nb(*H)  # compile
            rows.append((name, 2 * n, best_of(lambda: f_np(*H), repeat), best_of(lambda: f_nb(*H), repeat)))
        coef = np.fft.rfft(curve.h) / n
        angles = rng.uniform(0, 2 * np.pi, n)
        _kernels.trig_eval_numba(coef, n, angles)
        rows.append(
            (
                "trig_eval",
                n,
                best_of(lambda: _kernels.trig_eval_numpy(coef, n, angles), repeat),
                best_of(lambda: _kernels.trig_eval_numba(coef, n, angles), repeat),
            )
        )
    return rows


def flow_table():
    out = []
    for backend in ("numpy", "numba"):
        env = dict(os.environ, CEAFLOW_BACKEND=backend)
        res = subprocess.run([sys.executable, "-c", FLOW_SNIPPET], env=env, capture_output=True, text=True, check=True)
        name, secs, steps = res.stdout.split()
        out.append((name, float(secs), int(steps)))
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--repeat", type=int, default=200)
    p.add_argument("--flow", action="store_true", help="also time a full standard run per backend")
    args = p.parse_args(argv)

    print(f"{'kernel':<16}{'points':>8}{'numpy [us]':>14}{'numba [us]':>14}{'speedup':>10}")
    for name, pts, t_np, t_nb in kernel_table(args.repeat):
        print(f"{name:<16}{pts:>8}{t_np * 1e6:>14.2f}{t_nb * 1e6:>14.2f}{t_np / t_nb:>10.2f}")
    if args.flow:
        print()
        print(f"{'backend':<10}{'run [s]':>10}{'steps':>8}")
        for name, secs, steps in flow_table():
            print(f"{name:<10}{secs:>10.3f}{steps:>8}")


if __name__ == "__main__":
    main()
