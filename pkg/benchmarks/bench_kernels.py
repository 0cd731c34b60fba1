"""Time the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--dim 2] [--repeat 2000]

Also times one end-to-end symplectic integration of the double pendulum with
each backend, since small-matrix kernels are dominated by call overhead.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from riemctrl import _pykernels


def make_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    m = a @ a.T + n * np.eye(n)
    minv = np.linalg.inv(m)
    dm = rng.normal(size=(n, n, n))
    dm = np.ascontiguousarray(0.5 * (dm + dm.transpose(0, 2, 1)))
    d2m = rng.normal(size=(n, n, n, n))
    d2m = 0.5 * (d2m + d2m.transpose(1, 0, 2, 3))
    d2m = np.ascontiguousarray(0.5 * (d2m + d2m.transpose(0, 1, 3, 2)))
    d2v = rng.normal(size=(n, n))
    vec = lambda: rng.normal(size=n)
    return dict(m=m, minv=minv, dm=dm, d2m=d2m, d2v=d2v + d2v.T, dv=vec(), v=vec(), u=vec(), p=vec(), xi=vec())


def calls(mod, a):
    g = mod.christoffel(a["minv"], a["dm"])
    dg = mod.christoffel_grad(a["minv"], a["dm"], g, a["d2m"])
    dminv = mod.inverse_metric_grad(a["minv"], a["dm"])
    r = mod.riemann(g, dg)
    h = mod.second_gradient(a["d2v"], g, a["dv"])
    return {
        "christoffel": lambda: mod.christoffel(a["minv"], a["dm"]),
        "christoffel_grad": lambda: mod.christoffel_grad(a["minv"], a["dm"], g, a["d2m"]),
        "inverse_metric_grad": lambda: mod.inverse_metric_grad(a["minv"], a["dm"]),
        "riemann": lambda: mod.riemann(g, dg),
        "second_gradient": lambda: mod.second_gradient(a["d2v"], g, a["dv"]),
        "geodesic_accel": lambda: mod.geodesic_accel(g, a["minv"], a["dv"], a["v"], a["u"]),
        "symplectic_rhs": lambda: mod.symplectic_rhs(a["v"], a["p"], a["xi"], g, dg, a["minv"], dminv, a["dv"], a["d2v"]),
        "covariant_rhs": lambda: mod.covariant_rhs(a["v"], a["xi"], a["p"], g, r, a["minv"], a["dv"], h),
        "spd_inverse": lambda: mod.spd_inverse(a["m"], 1e-12),
    }


def per_call_us(fn, repeat):
    return min(timeit.repeat(fn, number=repeat, repeat=3)) / repeat * 1e6


_END_TO_END = (
    "import time\n"
    "from riemctrl import BACKEND\n"
    "from riemctrl.dynamics import State\n"
    "from riemctrl.models import builtin_model\n"
    "from riemctrl.pontryagin import Costate, integrate_symplectic\n"
    "m = builtin_model('double_pendulum')\n"
    "t0 = time.perf_counter()\n"
    "integrate_symplectic(m, State([0.4, 0.9], [0.5, -0.3]), Costate([0.3, -0.2], [0.6, 0.4]), 1.0, 2000)\n"
    "print(BACKEND, time.perf_counter() - t0)\n"
)


def end_to_end(pure):
    env = dict(os.environ, RIEMCTRL_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", _END_TO_END], env=env, capture_output=True, text=True, check=True)
    backend, seconds = out.stdout.split()
    return backend, float(seconds)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args(argv)
    try:
        from riemctrl import _ckernels
    except ImportError:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1

    a = make_inputs(args.dim)
    py, cy = calls(_pykernels, a), calls(_ckernels, a)
    print(f"kernel timings, dim={args.dim}, microseconds per call")
    print(f"{'kernel':<22}{'python':>10}{'cython':>10}{'speedup':>9}")
    for name in py:
        tp, tc = per_call_us(py[name], args.repeat), per_call_us(cy[name], args.repeat)
        print(f"{name:<22}{tp:>10.2f}{tc:>10.2f}{tp / tc:>8.1f}x")

    print("\nsymplectic integration, double pendulum, 2000 RK4 steps")
    times = {}
    for pure in (True, False):
        backend, sec = end_to_end(pure)
        times[backend] = sec
        print(f"{backend:<8}{sec:8.3f} s")
    if {"python", "cython"} <= set(times):
        print(f"speedup {times['python'] / times['cython']:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
