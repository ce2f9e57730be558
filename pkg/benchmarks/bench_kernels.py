"""Compare the compiled transition kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 20]

Times the two RK4 sweeps directly on random Jacobians, then a full
brachistochrone solve with each backend (the solve runs in a subprocess so
the ``VAREVO_PURE_PYTHON`` switch takes effect at import).
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from varevo import _kernels_py

try:
    from varevo import _kernels
except ImportError:
    _kernels = None

SOLVE = """
import json, time
from varevo import EvolutionConfig, GainConfig, brachistochrone, evolve, init_straightline_brachistochrone
from varevo import kernels
rep = evolve(brachistochrone(), init_straightline_brachistochrone({N}), GainConfig.scalar(1), EvolutionConfig())
print(json.dumps(dict(backend=kernels.BACKEND, wall=rep.wall_time, nfev=rep.nfev, tf=rep.final_record.tf)))
"""


def time_kernel(fn, *args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def bench_sweeps(repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'N':>6}{'n':>4}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for N, n in [(41, 2), (101, 3), (1001, 3), (1001, 8)]:
        A = 0.3 * rng.normal(size=(N, n, n))
        b = rng.normal(size=(N, n))
        h = 1.0 / (N - 1)
        for name, args in [("fundamental_rk4", (A, h)), ("forced_rk4", (A, b, h))]:
            t_py = time_kernel(getattr(_kernels_py, name), *args, repeat=repeat)
            if _kernels is None:
                print(f"{name:<16}{N:>6}{n:>4}{t_py * 1e3:>14.3f}{'n/a':>14}{'':>10}")
                continue
            t_cy = time_kernel(getattr(_kernels, name), *args, repeat=repeat)
            print(f"{name:<16}{N:>6}{n:>4}{t_py * 1e3:>14.3f}{t_cy * 1e3:>14.3f}{t_py / t_cy:>9.1f}x")


def bench_solve(N):
    print(f"\nbrachistochrone solve, N={N}")
    for pure in ("1", "0"):
        env = dict(os.environ, VAREVO_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", SOLVE.format(N=N)], env=env, capture_output=True, text=True,
                             check=True)
        r = json.loads(out.stdout)
        print(f"  {r['backend']:<7} wall {r['wall']:.3f}s  rhs evals {r['nfev']}  tf {r['tf']:.6f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--nodes", type=int, default=101)
    args = ap.parse_args()
    bench_sweeps(args.repeat)
    bench_solve(args.nodes)


if __name__ == "__main__":
    main()
