"""Compare the compiled kernels with the numpy fallback, plus one end-to-end solve.

    python benchmarks/bench_kernels.py [--repeat 200] [--sizes 30 100 300]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lge import _kernels_py

try:
    from lge import _ckernels
except ImportError:
    _ckernels = None


def kernel_cases(p, rng):
    X, L, z1, M = (rng.normal(size=(p, p)) for _ in range(4))
    return {
        "soft_threshold_matrix": lambda impl: impl.soft_threshold_matrix(M, 0.3),
        "sparse_and_dual_update": lambda impl: impl.sparse_and_dual_update(X, L, z1, 2.0, 0.25),
        "project_laplacian": lambda impl: impl.project_laplacian(M),
    }


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def end_to_end(pure):
    code = ("import time; from lge import SolverConfig, lge, make_dataset; ds = make_dataset(d=0.3, seed=0); "
            "t = time.perf_counter(); lge(ds.X, ds.laplacian0, SolverConfig()); print(time.perf_counter() - t)")
    env = dict(os.environ, LGE_PURE_PYTHON="1" if pure else "")
    if not pure:
        env.pop("LGE_PURE_PYTHON")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--sizes", type=int, nargs="+", default=[30, 100, 300])
    ap.add_argument("--skip-solve", action="store_true")
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; nothing to compare", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}{'p':>6}{'numpy_us':>12}{'cython_us':>12}{'speedup':>10}")
    for p in args.sizes:
        for name, call in kernel_cases(p, rng).items():
            a, b = call(_kernels_py), call(_ckernels)
            for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
                assert np.allclose(x, y, atol=1e-12), name
            t_py = best_of(lambda: call(_kernels_py), args.repeat)
            t_c = best_of(lambda: call(_ckernels), args.repeat)
            print(f"{name:<24}{p:>6}{t_py * 1e6:>12.1f}{t_c * 1e6:>12.1f}{t_py / t_c:>10.2f}")
    if not args.skip_solve:
        t_py, t_c = end_to_end(True), end_to_end(False)
        print(f"\nlge solve p=30 n=50 d=0.3: numpy {t_py:.2f}s, cython {t_c:.2f}s, speedup {t_py / t_c:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
