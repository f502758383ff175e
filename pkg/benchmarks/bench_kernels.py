"""Compare the numba and numpy implementations of the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints the median wall time of each backend and the speedup.  The numba
functions are called once before timing so compilation is excluded.
"""

import argparse
import time

import numpy as np

from chromofluid import kernels
from chromofluid.lie import make_algebra


def sparse_constants(alg):
    a, b, c = np.nonzero(alg.structure_constants)
    return a, b, c, alg.structure_constants[a, b, c]


def median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def bench(name, numpy_fn, numba_fn, repeat):
    ref, got = numpy_fn(), numba_fn()
    err = float(np.max(np.abs(ref - got)))
    t_np = median_time(numpy_fn, repeat)
    t_nb = median_time(numba_fn, repeat)
    print(f"{name:<28} numpy {t_np * 1e3:9.3f} ms   numba {t_nb * 1e3:9.3f} ms   "
          f"speedup {t_np / t_nb:6.2f}x   max diff {err:.1e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    rng = np.random.default_rng(0)

    for alg_name, npts in (("su2", 128 * 128), ("su3", 128 * 128)):
        alg = make_algebra(alg_name)
        ia, ib, ic, val = sparse_constants(alg)
        x = rng.standard_normal((alg.dim, npts))
        y = rng.standard_normal((alg.dim, npts))
        bench(
            f"bracket {alg_name} {npts} pts",
            lambda: kernels.numpy_bracket_points(ia, ib, ic, val, x, y),
            lambda: kernels.numba_bracket_points(ia, ib, ic, val, x, y),
            args.repeat,
        )

    for nmodes, npts in ((21 * 21, 256), (21 * 21, 1024)):
        side = int(round(np.sqrt(nmodes)))
        m1 = np.arange(side) - side // 2
        modes = np.stack([a.ravel() for a in np.meshgrid(m1, m1, indexing="ij")], axis=1)
        base = np.ones(2)
        cre = rng.standard_normal((12, nmodes))
        cim = rng.standard_normal((12, nmodes))
        pts = rng.uniform(0, 2 * np.pi, size=(npts, 2))
        bench(
            f"fourier_eval {nmodes} modes {npts} pts",
            lambda: kernels.numpy_fourier_eval(cre, cim, modes, base, pts),
            lambda: kernels.numba_fourier_eval(cre, cim, modes, base, pts),
            args.repeat,
        )


if __name__ == "__main__":
    main()
