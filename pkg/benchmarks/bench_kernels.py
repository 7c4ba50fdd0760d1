"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--level 2] [--repeat 3]

Times the far-field kernel blocks, the near-field pair kernels and the full
far-field core assembly on an octahedral sphere, and reports the maximum
relative difference between the two paths.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from loophodge import shapes
from loophodge.bie import kernels
from loophodge.bie.operators import Assembler
from loophodge.bie.space import CurrentSpace
from loophodge.subdivision import LimitSurface


def best_of(fn, repeat):
    fn()  # warm-up (JIT compilation, caches)
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def rel_diff(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.abs(a - b).max() / max(np.abs(a).max(), 1e-300))


def report(name, t_np, t_nb, diff):
    print(f"{name:<22} numpy {t_np:9.4f} s   numba {t_nb:9.4f} s   speed-up {t_np / t_nb:6.1f}x   "
          f"max rel diff {diff:.1e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--level", type=int, default=2, help="octahedral sphere subdivision level")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--points", type=int, default=2000, help="points per side for the kernel blocks")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    k1, k2 = np.pi, np.pi - 0.4j

    n = args.points
    x, y = rng.standard_normal((n, 3)), rng.standard_normal((n, 3))
    px, py = rng.integers(0, 50, n), rng.integers(0, 50, n)
    near = rng.random((50, 50)) < 0.1
    t_np, a = best_of(lambda: kernels.far_kernels_numpy(x, px, y, py, near, k1, k2), args.repeat)
    t_nb, b = best_of(lambda: kernels.far_kernels_numba(x, px, y, py, near, k1, k2), args.repeat)
    report("far kernels", t_np, t_nb, max(rel_diff(u, v) for u, v in zip(a, b)))

    xo, yi = rng.standard_normal((4, n // 40, 3)), rng.standard_normal((4, n // 40, 200, 3))
    t_np, a = best_of(lambda: kernels.pair_kernels_numpy(xo, yi, k1, k2), args.repeat)
    t_nb, b = best_of(lambda: kernels.pair_kernels_numba(xo, yi, k1, k2), args.repeat)
    report("pair kernels", t_np, t_nb, max(rel_diff(u, v) for u, v in zip(a, b)))

    surf = LimitSurface(shapes.sphere(1.0, args.level))
    space = CurrentSpace(surf)
    asm = Assembler(space)
    N = space.size
    want = ("E1", "E2", "M")
    far = asm.far
    print(f"sphere level {args.level}: {N} unknowns, {far.n_points} far-rule points")

    def numpy_path():
        out = {k: np.zeros((N, N), complex) for k in want}
        asm._far_numpy(k1, k2, want, out)
        return out

    def numba_path():
        out = {k: np.zeros((N, N), complex) for k in want}
        kernels.far_assemble_blocks(far.points, far.patch, asm.near, far.local_index, far.local_count,
                                    far.packed(asm.origin), k1, k2, want, out["E1"], out["E2"], out["M"])
        return out

    reps = max(1, args.repeat // 2)
    t_np, a = best_of(numpy_path, reps)
    t_nb, b = best_of(numba_path, reps)
    report("far core assembly", t_np, t_nb, max(rel_diff(a[k], b[k]) for k in want))


if __name__ == "__main__":
    main()
