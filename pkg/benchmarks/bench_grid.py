"""Compare the compiled grid kernel with the numpy fallback.

    python benchmarks/bench_grid.py [--radius 60] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from presdec import grid
from presdec.formula import CongBin, CongUn, V, mk_and, mk_or


def workload():
    x, y, z = V("x"), V("y"), V("z")
    small = mk_or(mk_and(x + y * 2 <= 70, CongBin(3, "x", 4, 1, "y")), CongUn("z", 3, 1), (x - z).eq(2))
    deep = mk_and(*(mk_or((x + y * k) <= 40 * k, CongUn("z", k + 1, k % (k + 1)), (z - y) >= k) for k in range(1, 13)))
    return {"small (6 atoms)": small, "deep (36 atoms)": deep}


def timed(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--radius", type=int, default=60)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    vs = ["x", "y", "z"]
    pts = grid.box_points([args.radius] * 3)
    print(f"kernel available: {grid.KERNEL}; {len(pts)} points")
    print(f"{'formula':<18}{'cython s':>10}{'numpy s':>10}{'ratio':>8}")
    for name, phi in workload().items():
        prog = grid.compile_formula(phi, vs)
        t_np = timed(lambda: grid.evaluate_points(prog, pts, "python"), args.repeat)
        if grid.KERNEL == "cython":
            t_cy = timed(lambda: grid.evaluate_points(prog, pts, "cython"), args.repeat)
            same = np.array_equal(grid.evaluate_points(prog, pts, "cython"), grid.evaluate_points(prog, pts, "python"))
            assert same, "kernels disagree"
            print(f"{name:<18}{t_cy:>10.3f}{t_np:>10.3f}{t_np / t_cy:>8.2f}")
        else:
            print(f"{name:<18}{'n/a':>10}{t_np:>10.3f}{'':>8}")


if __name__ == "__main__":
    main()
