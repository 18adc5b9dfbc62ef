"""Grid refinement study for the periodic biharmonic solver.

Solves lap^2 u = f against a two-mode manufactured solution and prints the
relative L2 error, observed order, and wall time per grid.
"""

import argparse
import time

import numpy as np

from vkplate.airy import biharmonic_solve
from vkplate.grids import Grid, field_l2


def manufactured(grid):
    xg, yg = grid.meshgrid()
    u = np.sin(2 * np.pi * xg) * np.cos(4 * np.pi * yg)
    u += 0.3 * np.cos(6 * np.pi * xg) * np.sin(2 * np.pi * yg)
    rhs = ((2 * np.pi) ** 2 + (4 * np.pi) ** 2) ** 2 * np.sin(2 * np.pi * xg) * np.cos(
        4 * np.pi * yg
    )
    rhs += (
        0.3
        * ((6 * np.pi) ** 2 + (2 * np.pi) ** 2) ** 2
        * np.cos(6 * np.pi * xg)
        * np.sin(2 * np.pi * yg)
    )
    return u, rhs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128, 256, 512])
    args = ap.parse_args()

    prev = None
    print(f"{'n':>5}  {'rel L2 error':>13}  {'order':>6}  {'time':>7}")
    for n in args.sizes:
        grid = Grid(1.0, 1.0, n, n, periodic=True)
        u, rhs = manufactured(grid)
        start = time.time()
        sol = biharmonic_solve(rhs, grid, bc="periodic")
        dt = time.time() - start
        err = field_l2(grid, sol - u) / field_l2(grid, u)
        order = f"{np.log2(prev / err):6.3f}" if prev is not None else "     -"
        print(f"{n:>5}  {err:13.4e}  {order}  {dt:6.2f}s")
        prev = err


if __name__ == "__main__":
    main()
