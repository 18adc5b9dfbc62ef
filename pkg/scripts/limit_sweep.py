"""Poisson ratio sweep toward the incompressible plate limit.

Runs the compressible fixed point for each nu and reports the distance of
the deflection and stress potential from the nu = 1/2 solution, with the
effective bending and membrane coefficients.
"""

import argparse

from vkplate.airy import FixedPointConfig, limit_study
from vkplate.config import preset_force
from vkplate.grids import Grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=48)
    ap.add_argument("--amplitude", type=float, default=50.0)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--nu", type=float, nargs="+",
                    default=[0.3, 0.4, 0.45, 0.49, 0.499])
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args()

    grid = Grid(1.0, 1.0, args.n, args.n, periodic=True)
    f = preset_force("sincos", grid, args.amplitude)
    rows = limit_study(args.mu, f, 1.0, grid, args.nu,
                       FixedPointConfig(tol=args.tol))
    print(f"{'nu':>7}  {'bending':>9}  {'membrane/2':>10}  "
          f"{'|v - v_inc|':>12}  {'|phi - phi_inc|':>15}  conv")
    for r in rows:
        print(f"{r.nu:7.3f}  {r.bending:9.6f}  {r.membrane_half:10.6f}  "
              f"{r.v_err:12.4e}  {r.phi_err:15.4e}  {r.converged}")


if __name__ == "__main__":
    main()
