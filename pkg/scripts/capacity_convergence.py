#!/usr/bin/env python3
"""Grid convergence of the planar obstacle solver against the annulus capacity formula."""

import argparse

from ccx.capacity import BallSet, ObstacleSpec, capacity_annulus, solve_obstacle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--inner", type=float, default=0.25)
    ap.add_argument("--outer", type=float, default=0.5)
    ap.add_argument("--grids", default="64,128,256,512")
    args = ap.parse_args()
    exact = capacity_annulus(args.inner, args.outer)
    print(f"exact 2 pi / log(b/a) = {exact:.6f}")
    print(f"{'grid':>6} {'energy':>10} {'rel dev':>9} {'sweeps':>7}")
    for n in (int(x) for x in args.grids.split(",")):
        sol = solve_obstacle(ObstacleSpec(BallSet(args.inner), ("ball", args.outer), grid_resolution=n))
        print(f"{n:6d} {sol.energy:10.6f} {abs(sol.energy - exact) / exact:9.2%} {sol.sweeps:7d}")


if __name__ == "__main__":
    main()
