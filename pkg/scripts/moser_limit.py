#!/usr/bin/env python3
"""Orlicz and L2 norms of the Moser family and its translated profiles as alpha grows."""

import argparse
import math

from ccx.bubbles import concentration, gen_moser, moser_profile, translate_profile
from ccx.orlicz import l2_norm, orlicz_norm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", default="5,10,20,40,80,160")
    ap.add_argument("--shifts", default="0,1,3", help="profile translations a")
    args = ap.parse_args()
    alphas = [float(x) for x in args.alphas.split(",")]
    shifts = [float(x) for x in args.shifts.split(",")]
    print(f"{'alpha':>8} {'a':>4} {'orlicz':>10} {'limit':>10} {'l2':>10}")
    for a in shifts:
        limit = 1 / math.sqrt(4 * math.pi * (a + 1))
        for alpha in alphas:
            f = gen_moser(alpha) if a == 0 else concentration(alpha, (0, 0), translate_profile(moser_profile(), a))
            print(f"{alpha:8g} {a:4g} {orlicz_norm(f):10.6f} {limit:10.6f} {l2_norm(f):10.3e}")


if __name__ == "__main__":
    main()
