"""Flat-case compensation term Z - X^3/6 near X = 0.

Tabulates the ratio delta / (X^3 exp(-d/X)) for d = 1 and d = 2 together
with the asymptote -k'^2/(4K^3) of delta.
"""

import numpy as np

from srlab.asymptotics import flat_term_ratio
from srlab.elliptic import complete_near_unit


def main():
    kps = np.geomspace(1e-9, 1e-3, 13)
    one = flat_term_ratio(1.0, kps, decay=1.0)
    two = flat_term_ratio(1.0, kps, decay=2.0)
    print("k'          X          delta         -k'^2/(4K^3)   ratio(d=1)    ratio(d=2)")
    for kp, p, q in zip(kps, one, two):
        K = complete_near_unit(kp).K
        print(f"{kp:<10.3g}  {p.X:<9.5f}  {p.delta:<12.5g}  {-kp * kp / (4 * K ** 3):<13.5g}  {p.ratio:<12.5g}  {q.ratio:.5g}")


if __name__ == "__main__":
    main()
