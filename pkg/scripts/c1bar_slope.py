"""Slope of the flat trace C1 at the endpoint (r, 0).

Least-squares slope of z against x - r for samples with k in [k_min, 5e-2],
compared with -r^2/pi^2 (limit of the closed form) and -2r^2/(3 pi^2).
"""

import math

import numpy as np

from srlab.asymptotics import linear_slope
from srlab.sphere import sphere_trace_flat


def main():
    r = 1.0
    print(f"-r^2/pi^2 = {-r * r / math.pi ** 2:.6f}   -2r^2/(3pi^2) = {-2 * r * r / (3 * math.pi ** 2):.6f}")
    for k_min, k_max in [(1e-3, 5e-2), (1e-4, 1e-2), (1e-6, 1e-4)]:
        curve = sphere_trace_flat(r, 1, np.geomspace(k_min, k_max, 40))
        print(f"k in [{k_min:g}, {k_max:g}]: slope {linear_slope(curve.points, r):.6f}")


if __name__ == "__main__":
    main()
