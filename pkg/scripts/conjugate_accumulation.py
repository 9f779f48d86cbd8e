"""First conjugate times of flat geodesics as the initial direction approaches the abnormal one.

Both the Jacobi-field determinant and the finite-difference exponential map
are used for each sample.
"""

import math

from srlab.models import ModelSpec
from srlab.variational import conjugate_times, fd_conjugate_times


def main():
    flat = ModelSpec.martinet_flat()
    theta0 = math.pi - 0.05
    print("lambda   t_c (Jacobi)    t_c (finite differences)")
    for lam in (25.0, 100.0, 400.0, 1600.0):
        jac = conjugate_times(flat, theta0, lam, 4.0).times
        fd = fd_conjugate_times(flat, theta0, lam, 4.0, grid=800)
        print(f"{lam:<7g}  {jac[0] if jac else math.nan:<14.8f}  {fd[0] if fd else math.nan:.8f}")


if __name__ == "__main__":
    main()
