"""Order-two contact of the D1 branch at (-r, 0).

Prints Z/X^2 along the branch for beta = 0 and beta = 0.5 next to the two
candidate coefficients -2/(r alpha)^2 and -8/(r alpha)^2.
"""

import argparse

import numpy as np

from srlab.asymptotics import branch_law, fit_contact
from srlab.models import ModelSpec
from srlab.sphere import d1_branch


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radius", type=float, default=0.5)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--lam-min", type=float, default=1e3)
    ap.add_argument("--lam-max", type=float, default=1e5)
    ap.add_argument("--n", type=int, default=7)
    args = ap.parse_args()
    r, a = args.radius, args.alpha
    lams = np.geomspace(args.lam_min, args.lam_max, args.n)
    print(f"laws: beta != 0 {branch_law('D1', r, a).coeffs[2]:.4g}, beta = 0 {branch_law('D1_integrable', r, a).coeffs[2]:.4g}")
    for beta in (0.0, 0.5):
        curve = d1_branch(ModelSpec.martinet_graded0(a, beta, 0.0), r, lams)
        print(f"beta = {beta}")
        print("  lambda          X               Z/X^2")
        for p in curve.points:
            print(f"  {p.lam:<14.6g}  {p.X:<14.6g}  {p.Z / p.X ** 2:.6g}")
        if len(curve.points) >= 5:
            fit = fit_contact(curve.points, 2)
            print(f"  fitted coefficient {fit.coefficient:.6g} (residual {fit.residual:.3g})")
        for lam, why in curve.skipped:
            print(f"  skipped lambda={lam:g}: {why}")


if __name__ == "__main__":
    main()
