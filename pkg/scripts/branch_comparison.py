"""Position of the numeric C1 branch relative to the D2 law.

For each gamma the normalized gap (Z - D2 law)/X^4 is printed together with
the prediction pi r (alpha + gamma)/16 for the C1 - D2 difference.
"""

import argparse
import math

from srlab.asymptotics import branch_selector, normalized_gap
from srlab.models import ModelSpec
from srlab.sphere import saddle_branch


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radius", type=float, default=0.5)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--gammas", type=float, nargs="+", default=[0.0, -0.5, -1.5, -2.0])
    ap.add_argument("--lams", type=float, nargs="+", default=[300.0, 1000.0, 3000.0])
    args = ap.parse_args()
    r, a = args.radius, args.alpha
    for g in args.gammas:
        curve = saddle_branch(ModelSpec.martinet_graded0(a, 0.0, g), r, "C1", args.lams, side=-1)
        gaps = normalized_gap(curve.points, "D2", r, a, g)
        pred = math.pi * r * (a + g) / 16.0
        print(f"gamma={g:+.2f} selector={branch_selector(a, g):>4}  predicted {pred:+.4f}  gaps " + " ".join(f"{v:+.4f}" for v in gaps))


if __name__ == "__main__":
    main()
