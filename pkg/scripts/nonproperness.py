"""Preimages of a small ball around (-r, 0) under the first return map (flat case)."""

import numpy as np

from srlab.sphere import abnormal_branches_probe, nonproperness_probe


def main():
    res = nonproperness_probe(1.0, lams=np.geomspace(1e2, 1e4, 5))
    print("lambda      k'            x_1            z_1          in ball  flow deviation")
    for lam, kp, p, inside, dev in zip(res.lams, res.kprimes, res.points, res.inside, res.flow_deviation):
        print(f"{lam:<10.4g}  {kp:<12.4e}  {p.x:<13.9f}  {p.z:<11.3e}  {str(bool(inside)):<7}  {dev:.2e}")
    print(f"ln k' = {res.intercept:.4f} + {res.slope:.6f} sqrt(lambda), R^2 = {res.r_squared:.12f}")
    print("length-r geodesics with n hits ending near (-r, 0):")
    for s in abnormal_branches_probe(1.0):
        print(f"  n={s.n}  lambda={s.lam:.4g}  x={s.x:.6f}  distance={s.distance:.4f}  inside={s.inside}")


if __name__ == "__main__":
    main()
