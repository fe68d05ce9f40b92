"""Zeros of v(., 0) - v* for exp at N = 3 and their successive ratios."""
import math

import numpy as np

from supercrit.intersect import FunctionProfile, count_intersections
from supercrit.nonlinearity import make_builtin
from supercrit.radial_ode import shoot_limit
from supercrit.singular import exact_singular_limit


def main(S=1e5):
    f = make_builtin("exp")
    v0 = shoot_limit(f, 3, 1.0, 0.0, s_max=S)
    vs = FunctionProfile(lambda s: exact_singular_limit(f, 3, 1.0, s), singular=True)
    rep = count_intersections(v0, vs, (0, S), s_max=S)
    z = np.array(rep.zeros)
    print(f"target ratio exp(2 pi / sqrt 7) = {math.exp(2 * math.pi / math.sqrt(7)):.6f}")
    for j, zj in enumerate(z):
        ratio = f"{zj / z[j - 1]:.6f}" if j else ""
        print(f"{j + 1:2d}  {zj:14.6f}  {ratio}")


if __name__ == "__main__":
    main()
