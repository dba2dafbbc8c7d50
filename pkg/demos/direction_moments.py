"""Sanity-check the direction moments the estimator analysis leans on.

Draws unit-sphere and standard-normal directions and compares empirical
second and weighted fourth moments against the closed forms in
``zodd.smoothing``.  Everything should agree to Monte-Carlo accuracy.
"""

import numpy as np

from zodd import RngStream, analytic_moment
from zodd.core import gaussian_matrix, sphere_matrix

D = 6
DRAWS = 200_000


def max_gap(empirical, analytic):
    # relative to the largest analytic entry so every line reads on one scale
    denom = max(1.0, float(np.max(np.abs(analytic))))
    return float(np.max(np.abs(empirical - analytic))) / denom


def main():
    rng = RngStream(0).child("moment-demo")
    a = rng.child("weights").generator().normal(size=D)

    print(f"d = {D}, {DRAWS} draws, random weight vector a\n")
    for kind, draw in (("sphere", sphere_matrix), ("gaussian", gaussian_matrix)):
        dirs = draw(rng.child(kind).generator(), D, DRAWS)

        second = dirs.T @ dirs / DRAWS
        identity_scale = np.eye(D) / D if kind == "sphere" else np.eye(D)
        print(f"{kind}: E[s s^T]            max rel gap "
              f"{max_gap(second, identity_scale):.2e}")

        w = (dirs @ a) ** 2
        projected = (w[:, None] * dirs).T @ dirs / DRAWS
        analytic = analytic_moment(f"{kind}_projected_outer", D, a=a)
        print(f"{kind}: E[(a^T s)^2 s s^T]  max rel gap "
              f"{max_gap(projected, analytic):.2e}")

        for k in (2, 4):
            w = np.sum(dirs**2, axis=1) ** (k // 2)
            weighted = (w[:, None] * dirs).T @ dirs / DRAWS
            analytic = analytic_moment(f"{kind}_weighted_outer", D, k=k)
            print(f"{kind}: E[|s|^{k} s s^T]      max rel gap "
                  f"{max_gap(weighted, analytic):.2e}")
        print()


if __name__ == "__main__":
    main()
