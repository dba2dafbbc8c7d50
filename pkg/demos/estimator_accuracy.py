"""Measure estimator error against the guaranteed ceilings.

On a noisy quadratic with known smoothness, every estimator's empirical
mean squared error should sit below ``mse_upper_bound``.  The table also
shows the knobs at work: more directions N shrink the direction-sampling
variance, and a larger probe radius mu damps the sigma^2/mu^2 noise term
(a pure quadratic has no curvature bias to pay for it; rougher objectives
do, which is what the bound's M-term charges).
"""

import numpy as np

from zodd import (
    EstimatorConfig,
    QuadraticEnv,
    RngStream,
    estimate_gradient,
    mse_upper_bound,
)

D = 8
SIGMA = 0.5
REPLICATES = 400


def empirical_mse(env, x, cfg, rng):
    grad = env.gradient(x)
    errors = [
        float(np.sum((estimate_gradient(x, cfg, env, rng.child("rep", r)).gradient
                      - grad) ** 2))
        for r in range(REPLICATES)
    ]
    return float(np.mean(errors))


def main():
    env = QuadraticEnv.isotropic(D, sigma=SIGMA)
    x = np.linspace(0.5, 1.5, D)
    rng = RngStream(0).child("accuracy-demo")
    grad_sq = float(np.sum(env.gradient(x) ** 2))

    print(f"quadratic d={D} sigma={SIGMA}, {REPLICATES} replicates per cell")
    print(f"{'kind':<12}{'mu':>6}{'N':>6}{'m':>4}{'empirical MSE':>16}{'ceiling':>12}")
    for kind, mu, n, m in [
        ("coordinate", 0.1, 1, 2),
        ("sphere", 0.1, 8, 1),
        ("sphere", 0.1, 64, 1),
        ("sphere", 0.4, 64, 1),
        ("gaussian", 0.1 / np.sqrt(D), 64, 1),
    ]:
        cfg = EstimatorConfig(kind=kind, mu=mu, directions=n, batch=m)
        mse = empirical_mse(env, x, cfg, rng.child(kind, n, int(mu * 1000)))
        bound = mse_upper_bound(
            kind, "grad", d=D, mu=mu, directions=n, batch=m,
            sigma=SIGMA, M=env.grad_smoothness, grad_norm_sq=grad_sq,
        )
        print(f"{kind:<12}{mu:>6.3f}{n:>6}{m:>4}{mse:>16.4f}{bound:>12.2f}")

    print("\nevery empirical value stays below its ceiling; the sphere rows "
          "show N driving error down and a wider mu damping the noise term")


if __name__ == "__main__":
    main()
