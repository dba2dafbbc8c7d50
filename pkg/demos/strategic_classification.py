"""Train a linear classifier against a population that games it.

Individuals see the deployed weights and move their features (at quadratic
cost, when acceptance is worth it) before being scored, so the training
distribution depends on the classifier itself.  Gradient-free descent still
makes progress: it only ever asks for samples at probe points.
"""

import numpy as np

from zodd import EstimatorConfig, RngStream, StrategicEnv, estimate_gradient
from zodd.environments import best_response

STEPS = 400


def main():
    env = StrategicEnv.synthetic(seed=0, count=400, separation=2.0)
    d = env.dimension
    x = np.zeros(d)
    print(f"population of {env.population_size}, {d - 1} features + intercept")
    print(f"log-loss of the zero classifier: {env.exact_objective(x):.4f} "
          f"(= log 2)\n")

    cfg = EstimatorConfig(kind="sphere", mu=0.3, directions=40, batch=1)
    rng = RngStream(0).child("strategic-demo")
    for t in range(STEPS):
        estimate = estimate_gradient(x, cfg, env, rng.child("step", t))
        x = x - 0.05 * estimate.gradient

    final = env.exact_objective(x)
    print(f"log-loss after {STEPS} zeroth-order steps: {final:.4f}")

    # how much of the population is now gaming the deployed classifier
    features = env.features
    moved = sum(
        not np.array_equal(best_response(x, row), row) for row in features
    )
    print(f"individuals moving their features in response: "
          f"{moved}/{env.population_size}")


if __name__ == "__main__":
    main()
