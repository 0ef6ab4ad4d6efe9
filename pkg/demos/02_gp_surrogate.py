"""Fit a GP surrogate to a handful of robustness scores and inspect the
posterior mean, variance, and leave-one-out errors."""

import numpy as np

from stlsurrogate import gp

rng = np.random.default_rng(0)

# Pretend these came from an expensive simulator: a smooth 1-D robustness
# landscape sampled at 12 points.
X = np.sort(rng.uniform(0, 1, size=12)).reshape(-1, 1)
y = 0.6 * np.sin(5.5 * X[:, 0]) * np.exp(-X[:, 0])

surrogate = gp.fit(
    gp.TrainingSet(X, y),
    bounds=(np.zeros(1), np.ones(1)),
    restarts=4,
    seed=0,
)
print("fitted kernel:", surrogate.kernel)
print("log marginal likelihood:", round(surrogate.log_likelihood, 3))

grid = np.linspace(0, 1, 9).reshape(-1, 1)
mean, var = surrogate.predict(grid)
print("\n  x     mean    +/- 2 sd")
for x, m, v in zip(grid[:, 0], mean, var):
    print(f"  {x:.3f}  {m:+.4f}  {2 * np.sqrt(v):.4f}")

# Leave-one-out errors flag the training points the model finds hardest;
# the adaptive strategy treats them as a proxy for model bias.
errors = surrogate.loo_squared_errors()
worst = np.argsort(errors)[::-1][:3]
print("\nhardest training points (highest CV error):")
for i in worst:
    print(f"  x={X[i, 0]:.3f}  e2_cv={errors[i]:.2e}")
