"""Simulate stationary symmetric stable paths and certify their law.

Paths are compensated sums over a truncated Poisson cloud in the
(point, fiber) parametrization.  The marginals must behave like exact
symmetric stable variables: closed under averaged addition, with the right
tail index, and with the characteristic function the truncated exponent
formula predicts.
"""

import numpy as np

from maharam import StableConfig, BernoulliShift, Odometer
from maharam.diagnostics import cf_consistency, hill_tail_index, sum_stability_test
from maharam.simulate import expected_points, marginal_samples, simulate_paths

alpha, eps = 1.2, 5e-3
cfg = StableConfig(alpha, Odometer(2 / 3), symmetric=True, point_budget=10**9)
print(f"alpha = {alpha}, truncation eps = {eps}: "
      f"{expected_points(cfg, eps):.0f} Poisson points per path")

batch = simulate_paths(cfg, eps, n_paths=5, window=(-5, 5), seed=1)
print("\nfive sample windows (lags -5..5):")
for row in batch.values:
    print("  " + " ".join(f"{v:8.3f}" for v in row))

print("\nmarginal law at larger sample size:")
xs = marginal_samples(cfg, eps, 60_000, seed=2, workers=2)
ks = sum_stability_test(xs, alpha)
hill = hill_tail_index(xs, 0.01)
print(f"  sum-stability KS p-value: {ks.pvalue:.3f} (pass = {ks.passed})")
print(f"  tail index estimate: {hill.value:.3f} +- {hill.se:.3f} "
      f"(target {alpha})")

print("\ncharacteristic function against the exponent formula "
      "(same truncation on both sides):")
bcfg = StableConfig(1.5, BernoulliShift(), symmetric=True, point_budget=10**9)
res = cf_consistency(bcfg, {0: 1.0}, eps=1e-2, n_paths=100_000,
                     lk_samples=200_000, seed=3)
print(f"  sup gap over the theta grid: {res.sup_gap:.4f} "
      f"(combined SE up to {res.combined_se.max():.4f})")
