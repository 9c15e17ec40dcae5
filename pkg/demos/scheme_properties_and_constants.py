#!/usr/bin/env python3
"""Tour of the scheme machinery: axioms, consistency, comparison, constants.

Everything the convergence proofs lean on is executable: the four axioms of
the sublinear expectation, the one-step consistency error against its bounds,
the discrete comparison principle, and the explicit constants including the
numerically integrated mollifier mass.
"""

import numpy as np

import gscheme as gs

print("== sublinear-expectation axioms on 200 random families ==")
worst, per_axiom = gs.axiom_suite(n_trials=200, seed=0)
for name, v in per_axiom.items():
    print(f"  {name:<12} worst violation {v:.2e}")

print("\n== one-step consistency error vs bound (volatility family, sin) ==")
family = gs.pm_sigma_family([0.1, 0.3])
moments = gs.validate(family)
psi = gs.sine()
print("   delta       measured        bound")
for k in (2, 4, 6, 8, 10):
    delta = 2.0**-k
    measured = gs.consistency_error(family, delta, psi, psi.sample_points())
    bound = gs.consistency_bounds(moments, psi.norms, delta, "prop51_ii")
    print(f"  2^-{k:<2d}    {measured:.3e}    {bound:.3e}")

print("\n== drift-tied family: refined first-order consistency ==")
bsb = gs.bsb_family(0.05, 0.1, 0.3, 9)
bsb_moments = gs.validate(bsb)
pairs = []
for k in range(2, 11):
    delta = 2.0**-k
    pairs.append((delta, gs.consistency_error(bsb, delta, psi, psi.sample_points())))
fit = gs.fit_rate(pairs)
print(f"  fitted order in delta: {fit.fitted_slope:.4f} (first order)")

print("\n== discrete comparison principle ==")
cfg = gs.SchemeConfig(delta=1 / 8, horizon=1.0, grid_lo=(-6.0,), grid_hi=(6.0,), grid_n=(161,))
low = gs.solve_grid(family, cfg, gs.builtin_phi("capped-relu"))
bumped = gs.InitialData(
    "bumped", lambda x: np.minimum(np.maximum(np.asarray(x, float), 0.0), 1.0)
    + 0.25 * np.abs(np.sin(3 * np.asarray(x, float))), 0.0)
high = gs.solve_grid(family, cfg, bumped)
ok, violation = gs.check_comparison(low, high)
print(f"  ordered initial data stays ordered: {ok} (max violation {violation:.2e})")

print("\n== explicit constants for the volatility family ==")
report = gs.compute_constants(moments, c_phi=1.0, beta=1.0, T=1.0)
for key, value in report.as_rows():
    print(f"  {key:<10} = {value:.6g}")
