#!/usr/bin/env python3
"""Watch the normalized sums converge under volatility uncertainty.

The quantity E-hat[phi(S_n)] is computed exactly by the recombining-lattice
recursion (no sampling!), compared against a fine-grid reference solve of the
limiting nonlinear heat equation, and checked against the fully explicit
error-bound constant.
"""

import gscheme as gs

family = gs.pm_sigma_family([0.1, 0.3])
phi = gs.builtin_phi("capped-relu")  # min(x+, 1): Lipschitz 1, bounded

moments = gs.validate(family)
constants = gs.compute_constants(moments, c_phi=1.0, beta=1.0, T=1.0)
print(f"explicit error constant: {constants.c_explicit:.1f} "
      f"(k0 {constants.k0:.4f}, k1 {constants.k1:.4f}, c_rho {constants.c_rho:.2f})")

print("solving the limit equation on a fine grid (takes a moment)...")
reference = gs.fine_grid_reference(family, phi, 1.0, 0.0)
print(f"reference value {reference.value:.8f} +- {reference.accuracy:.1e} "
      f"({reference.method})\n")

n_list = [2, 4, 8, 16, 32, 64]
values = {n: gs.clt_functional(family, n, phi) for n in n_list}
result = gs.clt_experiment(family, phi, n_list, reference, constants.c_explicit)
print("   n        value          error       explicit bound")
for row in sorted(result.rows, key=lambda r: r.resolution):
    n = int(row.resolution)
    print(f"  {n:4d}  {values[n]:.8f}   {row.error:.3e}   {row.bound:9.1f}")
print(f"\nfitted slope in n: {result.fitted_slope:.3f} "
      f"(the theoretical bound decays like n^-1/6; the measured decay is faster)")
print("bound respected at every n:", result.passed)
