"""Fractional Feynman-Kac: paths are killed at rate q while the clock runs.

With a constant rate the survival probability is E[exp(-q E_t)], which is the
Mittag-Leffler function E_beta(-q t^beta). A position-dependent rate is
compared against the backward equation with a reaction term.

Run: python3 demos/killed_paths.py
"""

import numpy as np

from subdiff import specfun
from subdiff import subordination as sb
from subdiff.fracpde import DistributedOrder, GeneratorSpec, solve_dode
from subdiff.levy import LevyTriplet
from subdiff.sde import SDECoefficients, feynman_kac_estimate

spec = sb.MixtureSpec.single(0.5)
bm = SDECoefficients(sigma=lambda y: np.ones_like(y))
one = lambda y: np.ones_like(y)

ts = np.array([0.5, 1.0, 4.0])
est, se = feynman_kac_estimate(bm, LevyTriplet(), spec, one, one, 0.0, ts, 20000, seed=1)
print("   t   survival   +-se     E_0.5(-t^0.5)")
for t, e, s in zip(ts, est, se):
    print(f"{t:4.1f}   {e:.4f}   {s:.4f}   {specfun.mittag_leffler(0.5, -t**0.5):.4f}")

# Killing only away from the origin: q(x) = x^2 / 2.
q = lambda y: 0.5 * y**2
est, se = feynman_kac_estimate(bm, LevyTriplet(), spec, q, one, 0.0, 1.0, 20000, seed=2)
gen = GeneratorSpec.drift_diffusion(b=0.0, sigma2=1.0, L=8.0, form="backward", killing=q)
x = gen.grid(0.05)
u = solve_dode(DistributedOrder.single(0.5), gen, np.ones(x.size), 0.05, 2e-3, 1.0)
print(f"\nq(x) = x^2/2:  Monte Carlo {est:.4f} +- {se:.4f},  backward PDE {np.interp(0.0, x, u.values[-1]):.4f}")
