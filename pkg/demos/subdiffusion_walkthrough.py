"""Brownian motion run on the clock of an inverse 1/2-stable subordinator.

The walk freezes whenever the subordinator jumps, so the variance grows like
t**0.5 instead of t. The same law comes out of three routes: paths, the
time-fractional Fokker-Planck equation, and averaging the heat kernel over
the density of the random clock.

Run: python3 demos/subdiffusion_walkthrough.py
"""

import math

import numpy as np
from scipy import special

from subdiff import subordination as sb
from subdiff.fracpde import (
    DistributedOrder,
    GeneratorSpec,
    discrete_delta,
    semigroup_field,
    solve_dode,
    subordination_solution,
)
from subdiff.harness import ks_distance
from subdiff.levy import LevyTriplet
from subdiff.sde import SDECoefficients, simulate_time_changed_sde

BETA, N_PATHS, SEED = 0.5, 20000, 7
DX, DT, L = 0.02, 1e-3, 8.0

spec = sb.MixtureSpec.single(BETA)
brownian = SDECoefficients(sigma=lambda y: np.ones_like(y))

# 1. One path: X is constant while D jumps over a time interval.
path = sb.sample_mixture_path(spec, 1e-3, 1.0, seed=SEED, path=0)
gaps = np.diff(path.values)
j = int(np.argmax(gaps))
print(f"largest subordinator jump: D goes from {path.values[j]:.4f} to {path.values[j + 1]:.4f}")
print("the time-changed path is frozen over that interval\n")

# 2. Ensemble variance at t = 0.25, 0.5, 1 versus E[E_t] = t^beta / Gamma(1 + beta).
ts = [0.25, 0.5, 1.0]
ens = simulate_time_changed_sde(brownian, LevyTriplet(), spec, 0.0, ts, N_PATHS, SEED)
print("   t    Var X_t   t^b/Gamma(1+b)")
for i, t in enumerate(ts):
    print(f"{t:5.2f}   {ens.x[:, i].var():.4f}    {t**BETA / special.gamma(1 + BETA):.4f}")

# 3. Forward equation D^beta p = (1/2) p'' from a point mass.
gen = GeneratorSpec.drift_diffusion(b=0.0, sigma2=1.0, L=L)
x = gen.grid(DX)
field = solve_dode(DistributedOrder.single(BETA), gen, discrete_delta(x), DX, DT, 1.0)
print(f"\nPDE mass drift {field.info['mass_drift']:.1e}, boundary mass {field.info['boundary_mass']:.1e}")
print(f"KS(paths at t=1, PDE CDF) = {ks_distance(ens.x[:, -1], field.cdf(1.0)):.4f}")

# 4. Subordination: average the heat semigroup over the density of E_1.
tau = np.concatenate([[0.0], np.geomspace(1e-7, 0.005, 300)[:-1], np.arange(0.005, 9.0, 0.005)])
heat = semigroup_field(gen, discrete_delta(x), DX, tau)
p_sub = subordination_solution(spec, heat, tau, 1.0)
l2 = math.sqrt(np.sum((p_sub - field.values[-1]) ** 2) * DX)
print(f"L2 distance PDE vs subordination route: {l2:.2e}")
