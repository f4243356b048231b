"""Appendix-style oracles: representation formula, Kirchhoff, decay bounds.

Demonstrates the manufactured-solution gate for the double-integral
representation, the d'Alembert/Kirchhoff cross check, and the stability of
the log-weighted decay envelope under domain doubling.
"""
import numpy as np

from mkglab.data_builder import GaussianProfile
from mkglab.wave_oracle import (RadialSource, dalembert_free, kirchhoff_eval,
                                solve_inhom_radial, verify_decay_bound)

# manufactured solution phi* = e^{-t} e^{-r^2}
src = RadialSource(F=lambda t, r: np.exp(-t - r * r) * (7.0 - 4.0 * r * r))
g = GaussianProfile(1.0, 1.0)
print("manufactured-solution recovery (inhomogeneous + homogeneous parts):")
for (t, r) in ((1.0, 1.0), (2.0, 0.7)):
    inhom = solve_inhom_radial(src, t, r, abs_tol=1e-10)
    hom = dalembert_free(g, lambda x: -np.exp(-x * x), t, r).real
    exact = np.exp(-t - r * r)
    print(f"  (t, r) = ({t}, {r}): recovered {inhom + hom:+.8f}, "
          f"exact {exact:+.8f}, error {abs(inhom + hom - exact):.2e}")

rng = np.random.default_rng(7)
worst = 0.0
for _ in range(200):
    g0 = GaussianProfile(float(rng.uniform(-1, 1)), float(rng.uniform(0.5, 2)))
    h0 = GaussianProfile(float(rng.uniform(-1, 1)), float(rng.uniform(0.5, 2)))
    t = float(rng.uniform(0.2, 6.0))
    r = float(rng.uniform(0.1, 8.0))
    worst = max(worst, abs(dalembert_free(g0, h0, t, r).real
                           - kirchhoff_eval(g0, h0, t, r, order=160)))
print(f"d'Alembert vs Kirchhoff, 200 random radial cases: worst |diff| = {worst:.2e}")

print("\nlog-weighted envelope constant under domain doubling (delta = 1):")
src1 = RadialSource(F=lambda t, r: 1.0 / ((1.0 + r) * (1.0 + t + r)
                                          * (1.0 + np.abs(t - r)) ** 2))
fracs = [(0.2, 0.1), (0.5, 0.3), (0.5, 0.52), (0.8, 0.5), (0.8, 0.82),
         (0.9, 0.3), (0.95, 0.9), (0.4, 0.38), (0.7, 0.1)]
for dom in (60.0, 120.0):
    samples = [(ft * dom, fr * dom,
                solve_inhom_radial(src1, ft * dom, fr * dom, fast=True))
               for (ft, fr) in fracs]
    c, arg = verify_decay_bound(samples, "logest1", {"delta": 1.0})
    print(f"  domain [0, {dom:.0f}]^2: C_observed = {c:.6f} at (t, r) = {arg}")
