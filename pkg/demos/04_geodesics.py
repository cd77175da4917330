"""Geodesics and convexity of the complexified K-energy.

1. On CP^1 with a U(1)-invariant class, a trivial geodesic generated by a
   holomorphic vector field solves the coupled geodesic equation and the
   K-energy is affine along it.
2. Two independent Kahler geodesics in the hypercritical regime give a path
   along which the K-energy is convex.
3. On a torus the epsilon-geodesic boundary problem is solved by Newton-Krylov.
"""
import warnings

import numpy as np

from cxkenergy.cp1 import Cp1Grid, MomentumProfile, trivial_geodesic_path
from cxkenergy.errors import LostCalibration
from cxkenergy.functionals import cp1_reference
from cxkenergy.geodesics import k_energy_probe, residual_coupled
from cxkenergy.paths import PotentialPath
from cxkenergy.solvers import geodesic_bvp_epsilon
from cxkenergy.suites import hypercritical_checks, random_field
from cxkenergy.torus import TorusGrid

warnings.simplefilter("ignore", LostCalibration)
grid = Cp1Grid(64)
k = 0.8
ref = cp1_reference(grid, None, k * np.ones(grid.m))
flat = MomentumProfile(np.zeros(1))
for count in (11, 21, 41):
    exact = trivial_geodesic_path(grid, flat, 0.7, k * np.ones(grid.m), np.linspace(0, 1, count))
    fd = PotentialPath(exact.times, exact.values, "cp1", 1, grid.m)
    _, r1, r2 = residual_coupled(ref, fd)
    print(f"{count:3d} samples: finite-difference geodesic residual {max(r1.max(), r2.max()):.3e}")
print(f"largest |second difference of M| along it {np.max(np.abs(k_energy_probe(ref, exact))):.1e}")

for check in hypercritical_checks(grid, np.random.default_rng(4)):
    print(f"{check.name}: {check.value:.3e} ({'pass' if check.passed else 'fail'})")

torus = TorusGrid(1, 16)
v1 = random_field(torus, np.random.default_rng(5), 0.01, kmax=1)
for eps in (1e-2, 1e-3, 0.0):
    res = geodesic_bvp_epsilon(torus, np.zeros(torus.shape), v1, steps=16, epsilon=eps)
    print(f"epsilon {eps:.0e}: {res.message}, residual {res.history[-1]:.1e} in {res.iterations} Newton steps")
