"""Minimizing the complexified K-energy and the Calabi lower bound.

A preconditioned descent drives a random complex potential to a solution of
the coupled system Im(gamma Omega^n) = 0, s - c = Re(gamma Omega^n)/omega^n.
Along the way the Calabi-type functional stays above c^2 Vol.
"""
import warnings

import numpy as np

from cxkenergy.errors import LostCalibration
from cxkenergy.functionals import complexified_calabi, cp1_reference, torus_reference
from cxkenergy.cp1 import Cp1Grid
from cxkenergy.solvers import SolverConfig, kenergy_descent
from cxkenergy.suites import random_potential
from cxkenergy.torus import TorusGrid

warnings.simplefilter("ignore", LostCalibration)
rng = np.random.default_rng(3)

for label, ref in (("torus n=2", torus_reference(TorusGrid(2, 8), np.eye(2), np.diag([0.4, 0.7]))),
                   ("CP^1", cp1_reference(Cp1Grid(48), None, 0.6 * np.ones(48)))):
    phi0 = random_potential(ref.grid, rng, 0.02, 0.01)
    value, _, floor = complexified_calabi(ref, phi0)
    print(f"{label}: Calabi {value:.6f} >= c^2 Vol {floor:.6f} at the start")
    res = kenergy_descent(ref, phi0, SolverConfig(max_iters=100, tol=1e-8))
    print(f"  {res.message} after {res.iterations} iterations")
    print(f"  M went from {res.history[0]:.10f} to {res.history[-1]:.10f}")
    print(f"  final system residual {res['residuals'][-1]:.2e}")
    value, _, floor = complexified_calabi(ref, res["phi"])
    print(f"  Calabi minus c^2 Vol at the end {value - floor:.2e}")
