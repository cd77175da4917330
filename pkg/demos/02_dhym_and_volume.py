"""Deformed Hermitian-Yang-Mills flow on a flat torus and the volume functional.

The flow du/dt = theta_hat - Theta(omega, B + ddbar u) relaxes a perturbed
B-field to the constant-phase representative. The volume functional
int r omega^n is smallest there.
"""
import numpy as np

from cxkenergy.functionals import torus_reference, volume_functional
from cxkenergy.pointwise import arccot
from cxkenergy.solvers import SolverConfig, dhym_flow, phase_field
from cxkenergy.torus import TorusGrid

grid = TorusGrid(1, 32)
x, y = grid.coords()
k = 0.5
u0 = 0.1 * np.cos(2 * np.pi * x) + 0.05 * np.sin(2 * np.pi * (x + y))
metric = grid.identity_form()
bfield0 = grid.constant_form([[k]])
theta_hat = arccot(k)

start_phase = phase_field(grid, metric, bfield0 + grid.ddbar(u0))
print(f"initial phase spread {np.ptp(start_phase):.3e}")
res = dhym_flow(grid, u0, metric, bfield0, theta_hat, SolverConfig(max_iters=10**4, tol=1e-10))
print(f"{res.message}: {res.iterations} steps, sup |theta_hat - Theta| = {res.history[-1]:.2e}")
print(f"sup |u| at the end {np.max(np.abs(res['u'])):.2e}")

ref = torus_reference(grid, [[1.0]], [[k]])
print(f"volume at the solution {volume_functional(ref, np.zeros(grid.shape)):.10f}")
print(f"|(beta + i alpha)|      {abs(k + 1j):.10f}")
print(f"volume at the start     {volume_functional(ref, u0):.10f}")
