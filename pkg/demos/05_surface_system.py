"""The coupled system on a flat complex 2-torus after the chi change of variables.

Solves chi_v^2 = omega^2 by damped Newton, recovers a B-field with constant
phase, and scans the Hessian operator Q mode by mode at the flat solution.
"""
import numpy as np

from cxkenergy.solvers import SolverConfig, ma_solve_surface, phase_field
from cxkenergy.surface import SurfacePair, bfield_from_chi, q_mode_scan
from cxkenergy.torus import TorusGrid

grid = TorusGrid(2, 16)
x1, y1, x2, y2 = grid.coords()
omega = grid.identity_form() + grid.ddbar(0.005 * np.cos(2 * np.pi * (x1 + y2)))
chi = np.array([[1.6, 0.2], [0.2, 0.7]])
chi /= np.sqrt(np.linalg.det(chi))

res = ma_solve_surface(grid, omega, chi, cfg=SolverConfig(max_iters=50, tol=1e-10))
print(f"Monge-Ampere: {res.message}, residual history {[f'{r:.1e}' for r in res.history]}")
theta_hat = 1.1
phase = phase_field(grid, omega, bfield_from_chi(res["chi"], omega, theta_hat))
print(f"phase of the recovered B-field: max |Theta - theta_hat| = {np.max(np.abs(phase - theta_hat)):.1e}")

pair = SurfacePair(TorusGrid(2, 8), np.eye(2), chi, 0.7)
scan = q_mode_scan(pair, kmax=1)
worst = min(scan, key=lambda item: item[2])
print(f"{len(scan)} Fourier modes scanned; smallest Hessian eigenvalue {worst[2]:.4f} at {worst[0]} ({worst[1]})")
