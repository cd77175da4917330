"""Pointwise algebra: relative eigenvalues, phase, radius and the convexity summands.

Run with ``python3 demos/01_pointwise_phase.py``.
"""
import numpy as np

from cxkenergy.pointwise import (complexified_volume_ratio, convexity_summands, lagrangian_phase,
                                 lagrangian_radius, relative_eigenvalues)

rng = np.random.default_rng(0)

# A hermitian pair (omega, B) at one point of a complex 3-fold.
a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
omega = a @ a.conj().T + np.eye(3)
b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
bfield = b + b.conj().T

lam = relative_eigenvalues(omega, bfield)
theta = lagrangian_phase(lam)
radius = lagrangian_radius(lam)
print("relative eigenvalues:", np.round(lam, 4))
print(f"phase {theta:.6f}, radius {radius:.6f}")
print("r e^{i theta}          :", radius * np.exp(1j * theta))
print("(B + i omega)^3/omega^3:", complexified_volume_ratio(omega, bfield))

# The critical and geodesic summands are perfect squares; the geodesic one
# after multiplying by cos(eta).
lam, eta = 1.7, 0.4
u, v = 0.3 - 0.2j, -0.5 + 1.1j
s = convexity_summands(lam, eta, u, v)
square = abs(lam * v - u) ** 2 / (1 + lam**2)
print(f"critical summand {s.critical:.12f}, square {square:.12f}")
print(f"geodesic summand * cos(eta) {s.geodesic * np.cos(eta):.12f}")
