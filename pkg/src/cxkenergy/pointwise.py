"""Pointwise linear algebra for a pair (omega, B) of Hermitian matrices.

Every function accepts stacks of matrices with shape ``(..., n, n)`` so the
same code runs on a single pair or on a whole grid of samples.
"""
from dataclasses import dataclass
from itertools import combinations
from math import factorial
from typing import NamedTuple

import numpy as np

from .errors import NonPositiveMetric

# smallest eigenvalue of omega must exceed this times the largest one
PD_RTOL = 1e-12


def arccot(x):
    """Inverse cotangent with range (0, pi)."""
    return np.pi / 2 - np.arctan(x)


def hermitian_part(a):
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def check_positive(omega, rtol=PD_RTOL, exc=NonPositiveMetric, what="omega"):
    """Raise ``exc`` unless every matrix in the stack is positive-definite."""
    ev = np.linalg.eigvalsh(hermitian_part(omega))
    bad = ev[..., 0] <= rtol * np.abs(ev[..., -1])
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0]) if bad.ndim else ()
        err = exc(f"{what} is not positive-definite at index {idx}")
        err.index = idx
        raise err
    return ev


def relative_eigenvalues(omega, bfield, check=True):
    """Roots of det(B - lambda*omega) = 0, sorted ascending.

    The pencil is reduced to a standard Hermitian problem through the
    Cholesky factor of omega, which keeps the eigenvalues real.
    """
    omega = np.asarray(omega)
    bfield = np.asarray(bfield)
    if check:
        check_positive(omega)
    chol = np.linalg.cholesky(hermitian_part(omega))
    linv = np.linalg.inv(chol)
    reduced = linv @ hermitian_part(bfield) @ np.conj(np.swapaxes(linv, -1, -2))
    return np.linalg.eigvalsh(hermitian_part(reduced))


def lagrangian_phase(lambdas):
    """Sum of arccot over the last axis; lies in (0, n*pi)."""
    return np.sum(arccot(np.asarray(lambdas, dtype=float)), axis=-1)


def lagrangian_radius(lambdas):
    """prod (1 + lambda^2)^(1/2) over the last axis."""
    lam = np.asarray(lambdas, dtype=float)
    return np.prod(np.sqrt(1.0 + lam**2), axis=-1)


def complexified_volume_ratio(omega, bfield, check=True):
    """det(B + i omega) / det(omega), i.e. the ratio (B + i omega)^n / omega^n."""
    if check:
        check_positive(omega)
    return det(bfield + 1j * omega) / det(omega).real


def is_almost_calibrated(lambdas, theta_hat):
    """True where cos(Theta - theta_hat) > 0."""
    return np.cos(lagrangian_phase(lambdas) - theta_hat) > 0


@dataclass(frozen=True)
class HermitianPair:
    """A metric ``omega`` (positive-definite) and a B-field, both n x n Hermitian."""

    omega: np.ndarray
    bfield: np.ndarray

    def __post_init__(self):
        om = np.atleast_2d(np.asarray(self.omega, dtype=complex))
        b = np.atleast_2d(np.asarray(self.bfield, dtype=complex))
        if om.shape != b.shape or om.shape[-1] != om.shape[-2]:
            raise ValueError(f"shape mismatch {om.shape} vs {b.shape}")
        for name, m in (("omega", om), ("bfield", b)):
            if not np.allclose(m, np.conj(m.T), atol=1e-12 * max(1.0, np.abs(m).max())):
                raise ValueError(f"{name} is not Hermitian")
        check_positive(om)
        object.__setattr__(self, "omega", hermitian_part(om))
        object.__setattr__(self, "bfield", hermitian_part(b))

    @property
    def dim(self):
        return self.omega.shape[-1]

    def spectrum(self):
        return relative_eigenvalues(self.omega, self.bfield)

    def phase(self):
        return float(lagrangian_phase(self.spectrum()))

    def radius(self):
        return float(lagrangian_radius(self.spectrum()))

    def volume_ratio(self):
        return complex(complexified_volume_ratio(self.omega, self.bfield))


class Summands(NamedTuple):
    critical: np.ndarray
    geodesic: np.ndarray
    kgeod_weight: np.ndarray
    square_form: np.ndarray


def convexity_summands(lam, eta, u, v):
    """Per-eigendirection summands from the convexity computations.

    ``critical`` is the summand written with the radius r = (1+lam^2)^(1/2)
    and the angle arccot(lam); ``geodesic`` is the unsimplified bracket of the
    geodesic computation divided by cos(eta); ``square_form`` is
    |lam*v - u|^2 / (1+lam^2). ``kgeod_weight`` is cos(eta) + sin(eta)/lam and
    is NaN (with a warning suppressed) where lam == 0.
    """
    lam = np.asarray(lam, dtype=float)
    eta = np.asarray(eta, dtype=float)
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    au2, av2 = np.abs(u) ** 2, np.abs(v) ** 2
    cross = 2.0 * np.real(u * np.conj(v))
    q = 1.0 + lam**2
    r = np.sqrt(q)
    th = arccot(lam)
    critical = av2 + (au2 - av2) / r * np.sin(th) - cross / r * np.cos(th)

    s, c = np.sin(eta), np.cos(eta)
    bracket = (
        av2 * s**2
        + (au2 - av2) / q * (lam * c * s + s**2)
        - cross / q * (lam * s**2 - c * s)
        + av2 * c**2
        - (au2 - av2) / q * (lam * c * s - c**2)
        - cross / q * (lam * c**2 + c * s)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        geodesic = bracket / c
        weight = np.where(lam != 0, c + s / np.where(lam != 0, lam, 1.0), np.nan)
    square = np.abs(lam * v - u) ** 2 / q
    return Summands(critical, geodesic, weight, square)


def kgeod_weight(lam, eta):
    """cos(eta) + sin(eta)/lam; raises ZeroDivisionError at lam == 0."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam == 0):
        raise ZeroDivisionError("kgeod_weight needs nonzero eigenvalues")
    return np.cos(eta) + np.sin(eta) / lam


def det(a):
    """Determinant of stacked matrices, with closed forms for n <= 2."""
    a = np.asarray(a)
    n = a.shape[-1]
    if n == 1:
        return a[..., 0, 0]
    if n == 2:
        return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    return np.linalg.det(a)


def inv(a):
    """Inverse of stacked matrices, through the adjugate for n <= 2."""
    a = np.asarray(a)
    if a.shape[-1] <= 2:
        return adjugate(a) / det(a)[..., None, None]
    return np.linalg.inv(a)


def mixed_det(mats):
    """Mixed discriminant D(A_1, ..., A_n) of n stacked n x n matrices.

    Polarization: D = (1/n!) sum over subsets S of (-1)^(n-|S|) det(sum_S A_i),
    so D(A, ..., A) = det(A). Works for complex, non-Hermitian entries.
    """
    mats = [np.asarray(m) for m in mats]
    n = len(mats)
    if any(m.shape[-1] != n or m.shape[-2] != n for m in mats):
        raise ValueError("mixed_det needs n matrices of size n x n")
    total = 0
    for k in range(1, n + 1):
        for subset in combinations(range(n), k):
            acc = sum(mats[i] for i in subset)
            total = total + (-1) ** (n - k) * det(acc)
    return total / factorial(n)


def wedge_top(mats):
    """Top-degree coefficient of A_1 ^ ... ^ A_n, normalized so A^n -> n! det A."""
    return factorial(len(mats)) * mixed_det(mats)


def power_mixed(a, b, j):
    """Coefficient of a^j ^ b^(n-j) (with the n! normalization)."""
    n = np.shape(a)[-1]
    return wedge_top([a] * j + [b] * (n - j))


def adjugate(a):
    """Adjugate of stacked square matrices (n <= 3 closed forms)."""
    a = np.asarray(a)
    n = a.shape[-1]
    if n == 1:
        return np.ones_like(a)
    if n == 2:
        out = np.empty_like(a)
        out[..., 0, 0] = a[..., 1, 1]
        out[..., 1, 1] = a[..., 0, 0]
        out[..., 0, 1] = -a[..., 0, 1]
        out[..., 1, 0] = -a[..., 1, 0]
        return out
    return det(a)[..., None, None] * np.linalg.inv(a)


def quadratic_wedge(p, q, cof_stack):
    """tr(adj(X) P) with P_jk = p_j q_k.

    This is the top coefficient of n * P ^ X^(n-1) divided by n!.
    """
    pmat = p[..., :, None] * q[..., None, :]
    return np.einsum("...kj,...jk->...", adjugate(cof_stack), pmat)
