"""Cohomology-level constants for constant-coefficient classes.

Classes are represented by constant n x n matrices. Intersection numbers use
the normalization in which the class of the identity matrix satisfies
``[I]^n = n!``; on the flat unit torus this is exactly the quadrature of the
corresponding top forms. For the invariant CP^1 backend pass 1 x 1 matrices
holding the total masses (e.g. ``[[2.0]]`` for Fubini-Study, c1 = ``[[2.0]]``).
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonPositiveChi, PhaseOutOfRange, VanishingComplexifiedVolume
from .pointwise import check_positive, wedge_top

IMAG_RTOL = 1e-12


def mixed_intersection(forms, dim=None):
    """Intersection number of n constant forms (matrices may be complex)."""
    forms = [np.atleast_2d(np.asarray(f, dtype=complex)) for f in forms]
    n = len(forms) if dim is None else dim
    if len(forms) != n or any(f.shape != (n, n) for f in forms):
        raise DimensionMismatch(f"need {n} matrices of shape ({n}, {n})")
    return complex(wedge_top(forms))


def _principal_lift(z):
    th = float(np.angle(z))
    return th + 2 * np.pi if th <= 0 else th


@dataclass(frozen=True)
class ClassData:
    dim: int
    alpha_rep: np.ndarray
    beta_rep: np.ndarray
    gamma_abs: float
    theta_hat: float
    c_gamma: float
    c1_rep: np.ndarray
    alpha_n: float
    complex_volume: complex

    @property
    def gamma(self):
        """gamma = |gamma| exp(-i theta_hat)."""
        return self.gamma_abs * np.exp(-1j * self.theta_hat)

    @property
    def volume_ratio(self):
        return self.complex_volume / self.alpha_n

    @property
    def c1_alpha(self):
        """n c1 . alpha^(n-1)."""
        n = self.dim
        return self.dim * mixed_intersection([self.c1_rep] + [self.alpha_rep] * (n - 1)).real

    @property
    def alpha_complex(self):
        return self.beta_rep + 1j * self.alpha_rep

    def is_supercritical(self):
        return 0 < self.theta_hat < np.pi

    def is_hypercritical(self):
        return 0 < self.theta_hat < np.pi / 2


def class_constants(alpha_rep, beta_rep, gamma_abs=1.0, c1_data=None, theta_hat=None):
    """Lifted phase theta_hat and coupling constant c_gamma of a class pair.

    theta_hat defaults to the principal argument in (0, 2 pi] of
    (beta + i alpha)^n / alpha^n; any other lift may be passed explicitly but
    must differ from it by a multiple of 2 pi. c1 defaults to zero (torus).
    """
    alpha = np.atleast_2d(np.asarray(alpha_rep, dtype=complex))
    beta = np.atleast_2d(np.asarray(beta_rep, dtype=complex))
    n = alpha.shape[-1]
    if beta.shape != alpha.shape:
        raise DimensionMismatch("alpha and beta representatives differ in shape")
    check_positive(alpha, what="alpha")
    c1 = np.zeros_like(alpha) if c1_data is None else np.atleast_2d(np.asarray(c1_data, dtype=complex))
    alpha_n = mixed_intersection([alpha] * n).real
    zvol = mixed_intersection([beta + 1j * alpha] * n)
    if abs(zvol) <= 1e-12 * alpha_n:
        raise VanishingComplexifiedVolume(f"|(beta + i alpha)^n| = {abs(zvol):.3e}")
    lift = _principal_lift(zvol)
    if theta_hat is None:
        theta_hat = lift
    else:
        k = (theta_hat - lift) / (2 * np.pi)
        if abs(k - round(k)) > 1e-9:
            raise PhaseOutOfRange(f"theta_hat={theta_hat} is not a lift of arg = {lift}")
    c1_alpha = n * mixed_intersection([c1] + [alpha] * (n - 1)).real
    c_gamma = c1_alpha / alpha_n - gamma_abs * abs(zvol) / alpha_n
    return ClassData(n, alpha, beta, float(gamma_abs), float(theta_hat), float(c_gamma), c1, alpha_n, zvol)


def stability_check_top(class_data, chi_rep, tol=1e-10):
    """Im(e^{-i theta_hat} (alpha^C)^p . chi^(n-p)) for p = 1..n.

    Only the top-dimensional inequalities are evaluated; conditions along
    subvarieties are not checked.
    """
    chi = np.atleast_2d(np.asarray(chi_rep, dtype=complex))
    check_positive(chi, exc=NonPositiveChi, what="chi")
    n = class_data.dim
    rot = np.exp(-1j * class_data.theta_hat)
    ac = class_data.alpha_complex
    values = [
        float((rot * mixed_intersection([ac] * p + [chi] * (n - p))).imag)
        for p in range(1, n + 1)
    ]
    return {"inequalities": values, "pass": all(v <= tol for v in values)}
