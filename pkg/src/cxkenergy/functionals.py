"""Energy functionals on the space of complex potentials phi = u + i v.

A potential moves the reference pair (B0, omega0) to

    B_u = B0 + i ddbar u,    omega_v = omega0 + i ddbar v,
    Omega_phi = B_u + i omega_v = Omega0 + i ddbar phi.

Everything is evaluated on a backend grid (``TorusGrid`` or ``Cp1Grid``)
with top forms written as n! times mixed determinants, so that the same code
serves both spaces.
"""
import warnings
from dataclasses import dataclass
from math import factorial

import numpy as np

from .classes import ClassData, class_constants
from .errors import LostCalibration
from .fieldio import export_csv
from .pointwise import det, wedge_top


@dataclass(frozen=True)
class Reference:
    """Grid, reference forms and class constants shared by all functionals."""

    grid: object
    omega0: np.ndarray
    bfield0: np.ndarray
    classes: ClassData

    @property
    def n(self):
        return self.grid.n

    @property
    def omega_c0(self):
        return self.bfield0 + 1j * self.omega0

    def metric(self, v, check=True):
        return self._add(self.omega0, np.real(v), check)

    def bfield(self, u):
        return self.bfield0 + self.grid.ddbar(np.real(u))

    def complex_form(self, phi):
        return self.omega_c0 + self.grid.ddbar(np.asarray(phi, dtype=complex))

    def _add(self, form, pot, check):
        out = form + self.grid.ddbar(pot)
        if check:
            if self.grid.name == "cp1":
                self.grid.check_metric(out)
            else:
                self.grid.logdet(out)
        return out

    @property
    def volume(self):
        return float(self.classes.alpha_n)


def torus_reference(grid, alpha=None, beta=None, gamma_abs=1.0, theta_hat=None):
    """Constant-coefficient reference on the flat torus (c1 = 0)."""
    n = grid.n
    alpha = np.eye(n) if alpha is None else np.atleast_2d(alpha)
    beta = np.zeros((n, n)) if beta is None else np.atleast_2d(beta)
    cd = class_constants(alpha, beta, gamma_abs=gamma_abs, theta_hat=theta_hat)
    return Reference(grid, grid.constant_form(alpha), grid.constant_form(beta), cd)


def cp1_reference(grid, w0=None, b0=None, gamma_abs=1.0, theta_hat=None):
    """Invariant reference on CP^1 from densities (default: Fubini-Study, B0 = 0)."""
    w0 = np.ones(grid.m) if w0 is None else np.asarray(w0, dtype=float)
    b0 = np.zeros(grid.m) if b0 is None else np.asarray(b0, dtype=float)
    mass_w = grid.integrate(w0)
    mass_b = grid.integrate(b0)
    cd = class_constants([[mass_w]], [[mass_b]], gamma_abs=gamma_abs, c1_data=[[2.0]], theta_hat=theta_hat)
    return Reference(grid, w0.astype(complex)[:, None, None], b0.astype(complex)[:, None, None], cd)


def _top(mats):
    return wedge_top(mats)


def _power_sum(a, b, n, twist=None):
    """sum_j a^j ^ b^(n-j) (or with one factor replaced by ``twist``)."""
    if twist is None:
        return sum(_top([a] * j + [b] * (n - j)) for j in range(n + 1))
    return sum(_top([twist] + [a] * j + [b] * (n - 1 - j)) for j in range(n))


def entropy(ref, v):
    """int log(omega_v^n / omega0^n) omega_v^n."""
    g = ref.grid
    om = ref.metric(v)
    logratio = g.logdet(om) - g.logdet(ref.omega0)
    return float(g.integrate(logratio * g.volume_density(om)))


def energy(ref, v, twist=None):
    """E(v) = int v sum_j omega0^j omega_v^(n-j); with ``twist`` the eta-twisted energy."""
    om = ref.omega0 + ref.grid.ddbar(np.real(v))
    dens = _power_sum(ref.omega0, om, ref.n, twist)
    return float(np.real(ref.grid.integrate(np.real(v) * dens)))


def complexified_energy(ref, phi):
    """E^C(phi) = int phi sum_j Omega0^j Omega_phi^(n-j)."""
    phi = np.asarray(phi, dtype=complex)
    dens = _power_sum(ref.omega_c0, ref.complex_form(phi), ref.n)
    return complex(ref.grid.integrate(phi * dens))


def calibration_margin(ref, phi):
    """Pointwise Re(exp(-i theta_hat) Omega_phi^n) / n!; positive on almost calibrated potentials."""
    top = det(ref.complex_form(phi))
    return np.real(np.exp(-1j * ref.classes.theta_hat) * top)


def complexified_k_energy(ref, phi, parts=False):
    """M(phi) = H(v) + c/(n+1) E(v) - E_Ric(v) + Im(gamma E^C(phi)) / (n+1).

    Warns with ``LostCalibration`` outside the almost calibrated set, where
    the value is still defined. With ``parts`` a dict of the four terms is
    returned as well.
    """
    phi = np.asarray(phi, dtype=complex)
    n = ref.n
    cd = ref.classes
    v = phi.imag
    if np.any(calibration_margin(ref, phi) <= 0):
        warnings.warn("potential is not almost calibrated", LostCalibration, stacklevel=2)
    h = entropy(ref, v)
    e = energy(ref, v)
    ric = ref.grid.ricci_form(ref.omega0)
    e_ric = energy(ref, v, twist=ric) if np.any(np.abs(ric) > 0) else 0.0
    ec = complexified_energy(ref, phi)
    terms = {
        "entropy": h,
        "energy": cd.c_gamma / (n + 1) * e,
        "ricci_energy": -e_ric,
        "complex_energy": float(np.imag(cd.gamma * ec)) / (n + 1),
    }
    total = sum(terms.values())
    return (total, terms) if parts else total


def first_variation_density(ref, phi):
    """The complex density gamma Omega^n - (s - c) omega^n (as n! times coefficients)."""
    g = ref.grid
    cd = ref.classes
    phi = np.asarray(phi, dtype=complex)
    om = ref.metric(phi.imag)
    s = g.scalar_curvature(om)
    top = factorial(ref.n)
    return cd.gamma * top * det(ref.complex_form(phi)) - (s - cd.c_gamma) * g.volume_density(om)


def first_variation(ref, phi, direction):
    """sigma(direction) = int Im[direction * (gamma Omega^n - (s - c) omega^n)]."""
    dens = first_variation_density(ref, phi)
    return float(np.imag(ref.grid.integrate(np.asarray(direction, dtype=complex) * dens)))


def gradient(ref, phi):
    """Real fields (a, b) with sigma(x + i y) = int (x a + y b) dV."""
    dens = first_variation_density(ref, phi)
    return dens.imag, dens.real


def complexified_calabi(ref, phi):
    """Return (int |s - gamma Omega^n/omega^n|^2 omega^n, remainder, c^2 Vol).

    value = remainder + c^2 Vol with remainder = int |s - gamma Omega^n/omega^n - c|^2 omega^n.
    """
    g = ref.grid
    cd = ref.classes
    phi = np.asarray(phi, dtype=complex)
    om = ref.metric(phi.imag)
    vol = g.volume_density(om)
    ratio = cd.gamma * det(ref.complex_form(phi)) / np.real(det(om))
    f = g.scalar_curvature(om) - ratio
    value = float(g.integrate(np.abs(f) ** 2 * vol))
    remainder = float(g.integrate(np.abs(f - cd.c_gamma) ** 2 * vol))
    return value, remainder, cd.c_gamma**2 * float(g.integrate(vol))


def volume_functional(ref, u, metric=None):
    """int |(B_u + i omega)^n| for a fixed metric (default omega0)."""
    g = ref.grid
    om = ref.omega0 if metric is None else metric
    dens = factorial(ref.n) * np.abs(det(ref.bfield(u) + 1j * om))
    return float(g.integrate(dens))


def batch_table(ref, potentials, path=None):
    """Evaluate the functionals on a list of potentials; optionally write CSV."""
    cols = {k: [] for k in ("index", "k_energy", "entropy", "energy", "calabi", "volume")}
    for i, phi in enumerate(potentials):
        phi = np.asarray(phi, dtype=complex)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LostCalibration)
            cols["k_energy"].append(complexified_k_energy(ref, phi))
        cols["index"].append(i)
        cols["entropy"].append(entropy(ref, phi.imag))
        cols["energy"].append(energy(ref, phi.imag))
        cols["calabi"].append(complexified_calabi(ref, phi)[0])
        cols["volume"].append(volume_functional(ref, phi.real, ref.metric(phi.imag)))
    table = {k: np.array(v, dtype=float) for k, v in cols.items()}
    if path is not None:
        export_csv(path, table)
    return table
