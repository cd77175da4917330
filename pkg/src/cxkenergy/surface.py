"""Surface form of the system on the flat complex 2-torus.

On a surface the change of variables chi = sin(theta) B - cos(theta) omega
turns the coupled equations into

    chi^2 = omega^2,    s(omega) = gamma_t * Lambda_omega chi + c,

with gamma_t = |gamma| / sin(theta)^2. Potentials follow the convention
omega_u = omega0 + i ddbar u and chi_v = chi0 + i ddbar v.

The Hessian and the operator Q use the pairings

    <a, b>_X        = Re(db^H X^{-1} da)               (1-forms through X),
    <a, b>_{w->X}   = Re(db^H G^{-1} X G^{-1} da)      (omega-gradients through X),

with da = (d a / d z_j). Q is assembled as the discrete adjoint of the
symmetric form, so it is self-adjoint for the L^2(omega^2) pairing up to
rounding.
"""
from dataclasses import dataclass

import numpy as np

from .classes import mixed_intersection
from .errors import DegeneratePhase, VolumeMismatch
from .pointwise import det, inv, wedge_top


def chi_change_of_variables(bfield, metric, theta_hat):
    """sin(theta) B - cos(theta) omega, pointwise."""
    s = np.sin(theta_hat)
    if abs(s) <= 1e-12:
        raise DegeneratePhase(f"sin(theta_hat) = {s:.3e} is too small for the change of variables")
    return s * np.asarray(bfield) - np.cos(theta_hat) * np.asarray(metric)


def bfield_from_chi(chi, metric, theta_hat):
    """Inverse change of variables B = (chi + cos(theta) omega) / sin(theta)."""
    s = np.sin(theta_hat)
    if abs(s) <= 1e-12:
        raise DegeneratePhase(f"sin(theta_hat) = {s:.3e} is too small for the change of variables")
    return (np.asarray(chi) + np.cos(theta_hat) * np.asarray(metric)) / s


@dataclass(frozen=True)
class SurfacePair:
    """Reference forms omega0 in alpha and chi0 in beta~ with alpha^2 = beta~^2, and gamma~."""

    grid: object
    omega_class: np.ndarray
    chi_class: np.ndarray
    gamma_tilde: float

    def __post_init__(self):
        if self.grid.n != 2:
            raise ValueError("the surface system lives on complex surfaces")
        a2 = mixed_intersection([self.omega_class] * 2).real
        b2 = mixed_intersection([self.chi_class] * 2).real
        if abs(a2 - b2) > 1e-12 * max(1.0, abs(a2)):
            raise VolumeMismatch(f"class volumes differ: {a2} vs {b2}")

    @property
    def omega0(self):
        return self.grid.constant_form(self.omega_class)

    @property
    def chi0(self):
        return self.grid.constant_form(self.chi_class)

    @property
    def volume(self):
        return mixed_intersection([self.omega_class] * 2).real

    @property
    def c(self):
        """s - gamma~ Lambda chi integrates to c * alpha^2 (c1 = 0 on the torus)."""
        cross = mixed_intersection([self.omega_class, self.chi_class]).real
        return -self.gamma_tilde * 2 * cross / self.volume

    def omega(self, u, check=True):
        form = self.omega0 + self.grid.ddbar(u)
        if check:
            self.grid.logdet(form)
        return form

    def chi(self, v, check=True):
        form = self.chi0 + self.grid.ddbar(v)
        if check:
            self.grid.logdet(form)
        return form


def _energy(grid, f, a, b):
    """int f sum_p a^p b^(2-p)."""
    dens = sum(wedge_top([a] * p + [b] * (2 - p)) for p in range(3))
    return float(np.real(grid.integrate(f * dens)))


def m_prime(pair, u, v):
    """H(u) + c/3 E(u) - gamma~ (E_chi(v)/3 - E_{chi0}(u) - int v omega_u^2); the Ricci term vanishes."""
    g = pair.grid
    om = pair.omega(u)
    pair.chi(v)
    om0 = pair.omega0
    h = float(g.integrate((g.logdet(om) - g.logdet(om0)) * g.volume_density(om)))
    e_u = _energy(g, u, om0, om)
    e_v = _energy(g, v, pair.chi0, pair.chi(v, check=False))
    e_twist = float(np.real(g.integrate(u * (wedge_top([pair.chi0, om0]) + wedge_top([pair.chi0, om])))))
    cross = float(g.integrate(v * g.volume_density(om)))
    return h + pair.c / 3 * e_u - pair.gamma_tilde * (e_v / 3 - e_twist - cross)


def m_prime_gradient(pair, u, v):
    """Densities (a, b) with D M'(u', v') = int (u' a + v' b) dV.

    a = -(s - c - gamma~ Lambda chi) omega^2 and b = -gamma~ (chi^2 - omega^2).
    """
    g = pair.grid
    om = pair.omega(u)
    ch = pair.chi(v)
    vol = g.volume_density(om)
    lam = np.real(np.einsum("...kj,...jk->...", inv(om), ch))
    a = -(g.scalar_curvature(om) - pair.c - pair.gamma_tilde * lam) * vol
    b = -pair.gamma_tilde * (g.volume_density(ch) - vol)
    return a, b


def m_prime_variation(pair, u, v, du, dv):
    a, b = m_prime_gradient(pair, u, v)
    return float(pair.grid.integrate(du * a + dv * b))


def f_mu(pair, u, v, mu=None):
    """int u mu - E(u)/3 + gamma~/2 (int v mu - E_chi(v)/3) for a volume density mu."""
    g = pair.grid
    if mu is None:
        mu = np.full(g.shape, pair.volume)
    mass = float(g.integrate(mu))
    if abs(mass - pair.volume) > 1e-10 * pair.volume:
        raise VolumeMismatch(f"mu has mass {mass}, expected {pair.volume}")
    om = pair.omega(u)
    ch = pair.chi(v)
    e_u = _energy(g, u, pair.omega0, om)
    e_v = _energy(g, v, pair.chi0, ch)
    return float(g.integrate(u * mu)) - e_u / 3 + pair.gamma_tilde / 2 * (float(g.integrate(v * mu)) - e_v / 3)


def f_mu_variation(pair, u, v, du, dv, mu=None):
    g = pair.grid
    if mu is None:
        mu = np.full(g.shape, pair.volume)
    om = pair.omega(u)
    ch = pair.chi(v)
    return float(g.integrate(du * (mu - g.volume_density(om))
                             + pair.gamma_tilde / 2 * dv * (mu - g.volume_density(ch))))


def _lich_pair(g, a, b, metric, ginv):
    """Pointwise Re <D a, D b> for the metric."""
    ya = np.einsum("...kj,...k->...j", ginv, g.dzbar(a))
    yb = np.einsum("...kj,...k->...j", ginv, g.dzbar(b))
    za = np.stack([g.dzbar(ya[..., j]) for j in range(2)], axis=-1)
    zb = np.stack([g.dzbar(yb[..., j]) for j in range(2)], axis=-1)
    k = np.einsum("...al,...lj,...jk->...ak", np.swapaxes(ginv, -1, -2), za, metric)
    return np.real(np.einsum("...ak,...ak->...", np.conj(zb), k))


def _pairing(p_a, p_b, mat):
    return np.real(np.einsum("...j,...jk,...k->...", np.conj(p_b), mat, p_a))


def _weights(pair, u, v):
    om = pair.omega(u)
    ch = pair.chi(v)
    ginv = inv(om)
    return om, ginv, inv(ch), ginv @ ch @ ginv, 2 * np.real(det(om))


def hessian_form(pair, u, v, x0, x1):
    """Hess((u0, v0), (u1, v1)) at (omega_u, chi_v) in the symmetric display."""
    g = pair.grid
    (u0, v0), (u1, v1) = x0, x1
    om, ginv, xinv, transfer, vol = _weights(pair, u, v)
    pu0, pv0, pu1, pv1 = (g.dz(f) for f in (u0, v0, u1, v1))
    dens = _lich_pair(g, u0, u1, om, ginv) + pair.gamma_tilde * (
        _pairing(pv0, pv1, xinv) + _pairing(pu0, pu1, transfer)
        - _pairing(pv0, pu1, ginv) - _pairing(pu0, pv1, ginv))
    return float(g.integrate(dens * vol))


def _div_adjoint(g, y):
    """Real field r with Re <dz b, y> = <b, r> for every real b (dz^* = -dzbar)."""
    return np.real(-sum(g.dzbar(y[..., j])[..., j] for j in range(y.shape[-1])))


def hessian_q_apply(pair, u, v, x0):
    """Q(u0, v0) with Hess(x0, x1) = int <Q(x0), x1> omega_u^2."""
    g = pair.grid
    u0, v0 = x0
    om, ginv, xinv, transfer, vol = _weights(pair, u, v)
    # Lichnerowicz part: adjoint chain of u -> dzbar -> G^{-T} -> dzbar
    y = np.einsum("...kj,...k->...j", ginv, g.dzbar(u0))
    z = np.stack([g.dzbar(y[..., j]) for j in range(2)], axis=-1)
    r = vol[..., None, None] * np.einsum("...al,...lj,...jk->...ak", np.swapaxes(ginv, -1, -2), z, om)
    s = np.stack([-sum(g.dz(r[..., a, k])[..., a] for a in range(2)) for k in range(2)], axis=-1)
    t = np.einsum("...ki,...k->...i", np.conj(ginv.swapaxes(-1, -2)), s)
    lich = np.real(-sum(g.dz(t[..., i])[..., i] for i in range(2)))
    pu0, pv0 = g.dz(u0), g.dz(v0)
    gt = pair.gamma_tilde
    yu = vol[..., None] * (np.einsum("...jk,...k->...j", transfer, pu0) - np.einsum("...jk,...k->...j", ginv, pv0))
    yv = vol[..., None] * (np.einsum("...jk,...k->...j", xinv, pv0) - np.einsum("...jk,...k->...j", ginv, pu0))
    qu = (lich + gt * _div_adjoint(g, yu)) / vol
    qv = gt * _div_adjoint(g, yv) / vol
    return qu, qv


def q_pairing(pair, u, v, x, y):
    """<x, y> in L^2(omega_u^2) for pairs of real fields."""
    g = pair.grid
    vol = 2 * np.real(det(pair.omega(u)))
    return float(g.integrate((x[0] * y[0] + x[1] * y[1]) * vol))


def q_mode_scan(pair, kmax=2):
    """Smallest Hessian eigenvalue per Fourier mode at (u, v) = (0, 0).

    For every nonzero wavevector with entries in [-kmax, kmax] and both
    phases, the 2 x 2 Gram matrix of the Hessian on {(e, 0), (0, e)} is
    divided by |e|^2 and its smallest eigenvalue recorded. Returns a list of
    (wavevector, phase, eigenvalue).
    """
    g = pair.grid
    zero = np.zeros(g.shape)
    coords = g.coords()
    out = []
    rng = range(-kmax, kmax + 1)
    for k in np.array(np.meshgrid(*([rng] * 4), indexing="ij")).reshape(4, -1).T:
        if not np.any(k):
            continue
        arg = 2 * np.pi * sum(ki * c for ki, c in zip(k, coords))
        for phase, e in (("cos", np.cos(arg)), ("sin", np.sin(arg))):
            basis = [(e, zero), (zero, e)]
            gram = np.array([[hessian_form(pair, zero, zero, a, b) for b in basis] for a in basis])
            norm = q_pairing(pair, zero, zero, basis[0], basis[0])
            out.append((tuple(int(x) for x in k), phase, float(np.linalg.eigvalsh(0.5 * (gram + gram.T))[0] / norm)))
    return out
