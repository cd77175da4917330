"""Second variation along paths, geodesic residuals and the annulus lift.

Paths are ``PotentialPath`` objects sampled uniformly in t. Time derivatives
come from the exact values attached to the path when present and from
second-order central differences otherwise. Top forms use the n! times
determinant normalization of the backends, and the wedge
n i dF ^ dbar G ^ X^(n-1) is written as n! tr(adj(X) P) with P_jk = dF_j dbar G_k.
"""
import warnings
from math import factorial

import numpy as np

from .errors import LostCalibration
from .fieldio import export_csv
from .functionals import complexified_k_energy
from .pointwise import adjugate, det, inv


def _pair(p, q):
    return p[..., :, None] * q[..., None, :]


def _tr_adj(x, pmat):
    return np.einsum("...kj,...jk->...", adjugate(x), pmat)


def grad_norm2(grid, f, metric):
    """|df|^2 with respect to ``metric`` for a real function f."""
    p = grid.dz(f)
    return np.real(np.einsum("...j,...jk,...k->...", np.conj(p), inv(metric), p))


def _derivs(path, i):
    if path.velocity is not None and path.acceleration is not None:
        return path.values[i], path.velocity[i], path.acceleration[i]
    if not 0 < i < len(path) - 1:
        raise IndexError("finite differences need an interior time index")
    dt = path.uniform_step()
    vals = path.values
    return vals[i], (vals[i + 1] - vals[i - 1]) / (2 * dt), (vals[i + 1] - 2 * vals[i] + vals[i - 1]) / dt**2


def second_variation_terms(ref, phi, phidot, phiddot):
    """Expanded second variation of the complexified K-energy, term by term.

    Keys: ``lichnerowicz``, ``geodesic_defect``, ``re_accel``, ``grad_im``,
    ``wedge_diag`` and ``wedge_mixed``; the second variation is their sum.
    """
    g = ref.grid
    cd = ref.classes
    n = ref.n
    top = factorial(n)
    udot, vdot = np.real(phidot), np.imag(phidot)
    uddot, vddot = np.real(phiddot), np.imag(phiddot)
    om = ref.metric(np.imag(phi))
    oc = ref.complex_form(phi)
    vol = g.volume_density(om)
    s = g.scalar_curvature(om)
    g_top = cd.gamma * top * det(oc)
    gv2 = grad_norm2(g, vdot, om)
    pu, qu = g.dz(udot), g.dzbar(udot)
    pv, qv = g.dz(vdot), g.dzbar(vdot)
    diag = _tr_adj(oc, _pair(pu, qu) - _pair(pv, qv))
    mixed = _tr_adj(oc, _pair(pv, qu) + _pair(pu, qv))
    return {
        "lichnerowicz": g.lichnerowicz_seminorm(vdot, om),
        "geodesic_defect": -float(g.integrate((vddot - gv2) * ((s - cd.c_gamma) * vol - g_top.real))),
        "re_accel": float(g.integrate(uddot * g_top.imag)),
        "grad_im": float(g.integrate(gv2 * g_top.real)),
        "wedge_diag": -float(g.integrate(top * np.imag(cd.gamma * diag))),
        "wedge_mixed": -float(g.integrate(top * np.real(cd.gamma * mixed))),
    }


def second_variation(ref, phi, phidot, phiddot):
    """int Im[gamma (phi'' Omega^n - n i dphi' ^ dbar phi' ^ Omega^(n-1))] + ||D v'||^2
    - int (v'' - |dv'|^2)(s - c) omega^n."""
    g = ref.grid
    cd = ref.classes
    top = factorial(ref.n)
    vdot, vddot = np.imag(phidot), np.imag(phiddot)
    om = ref.metric(np.imag(phi))
    oc = ref.complex_form(phi)
    quad = _tr_adj(oc, _pair(g.dz(phidot), g.dzbar(phidot)))
    first = top * np.imag(cd.gamma * (phiddot * det(oc) - quad))
    defect = (vddot - grad_norm2(g, vdot, om)) * (g.scalar_curvature(om) - cd.c_gamma) * g.volume_density(om)
    return float(g.integrate(first - defect)) + g.lichnerowicz_seminorm(vdot, om)


def _k_energy_quiet(ref, phi):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LostCalibration)
        return complexified_k_energy(ref, phi)


def second_variation_along_path(ref, path, i):
    """Analytic second variation at time index i and the second difference of M (divided by dt^2)."""
    phi, phidot, phiddot = _derivs(path, i)
    analytic = second_variation(ref, phi, phidot, phiddot)
    dt = path.uniform_step()
    m = [_k_energy_quiet(ref, path.values[j]) for j in (i - 1, i, i + 1)]
    return {"analytic": analytic, "finite_diff": (m[0] - 2 * m[1] + m[2]) / dt**2}


def convexity_probe(path, functional):
    """Undivided central second differences f(t-dt) - 2 f(t) + f(t+dt) of ``functional`` along the path."""
    vals = np.array([functional(p) for p in path.values])
    return vals[:-2] - 2 * vals[1:-1] + vals[2:]


def k_energy_probe(ref, path):
    return convexity_probe(path, lambda p: _k_energy_quiet(ref, p))


def _time_indices(path):
    if path.velocity is not None and path.acceleration is not None:
        return range(len(path))
    if len(path) < 3:
        raise ValueError("need at least three samples")
    return range(1, len(path) - 1)


def residual_coupled(ref, path):
    """Sup-norms per time of the two coupled geodesic equations.

    First: v'' - |dv'|^2_{omega_t}. Second: Re[e^{-i theta} (phi'' Omega^n - n i dphi' dbar phi' Omega^(n-1))]
    divided by omega_t^n so that it is a function.
    """
    g = ref.grid
    rot = np.exp(-1j * ref.classes.theta_hat)
    times, r1, r2 = [], [], []
    for i in _time_indices(path):
        phi, phidot, phiddot = _derivs(path, i)
        om = ref.metric(np.imag(phi))
        oc = ref.complex_form(phi)
        first = np.imag(phiddot) - grad_norm2(g, np.imag(phidot), om)
        quad = _tr_adj(oc, _pair(g.dz(phidot), g.dzbar(phidot)))
        second = np.real(rot * (phiddot * det(oc) - quad)) / np.real(det(om))
        times.append(path.times[i])
        r1.append(np.max(np.abs(first)))
        r2.append(np.max(np.abs(second)))
    return np.array(times), np.array(r1), np.array(r2)


def residual_kahler_pair(ref, path):
    """Sup-norms per time of v'' - |dv'|^2_{omega_t} and u'' - |du'|^2_{B_t}.

    Raises ``LostPositivity`` when B_t is not positive.
    """
    g = ref.grid
    times, r1, r2 = [], [], []
    for i in _time_indices(path):
        phi, phidot, phiddot = _derivs(path, i)
        om = ref.metric(np.imag(phi))
        bt = ref.bfield(np.real(phi))
        g.logdet(bt) if g.name != "cp1" else g.check_metric(bt)
        times.append(path.times[i])
        r1.append(np.max(np.abs(np.imag(phiddot) - grad_norm2(g, np.imag(phidot), om))))
        r2.append(np.max(np.abs(np.real(phiddot) - grad_norm2(g, np.real(phidot), bt))))
    return np.array(times), np.array(r1), np.array(r2)


def _nonuniform_d1_d2(f, r, j):
    """Three-point first and second r-derivatives at node j of a nonuniform grid."""
    hm = r[j] - r[j - 1]
    hp = r[j + 1] - r[j]
    fm, f0, fp = f[j - 1], f[j], f[j + 1]
    d1 = (-hp / (hm * (hm + hp))) * fm + ((hp - hm) / (hm * hp)) * f0 + (hm / (hp * (hm + hp))) * fp
    d2 = 2 * (fm / (hm * (hm + hp)) - f0 / (hm * hp) + fp / (hp * (hm + hp)))
    return d1, d2


def _lift_matrix(grid, form0, vals, r, j):
    """Coefficient matrix of pi^* form0 + i D Dbar Phi on A x X at |z| = r_j (z real)."""
    d1, d2 = _nonuniform_d1_d2(vals, r, j)
    n = grid.n
    shape = grid.shape
    mat = np.zeros(shape + (n + 1, n + 1), dtype=complex)
    mat[..., 0, 0] = 0.25 * (d2 + d1 / r[j])
    mat[..., 0, 1:] = 0.5 * grid.dzbar(d1)
    mat[..., 1:, 0] = 0.5 * grid.dz(d1)
    mat[..., 1:, 1:] = form0 + grid.ddbar(vals[j])
    return mat


def annulus_residual(ref, path):
    """Both sides of the lift identity on A x X at interior times.

    With Phi(z, x) = phi_{-log|z|}(x) sampled at r_j = exp(-t_j), the left side
    is the top coefficient (n+1)! det of pi^* Omega0 + i D Dbar Phi, built with
    nonuniform differences in r; the right side is
    (n+1) n! / (4 r^2) [phi'' det Omega - tr(adj Omega P)] built with uniform
    differences in t. Returns a dict with per-time arrays ``times``,
    ``identity_err`` (sup of r^2 |lhs - rhs|), ``kahler_residual`` (sup of
    r^2 (n+1)! det(pi^* omega0 + i D Dbar Im Phi)), ``dhym_residual`` (sup of
    r^2 Im[e^{-i(pi/2 + theta)} lhs]) and ``calibration`` (min of the real part).
    """
    g = ref.grid
    n = ref.n
    top1 = factorial(n + 1)
    r = np.exp(-path.times)
    dt = path.uniform_step()
    rot = np.exp(-1j * (np.pi / 2 + ref.classes.theta_hat))
    vals = path.values
    out = {k: [] for k in ("times", "identity_err", "kahler_residual", "dhym_residual", "calibration")}
    for j in range(1, len(path) - 1):
        lhs = top1 * det(_lift_matrix(g, ref.omega_c0, vals, r, j))
        kahler = top1 * det(_lift_matrix(g, ref.omega0, np.imag(vals), r, j))
        phi = vals[j]
        phidot = (vals[j + 1] - vals[j - 1]) / (2 * dt)
        phiddot = (vals[j + 1] - 2 * vals[j] + vals[j - 1]) / dt**2
        oc = ref.complex_form(phi)
        rhs = (n + 1) * factorial(n) / (4 * r[j] ** 2) * (
            phiddot * det(oc) - _tr_adj(oc, _pair(g.dz(phidot), g.dzbar(phidot))))
        w = r[j] ** 2
        out["times"].append(path.times[j])
        out["identity_err"].append(w * np.max(np.abs(lhs - rhs)))
        out["kahler_residual"].append(w * np.max(np.abs(kahler)))
        out["dhym_residual"].append(w * np.max(np.abs(np.imag(rot * lhs))))
        out["calibration"].append(w * np.min(np.real(rot * lhs)))
    return {k: np.array(v) for k, v in out.items()}


def export_residual_csv(path, times, **columns):
    export_csv(path, {"t": times, **columns})
