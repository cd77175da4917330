"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a PASS/FAIL line that is printed in the terminal summary.
"""
import math
import time
import warnings

import numpy as np
import pytest

from cxkenergy.classes import class_constants
from cxkenergy.cp1 import (Cp1Grid, MomentumProfile, affine_profile_path, futaki_invariant,
                           legendre_transform, trivial_geodesic_path)
from cxkenergy.errors import LostCalibration
from cxkenergy.functionals import (complexified_calabi, complexified_k_energy, cp1_reference,
                                   first_variation, torus_reference, volume_functional)
from cxkenergy.geodesics import annulus_residual, k_energy_probe, residual_coupled, second_variation
from cxkenergy.paths import PotentialPath
from cxkenergy.pointwise import (arccot, convexity_summands, lagrangian_phase, lagrangian_radius,
                                 relative_eigenvalues)
from cxkenergy.solvers import SolverConfig, dhym_flow, ma_solve_surface, phase_field
from cxkenergy.surface import (SurfacePair, bfield_from_chi, hessian_q_apply, q_mode_scan,
                               q_pairing)
from cxkenergy.torus import TorusGrid


def torus_field(g, rng, amplitude, kmax=2):
    """Random smooth mean-zero field from low Fourier modes, scaled to a sup norm."""
    c = g.coords()
    f = np.zeros(g.shape)
    for _ in range(4):
        k = rng.integers(-kmax, kmax + 1, size=len(c))
        if not k.any():
            continue
        f += rng.normal() * np.cos(2 * np.pi * sum(ki * ci for ki, ci in zip(k, c)) + rng.uniform(0, 2 * np.pi))
    f -= f.mean()
    return amplitude * f / max(np.max(np.abs(f)), 1e-300)


def cp1_field(g, rng, amplitude):
    from numpy.polynomial import legendre as L
    coef = np.zeros(7)
    coef[1:] = rng.normal(size=6) / np.arange(1, 7) ** 2
    f = L.legval(g.x, coef)
    f -= g.integrate(f) / 2
    return amplitude * f / np.max(np.abs(f))


def field(g, rng, amplitude, kmax=2):
    return cp1_field(g, rng, amplitude) if g.name == "cp1" else torus_field(g, rng, amplitude, kmax)


def base_point(g, rng):
    """Small complex potential that keeps the reference forms positive."""
    return field(g, rng, 0.005, kmax=1) + 1j * field(g, rng, 0.003, kmax=1)


def quiet_energy(ref, phi):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LostCalibration)
        return complexified_k_energy(ref, phi)


def test_01_perfect_squares(criterion):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    size = 10**5
    lam = rng.uniform(-10, 10, size)
    eta = rng.uniform(-1.55, 1.55, size)
    u = rng.normal(size=size) + 1j * rng.normal(size=size)
    v = rng.normal(size=size) + 1j * rng.normal(size=size)
    s = convexity_summands(lam, eta, u, v)
    square = np.abs(lam * v - u) ** 2 / (1 + lam**2)
    err = max(np.max(np.abs(s.critical - square)), np.max(np.abs(s.geodesic * np.cos(eta) - square)))
    elapsed = time.perf_counter() - start
    ok = criterion(1, "perfect-square identities", err <= 1e-12 and elapsed < 1.0,
                   f"max err {err:.2e}, {elapsed:.2f} s")
    assert ok


def test_02_phase_radius(criterion):
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst = 0.0
    for n in (1, 2, 3):
        count = 10**4
        a = rng.normal(size=(count, n, n)) + 1j * rng.normal(size=(count, n, n))
        om = a @ np.conj(np.swapaxes(a, -1, -2)) + 0.1 * np.eye(n)
        b = rng.normal(size=(count, n, n)) + 1j * rng.normal(size=(count, n, n))
        bf = 2 * (b + np.conj(np.swapaxes(b, -1, -2)))
        lam = relative_eigenvalues(om, bf)
        z = lagrangian_radius(lam) * np.exp(1j * lagrangian_phase(lam))
        ref = np.linalg.det(bf + 1j * om) / np.linalg.det(om)
        worst = max(worst, np.max(np.abs(z - ref) / np.abs(ref)))
    elapsed = time.perf_counter() - start
    ok = criterion(2, "phase/radius consistency", worst <= 1e-10 and elapsed < 1.0,
                   f"max rel err {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_03_variational_consistency(criterion):
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = 0.0
    cases = [torus_reference(TorusGrid(1, 64), [[1.0]], [[0.5]], gamma_abs=1.2),
             torus_reference(TorusGrid(2, 16), np.eye(2), np.diag([0.4, 0.7]), gamma_abs=0.8)]
    for ref in cases:
        g = ref.grid
        phi = field(g, rng, 0.02, kmax=1) + 1j * field(g, rng, 0.01, kmax=1)
        for _ in range(20):
            d = field(g, rng, 1.0, kmax=1) + 1j * field(g, rng, 1.0, kmax=1)
            h = 1e-3
            f = lambda s: quiet_energy(ref, phi + s * d)
            d1 = (f(h) - f(-h)) / (2 * h)
            d2 = (f(2 * h) - f(-2 * h)) / (4 * h)
            fd = (4 * d1 - d2) / 3
            sig = first_variation(ref, phi, d)
            worst = max(worst, abs(sig - fd) / abs(sig))
    elapsed = time.perf_counter() - start
    ok = criterion(3, "sigma equals the derivative of M", worst <= 1e-5 and elapsed < 30,
                   f"max rel err {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_04_closedness(criterion):
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    ref = torus_reference(TorusGrid(1, 32), [[1.0]], [[0.5]], gamma_abs=1.2)
    g = ref.grid
    worst = 0.0
    h = 1e-4
    for _ in range(20):
        phi = base_point(g, rng)
        p1 = field(g, rng, 1.0) + 1j * field(g, rng, 1.0)
        p2 = field(g, rng, 1.0) + 1j * field(g, rng, 1.0)

        def mixed(a, b):
            d = lambda s: (first_variation(ref, phi + s * b, a) - first_variation(ref, phi - s * b, a)) / (2 * s)
            return (4 * d(h) - d(2 * h)) / 3

        m12, m21 = mixed(p1, p2), mixed(p2, p1)
        worst = max(worst, abs(m12 - m21) / max(1.0, abs(m12)))
    elapsed = time.perf_counter() - start
    ok = criterion(4, "closedness of sigma", worst <= 1e-8 and elapsed < 30,
                   f"max rel asymmetry {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_05_local_minimality(criterion):
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    low_any = np.inf
    low_ratio = np.inf
    for ref in (torus_reference(TorusGrid(1, 16), [[1.0]], [[0.5]], gamma_abs=1.0),
                torus_reference(TorusGrid(2, 8), np.eye(2), np.diag([0.4, 0.7]), gamma_abs=1.0)):
        g = ref.grid
        zero = np.zeros(g.shape, dtype=complex)
        for i in range(50):
            d = field(g, rng, 1.0) + 1j * field(g, rng, 1.0)
            if i % 5 == 0:
                d = d + rng.normal() + 1j * rng.normal()  # constants are allowed too
            val = second_variation(ref, zero, d, zero)
            low_any = min(low_any, val)
            dm = d - g.integrate(d)
            low_ratio = min(low_ratio, second_variation(ref, zero, dm, zero) / g.integrate(np.abs(dm) ** 2))
    elapsed = time.perf_counter() - start
    ok = criterion(5, "local minimality at the flat solution",
                   low_any >= -1e-10 and low_ratio >= 1e-6 and elapsed < 60,
                   f"min {low_any:.3e}, min ratio {low_ratio:.3e}, {elapsed:.1f} s")
    assert ok


def test_06_trivial_geodesics(criterion):
    start = time.perf_counter()
    g = Cp1Grid(64)
    k = 0.8
    ref = cp1_reference(g, None, k * np.ones(g.m))
    prof = MomentumProfile(np.zeros(1))
    errs = []
    for count in (11, 21, 41):
        exact = trivial_geodesic_path(g, prof, 0.7, k * np.ones(g.m), np.linspace(0, 1, count))
        fd = PotentialPath(exact.times, exact.values, "cp1", 1, g.m)
        _, r1, r2 = residual_coupled(ref, fd)
        errs.append(max(r1.max(), r2.max()))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    second = k_energy_probe(ref, exact)
    elapsed = time.perf_counter() - start
    ok = criterion(6, "trivial geodesics on CP^1",
                   np.all((1.7 <= rates) & (rates <= 2.3)) and np.max(np.abs(second)) <= 1e-6 and elapsed < 20,
                   f"rates {np.round(rates, 3).tolist()}, max |second difference| {np.max(np.abs(second)):.1e}, {elapsed:.1f} s")
    assert ok


def test_07_volume_minimum(criterion):
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    results = []
    for ref in (torus_reference(TorusGrid(1, 32), [[1.0]], [[0.5]]),
                torus_reference(TorusGrid(2, 8), np.diag([1.0, 1.5]), np.diag([0.4, -0.3]))):
        g = ref.grid
        n = g.n
        alpha = ref.classes.alpha_rep.real
        beta = ref.classes.beta_rep.real
        exact = abs(np.linalg.det(beta + 1j * alpha)) * math.factorial(n)
        base = volume_functional(ref, np.zeros(g.shape))
        comp = [volume_functional(ref, field(g, rng, 0.02)) for _ in range(20)]
        results.append((abs(base - exact), min(comp) - base))
    err = max(r[0] for r in results)
    gap = min(r[1] for r in results)
    elapsed = time.perf_counter() - start
    ok = criterion(7, "volume minimized at the dHYM solution", err <= 1e-8 and gap >= 0 and elapsed < 10,
                   f"err {err:.1e}, min gap {gap:.2e}, {elapsed:.1f} s")
    assert ok


def test_08_calabi_bound(criterion):
    rng = np.random.default_rng(8)
    start = time.perf_counter()
    slack = np.inf
    eq = 0.0
    refs = [torus_reference(TorusGrid(1, 32), [[1.0]], [[0.5]], gamma_abs=1.5),
            torus_reference(TorusGrid(2, 8), np.eye(2), np.diag([0.4, 0.7])),
            cp1_reference(Cp1Grid(48), None, 0.6 * np.ones(48))]
    for ref in refs:
        g = ref.grid
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LostCalibration)
            for _ in range(10):
                value, _, floor = complexified_calabi(ref, base_point(g, rng))
                slack = min(slack, value - floor)
            value, _, floor = complexified_calabi(ref, np.zeros(g.shape, dtype=complex))
            eq = max(eq, abs(value - floor))
    elapsed = time.perf_counter() - start
    ok = criterion(8, "Calabi lower bound", slack >= -1e-10 and eq <= 1e-10 and elapsed < 10,
                   f"min slack {slack:.2e}, equality err {eq:.1e}, {elapsed:.1f} s")
    assert ok


def test_09_dhym_flow(criterion):
    start = time.perf_counter()
    g = TorusGrid(1, 32)
    x, _ = g.coords()
    k = 0.5
    res = dhym_flow(g, 0.1 * np.cos(2 * np.pi * x), g.identity_form(), g.constant_form([[k]]), arccot(k),
                    SolverConfig(max_iters=10**4, tol=1e-8))
    sup_u = np.max(np.abs(res["u"]))
    elapsed = time.perf_counter() - start
    ok = criterion(9, "dHYM flow", res.converged and res.history[-1] <= 1e-8 and sup_u <= 1e-6 and elapsed < 30,
                   f"{res.iterations} iterations, residual {res.history[-1]:.1e}, sup |u| {sup_u:.1e}, {elapsed:.1f} s")
    assert ok


def test_10_annulus_identity(criterion):
    start = time.perf_counter()
    ratios = []
    for ref in (torus_reference(TorusGrid(1, 16), [[1.0]], [[0.5]]),
                torus_reference(TorusGrid(2, 8), np.eye(2), np.diag([0.4, 0.7]))):
        g = ref.grid
        c = g.coords()
        a = 0.02 * np.cos(2 * np.pi * c[0]) + 0.01j * np.sin(2 * np.pi * (c[0] + c[-1]))
        b = 0.01 * np.sin(2 * np.pi * c[-1]) + 0.01j * np.cos(2 * np.pi * c[0])
        errs = []
        for count in (9, 17):
            times = np.linspace(0, 1, count)
            path = PotentialPath(times, [t * a + t**2 * b for t in times], "torus", g.n, g.m)
            res = annulus_residual(ref, path)
            errs.append(res["identity_err"][np.argmin(np.abs(res["times"] - 0.5))])
        ratios.append(errs[0] / errs[1])
    elapsed = time.perf_counter() - start
    ok = criterion(10, "annulus lift identity, second order", all(3.5 <= r <= 4.5 for r in ratios) and elapsed < 30,
                   f"ratios {np.round(ratios, 3).tolist()}, {elapsed:.1f} s")
    assert ok


def surface_pair(m=8):
    chi = np.array([[1.3, 0.25], [0.25, 0.9]])
    return SurfacePair(TorusGrid(2, m), np.eye(2), chi / np.sqrt(np.linalg.det(chi)), 0.7)


def test_11_surface_operator(criterion):
    rng = np.random.default_rng(11)
    start = time.perf_counter()
    pair = surface_pair(8)
    g = pair.grid
    zero = np.zeros(g.shape)
    defect = 0.0
    u, v = field(g, rng, 0.01), field(g, rng, 0.01)
    for _ in range(5):
        x = (field(g, rng, 1.0), field(g, rng, 1.0))
        y = (field(g, rng, 1.0), field(g, rng, 1.0))
        a = q_pairing(pair, u, v, hessian_q_apply(pair, u, v, x), y)
        b = q_pairing(pair, u, v, x, hessian_q_apply(pair, u, v, y))
        defect = max(defect, abs(a - b) / max(abs(a), 1.0))
    low = np.inf
    for _ in range(10):
        x = (field(g, rng, 1.0), field(g, rng, 1.0))
        low = min(low, q_pairing(pair, zero, zero, hessian_q_apply(pair, zero, zero, x), x))
    ones = np.ones(g.shape)
    const = q_pairing(pair, zero, zero, hessian_q_apply(pair, zero, zero, (ones, 2 * ones)), (ones, 2 * ones))
    scan = min(e for _, _, e in q_mode_scan(pair, kmax=1))
    elapsed = time.perf_counter() - start
    ok = criterion(11, "surface operator Q", defect <= 1e-8 and low > 1e-10 and abs(const) <= 1e-10
                   and scan > 0 and elapsed < 60,
                   f"self-adjoint defect {defect:.1e}, min <Qx,x> {low:.2e}, constants {const:.1e}, "
                   f"min mode eigenvalue {scan:.3f}, {elapsed:.1f} s")
    assert ok


def test_12_surface_monge_ampere(criterion):
    rng = np.random.default_rng(12)
    start = time.perf_counter()
    g = TorusGrid(2, 16)
    om = g.identity_form() + g.ddbar(field(g, rng, 0.01))
    chi = np.array([[1.6, 0.2], [0.2, 0.7]])
    chi = chi / np.sqrt(np.linalg.det(chi))
    res = ma_solve_surface(g, om, chi, cfg=SolverConfig(max_iters=50, tol=1e-9))
    chi_v = g.constant_form(chi) + g.ddbar(res["v"])
    vol_err = abs(g.integrate(g.volume_density(chi_v)) - 2 * np.linalg.det(chi))
    theta = 1.1
    phase = phase_field(g, om, bfield_from_chi(chi_v, om, theta))
    spread = np.max(np.abs(phase - theta))
    elapsed = time.perf_counter() - start
    ok = criterion(12, "surface Monge-Ampere solve", res.history[-1] <= 1e-7 and vol_err <= 1e-10
                   and spread <= 1e-6 and elapsed < 60,
                   f"residual {res.history[-1]:.1e}, volume err {vol_err:.1e}, phase err {spread:.1e}, {elapsed:.1f} s")
    assert ok


def test_13_hypercritical_convexity(criterion):
    rng = np.random.default_rng(13)
    start = time.perf_counter()
    g = Cp1Grid(64)
    low = np.inf
    weight_low = np.inf
    times = np.linspace(0, 1, 9)
    start_prof = MomentumProfile(np.zeros(1))

    def random_profile():
        coef = np.zeros(5)
        coef[2:] = 0.05 * rng.uniform(-1, 1, 3)
        return MomentumProfile(coef).plus_affine(0.0, 0.3 * rng.uniform(-1, 1))

    for k in (0.3, 0.8, 2.0):
        ref = cp1_reference(g, None, k * np.ones(g.m))
        assert ref.classes.is_hypercritical()
        for _ in range(3):
            v, vd, vdd, w = affine_profile_path(g, start_prof, random_profile(), times)
            y, yd, ydd, wb = affine_profile_path(g, start_prof, random_profile(), times)
            path = PotentialPath(times, k * (y - y[0]) + 1j * (v - v[0]), "cp1", 1, g.m,
                                 velocity=k * yd + 1j * vd, acceleration=k * ydd + 1j * vdd)
            low = min(low, np.min(k_energy_probe(ref, path)))
            lam = k * wb / w
            eta = lagrangian_phase(lam[..., None]) - ref.classes.theta_hat
            weight_low = min(weight_low, np.min(np.cos(eta) + np.sin(eta) / lam))
    elapsed = time.perf_counter() - start
    ok = criterion(13, "hypercritical convexity", low >= -1e-6 and weight_low >= -1e-12 and elapsed < 20,
                   f"min second difference {low:.2e}, min weight {weight_low:.3f}, {elapsed:.1f} s")
    assert ok


def test_14_futaki(criterion):
    rng = np.random.default_rng(14)
    start = time.perf_counter()
    g = Cp1Grid(64)
    k = 0.5
    cd = class_constants([[2.0]], [[2.0 * k]], c1_data=[[2.0]])
    base = abs(futaki_invariant(g, np.ones(g.m), k * np.ones(g.m), cd))
    values = []
    for _ in range(5):
        coef = np.zeros(5)
        coef[2:] = 0.05 * rng.uniform(-1, 1, 3)
        _, w, _ = legendre_transform(MomentumProfile(coef), g)
        b = k * w + g.ddbar(field(g, rng, 0.05))[..., 0, 0].real
        values.append(futaki_invariant(g, w, b, cd))
    spread = max(abs(z - values[0]) for z in values)
    elapsed = time.perf_counter() - start
    ok = criterion(14, "Futaki invariant", spread <= 1e-6 and base <= 1e-8 and elapsed < 10,
                   f"spread {spread:.1e}, value at solution {base:.1e}, {elapsed:.2f} s")
    assert ok
