"""Run configuration, reproducible random inputs and the verification suites.

Random numbers come from numpy's PCG64 generator seeded with the run seed.
Only integers are drawn (uniform in [-10^6, 10^6]) and then scaled by 1e-6,
so the inputs do not depend on platform floating point sampling routines.
"""
import warnings
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .classes import class_constants, stability_check_top
from .cp1 import (Cp1Grid, MomentumProfile, affine_profile_path, futaki_invariant,
                  legendre_transform, trivial_geodesic_path)
from .errors import ConfigError, LostCalibration
from .functionals import (complexified_calabi, complexified_k_energy, cp1_reference,
                          first_variation, torus_reference)
from .geodesics import (annulus_residual, k_energy_probe, residual_coupled,
                        second_variation, second_variation_along_path)
from .paths import PotentialPath
from .pointwise import (complexified_volume_ratio, convexity_summands, det,
                        lagrangian_phase, lagrangian_radius, relative_eigenvalues)
from .report import Check, Report
from .solvers import (SolverConfig, dhym_flow, geodesic_bvp_epsilon, kenergy_descent,
                      ma_solve_surface, phase_field, system_residuals)
from .surface import (SurfacePair, bfield_from_chi, hessian_form, hessian_q_apply,
                      m_prime, m_prime_variation, q_mode_scan, q_pairing)
from .torus import TorusGrid

BACKENDS = ("torus-n1", "torus-n2", "cp1")
SUITES = ("identities", "variations", "geodesics", "solvers", "surface", "futaki")
DEFAULT_M = {"torus-n1": 32, "torus-n2": 16, "cp1": 64}
M_RANGE = {"torus-n1": (8, 256), "torus-n2": (4, 32), "cp1": (16, 128)}


@dataclass
class RunConfig:
    backend: str = "torus-n1"
    m: Optional[int] = None
    tol: Optional[float] = None
    gamma_abs: float = 1.0
    theta_hat: Optional[float] = None
    seed: int = 0
    alpha: Optional[list] = None
    beta: Optional[list] = None
    epsilon: float = 0.0

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}", "backend")
        if self.m is None:
            self.m = DEFAULT_M[self.backend]
        lo, hi = M_RANGE[self.backend]
        if not lo <= int(self.m) <= hi:
            raise ConfigError(f"m = {self.m} outside [{lo}, {hi}] for {self.backend}", "m")
        if self.backend.startswith("torus") and int(self.m) & (int(self.m) - 1):
            raise ConfigError("torus grids need a power of two", "m")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tol must be positive", "tol")
        if not self.gamma_abs > 0:
            raise ConfigError("gamma_abs must be positive", "gamma_abs")
        if not self.epsilon >= 0:
            raise ConfigError("epsilon must be non-negative", "epsilon")
        n = self.dim
        for key in ("alpha", "beta"):
            mat = getattr(self, key)
            if mat is None:
                continue
            arr = np.atleast_2d(np.asarray(mat, dtype=complex))
            if arr.shape != (n, n):
                raise ConfigError(f"{key} must be {n} x {n}", key)
            if np.max(np.abs(arr - arr.conj().T)) > 1e-12:
                raise ConfigError(f"{key} is not Hermitian", key)

    @property
    def dim(self):
        return 2 if self.backend == "torus-n2" else 1

    def as_dict(self):
        out = asdict(self)
        for key in ("alpha", "beta"):
            if out[key] is not None:
                out[key] = np.real(np.asarray(out[key])).tolist()
        return out

    @classmethod
    def from_dict(cls, data, location="config"):
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown keys {sorted(extra)}", location)
        return cls(**data)


def rng_for(cfg, salt=0):
    return np.random.Generator(np.random.PCG64([int(cfg.seed), int(salt)]))


def uniform(rng, shape=()):
    """Uniform numbers in [-1, 1] from integer draws."""
    return rng.integers(-10**6, 10**6, size=shape, endpoint=True) / 1e6


def make_grid(cfg):
    if cfg.backend == "cp1":
        return Cp1Grid(int(cfg.m))
    return TorusGrid(cfg.dim, int(cfg.m))


def make_reference(cfg, grid=None):
    grid = make_grid(cfg) if grid is None else grid
    if cfg.backend == "cp1":
        k = 0.5 if cfg.beta is None else float(np.real(np.asarray(cfg.beta)).ravel()[0])
        scale = 1.0 if cfg.alpha is None else float(np.real(np.asarray(cfg.alpha)).ravel()[0])
        w0 = np.full(grid.m, scale)
        return cp1_reference(grid, w0, k * w0, cfg.gamma_abs, cfg.theta_hat)
    n = cfg.dim
    alpha = np.eye(n) if cfg.alpha is None else np.real(np.asarray(cfg.alpha))
    beta = 0.5 * np.eye(n) if cfg.beta is None else np.real(np.asarray(cfg.beta))
    if cfg.beta is None and n == 2:
        beta = np.diag([0.4, 0.7])
    return torus_reference(grid, alpha, beta, cfg.gamma_abs, cfg.theta_hat)


def random_field(grid, rng, amplitude, kmax=2):
    """Smooth real field with sup norm ``amplitude`` built from low modes."""
    if grid.name == "cp1":
        coef = np.zeros(grid.m)
        ell = np.arange(1, 2 * kmax + 3)
        coef[ell] = uniform(rng, ell.size) / ell**2
        f = grid.synthesize(coef)
    else:
        modes = np.zeros(grid.shape, dtype=complex)
        idx = np.array(np.meshgrid(*([np.arange(-kmax, kmax + 1)] * len(grid.shape)), indexing="ij"))
        idx = idx.reshape(len(grid.shape), -1).T
        vals = uniform(rng, (len(idx), 2))
        for k, (a, b) in zip(idx, vals):
            if np.any(k):
                modes[tuple(k % grid.m)] = (a + 1j * b) / (1.0 + np.sum(k**2))
        f = np.real(np.fft.ifftn(modes))
    f = f - grid.integrate(f) / grid.integrate(np.ones(grid.shape))
    return amplitude * f / np.max(np.abs(f))


def random_potential(grid, rng, amp_re=0.03, amp_im=0.02):
    return random_field(grid, rng, amp_re) + 1j * random_field(grid, rng, amp_im)


def _quiet(fn, *args):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LostCalibration)
        return fn(*args)


# -- suites -------------------------------------------------------------------------

def suite_identities(cfg):
    rng = rng_for(cfg, 1)
    checks = []
    size = 10**4
    lam = 3 * uniform(rng, size)
    eta = 0.49 * np.pi * uniform(rng, size)
    u = uniform(rng, size) + 1j * uniform(rng, size)
    v = uniform(rng, size) + 1j * uniform(rng, size)
    sm = convexity_summands(lam, eta, u, v)
    scale = 1 + np.abs(u) ** 2 + np.abs(v) ** 2
    checks.append(Check.at_most("critical_summand_square", np.max(np.abs(sm.critical - sm.square_form) / scale), 1e-12))
    checks.append(Check.at_most("geodesic_summand_square", np.max(np.abs(sm.geodesic * np.cos(eta) - sm.square_form) / scale), 1e-12))
    n = cfg.dim
    a = uniform(rng, (1000, n, n)) + 1j * uniform(rng, (1000, n, n))
    om = a @ np.conj(np.swapaxes(a, -1, -2)) + 0.5 * np.eye(n)
    b = uniform(rng, (1000, n, n)) + 1j * uniform(rng, (1000, n, n))
    bf = b + np.conj(np.swapaxes(b, -1, -2))
    lam = relative_eigenvalues(om, bf)
    lhs = lagrangian_radius(lam) * np.exp(1j * lagrangian_phase(lam))
    rhs = np.linalg.det(bf + 1j * om) / np.linalg.det(om)
    checks.append(Check.at_most("phase_radius", np.max(np.abs(lhs - rhs) / np.abs(rhs)), 1e-10))

    grid = make_grid(cfg)
    ref = make_reference(cfg, grid)
    vpot = random_field(grid, rng, 0.02)
    metric = ref.metric(vpot)
    s = grid.scalar_curvature(metric)
    total = grid.integrate(s * grid.volume_density(metric))
    checks.append(Check.at_most("total_scalar_curvature", abs(total - ref.classes.c1_alpha), 1e-9))
    vol = grid.integrate(grid.volume_density(metric))
    checks.append(Check.at_most("volume_invariance", abs(vol - ref.volume), 1e-10 * ref.volume))
    if grid.name == "cp1":
        fs = grid.scalar_curvature(grid.identity_form())
        checks.append(Check.at_most("fubini_study_curvature", np.max(np.abs(fs - 1.0)), 1e-7))
    else:
        x = grid.coords()[0]
        dd = grid.ddbar(np.cos(2 * np.pi * x))[..., 0, 0]
        checks.append(Check.at_most("ddbar_fourier_mode", np.max(np.abs(dd + np.pi**2 * np.cos(2 * np.pi * x))), 1e-10))
    phi = random_potential(grid, rng)
    value, _, floor = _quiet(complexified_calabi, ref, phi)
    checks.append(Check.at_least("calabi_lower_bound", value - floor, -1e-10))
    return checks


def fd_sigma(ref, phi, direction, h=1e-3):
    """Richardson-extrapolated central difference of M along ``direction``."""
    f = lambda s: _quiet(complexified_k_energy, ref, phi + s * direction)
    d1 = (f(h) - f(-h)) / (2 * h)
    d2 = (f(2 * h) - f(-2 * h)) / (4 * h)
    return (4 * d1 - d2) / 3


def mixed_asymmetry(ref, phi, psi1, psi2, h=1e-4):
    """|d/ds sigma_{phi+s psi2}(psi1) - d/ds sigma_{phi+s psi1}(psi2)| and the larger of the two.

    Both derivatives are Richardson-extrapolated central differences.
    """
    def deriv(a, b):
        d = lambda s: (first_variation(ref, phi + s * b, a) - first_variation(ref, phi - s * b, a)) / (2 * s)
        return (4 * d(h) - d(2 * h)) / 3

    d12, d21 = deriv(psi1, psi2), deriv(psi2, psi1)
    return abs(d12 - d21), max(abs(d12), abs(d21))


def suite_variations(cfg):
    rng = rng_for(cfg, 2)
    grid = make_grid(cfg)
    ref = make_reference(cfg, grid)
    checks = []
    phi = random_potential(grid, rng)
    worst = 0.0
    for _ in range(3):
        direction = random_potential(grid, rng, 1.0, 1.0)
        sig = first_variation(ref, phi, direction)
        worst = max(worst, abs(sig - fd_sigma(ref, phi, direction)) / max(abs(sig), 1e-12))
    checks.append(Check.at_most("sigma_vs_finite_difference", worst, 1e-5))
    asym = 0.0
    for _ in range(2):
        psi1 = random_potential(grid, rng, 1.0, 1.0)
        psi2 = random_potential(grid, rng, 1.0, 1.0)
        err, scale = mixed_asymmetry(ref, phi, psi1, psi2)
        asym = max(asym, err / max(scale, 1.0))
    checks.append(Check.at_most("sigma_closedness", asym, 1e-8))
    zero = np.zeros(grid.shape, dtype=complex)
    low = np.inf
    for _ in range(5):
        d = random_potential(grid, rng, 1.0, 1.0)
        norm = float(grid.integrate(np.abs(d) ** 2))
        low = min(low, second_variation(ref, zero, d, zero) / norm)
    bound = -1e-10 if grid.name == "cp1" else 1e-6
    checks.append(Check.at_least("second_variation_at_solution", low, bound))
    return checks


def quadratic_path(ref, rng, count, t1=1.0, amp=0.2):
    """phi_t = t psi1 + t^2 psi2 on [0, t1] with ``count`` samples."""
    g = ref.grid
    psi1 = random_potential(g, rng, amp * 0.03, amp * 0.02)
    psi2 = random_potential(g, rng, amp * 0.03, amp * 0.02)
    times = np.linspace(0.0, t1, count)
    vals = np.array([t * psi1 + t**2 * psi2 for t in times])
    backend = "cp1" if g.name == "cp1" else "torus"
    return PotentialPath(times, vals, backend, g.n, g.m)


def annulus_ratio(ref, seed_cfg):
    errs = []
    for count in (9, 17):
        path = quadratic_path(ref, rng_for(seed_cfg, 3), count)
        res = annulus_residual(ref, path)
        mid = np.argmin(np.abs(res["times"] - 0.5))
        errs.append(res["identity_err"][mid])
    return errs[0] / errs[1]


def trivial_geodesic_checks(grid, k=0.8, coeff=0.7):
    ref = cp1_reference(grid, None, k * np.ones(grid.m))
    start = MomentumProfile(np.zeros(1))
    checks = []
    exact = trivial_geodesic_path(grid, start, coeff, k * np.ones(grid.m), np.linspace(0, 1, 9))
    _, r1, r2 = residual_coupled(ref, exact)
    checks.append(Check.at_most("trivial_geodesic_exact_residual", max(r1.max(), r2.max()), 1e-8))
    errs = []
    for count in (11, 21, 41):
        path = trivial_geodesic_path(grid, start, coeff, k * np.ones(grid.m), np.linspace(0, 1, count))
        fd = PotentialPath(path.times, path.values, "cp1", 1, grid.m)
        _, q1, q2 = residual_coupled(ref, fd)
        errs.append(max(q1.max(), q2.max()))
    rate = np.log2(errs[-2] / errs[-1])
    checks.append(Check.within("trivial_geodesic_fd_rate", rate, 1.7, 2.3))
    second = k_energy_probe(ref, exact)
    checks.append(Check.at_most("trivial_geodesic_affine", np.max(np.abs(second)), 1e-6))
    return checks


def hypercritical_checks(grid, rng, k=0.6, count=9):
    """Kahler-pair geodesics from affine profiles: omega_t and B_t / k each follow one.

    Both paths start at Fubini-Study, where B = k omega solves the system, so
    the phase is hypercritical for k > 0.
    """
    ref = cp1_reference(grid, None, k * np.ones(grid.m))
    theta = ref.classes.theta_hat
    start = MomentumProfile(np.zeros(1))
    times = np.linspace(0, 1, count)

    def profile():
        coef = np.zeros(5)
        coef[2:] = 0.05 * uniform(rng, 3)
        return MomentumProfile(coef).plus_affine(0.0, 0.3 * uniform(rng))

    v, vd, vdd, w = affine_profile_path(grid, start, profile(), times)
    y, yd, ydd, wb = affine_profile_path(grid, start, profile(), times)
    vals = k * (y - y[0]) + 1j * (v - v[0])
    path = PotentialPath(times, vals, "cp1", 1, grid.m, velocity=k * yd + 1j * vd,
                         acceleration=k * ydd + 1j * vdd)
    second = k_energy_probe(ref, path)
    lam = k * wb / w
    eta = lagrangian_phase(lam[..., None]) - theta
    weight = np.cos(eta) + np.sin(eta) / lam
    return [Check.at_least("hypercritical_convexity", np.min(second), -1e-6),
            Check.at_least("hypercritical_weight", np.min(weight), -1e-12)]


def suite_geodesics(cfg):
    rng = rng_for(cfg, 4)
    grid = make_grid(cfg)
    checks = []
    if grid.name == "cp1":
        checks.extend(trivial_geodesic_checks(grid))
        checks.extend(hypercritical_checks(grid, rng))
        return checks
    ref = make_reference(cfg, grid)
    checks.append(Check.within("annulus_second_order", annulus_ratio(ref, cfg), 3.5, 4.5))
    fine = quadratic_path(ref, rng_for(cfg, 5), 33)
    sv = second_variation_along_path(ref, fine, 16)
    checks.append(Check.at_most("second_variation_vs_fd",
                                abs(sv["analytic"] - sv["finite_diff"]) / max(abs(sv["analytic"]), 1e-12), 1e-2))
    if grid.n == 1:
        v1 = random_field(grid, rng, 0.01, kmax=1)
        tol = cfg.tol or 1e-10
        res = geodesic_bvp_epsilon(grid, np.zeros(grid.shape), v1, steps=16, epsilon=cfg.epsilon,
                                   cfg=SolverConfig(max_iters=40, tol=tol))
        checks.append(Check.at_most("epsilon_geodesic_residual", res.history[-1], tol))
    return checks


def suite_solvers(cfg):
    rng = rng_for(cfg, 6)
    grid = make_grid(cfg)
    ref = make_reference(cfg, grid)
    checks = []
    if grid.name == "torus" and grid.n == 1:
        tol = cfg.tol or 1e-8
        u0 = random_field(grid, rng, 0.05)
        res = dhym_flow(grid, u0, ref.omega0, ref.bfield0, ref.classes.theta_hat, SolverConfig(tol=tol))
        checks.append(Check.at_most("dhym_flow_residual", res.history[-1], tol))
        checks.append(Check.at_most("dhym_flow_recovers_zero", np.max(np.abs(res["u"])), 1e-6))
    if grid.name == "torus" and grid.n == 2:
        checks.extend(ma_checks(grid, rng, cfg.tol or 1e-7))
    phi0 = random_potential(grid, rng, 0.02, 0.01)
    tol = cfg.tol or 1e-7
    res = kenergy_descent(ref, phi0, SolverConfig(max_iters=100, tol=tol))
    checks.append(Check.at_most("kenergy_descent_residual", res["residuals"][-1], tol))
    checks.append(Check.at_most("kenergy_descent_monotone", max(0.0, float(np.max(np.diff(res.history), initial=0.0))), 1e-12))
    return checks


def ma_checks(grid, rng, tol=1e-7, theta_hat=1.1):
    om = grid.identity_form() + grid.ddbar(random_field(grid, rng, 0.01, kmax=1))
    chi = np.array([[1.6, 0.2], [0.2, 0.7]])
    chi = chi / np.sqrt(np.linalg.det(chi))
    res = ma_solve_surface(grid, om, chi, cfg=SolverConfig(max_iters=50, tol=min(tol, 1e-9)))
    chi_v = res["chi"] if res.converged else grid.constant_form(chi) + grid.ddbar(res["v"])
    target = grid.integrate(grid.volume_density(grid.constant_form(chi)))
    phase = phase_field(grid, om, bfield_from_chi(chi_v, om, theta_hat))
    return [Check.at_most("ma_residual", res.history[-1], tol),
            Check.at_most("ma_volume_conserved", abs(grid.integrate(grid.volume_density(chi_v)) - target), 1e-10),
            Check.at_most("ma_round_trip_phase", np.max(np.abs(phase - theta_hat)), 1e-6)]


def surface_pair(grid, gamma_tilde=0.7):
    chi = np.array([[1.3, 0.25], [0.25, 0.9]])
    chi = chi / np.sqrt(np.linalg.det(chi))
    return SurfacePair(grid, np.eye(2), chi, gamma_tilde)


def suite_surface(cfg):
    if cfg.backend != "torus-n2":
        raise ConfigError("the surface suite needs --backend torus-n2", "backend")
    rng = rng_for(cfg, 7)
    grid = make_grid(cfg)
    pair = surface_pair(grid, cfg.gamma_abs)
    checks = []
    u = random_field(grid, rng, 0.01)
    v = random_field(grid, rng, 0.01)
    x = (random_field(grid, rng, 1.0), random_field(grid, rng, 1.0))
    y = (random_field(grid, rng, 1.0), random_field(grid, rng, 1.0))
    qx = hessian_q_apply(pair, u, v, x)
    qy = hessian_q_apply(pair, u, v, y)
    a, b = q_pairing(pair, u, v, qx, y), q_pairing(pair, u, v, x, qy)
    checks.append(Check.at_most("q_self_adjoint", abs(a - b) / max(abs(a), 1.0), 1e-8))
    ones = np.ones(grid.shape)
    q1 = hessian_q_apply(pair, u, v, (ones, ones))
    checks.append(Check.at_most("q_kills_constants", max(np.max(np.abs(q1[0])), np.max(np.abs(q1[1]))), 1e-10))
    zero = np.zeros(grid.shape)
    scan = q_mode_scan(surface_pair(TorusGrid(2, 8), cfg.gamma_abs), kmax=1)
    checks.append(Check.at_least("q_positive_modes", min(e for _, _, e in scan), 1e-6))
    h = 3e-4
    du, dv = random_field(grid, rng, 1.0), random_field(grid, rng, 1.0)
    d = lambda e: (m_prime(pair, u + e * du, v + e * dv) - m_prime(pair, u - e * du, v - e * dv)) / (2 * e)
    fd = (4 * d(h) - d(2 * h)) / 3
    an = m_prime_variation(pair, u, v, du, dv)
    checks.append(Check.at_most("m_prime_variation", abs(fd - an) / max(abs(an), 1e-12), 1e-6))
    checks.append(Check.at_least("hessian_flat_nonnegative", hessian_form(pair, zero, zero, x, x), -1e-10))
    return checks


def futaki_checks(grid, rng, k=0.5, reps=5):
    ref = cp1_reference(grid, None, k * np.ones(grid.m))
    cd = ref.classes
    base = futaki_invariant(grid, np.ones(grid.m), k * np.ones(grid.m), cd)
    values = []
    for _ in range(reps):
        coef = np.zeros(5)
        coef[2:] = 0.05 * uniform(rng, 3)
        _, w, _ = legendre_transform(MomentumProfile(coef), grid)
        b = k * w + grid.ddbar(random_field(grid, rng, 0.05))[..., 0, 0].real
        values.append(futaki_invariant(grid, w, b, cd))
    spread = max(abs(z - values[0]) for z in values)
    return [Check.at_most("futaki_vanishes_at_solution", abs(base), 1e-8),
            Check.at_most("futaki_representative_independent", spread, 1e-6)]


def suite_futaki(cfg):
    if cfg.backend != "cp1":
        raise ConfigError("the Futaki suite needs --backend cp1", "backend")
    return futaki_checks(make_grid(cfg), rng_for(cfg, 8))


SUITE_FUNCS = {
    "identities": suite_identities,
    "variations": suite_variations,
    "geodesics": suite_geodesics,
    "solvers": suite_solvers,
    "surface": suite_surface,
    "futaki": suite_futaki,
}


def run_suite(cfg, suite):
    """Run a named suite; failed checks are recorded, not raised."""
    if suite not in SUITE_FUNCS:
        raise ConfigError(f"unknown suite {suite!r}", "suite")
    report = Report(config={**cfg.as_dict(), "suite": suite})
    report.extend(SUITE_FUNCS[suite](cfg))
    return report


def stability_report(cfg):
    ref = make_reference(cfg)
    cd = ref.classes
    chi = np.eye(cfg.dim)
    out = stability_check_top(cd, chi)
    report = Report(config={**cfg.as_dict(), "command": "stability"})
    for p, val in enumerate(out["inequalities"], start=1):
        report.add(Check.at_most(f"top_inequality_p{p}", val, 1e-10))
    report.add(Check(("supercritical"), float(cd.theta_hat), float(np.pi), cd.is_supercritical()))
    return report
