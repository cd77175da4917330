"""S^1-invariant geometry on CP^1 in momentum coordinates.

Points of CP^1 modulo the circle action are labelled by the Fubini-Study
moment coordinate x in [-1, 1]. With h(x) = (1 - x^2)/2:

* an invariant (1,1)-form is a density w(x) against dx; Fubini-Study is w = 1
  and has total mass 2,
* i ddbar f has density (h f')',
* |df|^2 with respect to w is h f'^2 / w,
* the scalar curvature of w is (1 - (h w'/w)') / w, so Fubini-Study has s = 1
  and the Ricci form has total mass 2.

Fields are sampled at Gauss-Legendre nodes and differentiated through the
Legendre series, which is spectrally accurate for the smooth invariant data
used here. The backend exposes the same interface as ``TorusGrid`` with
n = 1, so every functional runs unchanged on either space.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as L

from .errors import LostConvexity, LostPositivity, NotDHYMSolution, PhaseOutOfRange
from .fieldio import export_csv
from .pointwise import arccot


def fs_potential(x):
    """Symplectic potential (1+x)log(1+x) + (1-x)log(1-x) of Fubini-Study."""
    x = np.asarray(x, dtype=float)
    return (1 + x) * np.log1p(x) + (1 - x) * np.log1p(-x)


def fs_potential_d1(x):
    return np.log1p(x) - np.log1p(-x)


class Cp1Grid:
    """Gauss-Legendre nodes on (-1, 1) carrying invariant fields on CP^1."""

    name = "cp1"
    n = 1

    def __init__(self, nodes=64):
        if nodes < 8:
            raise ValueError("need at least 8 nodes")
        self.m = nodes
        self.shape = (nodes,)
        self.x, self.wq = L.leggauss(nodes)
        self.h = 0.5 * (1 - self.x**2)
        ell = np.arange(nodes)
        self._vander = L.legvander(self.x, nodes - 1)
        # exact analysis: c_l = (2l+1)/2 sum_i wq_i P_l(x_i) f_i
        self._analysis = (self._vander * self.wq[:, None]).T * ((2 * ell + 1) / 2)[:, None]
        dcoef = np.zeros((nodes, nodes))
        for j in range(nodes):
            e = np.zeros(nodes)
            e[j] = 1.0
            d = L.legder(e)
            dcoef[: d.size, j] = d
        self.dmat = self._vander @ dcoef @ self._analysis
        self.laplace_symbol = ell * (ell + 1) / 2.0
        self.sqrt_h = np.sqrt(self.h)

    def __repr__(self):
        return f"Cp1Grid(nodes={self.m})"

    @property
    def size(self):
        return self.m

    @property
    def weights(self):
        return self.wq.copy()

    def coords(self):
        return [self.x]

    def identity_form(self, scale=1.0):
        return np.full((self.m, 1, 1), scale, dtype=complex)

    def constant_form(self, matrix):
        return np.full((self.m, 1, 1), complex(np.ravel(matrix)[0]))

    # -- series helpers ----------------------------------------------------
    def coefficients(self, f):
        return self._analysis @ f

    def synthesize(self, coef):
        return self._vander @ coef

    def evaluate(self, f, points):
        """Evaluate the interpolant of nodal values ``f`` at arbitrary points."""
        return L.legval(points, self.coefficients(f))

    def deriv(self, f):
        return self.dmat @ f

    def primitive(self, f):
        """Antiderivative vanishing at x = -1."""
        c = L.legint(self.coefficients(f), lbnd=-1)
        return L.legval(self.x, c)

    # -- complex derivatives -------------------------------------------------
    def dz(self, f):
        """Frame component sqrt(h) f' of df (|df|^2_w = |dz f|^2 / w)."""
        return (self.sqrt_h * self.deriv(f))[:, None]

    def dzbar(self, f):
        return self.dz(f)

    def ddbar(self, f):
        return self.deriv(self.h * self.deriv(f))[:, None, None]

    def laplacian(self, f):
        return self.deriv(self.h * self.deriv(f))

    def apply_symbol(self, f, fn):
        return self.synthesize(fn(self.laplace_symbol) * self.coefficients(f))

    # -- integration -------------------------------------------------------
    def integrate(self, density):
        return np.dot(self.wq, density)

    def mean_zero(self, f, metric=None):
        if metric is None:
            return f - self.integrate(f) / 2.0
        w = self.volume_density(metric)
        return f - self.integrate(f * w) / self.integrate(w)

    def volume_density(self, metric):
        return np.real(metric[..., 0, 0])

    def assemble_form(self, class_matrix, potential, metric=True):
        form = self.constant_form(class_matrix) + self.ddbar(potential)
        if metric:
            self.check_metric(form)
        return form

    def integrate_form(self, density, volume):
        return self.integrate(density * volume[..., 0, 0])

    def check_metric(self, metric):
        w = self.volume_density(metric)
        bad = np.flatnonzero(~(w > 0))
        if bad.size:
            err = LostPositivity(f"metric density is not positive at node {int(bad[0])}")
            err.index = (int(bad[0]),)
            raise err
        return w

    # -- curvature ---------------------------------------------------------
    def logdet(self, metric):
        return np.log(self.check_metric(metric))

    def ricci_form(self, metric):
        return (1.0 - self.laplacian(self.logdet(metric)))[:, None, None]

    def scalar_curvature(self, metric):
        w = self.volume_density(metric)
        return np.real(self.ricci_form(metric)[:, 0, 0]) / w

    def lichnerowicz_density(self, u, metric):
        w = self.check_metric(metric)
        t = self.h * self.deriv(self.deriv(u) / w)
        return np.abs(t) ** 2

    def lichnerowicz_seminorm(self, u, metric):
        return float(self.integrate(self.lichnerowicz_density(u, metric) * self.volume_density(metric)))


def density_form(w):
    """Wrap a density array as a stack of 1 x 1 form coefficients."""
    return np.asarray(w, dtype=complex)[:, None, None]


@dataclass(frozen=True)
class MomentumProfile:
    """Symplectic potential U = U_FS + P with P a Legendre series.

    The Fubini-Study part carries the boundary behaviour, the polynomial
    correction ``coef`` is smooth up to the boundary. The moment interval is
    [-1, 1], i.e. the Kahler class has total mass 2.
    """

    coef: np.ndarray = field(default_factory=lambda: np.zeros(1))
    class_scale: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "coef", np.atleast_1d(np.asarray(self.coef, dtype=float)))

    def value(self, y):
        return fs_potential(y) + L.legval(y, self.coef)

    def d1(self, y):
        return fs_potential_d1(y) + L.legval(y, L.legder(self.coef))

    def d2(self, y):
        hy = 0.5 * (1 - np.asarray(y) ** 2)
        return 1.0 / hy + L.legval(y, L.legder(self.coef, 2))

    def metric_coefficient(self, y):
        """1 / U'' written without the boundary singularity."""
        hy = 0.5 * (1 - np.asarray(y) ** 2)
        return hy / (1.0 + hy * L.legval(y, L.legder(self.coef, 2)))

    def check_convex(self, grid):
        q = 1.0 + grid.h * L.legval(grid.x, L.legder(self.coef, 2))
        bad = np.flatnonzero(~(q > 0))
        if bad.size:
            raise LostConvexity(f"symplectic potential is not convex at node {int(bad[0])}")

    def plus_affine(self, a0, a1):
        c = np.zeros(max(2, self.coef.size))
        c[: self.coef.size] = self.coef
        c[0] += a0
        c[1] += a1
        return MomentumProfile(c)

    def interpolate(self, other, t):
        size = max(self.coef.size, other.coef.size)
        a = np.zeros(size)
        b = np.zeros(size)
        a[: self.coef.size] = self.coef
        b[: other.coef.size] = other.coef
        return MomentumProfile((1 - t) * a + t * b)


def abreu_scalar_curvature(profile, grid):
    """s = -(1/U'')'' at the grid nodes of the profile's own moment coordinate."""
    profile.check_convex(grid)
    return -grid.deriv(grid.deriv(profile.metric_coefficient(grid.x)))


def _solve_moment(profile, rho, iters=80):
    """Solve U'(mu) = rho for mu in (-1, 1), vectorized bisection then Newton."""
    lo = np.full_like(rho, -1.0)
    hi = np.full_like(rho, 1.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        up = profile.d1(mid) > rho
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    mu = 0.5 * (lo + hi)
    for _ in range(3):
        step = (profile.d1(mu) - rho) * profile.metric_coefficient(mu)
        mu = np.clip(mu - step, lo, hi)
    return mu


def legendre_transform(profile, grid):
    """Kahler data of a symplectic potential on the Fubini-Study x-grid.

    Returns ``(v, w, mu)``: the Kahler potential relative to Fubini-Study, the
    density of the metric and the moment map of the metric at each node.
    """
    profile.check_convex(grid)
    x = grid.x
    rho = fs_potential_d1(x)
    mu = _solve_moment(profile, rho)
    v = (mu - x) * rho - profile.value(mu) + fs_potential(x)
    w = profile.metric_coefficient(mu) / grid.h
    return v, w, mu


def profile_from_potential(grid, v):
    """Inverse Legendre transform: samples (y, U(y)) of the symplectic potential of w = 1 + (h v')'."""
    x = grid.x
    rho = fs_potential_d1(x)
    y = x + grid.h * grid.deriv(v)
    return y, (y - x) * rho + fs_potential(x) - v


def dhym_fiber_solution(w, theta_hat):
    """Density of the B-field with arccot(b/w) = theta_hat pointwise."""
    if not 0 < theta_hat < np.pi:
        raise PhaseOutOfRange(f"theta_hat = {theta_hat} is outside (0, pi)")
    return np.asarray(w, dtype=float) / np.tan(theta_hat)


def fiber_phase(w, b):
    return arccot(np.asarray(b) / np.asarray(w))


def holomorphy_potential(grid, w, coeff=1.0):
    """Holomorphy potential of coeff * (generator of the C^* action) for density w.

    This is coeff times the moment map, a primitive of w, normalized to have
    zero mean against w.
    """
    mu = coeff * grid.primitive(w)
    return grid.mean_zero(mu, density_form(w))


def companion_potential(grid, w, b, coeff=1.0):
    """Potential f with grad^{1,0} mu contracted into B equal to i dbar f (f' = coeff * b)."""
    f = coeff * grid.primitive(b)
    return grid.mean_zero(f, density_form(w))


def kernel_residuals(grid, w, b, mu, f):
    """Residuals of the two kernel equations: (||D mu||^2, sup |f' - mu' b / w|)."""
    lich = grid.lichnerowicz_seminorm(mu, density_form(w))
    second = np.max(np.abs(grid.deriv(f) - grid.deriv(mu) * b / w))
    return lich, float(second)


def futaki_invariant(grid, w, b, class_data, coeff=1.0):
    """Futaki invariant of the classes evaluated on coeff * (C^* generator).

    Computed as sigma(f + i mu) = int f Im(gamma Omega) + mu (Re(gamma Omega) - (s - c) w)
    with Omega = b + i w. The constant c makes the value independent of how
    the potentials are normalized. The result is real for the real generator
    and is returned as a complex number (the map is complex-linear).
    """
    w = np.asarray(w, dtype=float)
    b = np.asarray(b, dtype=float)
    metric = density_form(w)
    grid.check_metric(metric)
    mu = holomorphy_potential(grid, w, coeff)
    f = companion_potential(grid, w, b, coeff)
    s = grid.scalar_curvature(metric)
    gom = class_data.gamma * (b + 1j * w)
    dens = f * gom.imag + mu * (gom.real - (s - class_data.c_gamma) * w)
    return complex(grid.integrate(dens))


def fs_trivial_geodesic(x, t, coeff=1.0):
    """Closed form 2 log(cosh(ct/2) + x sinh(ct/2)) of the trivial geodesic from Fubini-Study."""
    a = np.multiply.outer(0.5 * coeff * np.asarray(t, dtype=float), np.ones_like(x))
    return 2.0 * np.log(np.cosh(a) + np.sinh(a) * x)


def affine_profile_path(grid, start, end, times):
    """Kahler geodesic between two profiles: the symplectic potential moves affinely in t.

    Returns ``(v, vdot, vddot, w)`` sampled at ``times`` with v relative to
    Fubini-Study. Time derivatives are exact: vdot = -Udot(mu) and
    vddot = Udot'(mu)^2 / U''(mu), with Udot = U_end - U_start.
    """
    size = max(start.coef.size, end.coef.size)
    a = np.zeros(size)
    b = np.zeros(size)
    a[: start.coef.size] = start.coef
    b[: end.coef.size] = end.coef
    dcoef = b - a
    out = {"v": [], "vdot": [], "vddot": [], "w": []}
    for t in np.atleast_1d(times):
        prof = MomentumProfile((1 - t) * a + t * b)
        v, w, mu = legendre_transform(prof, grid)
        out["v"].append(v)
        out["w"].append(w)
        out["vdot"].append(-L.legval(mu, dcoef))
        out["vddot"].append(L.legval(mu, L.legder(dcoef)) ** 2 * prof.metric_coefficient(mu))
    return tuple(np.array(out[k]) for k in ("v", "vdot", "vddot", "w"))


def trivial_geodesic_path(grid, start_profile, affine_coeff, b0, times, tol=1e-8):
    """Trivial geodesic generated by affine_coeff times the C^* generator.

    ``b0`` is the B-field density; it must solve the fiber dHYM equation with
    respect to the metric of ``start_profile`` (b0 = k w0 for a constant k).
    The imaginary part is the Kahler geodesic U_t = U_0 - t * coeff * y and
    the real part is k times it. Potentials are taken relative to the start.
    Returns a ``PotentialPath`` with exact velocity and acceleration.
    """
    from .paths import PotentialPath

    v0, w0, _ = legendre_transform(start_profile, grid)
    ratio = np.asarray(b0, dtype=float) / w0
    k = float(np.sum(grid.wq * ratio * w0) / np.sum(grid.wq * w0))
    if np.max(np.abs(ratio - k)) > tol:
        raise NotDHYMSolution(
            f"B-field phase varies by {np.ptp(fiber_phase(w0, b0)):.3e} over the sphere"
        )
    end = start_profile.plus_affine(0.0, -affine_coeff)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    v, vdot, vddot, _ = affine_profile_path(grid, start_profile, end, times)
    v = v - v0
    psi = (k + 1j) * v
    return PotentialPath(times, psi, backend="cp1", dim=1, m=grid.m,
                         velocity=(k + 1j) * vdot, acceleration=(k + 1j) * vddot)


def export_profile_csv(path, grid, w, b):
    """Write x, w, b, s and the fiber phase to CSV."""
    metric = density_form(w)
    export_csv(path, {
        "x": grid.x,
        "w": np.asarray(w, dtype=float),
        "b": np.asarray(b, dtype=float),
        "s": grid.scalar_curvature(metric),
        "theta": fiber_phase(w, b),
    })
