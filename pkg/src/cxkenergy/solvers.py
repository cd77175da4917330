"""Iterative solvers: dHYM flow, surface Monge-Ampere, epsilon-geodesics, K-energy descent.

Every solver returns a ``SolverResult``; failing to converge sets
``converged = False`` and keeps the history rather than raising.
"""
import json
import warnings
from dataclasses import dataclass, field, fields
from math import factorial
from typing import Optional

import numpy as np
from scipy.fft import dst, idst
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import (ConfigError, EpsilonTooSmall, LostCalibration, LostPositivity,
                     NonPositiveMetric, VolumeMismatch)
from .fieldio import export_csv
from .functionals import calibration_margin, complexified_k_energy, gradient
from .paths import PotentialPath
from .pointwise import det, inv, lagrangian_phase, relative_eigenvalues


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 10000
    tol: float = 1e-8
    step: Optional[float] = None
    damping: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self):
        if int(self.max_iters) < 0:
            raise ConfigError("max_iters must be non-negative", "max_iters")
        if not self.tol > 0:
            raise ConfigError("tol must be positive", "tol")
        if self.step is not None and not self.step > 0:
            raise ConfigError("step must be positive", "step")
        if not 0 < self.damping <= 1:
            raise ConfigError("damping must lie in (0, 1]", "damping")
        if not self.epsilon >= 0:
            raise ConfigError("epsilon must be non-negative", "epsilon")

    @classmethod
    def from_dict(cls, data, location="config"):
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown keys {sorted(extra)}", location)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc), location) from exc

    @classmethod
    def from_json(cls, text_or_path):
        """Parse a JSON object (given as text or as a file path)."""
        location = "<json>"
        text = text_or_path
        if not str(text_or_path).lstrip().startswith("{"):
            location = str(text_or_path)
            try:
                with open(text_or_path) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(str(exc), location) from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}", location) from exc
        if not isinstance(data, dict):
            raise ConfigError("expected a JSON object", location)
        return cls.from_dict(data, location)


@dataclass
class SolverResult:
    converged: bool
    iterations: int
    history: list = field(default_factory=list)
    fields: dict = field(default_factory=dict)
    message: str = "converged"

    def __getitem__(self, key):
        return self.fields[key]

    def history_csv(self, path, name="residual"):
        export_csv(path, {"iteration": np.arange(len(self.history)), name: np.array(self.history)})


# -- dHYM flow -----------------------------------------------------------------

def phase_field(grid, metric, bfield):
    """Lagrangian phase of (omega, B) at every grid point."""
    if grid.n == 1:
        lam = np.real(bfield[..., 0, 0]) / np.real(metric[..., 0, 0])
        return lagrangian_phase(lam[..., None])
    return lagrangian_phase(relative_eigenvalues(metric, bfield, check=False))


def dhym_flow(grid, u0, metric, bfield0, theta_hat, cfg=SolverConfig()):
    """Explicit flow du/dt = theta_hat - Theta(omega^{-1} B_u) towards the dHYM solution.

    The phase decreases as B grows, so this sign makes the flow parabolic.
    The default step is 1.5 / (largest Laplace eigenvalue * sup of the
    linearized coefficient), halved (times ``damping``) whenever the residual
    increases. Returns u mean-zero and the sup-residual history.
    """
    u = grid.mean_zero(np.asarray(u0, dtype=float))
    ev_min = np.min(np.linalg.eigvalsh(metric)) if grid.n > 1 else np.min(np.real(metric[..., 0, 0]))
    lam = relative_eigenvalues(metric, bfield0 + grid.ddbar(u), check=False)
    coef = np.max(1.0 / (1.0 + np.real(lam) ** 2)) / ev_min
    auto = 1.5 / (np.max(grid.laplace_symbol) * coef)
    step = auto if cfg.step is None else cfg.step
    margin = np.cos(phase_field(grid, metric, bfield0 + grid.ddbar(u)) - theta_hat)
    if np.any(margin <= 0):
        warnings.warn("initial B-field is not almost calibrated", LostCalibration, stacklevel=2)
    history = []
    for it in range(cfg.max_iters + 1):
        res = theta_hat - phase_field(grid, metric, bfield0 + grid.ddbar(u))
        sup = float(np.max(np.abs(res)))
        if history and sup > history[-1]:
            step *= 0.5 * cfg.damping
        history.append(sup)
        if sup <= cfg.tol:
            return SolverResult(True, it, history, {"u": u})
        if it == cfg.max_iters:
            break
        u = grid.mean_zero(u + step * res)
    return SolverResult(False, cfg.max_iters, history, {"u": u}, "iteration limit reached")


# -- surface Monge-Ampere -----------------------------------------------------------

def ma_solve_surface(grid, metric, chi_class, v0=None, cfg=SolverConfig(max_iters=50, tol=1e-10)):
    """Damped Newton for det(chi0 + i ddbar v) = det(omega) on the 2-torus.

    Linear steps use GMRES with the inverse flat Laplacian as preconditioner
    (the linearized operator is not symmetric). Steps are halved on loss of
    positivity or on residual increase.
    """
    if grid.n != 2:
        raise ValueError("surface solver needs complex dimension 2")
    chi0 = grid.constant_form(chi_class)
    target = grid.logdet(metric)
    vol_om = grid.integrate(2 * np.real(det(metric)))
    vol_chi = 2 * np.real(det(np.asarray(chi_class)))
    if abs(vol_om - vol_chi) > 1e-10 * abs(vol_om):
        raise VolumeMismatch(f"class volumes differ: {vol_om} vs {vol_chi}")
    v = np.zeros(grid.shape) if v0 is None else grid.mean_zero(np.asarray(v0, dtype=float))
    mu = grid.laplace_symbol
    history = []

    def residual(vv):
        return grid.logdet(chi0 + grid.ddbar(vv)) - target

    r = residual(v)
    for it in range(cfg.max_iters + 1):
        sup = float(np.max(np.abs(r)))
        history.append(sup)
        if sup <= cfg.tol:
            return SolverResult(True, it, history, {"v": v, "chi": chi0 + grid.ddbar(v)})
        if it == cfg.max_iters:
            break
        ainv = inv(chi0 + grid.ddbar(v))
        scale = np.mean(np.real(np.trace(ainv, axis1=-2, axis2=-1))) / grid.n

        def jac(x):
            x = x.reshape(grid.shape)
            return np.real(np.einsum("...kj,...jk->...", ainv, grid.ddbar(x))).ravel()

        def prec(x):
            return grid.apply_symbol(x.reshape(grid.shape),
                                     lambda m: np.where(m > 0, -1.0 / (scale * grid.n * np.where(m > 0, m, 1)), 0)).ravel()

        size = r.size
        op = LinearOperator((size, size), matvec=jac)
        pre = LinearOperator((size, size), matvec=prec)
        delta, _ = gmres(op, -r.ravel(), M=pre, rtol=1e-9, atol=0.0, restart=40, maxiter=3)
        delta = grid.mean_zero(delta.reshape(grid.shape))
        alpha = cfg.damping
        while alpha > 1e-6:
            try:
                r_new = residual(v + alpha * delta)
            except (LostPositivity, NonPositiveMetric):
                alpha *= 0.5
                continue
            if np.max(np.abs(r_new)) < sup:
                break
            alpha *= 0.5
        else:
            return SolverResult(False, it, history, {"v": v}, "line search failed")
        v = grid.mean_zero(v + alpha * delta)
        r = r_new
    return SolverResult(False, cfg.max_iters, history, {"v": v}, "iteration limit reached")


# -- epsilon-regularized geodesic (torus, n = 1) ---------------------------------

def geodesic_bvp_epsilon(grid, v_start, v_end, steps=32, epsilon=0.0, cfg=SolverConfig(max_iters=40, tol=1e-10)):
    """Solve v''(1 + v_zzbar) - |v'_z|^2 = epsilon between two potentials on the flat 1-torus.

    ``steps`` uniform time intervals; the interior unknowns are updated by
    Newton with GMRES, preconditioned by the constant-coefficient operator
    diagonalized by a sine transform in t and the FFT in space. Returns a
    SolverResult whose ``path`` field is a PotentialPath with values i v_t.
    """
    if grid.n != 1 or grid.name != "torus":
        raise ValueError("the epsilon-geodesic solver runs on the 1-torus")
    if epsilon < 0:
        raise EpsilonTooSmall("epsilon must be non-negative")
    for end in (v_start, v_end):
        grid.logdet(grid.identity_form() + grid.ddbar(end))
    v_start = np.asarray(v_start, dtype=float)
    v_end = np.asarray(v_end, dtype=float)
    dt = 1.0 / steps
    times = np.linspace(0.0, 1.0, steps + 1)
    nint = steps - 1
    shape = (nint,) + grid.shape
    v = np.array([(1 - t) * v_start + t * v_end for t in times[1:-1]])
    ddbar = lambda f: np.real(grid.ddbar(f)[..., 0, 0])
    dzs = lambda f: grid.dz(f)[..., 0]
    jvals = np.arange(1, nint + 1)
    lam_t = (2.0 / dt**2) * (1 - np.cos(np.pi * jvals / steps))
    mu = grid.laplace_symbol

    def full(vi):
        return np.concatenate([v_start[None], vi, v_end[None]])

    def parts(vi):
        vf = full(vi)
        vdd = (vf[2:] - 2 * vf[1:-1] + vf[:-2]) / dt**2
        vd = (vf[2:] - vf[:-2]) / (2 * dt)
        g = 1.0 + np.stack([ddbar(x) for x in vi])
        vdz = np.stack([dzs(x) for x in vd])
        return vdd, vd, g, vdz

    def residual(vi):
        vdd, _, g, vdz = parts(vi)
        return vdd * g - np.abs(vdz) ** 2 - epsilon

    history = []
    r = residual(v)
    for it in range(cfg.max_iters + 1):
        sup = float(np.max(np.abs(r)))
        history.append(sup)
        if sup <= cfg.tol:
            break
        if it == cfg.max_iters:
            break
        vdd, _, g, vdz = parts(v)
        a = float(np.mean(g))
        b = max(float(np.mean(vdd)), 0.0)

        def jac(x):
            d = x.reshape(shape)
            dfull = np.concatenate([np.zeros((1,) + grid.shape), d, np.zeros((1,) + grid.shape)])
            ddd = (dfull[2:] - 2 * dfull[1:-1] + dfull[:-2]) / dt**2
            dd = (dfull[2:] - dfull[:-2]) / (2 * dt)
            dzz = np.stack([ddbar(x) for x in d])
            ddz = np.stack([dzs(x) for x in dd])
            return (ddd * g + vdd * dzz - 2 * np.real(np.conj(vdz) * ddz)).ravel()

        def prec(x):
            y = dst(x.reshape(shape), type=1, axis=0)
            yh = np.fft.fftn(y, axes=range(1, y.ndim))
            sym = -(a * lam_t.reshape((-1,) + (1,) * len(grid.shape)) + b * mu[None])
            yh = yh / sym
            y = np.real(np.fft.ifftn(yh, axes=range(1, y.ndim)))
            return idst(y, type=1, axis=0).ravel()

        size = int(np.prod(shape))
        op = LinearOperator((size, size), matvec=jac)
        pre = LinearOperator((size, size), matvec=prec)
        delta, _ = gmres(op, -r.ravel(), M=pre, rtol=1e-12, atol=0.0, restart=80, maxiter=5)
        delta = delta.reshape(shape)
        alpha = cfg.damping
        while alpha > 1e-6:
            cand = v + alpha * delta
            if np.all(1.0 + np.stack([ddbar(x) for x in cand]) > 0):
                r_new = residual(cand)
                if np.max(np.abs(r_new)) < sup:
                    break
            alpha *= 0.5
        else:
            history.append(sup)
            break
        v = v + alpha * delta
        r = r_new
    converged = history[-1] <= cfg.tol
    vdd, _, g, vdz = parts(v)
    lifted = vdd * g - np.abs(vdz) ** 2
    if converged and epsilon > 0 and np.any(lifted <= 0):
        raise EpsilonTooSmall("lifted form lost positivity; increase epsilon")
    path = PotentialPath(times, 1j * full(v), "torus", 1, grid.m)
    return SolverResult(converged, len(history) - 1, history, {"path": path},
                        "converged" if converged else "Newton iteration did not reach tol")


# -- K-energy descent ----------------------------------------------------------------

def system_residuals(ref, phi):
    """sup |Im(gamma Omega^n)/omega^n| and sup |s - c - Re(gamma Omega^n)/omega^n|."""
    g = ref.grid
    cd = ref.classes
    om = ref.metric(np.imag(phi))
    ratio = cd.gamma * det(ref.complex_form(phi)) / np.real(det(om))
    s = g.scalar_curvature(om)
    return float(np.max(np.abs(ratio.imag))), float(np.max(np.abs(s - cd.c_gamma - ratio.real)))


def _lichnerowicz_symbol(grid, mu):
    if grid.name == "cp1":
        return mu * np.maximum(mu - 1.0, 0.0) + 0.1 * mu
    return mu**2


def kenergy_descent(ref, phi0, cfg=SolverConfig(max_iters=200, tol=1e-7)):
    """Preconditioned gradient descent on the complexified K-energy.

    The L^2 gradient (a, b) of sigma is preconditioned mode by mode with the
    Hessian at a constant-coefficient solution: for a Laplace eigenvalue mu
    the block is [[A mu, -A lam mu], [-A lam mu, L(mu) + A lam^2 mu]] with
    A = |gamma| r / (1 + lam^2), lam the mean relative eigenvalue of the
    reference and L the Lichnerowicz symbol. An Armijo line search keeps M
    decreasing; once changes of M drop below its rounding level a step is
    accepted if it lowers the system residual. The gauge stays mean-zero.
    """
    g = ref.grid
    cd = ref.classes
    phi = np.asarray(phi0, dtype=complex)
    phi = g.mean_zero(phi.real) + 1j * g.mean_zero(phi.imag)
    if np.any(calibration_margin(ref, phi) <= 0):
        warnings.warn("initial potential is not almost calibrated", LostCalibration, stacklevel=2)
    lam = float(np.mean(np.real(relative_eigenvalues(ref.omega0, ref.bfield0, check=False))))
    r = float(np.sqrt(1 + lam**2)) ** ref.n
    amp = cd.gamma_abs * r / (1 + lam**2)
    mu = g.laplace_symbol
    lich = _lichnerowicz_symbol(g, mu)
    b11 = amp * mu
    b12 = -amp * lam * mu
    b22 = lich + amp * lam**2 * mu
    dets = b11 * b22 - b12**2
    safe = np.where(dets > 1e-14 * np.maximum(1.0, b11 * b22), dets, np.inf)

    def precondition(a, b):
        ah = _coeffs(g, a)
        bh = _coeffs(g, b)
        xh = (b22 * ah - b12 * bh) / safe
        yh = (-b12 * ah + b11 * bh) / safe
        return _synth(g, xh), _synth(g, yh)

    def energy(p):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LostCalibration)
            return complexified_k_energy(ref, p)

    m_cur = energy(phi)
    history = [m_cur]
    res_hist = []
    for it in range(cfg.max_iters + 1):
        res = max(system_residuals(ref, phi))
        res_hist.append(res)
        if res <= cfg.tol:
            return SolverResult(True, it, history, {"phi": phi, "residuals": res_hist})
        if it == cfg.max_iters:
            break
        if it >= 10 and res >= 0.5 * min(res_hist[-10:-1]):
            return SolverResult(False, it, history, {"phi": phi, "residuals": res_hist},
                                "stagnated: energy differences below rounding")
        a, b = gradient(ref, phi)
        x, y = precondition(a, b)
        x, y = g.mean_zero(x), g.mean_zero(y)
        direction = x + 1j * y
        slope = float(g.integrate(a * x + b * y))
        if slope <= 0:
            return SolverResult(False, it, history, {"phi": phi, "residuals": res_hist},
                                "preconditioned gradient is not a descent direction")
        alpha = cfg.step or 1.0
        while alpha > 1e-10:
            cand = phi - alpha * direction
            try:
                m_new = energy(cand)
            except (LostPositivity, NonPositiveMetric):
                alpha *= 0.5
                continue
            if m_new <= m_cur - 1e-4 * alpha * slope:
                break
            # below rounding of M, fall back on the residual
            if m_new - m_cur <= 1e-13 * max(1.0, abs(m_cur)) and max(system_residuals(ref, cand)) < res:
                break
            alpha *= 0.5
        else:
            return SolverResult(False, it, history, {"phi": phi, "residuals": res_hist}, "line search failed")
        phi = cand
        m_cur = m_new
        history.append(m_cur)
    return SolverResult(False, cfg.max_iters, history, {"phi": phi, "residuals": res_hist}, "iteration limit reached")


def _coeffs(grid, f):
    if grid.name == "cp1":
        return grid.coefficients(f)
    return np.fft.fftn(f)


def _synth(grid, c):
    if grid.name == "cp1":
        return grid.synthesize(c)
    return np.real(np.fft.ifftn(c))


# -- coupled geodesic by integration in time ------------------------------------------

def coupled_geodesic_ivp(ref, imag_path, u0, udot0, times):
    """Integrate the second coupled geodesic equation for u given v_t (n = 1).

    ``imag_path(t)`` returns (v, vdot, vddot) at time t, typically an exact
    Kahler geodesic. The second equation is solved for u'' as
    u'' = [Re(e^{-i theta} P) + v'' Im(e^{-i theta} Omega)] / Re(e^{-i theta} Omega)
    with P = dz(phi') dzbar(phi'), and integrated with classical RK4.
    Returns a PotentialPath with exact velocities from the integrator state.
    """
    g = ref.grid
    if g.n != 1:
        raise ValueError("the coupled integrator is written for complex dimension 1")
    rot = np.exp(-1j * ref.classes.theta_hat)

    def accel(t, u, ud):
        v, vd, vdd = imag_path(t)
        phi = u + 1j * v
        phid = ud + 1j * vd
        oc = ref.complex_form(phi)[..., 0, 0]
        pq = g.dz(phid)[..., 0] * g.dzbar(phid)[..., 0]
        re_cal = np.real(rot * oc)
        if np.any(re_cal <= 0):
            raise LostCalibration("path left the almost calibrated set")
        return (np.real(rot * pq) + vdd * np.imag(rot * oc)) / re_cal

    times = np.asarray(times, dtype=float)
    u = np.asarray(u0, dtype=float).copy()
    ud = np.asarray(udot0, dtype=float).copy()
    vals, vels, accs = [], [], []
    for k, t in enumerate(times):
        v, vd, vdd = imag_path(t)
        a = accel(t, u, ud)
        vals.append(u + 1j * v)
        vels.append(ud + 1j * vd)
        accs.append(a + 1j * vdd)
        if k == len(times) - 1:
            break
        h = times[k + 1] - t
        k1u, k1v = ud, a
        k2u, k2v = ud + 0.5 * h * k1v, accel(t + 0.5 * h, u + 0.5 * h * k1u, ud + 0.5 * h * k1v)
        k3u, k3v = ud + 0.5 * h * k2v, accel(t + 0.5 * h, u + 0.5 * h * k2u, ud + 0.5 * h * k2v)
        k4u, k4v = ud + h * k3v, accel(t + h, u + h * k3u, ud + h * k3v)
        u = u + h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        ud = ud + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    backend = "cp1" if g.name == "cp1" else "torus"
    return PotentialPath(times, np.array(vals), backend, 1, g.m, velocity=np.array(vels),
                         acceleration=np.array(accs))
