"""Flat complex torus C^n / (Z + iZ)^n sampled on a uniform periodic grid.

Scalar fields are arrays of shape ``(m,) * 2n`` with axes ordered
``(x1, y1, x2, y2, ...)`` where ``z_j = x_j + i y_j``. (1,1)-form fields are
arrays of shape ``(m,) * 2n + (n, n)`` holding the coefficients ``A_jk`` of
``i sum A_jk dz_j ^ dz̄_k``.

Derivatives are Fourier multipliers. The Nyquist wavenumber is dropped from
the first-derivative symbol and every higher derivative is a product of
first derivatives, so the discrete operators commute exactly and the discrete
Monge-Ampere integrals are exact null Lagrangians.
"""
from math import factorial

import numpy as np

from .errors import LostPositivity
from .pointwise import check_positive, det, hermitian_part, inv


class TorusGrid:
    """Periodic grid with ``m`` points per real axis on the complex n-torus."""

    name = "torus"

    def __init__(self, dim, m):
        if dim not in (1, 2):
            raise ValueError("only complex dimension 1 or 2 is supported")
        if m < 4 or m & (m - 1):
            raise ValueError("points per axis must be a power of two >= 4")
        self.n = dim
        self.m = m
        self.spacing = 1.0 / m
        self.shape = (m,) * (2 * dim)
        k = np.fft.fftfreq(m, d=1.0 / m)
        k[m // 2] = 0.0
        ks = np.meshgrid(*([k] * (2 * dim)), indexing="ij")
        self._dx = [2j * np.pi * ks[2 * j] for j in range(dim)]
        self._dy = [2j * np.pi * ks[2 * j + 1] for j in range(dim)]
        self._dz = [0.5 * (a - 1j * b) for a, b in zip(self._dx, self._dy)]
        self._dzb = [0.5 * (a + 1j * b) for a, b in zip(self._dx, self._dy)]
        # eigenvalue of -tr(ddbar) for the identity metric
        self.laplace_symbol = sum((np.abs(a) ** 2 + np.abs(b) ** 2) / 4 for a, b in zip(self._dx, self._dy))

    def __repr__(self):
        return f"TorusGrid(dim={self.n}, m={self.m})"

    @property
    def size(self):
        return self.m ** (2 * self.n)

    @property
    def weights(self):
        return np.full(self.shape, 1.0 / self.size)

    def coords(self):
        x = np.arange(self.m) / self.m
        return np.meshgrid(*([x] * (2 * self.n)), indexing="ij")

    def identity_form(self, scale=1.0):
        return np.broadcast_to(scale * np.eye(self.n, dtype=complex), self.shape + (self.n, self.n)).copy()

    def constant_form(self, matrix):
        mat = np.atleast_2d(np.asarray(matrix, dtype=complex))
        return np.broadcast_to(mat, self.shape + mat.shape).copy()

    # -- derivatives -------------------------------------------------------
    def _fft(self, f):
        return np.fft.fftn(f, axes=range(2 * self.n))

    def _ifft(self, fh, real):
        out = np.fft.ifftn(fh, axes=range(2 * self.n))
        return out.real if real else out

    def dz(self, f):
        """Components d f / d z_j, shape ``shape + (n,)``."""
        fh = self._fft(f)
        return np.stack([self._ifft(s * fh, False) for s in self._dz], axis=-1)

    def dzbar(self, f):
        fh = self._fft(f)
        return np.stack([self._ifft(s * fh, False) for s in self._dzb], axis=-1)

    def ddbar(self, f):
        """Complex Hessian d^2 f / dz_j dz̄_k; Hermitian for real ``f``."""
        real = np.isrealobj(f)
        fh = self._fft(f)
        n = self.n
        out = np.empty(self.shape + (n, n), dtype=complex)
        for j in range(n):
            for k in range(n):
                out[..., j, k] = self._ifft(self._dz[j] * self._dzb[k] * fh, False)
        return hermitian_part(out) if real else out

    def laplacian(self, f):
        """tr(ddbar f) for the identity metric."""
        real = np.isrealobj(f)
        return self._ifft(-self.laplace_symbol * self._fft(f), real)

    def apply_symbol(self, f, fn):
        """Multiply the Fourier coefficients of ``f`` by ``fn(mu)``, mu = laplace symbol."""
        real = np.isrealobj(f)
        return self._ifft(fn(self.laplace_symbol) * self._fft(f), real)

    # -- integration -------------------------------------------------------
    def integrate(self, density):
        """Mean over the unit-volume torus (pairwise summation)."""
        return np.sum(density) / self.size

    def mean_zero(self, f):
        return f - self.integrate(f)

    def volume_density(self, metric):
        """Top-form coefficient n! det(g) of omega^n."""
        return factorial(self.n) * det(metric).real

    # -- curvature ---------------------------------------------------------
    def assemble_form(self, class_matrix, potential, metric=True):
        """class_matrix + ddbar(potential); positivity is enforced when ``metric``."""
        form = self.constant_form(class_matrix) + self.ddbar(potential)
        if metric:
            check_positive(form, exc=LostPositivity, what="metric")
        return form

    def integrate_form(self, density, volume):
        """Integral of density * volume^n, with volume^n = n! det(volume) dV."""
        return self.integrate(density * factorial(self.n) * det(volume))

    def logdet(self, metric):
        """log det of a metric field; positivity by leading minors (n <= 2)."""
        d = det(metric).real
        if not (np.all(d > 0) and np.all(metric[..., 0, 0].real > 0)):
            check_positive(metric, exc=LostPositivity, what="metric")
        return np.log(d)

    def ricci_form(self, metric):
        return -self.ddbar(self.logdet(metric))

    def scalar_curvature(self, metric):
        """s = -tr(g^{-1} ddbar log det g); equals the Gauss curvature for n = 1."""
        ric = self.ricci_form(metric)
        return np.real(np.einsum("...kj,...jk->...", inv(metric), ric))

    def lichnerowicz_density(self, u, metric):
        """Pointwise |dbar grad^{1,0} u|^2 with respect to ``metric``."""
        ginv = inv(metric)
        du_bar = self.dzbar(u)
        y = np.einsum("...kj,...k->...j", ginv, du_bar)
        z = np.stack([self.dzbar(y[..., j]) for j in range(self.n)], axis=-1)  # z[..., l, j]
        q = np.einsum("...lj,...jk,...mk->...lm", z, metric, np.conj(z))
        return np.real(np.einsum("...lm,...lm->...", ginv, q))

    def lichnerowicz_seminorm(self, u, metric):
        return float(self.integrate(self.lichnerowicz_density(u, metric) * self.volume_density(metric)))
