"""Model geometries and their discrete chart operators.

Two backends share one convention: a reference Kahler form written in a chart
as omega0 = i*sigma0 dz^dzbar, with i dz^dzbar = 2 dx^dy, so that

    rho_phi   = 1 + (mixed derivative of phi)/sigma0,
    Delta_phi = (mixed derivative)/(sigma0*rho)   (the dbar-Laplacian).

Torus: uniform periodic grid, pseudo-spectral differentiation, exact for all
represented modes. Sphere (S^1-invariant): momentum coordinate
mu = |z|^2/(1+|z|^2) on a cell-centered uniform grid; in the cylinder chart
w = log z the reference density is sigma0 = 2*mu*(1-mu) and the mixed
derivative becomes mu*(1-mu)*d/dmu(mu*(1-mu)*d/dmu), discretized in
conservative flux form with zero flux at the boundary faces (pole regularity).
"""

import numpy as np
import scipy.linalg

from .errors import BadGrid, NonPositiveDensity, ShapeError, SingularSolve

TWO_PI = 2.0 * np.pi


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


class TorusGeometry:
    """Flat-chart torus [0, L)^2 with reference density sigma0(x, y).

    Fields live on an (nx, ny) grid, x along axis 0. sigma0 is a finite sum
    of cosine modes so oracles have closed forms.
    """

    kind = "torus"

    def __init__(self, nx, ny, length, sigma0_modes):
        if not (_is_pow2(nx) and _is_pow2(ny)) or nx < 16 or ny < 16:
            raise BadGrid(f"torus sizes must be powers of two >= 16, got {nx} x {ny}")
        if not (length > 0.0):
            raise BadGrid(f"torus length must be > 0, got {length}")
        self.nx = int(nx)
        self.ny = int(ny)
        self.length = float(length)
        self.sigma0_modes = tuple((int(kx), int(ky), float(a)) for kx, ky, a in sigma0_modes)
        self.shape = (self.nx, self.ny)
        self.node_count = self.nx * self.ny

        x = np.arange(self.nx) * (self.length / self.nx)
        y = np.arange(self.ny) * (self.length / self.ny)
        self.x, self.y = np.meshgrid(x, y, indexing="ij")
        sigma0 = np.ones(self.shape)
        for kx, ky, amp in self.sigma0_modes:
            sigma0 = sigma0 + amp * np.cos(TWO_PI * (kx * self.x + ky * self.y) / self.length)
        if sigma0.min() <= 0.0:
            raise NonPositiveDensity(f"min sigma0 = {sigma0.min():.6g} <= 0")
        self.sigma0 = sigma0

        # spectral tables on the rfft2 layout (full axis 0, half axis 1)
        mx = np.fft.fftfreq(self.nx, d=1.0 / self.nx)
        my = np.fft.rfftfreq(self.ny, d=1.0 / self.ny)
        kx = (TWO_PI / self.length) * mx[:, None]
        ky = (TWO_PI / self.length) * my[None, :]
        self.wavenumbers = (kx, ky)
        self._mixed_symbol = -0.25 * (kx * kx + ky * ky)
        # first-derivative symbols zero the Nyquist mode (odd derivative of a
        # real signal has no consistent Nyquist phase)
        kx_d = kx.copy()
        ky_d = ky.copy()
        kx_d[self.nx // 2, :] = 0.0
        ky_d[:, -1] = 0.0
        self._dx_symbol = 1j * kx_d
        self._dy_symbol = 1j * ky_d
        # 2/3-rule truncation mask used by the time steppers
        self._keep_mask = (np.abs(mx[:, None]) <= self.nx // 3) & (my[None, :] <= self.ny // 3)

        self._cell = 2.0 * (self.length / self.nx) * (self.length / self.ny)
        self.volume = self.integrate(np.ones(self.shape))
        # Ricci density of omega0 in the chart: r0 = -(log sigma0)_{z zbar};
        # exact zeros when sigma0 == 1
        self.ric0_density = -self.mixed_second_derivative(np.log(self.sigma0))
        self.is_flat = not self.sigma0_modes

    # -- field plumbing ------------------------------------------------------

    def check_field(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ShapeError(f"field shape {f.shape} != grid shape {self.shape}")
        if not np.isfinite(f).all():
            raise ShapeError("field contains non-finite entries")
        return f

    # -- chart operators -----------------------------------------------------

    def mixed_second_derivative(self, f):
        """f_{z zbar} = (f_xx + f_yy)/4, spectrally."""
        f = self.check_field(f)
        return np.fft.irfft2(self._mixed_symbol * np.fft.rfft2(f), s=self.shape)

    def ref_laplacian(self, f):
        """Laplacian of the reference metric: f_{z zbar}/sigma0."""
        return self.mixed_second_derivative(f) / self.sigma0

    def grad_chart_sq(self, f):
        """|f_z|^2 = (f_x^2 + f_y^2)/4."""
        f = self.check_field(f)
        fh = np.fft.rfft2(f)
        fx = np.fft.irfft2(self._dx_symbol * fh, s=self.shape)
        fy = np.fft.irfft2(self._dy_symbol * fh, s=self.shape)
        return 0.25 * (fx * fx + fy * fy)

    def dealias(self, f):
        """Zero all modes outside the 2/3 ball (stepper stabilization)."""
        fh = np.fft.rfft2(f)
        return np.fft.irfft2(np.where(self._keep_mask, fh, 0.0), s=self.shape)

    # -- measures ------------------------------------------------------------

    def integrate(self, f, weight=None):
        """integral of f * weight against omega0 (weight relative to omega0)."""
        f = self.check_field(f)
        vals = f * self.sigma0 if weight is None else f * weight * self.sigma0
        return self._cell * float(np.sum(vals))

    def chart_integral(self, f):
        """integral of f against the flat chart measure 2 dx dy."""
        f = self.check_field(f)
        return self._cell * float(np.sum(f))

    def dirichlet_energy(self, u):
        """integral of i du ^ dbar(u) = 2 |u_z|^2 dx dy; >= 0 as a sum of squares."""
        return self._cell * float(np.sum(self.grad_chart_sq(u)))

    # -- solves and step control ---------------------------------------------

    def solve_reference_poisson(self, g):
        """Solve ref_laplacian(u) = g for the zero-chart-mean u.

        Direct spectral inversion of u_{z zbar} = g*sigma0; the zero mode of
        the right side must vanish (guaranteed by the caller's compatibility
        projection) and is discarded.
        """
        gh = np.fft.rfft2(g * self.sigma0)
        with np.errstate(divide="ignore", invalid="ignore"):
            uh = gh / self._mixed_symbol
        uh[0, 0] = 0.0
        return np.fft.irfft2(uh, s=self.shape)

    def heat_dt_scale(self, rho):
        """Explicit heat limit of Delta_phi: 4 * h^2 * min(sigma0*rho)."""
        h = self.length / max(self.nx, self.ny)
        return 4.0 * h * h * float(np.min(self.sigma0 * rho))


class SphereGeometry:
    """S^1-reduced round sphere on a cell-centered uniform mu grid.

    Nodes mu_i = (i + 1/2)/nmu carry quadrature weight 4*pi/nmu. The chart
    density sigma0 = 2*mu*(1-mu) (cylinder chart) makes the torus formulas
    rho = 1 + mixed/sigma0 and Delta_phi = mixed/(sigma0*rho) hold verbatim.
    Ric(omega0) = omega0 (lambda_ke = 1), volume 4*pi, rbar = 1.
    """

    kind = "sphere"

    def __init__(self, nmu):
        if nmu < 32:
            raise BadGrid(f"nmu must be >= 32, got {nmu}")
        self.nmu = int(nmu)
        self.lambda_ke = 1.0
        self.shape = (self.nmu,)
        self.node_count = self.nmu
        self.h = 1.0 / self.nmu
        self.quad_weight = 4.0 * np.pi / self.nmu
        self.mu = (np.arange(self.nmu) + 0.5) / self.nmu
        mu_face = np.arange(self.nmu + 1) / self.nmu
        # flux coefficient mu*(1-mu) vanishes exactly at the pole faces,
        # which is the zero-flux regularity closure
        self.face_coeff = mu_face * (1.0 - mu_face)
        self.sigma0 = 2.0 * self.mu * (1.0 - self.mu)
        self.volume = self.quad_weight * self.nmu
        self.ric0_density = self.lambda_ke * self.sigma0
        self.is_flat = False

    # -- field plumbing ------------------------------------------------------

    def check_field(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ShapeError(f"field shape {f.shape} != grid shape {self.shape}")
        if not np.isfinite(f).all():
            raise ShapeError("field contains non-finite entries")
        return f

    # -- chart operators -----------------------------------------------------

    def _flux_divergence(self, f):
        """d/dmu of mu*(1-mu)*df/dmu in conservative form, zero end fluxes."""
        flux = np.zeros(self.nmu + 1)
        flux[1:-1] = self.face_coeff[1:-1] * (f[1:] - f[:-1]) / self.h
        return (flux[1:] - flux[:-1]) / self.h

    def mixed_second_derivative(self, f):
        """f_{w wbar} in the cylinder chart: mu*(1-mu)*(flux divergence)."""
        f = self.check_field(f)
        return self.mu * (1.0 - self.mu) * self._flux_divergence(f)

    def ref_laplacian(self, f):
        """Laplacian of the round reference metric: (1/2)*(flux divergence)."""
        f = self.check_field(f)
        return 0.5 * self._flux_divergence(f)

    def grad_chart_sq(self, f):
        """|f_w|^2 = (mu*(1-mu)*df/dmu)^2, centered differences inside."""
        f = self.check_field(f)
        d = np.empty(self.nmu)
        d[1:-1] = (f[2:] - f[:-2]) / (2.0 * self.h)
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * self.h)
        d[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * self.h)
        s = self.mu * (1.0 - self.mu) * d
        return s * s

    def dealias(self, f):
        """No-op: the finite-difference backend needs no spectral truncation."""
        return f

    # -- measures ------------------------------------------------------------

    def integrate(self, f, weight=None):
        """integral of f * weight against omega0 = 4*pi * integral over mu."""
        f = self.check_field(f)
        vals = f if weight is None else f * weight
        return self.quad_weight * float(np.sum(vals))

    def chart_integral(self, f):
        """Cylinder-chart integral; finite for densities vanishing at the poles."""
        f = self.check_field(f)
        return 2.0 * np.pi * self.h * float(np.sum(f / (self.mu * (1.0 - self.mu))))

    def dirichlet_energy(self, u):
        """2*pi * integral of mu*(1-mu)*(du/dmu)^2, as a face sum of squares."""
        u = self.check_field(u)
        d = (u[1:] - u[:-1]) / self.h
        return 2.0 * np.pi * self.h * float(np.sum(self.face_coeff[1:-1] * d * d))

    # -- solves and step control ---------------------------------------------

    def solve_reference_poisson(self, g):
        """Solve ref_laplacian(u) = g with the last node pinned to zero.

        Tridiagonal flux-form system; the dropped last equation is implied by
        the compatibility of g (sums to zero). One iterative-refinement pass
        keeps the residual at the rounding floor.
        """
        n = self.nmu
        m = n - 1
        c = self.face_coeff
        ab = np.zeros((3, m))
        ab[0, 1:] = c[1:m]
        ab[1, :] = -(c[:m] + c[1 : m + 1])
        ab[2, :-1] = c[1:m]
        d = 2.0 * self.h * self.h * g[:m]

        def tridiag_apply(v):
            out = ab[1] * v
            out[:-1] += c[1:m] * v[1:]
            out[1:] += c[1:m] * v[:-1]
            return out

        try:
            u = scipy.linalg.solve_banded((1, 1), ab, d)
            u += scipy.linalg.solve_banded((1, 1), ab, d - tridiag_apply(u))
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SingularSolve(str(exc)) from exc
        if not np.isfinite(u).all():
            raise SingularSolve("tridiagonal solve produced non-finite values")
        return np.append(u, 0.0)

    def heat_dt_scale(self, rho):
        """Explicit heat limit of the flux-form Delta_phi (Gershgorin bound)."""
        csum = self.face_coeff[:-1] + self.face_coeff[1:]
        return 2.0 * self.h * self.h * float(np.min(rho / csum))


def build_torus_geometry(nx, ny, length, sigma0_modes=()):
    """Torus backend; sigma0_modes is a list of (k_x, k_y, amplitude) cosines."""
    return TorusGeometry(nx, ny, length, sigma0_modes)


def build_sphere_geometry(nmu):
    """S^1-reduced round-sphere backend with nmu cell-centered mu nodes."""
    return SphereGeometry(nmu)
