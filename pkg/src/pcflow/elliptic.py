"""Normalized Poisson solves on the evolving metric.

Every solve first projects the right-hand side onto the compatible range of
Delta_phi (its mean against omega_phi is removed), then inverts the chart
equation u_{z zbar} = rhs*sigma0*rho with the backend's direct solver, and
finally applies the requested normalization as a constant shift. The constant
nullspace is never pinned inside the linear algebra.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ToleranceNotMet
from .kahler import laplacian_phi, rbar, scalar_curvature, trace_ric0

DEFAULT_POISSON_TOL = 1e-10


class Normalization(enum.Enum):
    MEAN_ZERO = "MeanZeroAgainstOmegaPhi"
    EXP_MASS = "ExpMassEqualsVolume"


@dataclass(frozen=True)
class PoissonSolution:
    field: np.ndarray
    residual_linf: float
    compat_defect: float


def solve_poisson_phi(geom, state, rhs, normalization=Normalization.MEAN_ZERO,
                      poisson_tol=DEFAULT_POISSON_TOL):
    """Solve Delta_phi(u) = rhs - mean_phi(rhs) with the given normalization."""
    rhs = geom.check_field(rhs)
    rho = state.rho
    vol_phi = geom.integrate(np.ones(geom.shape), weight=rho)
    raw_mass = geom.integrate(rhs, weight=rho)
    compat_defect = abs(raw_mass) / geom.volume
    projected = rhs - raw_mass / vol_phi

    if not projected.any():
        # exactly compatible zero RHS: zero field satisfies both normalizations
        zero = np.zeros(geom.shape)
        return PoissonSolution(field=zero, residual_linf=0.0, compat_defect=compat_defect)

    u = geom.solve_reference_poisson(projected * rho)
    residual = geom.ref_laplacian(u) / rho - projected
    residual_linf = float(np.max(np.abs(residual)))
    if residual_linf > poisson_tol:
        u = u - geom.solve_reference_poisson(residual * rho)
        residual_linf = float(np.max(np.abs(geom.ref_laplacian(u) / rho - projected)))
        if residual_linf > poisson_tol:
            raise ToleranceNotMet(
                f"poisson residual {residual_linf:.3e} > tol {poisson_tol:.3e}")

    if normalization is Normalization.MEAN_ZERO:
        u = u - geom.integrate(u, weight=rho) / vol_phi
    else:
        peak = float(np.max(u))
        mass = geom.integrate(np.exp(u - peak), weight=rho)
        u = u - (peak + np.log(mass / vol_phi))
    return PoissonSolution(field=u, residual_linf=residual_linf, compat_defect=compat_defect)


def solve_P(geom, state, poisson_tol=DEFAULT_POISSON_TOL):
    """PCF potential: Delta_phi(P) = rbar - tr_phi Ric(omega0), mean-zero.

    On a flat torus the RHS is identically zero and P is the exact zero field.
    """
    rhs = rbar(geom) - trace_ric0(geom, state)
    return solve_poisson_phi(geom, state, rhs, Normalization.MEAN_ZERO, poisson_tol)


def solve_ricci_potential(geom, state, poisson_tol=DEFAULT_POISSON_TOL):
    """Ricci potential: Delta_phi(h) = R(omega_phi) - lambda, exp-mass normalized.

    Needs an Einstein reference: the round sphere (lambda = 1) or a flat torus
    (lambda = 0); curved-reference tori have no Ricci potential in this gauge.
    """
    if geom.kind == "sphere":
        lam = geom.lambda_ke
    elif geom.is_flat:
        lam = 0.0
    else:
        raise ValueError("Ricci potential needs an Einstein reference "
                         "(round sphere or flat torus)")
    rhs = scalar_curvature(geom, state) - lam
    solution = solve_poisson_phi(geom, state, rhs, Normalization.EXP_MASS, poisson_tol)
    return solution


def residual_check(geom, state, solution, rhs):
    """Max |Delta_phi(field) - projected rhs|; exposed for the test oracles."""
    rho = state.rho
    vol_phi = geom.integrate(np.ones(geom.shape), weight=rho)
    projected = rhs - geom.integrate(rhs, weight=rho) / vol_phi
    return float(np.max(np.abs(laplacian_phi(geom, state, solution.field) - projected)))
