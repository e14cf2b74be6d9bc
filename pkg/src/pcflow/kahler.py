"""Kahler potentials, metric states, and curvature operators.

A potential phi determines omega_phi = omega0 + i d dbar(phi), whose density
ratio is rho = omega_phi/omega0 = 1 + (mixed derivative of phi)/sigma0 in the
chart. The Monge-Ampere log F = log(rho) and the Ricci trace close the scalar
curvature identity R(omega_phi) = -Delta_phi F + tr_phi Ric(omega0).
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NotKahler

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricState:
    """A validated Kahler potential with its cached pointwise densities."""

    phi: np.ndarray
    rho: np.ndarray
    big_f: np.ndarray
    time: float = 0.0
    geometry: object = field(default=None, repr=False, compare=False)


def ma_density(geom, phi):
    """Monge-Ampere density rho = 1 + phi_{z zbar}/sigma0."""
    phi = geom.check_field(phi)
    return 1.0 + geom.mixed_second_derivative(phi) / geom.sigma0


def validate_kahler(geom, phi, time=0.0, rho_floor=1e-06, stage=None):
    """Build a MetricState, raising NotKahler when min(rho) <= rho_floor."""
    phi = geom.check_field(phi)
    rho = ma_density(geom, phi)
    min_rho = float(rho.min())
    if min_rho <= rho_floor:
        raise NotKahler(min_rho, stage=stage)
    return MetricState(phi=phi, rho=rho, big_f=np.log(rho), time=float(time), geometry=geom)


def laplacian_phi(geom, state, f):
    """dbar-Laplacian of omega_phi: f_{z zbar}/(sigma0*rho) = ref_lap(f)/rho."""
    return geom.ref_laplacian(f) / state.rho


def trace_ric0(geom, state):
    """tr_{omega_phi} Ric(omega0) = ric0_density/(sigma0*rho); zero when flat."""
    if geom.is_flat:
        return np.zeros(geom.shape)
    return geom.ric0_density / (geom.sigma0 * state.rho)


def scalar_curvature_forms(geom, state):
    """Both routes to R(omega_phi): via F and via log sigma0 + F.

    Primary: R = -Delta_phi(F) + tr_phi Ric(omega0). Alternative: the full
    chart density log, R = -Delta_phi(log(sigma0*rho)) computed in one sweep.
    Returns (primary, alternative, max pointwise discrepancy).
    """
    trace = trace_ric0(geom, state)
    primary = -laplacian_phi(geom, state, state.big_f) + trace
    if geom.kind == "sphere":
        # The reduced chart density sigma0 = 2 mu (1-mu) vanishes at the poles,
        # so differencing log(sigma0 * rho) directly is singular there. The
        # reference part is analytic (-(log sigma0)_mixed = sigma0, the round
        # metric being Einstein); difference only the state-dependent log.
        alternative = (geom.ric0_density
                       - geom.mixed_second_derivative(state.big_f)) / (geom.sigma0 * state.rho)
    else:
        alternative = -geom.ref_laplacian(np.log(geom.sigma0 * state.rho)) / state.rho
    return primary, alternative, float(np.max(np.abs(primary - alternative)))


def scalar_curvature(geom, state):
    """Scalar curvature of omega_phi via the trace identity.

    The equivalent single-sweep form -Delta_phi(log(sigma0*rho)) is computed
    alongside and the max pointwise discrepancy logged; the trace-identity
    form is the output because it reuses the flow's own operators.
    """
    primary, _, discrepancy = scalar_curvature_forms(geom, state)
    logger.debug("scalar curvature form discrepancy %.3e", discrepancy)
    return primary


def rbar(geom):
    """Volume average of R(omega0); cohomological, so phi-independent.

    Exactly 0.0 on a flat torus by construction; 1 on the round sphere and 0
    on curved-reference tori up to quadrature rounding.
    """
    cached = getattr(geom, "_rbar_cache", None)
    if cached is not None:
        return cached
    if geom.is_flat:
        value = 0.0
    else:
        zero_state = validate_kahler(geom, np.zeros(geom.shape))
        trace = trace_ric0(geom, zero_state)
        curv = -laplacian_phi(geom, zero_state, zero_state.big_f) + trace
        value = geom.integrate(curv) / geom.volume
    geom._rbar_cache = value
    return value


def average_against_state(geom, state, f):
    """Average of f against omega_phi."""
    return geom.integrate(f, weight=state.rho) / geom.volume
