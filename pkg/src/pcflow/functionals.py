"""Scalar functionals and monitored norms along the flow.

Conventions (complex dimension 1): entropy = int F omega_phi; J_chi is the
path integral of its variational formula delta J = int dphi (tr_phi chi -
chibar) omega_phi along t*phi; K = entropy + J_{-Ric(omega0)};
I = (1/2) int phi (rho + 1) omega0; dissipation = int |grad_phi(F+P)|^2
omega_phi = dirichlet_energy(F + P); Calabi energy = int (R - rbar)^2
omega_phi. The L^p probes are raw monitors, never asserted against constants.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .elliptic import DEFAULT_POISSON_TOL, solve_P
from .errors import NotKahler
from .kahler import rbar, scalar_curvature

logger = logging.getLogger(__name__)

DEFAULT_QUAD_POINTS = 16
DEFAULT_P_LIST = (1.0, 2.0, 4.0)


@dataclass(frozen=True)
class ClosedForm11:
    """A closed (1,1)-form: chart density relative to i dz^dzbar, and its
    trace mean chibar = (chart integral of density)/Volume."""

    density: np.ndarray
    mean: float


def omega0_form(geom):
    """The reference form omega0 as a ClosedForm11 (chibar = 1)."""
    density = geom.sigma0.copy()
    return ClosedForm11(density=density, mean=geom.chart_integral(density) / geom.volume)


def neg_ricci_form(geom):
    """chi = -Ric(omega0), the K-energy pairing form (chibar = -rbar)."""
    return ClosedForm11(density=-geom.ric0_density, mean=-rbar(geom))


def entropy(geom, state):
    """int F omega_phi; >= 0 up to rounding since rho*log(rho) >= rho - 1."""
    return geom.integrate(state.big_f, weight=state.rho)


def j_chi_path(geom, chi, phi, quad_points=DEFAULT_QUAD_POINTS):
    """J_chi(phi) by Gauss-Legendre quadrature of the variational formula
    along the segment t*phi, J_chi(0) = 0.

    The integrand g(t) = int phi (tr_{t phi} chi - chibar) omega_{t phi}
    collapses in the chart to a t-independent pairing minus chibar times an
    affine function of t, so the quadrature is exact for every node count.
    """
    phi = geom.check_field(phi)
    mixed_ratio = geom.mixed_second_derivative(phi) / geom.sigma0
    # tr_{t phi} chi * omega_{t phi} = chi_density * (chart measure): the
    # sigma0*rho_t factors cancel, leaving a fixed chart pairing
    pairing = geom.chart_integral(phi * chi.density)

    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    total = 0.0
    for x, w in zip(nodes, weights):
        t = 0.5 * (x + 1.0)
        rho_t = 1.0 + t * mixed_ratio
        min_rho = float(rho_t.min())
        if min_rho <= 1e-06:
            raise NotKahler(min_rho, message=f"path node t = {t:.6f} leaves the Kahler cone "
                                             f"(min rho = {min_rho:.6g})")
        total += 0.5 * w * (pairing - chi.mean * geom.integrate(phi, weight=rho_t))
    return total


def j_chi_closed_form(geom, chi, phi):
    """The dimension-1 closed form (1/2) int i d(phi)^dbar(phi): a cross-check
    value, chi-independent by construction (see j_chi_path for the primary)."""
    return 0.5 * geom.dirichlet_energy(phi)


def k_energy_parts(geom, state, quad_points=DEFAULT_QUAD_POINTS):
    """(entropy, J_{-Ric}) so callers can record both without recomputation."""
    ent = entropy(geom, state)
    j = j_chi_path(geom, neg_ricci_form(geom), state.phi, quad_points)
    return ent, j


def k_energy(geom, state, quad_points=DEFAULT_QUAD_POINTS):
    """K(phi) = entropy + J_{-Ric(omega0)}: its variation is int dphi (Rbar - R) w_phi."""
    ent, j = k_energy_parts(geom, state, quad_points)
    return ent + j


def dissipation(geom, state, P):
    """int |grad_phi(F + P)|^2 omega_phi = dirichlet_energy(F + P) >= 0."""
    return geom.dirichlet_energy(state.big_f + P)


def i_functional(geom, state):
    """I(phi) = (1/2) int phi (rho + 1) omega0; its flow derivative is the entropy."""
    return 0.5 * geom.integrate(state.phi * (state.rho + 1.0))


def calabi_energy(geom, state):
    """int (R(omega_phi) - rbar)^2 omega_phi >= 0; zero iff cscK on the grid."""
    deviation = scalar_curvature(geom, state) - rbar(geom)
    return geom.integrate(deviation * deviation, weight=state.rho)


def grad_phi_sq(geom, state, u):
    """|grad_phi u|^2 = u_z u_zbar/(sigma0 rho), the chart gradient square."""
    return geom.grad_chart_sq(u) / (geom.sigma0 * state.rho)


def estimate_probes(geom, state, P, p_list=DEFAULT_P_LIST):
    """Smoothing-rate monitors: p -> int |grad_phi F|^{2p} omega_phi,
    p -> int (tr_phi omega0)^{p+1} omega_phi, p -> int |grad_phi P|^{2p} omega_phi."""
    for p in p_list:
        if not 1.0 <= p <= 8.0:
            raise ValueError(f"probe exponent {p} outside [1, 8]")
    gF = grad_phi_sq(geom, state, state.big_f)
    gP = grad_phi_sq(geom, state, P)
    inv_rho = 1.0 / state.rho
    lp_grad_F = {}
    lp_trace0 = {}
    lp_grad_P = {}
    for p in p_list:
        lp_grad_F[p] = geom.integrate(gF ** p, weight=state.rho)
        lp_trace0[p] = geom.integrate(inv_rho ** (p + 1.0), weight=state.rho)
        lp_grad_P[p] = geom.integrate(gP ** p, weight=state.rho)
    return lp_grad_F, lp_trace0, lp_grad_P


@dataclass(frozen=True)
class TraceRecord:
    """One monitoring row: every scalar the flow reports at a record time."""

    time: float
    dt: float
    sup_F: float
    inf_F: float
    sup_P: float
    entropy: float
    j_neg_ric: float
    k_energy: float
    i_functional: float
    dissipation: float
    calabi_energy: float
    rho_min: float
    volume: float
    poisson_residual: float
    lp_grad_F: dict
    lp_trace0: dict


def make_trace_record(geom, state, dt, p_list=DEFAULT_P_LIST,
                      poisson_tol=DEFAULT_POISSON_TOL, p_solution=None,
                      quad_points=DEFAULT_QUAD_POINTS):
    """Evaluate every monitored quantity at one state (solves P once)."""
    if p_solution is None:
        p_solution = solve_P(geom, state, poisson_tol)
    P = p_solution.field
    ent, j = k_energy_parts(geom, state, quad_points)
    lp_grad_F, lp_trace0, _ = estimate_probes(geom, state, P, p_list)
    return TraceRecord(
        time=state.time,
        dt=float(dt),
        sup_F=float(state.big_f.max()),
        inf_F=float(state.big_f.min()),
        sup_P=float(P.max()),
        entropy=ent,
        j_neg_ric=j,
        k_energy=ent + j,
        i_functional=i_functional(geom, state),
        dissipation=dissipation(geom, state, P),
        calabi_energy=calabi_energy(geom, state),
        rho_min=float(state.rho.min()),
        volume=geom.integrate(np.ones(geom.shape), weight=state.rho),
        poisson_residual=p_solution.residual_linf,
        lp_grad_F=lp_grad_F,
        lp_trace0=lp_trace0,
    )
