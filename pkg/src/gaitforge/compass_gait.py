"""Compass-gait walker: continuous dynamics, ground-impact map, touchdown
event, average-speed operating condition and cost-of-transport objective.

State ordering is fixed as x = (theta_sw, theta_st, thetadot_sw,
thetadot_st), angles measured from vertical in the world frame. The
continuous dynamics are independent of the slope; the slope enters only
through the touchdown event. The problem parameters are sigma = (gamma,
v_avg) with gamma in radians.

All functions broadcast over a leading batch axis: x may be (4,) or
(B, 4). Torque u may be a scalar, (1,) or (B, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularCostError, SingularImpactError, SingularMassMatrixError
from .ocp import ParameterizedOCP

_DET_TOL = 1e-12


@dataclass(frozen=True)
class WalkerParams:
    """Normalized walker parameters: total mass m, gravity g and leg length
    l_o are 1, so times are in units of t_o = sqrt(l_o / g). The proportions
    are a/b = 1 and m_h/m_l = 2.

    mass_matrix selects the diagonal of M:
      "classical" (default): M11 = m_l b^2, M22 = (m_h+m_l) l_o^2 + m_l a^2,
          the standard compass-gait inertia; reproduces the reference gait
          data (passive v_avg=0.1 gaits at slopes 0.2199/0.1963 deg).
      "hip_total": M11 = m_h b^2, M22 = (m_h+m_l) l_o^2 + m a^2 - the
          swing inertia built from the hip mass and the stance term from
          the total mass - kept for sensitivity studies.
    """

    m: float = 1.0
    m_h: float = 0.5
    m_l: float = 0.25
    a: float = 0.5
    b: float = 0.5
    l_o: float = 1.0
    g: float = 1.0
    mass_matrix: str = "classical"

    @property
    def k(self) -> float:
        """Input-cost weight, the speed-torque gradient scale of a DC motor."""
        return 1.0 / (self.m * np.sqrt(self.g * self.l_o ** 3))

    @property
    def t_o(self) -> float:
        return float(np.sqrt(self.l_o / self.g))

    @property
    def m11(self) -> float:
        mass = self.m_h if self.mass_matrix == "hip_total" else self.m_l
        return mass * self.b ** 2

    @property
    def m22(self) -> float:
        mass = self.m if self.mass_matrix == "hip_total" else self.m_l
        return (self.m_h + self.m_l) * self.l_o ** 2 + mass * self.a ** 2


def _split_u(x, u):
    u = np.asarray(u, dtype=float)
    if u.ndim and u.shape[-1] == 1 and u.ndim >= np.asarray(x).ndim - 0:
        u = u[..., 0]
    return u


def _mass_matrix_entries(alpha, p: WalkerParams):
    ca = np.cos(alpha)
    m11 = p.m11 * np.ones_like(ca)
    m12 = -p.m_l * p.l_o * p.b * ca
    m22 = p.m22 * np.ones_like(ca)
    return m11, m12, m22


def continuous_rhs(x, u, p: WalkerParams | None = None):
    """Vector field f(x, u): xdot = (qdot, M^{-1}(B u - C qdot - G))."""
    p = p or WalkerParams()
    x = np.asarray(x, dtype=float)
    us = _split_u(x, u)
    th_sw, th_st = x[..., 0], x[..., 1]
    om_sw, om_st = x[..., 2], x[..., 3]
    alpha = th_st - th_sw
    m11, m12, m22 = _mass_matrix_entries(alpha, p)
    det = m11 * m22 - m12 * m12
    if np.min(np.abs(det)) < _DET_TOL:
        raise SingularMassMatrixError("mass matrix singular")
    sa = np.sin(alpha)
    cor = p.m_l * p.l_o * p.b * sa
    # C(q, qdot) qdot is quadratic in the rates.
    cq1 = cor * om_st ** 2
    cq2 = -cor * om_sw ** 2
    g1 = p.m_l * p.b * p.g * np.sin(th_sw)
    g2 = -(p.m_h * p.l_o + p.m_l * p.a + p.m_l * p.l_o) * p.g * np.sin(th_st)
    r1 = -us - cq1 - g1
    r2 = us - cq2 - g2
    dd1 = (m22 * r1 - m12 * r2) / det
    dd2 = (-m12 * r1 + m11 * r2) / det
    return np.stack([om_sw, om_st, dd1, dd2], axis=-1)


def rhs_jacobian_state(x, u, p: WalkerParams | None = None):
    """Analytic df/dx, shape (..., 4, 4)."""
    p = p or WalkerParams()
    x = np.asarray(x, dtype=float)
    us = _split_u(x, u)
    th_sw, th_st = x[..., 0], x[..., 1]
    om_sw, om_st = x[..., 2], x[..., 3]
    alpha = th_st - th_sw
    sa, ca = np.sin(alpha), np.cos(alpha)
    m11, m12, m22 = _mass_matrix_entries(alpha, p)
    det = m11 * m22 - m12 * m12
    cor = p.m_l * p.l_o * p.b
    cq1 = cor * sa * om_st ** 2
    cq2 = -cor * sa * om_sw ** 2
    g1 = p.m_l * p.b * p.g * np.sin(th_sw)
    g2 = -(p.m_h * p.l_o + p.m_l * p.a + p.m_l * p.l_o) * p.g * np.sin(th_st)
    r1 = -us - cq1 - g1
    r2 = us - cq2 - g2
    dd1 = (m22 * r1 - m12 * r2) / det
    dd2 = (-m12 * r1 + m11 * r2) / det

    J = np.zeros(x.shape[:-1] + (4, 4))
    J[..., 0, 2] = 1.0
    J[..., 1, 3] = 1.0

    # dM/dalpha has off-diagonal entries cor*sin(alpha); alpha = th_st - th_sw.
    dm12 = cor * sa

    def acc_partial_angle(sign):
        # sign = dalpha/dtheta: -1 for theta_sw, +1 for theta_st
        dr1 = -sign * cor * ca * om_st ** 2
        dr2 = sign * cor * ca * om_sw ** 2
        # d(M^{-1} r) = M^{-1}(dr - dM M^{-1} r); dM = sign*dm12*[[0,1],[1,0]]
        e1 = dr1 - sign * dm12 * dd2
        e2 = dr2 - sign * dm12 * dd1
        a1 = (m22 * e1 - m12 * e2) / det
        a2 = (-m12 * e1 + m11 * e2) / det
        return a1, a2

    a1, a2 = acc_partial_angle(-1.0)
    dg1 = p.m_l * p.b * p.g * np.cos(th_sw)
    J[..., 2, 0] = a1 + (m22 * (-dg1)) / det
    J[..., 3, 0] = a2 + (-m12 * (-dg1)) / det
    a1, a2 = acc_partial_angle(+1.0)
    dg2 = -(p.m_h * p.l_o + p.m_l * p.a + p.m_l * p.l_o) * p.g * np.cos(th_st)
    J[..., 2, 1] = a1 + (m22 * 0.0 - m12 * (-dg2)) / det
    J[..., 3, 1] = a2 + (m11 * (-dg2)) / det

    # Rate partials: d(C qdot)/dqdot enters through -M^{-1} d(C qdot).
    dcq1_dom_st = 2.0 * cor * sa * om_st
    dcq2_dom_sw = -2.0 * cor * sa * om_sw
    J[..., 2, 2] = (m12 * dcq2_dom_sw) / det
    J[..., 3, 2] = (-m11 * dcq2_dom_sw) / det
    J[..., 2, 3] = (-m22 * dcq1_dom_st) / det
    J[..., 3, 3] = (m12 * dcq1_dom_st) / det
    return J


def rhs_jacobian_input(x, u=None, p: WalkerParams | None = None):
    """Analytic df/du = (0, 0, M^{-1} B), shape (..., 4, 1); independent
    of u (input-affine dynamics)."""
    p = p or WalkerParams()
    x = np.asarray(x, dtype=float)
    alpha = x[..., 1] - x[..., 0]
    m11, m12, m22 = _mass_matrix_entries(alpha, p)
    det = m11 * m22 - m12 * m12
    out = np.zeros(x.shape[:-1] + (4, 1))
    out[..., 2, 0] = (-m22 - m12) / det
    out[..., 3, 0] = (m12 + m11) / det
    return out


def _impact_matrices(alpha, p: WalkerParams):
    ca = np.cos(alpha)
    one = np.ones_like(ca)
    mab = p.m_l * p.a * p.b
    qm = np.empty(np.shape(ca) + (2, 2))
    qm[..., 0, 0] = -mab * one
    qm[..., 0, 1] = (p.m_h * p.l_o ** 2 + 2 * p.m_l * p.a * p.l_o) * ca - mab
    qm[..., 1, 0] = 0.0
    qm[..., 1, 1] = -mab * one
    mbl = p.m_l * p.b * p.l_o
    qp = np.empty(np.shape(ca) + (2, 2))
    qp[..., 0, 0] = p.m_l * p.b ** 2 - mbl * ca
    qp[..., 0, 1] = (p.m_l * p.l_o ** 2 + p.m_l * p.a ** 2
                     + p.m_h * p.l_o ** 2) - mbl * ca
    qp[..., 1, 0] = p.m_l * p.b ** 2 * one
    qp[..., 1, 1] = -mbl * ca
    return qm, qp


def velocity_map(alpha, p: WalkerParams | None = None):
    """W(alpha) = (Q+)^{-1} Q- mapping pre- to post-impact rates."""
    p = p or WalkerParams()
    qm, qp = _impact_matrices(np.asarray(alpha, dtype=float), p)
    det = qp[..., 0, 0] * qp[..., 1, 1] - qp[..., 0, 1] * qp[..., 1, 0]
    if np.min(np.abs(det)) < _DET_TOL:
        raise SingularImpactError("post-impact momentum matrix singular")
    inv = np.empty_like(qp)
    inv[..., 0, 0] = qp[..., 1, 1] / det
    inv[..., 0, 1] = -qp[..., 0, 1] / det
    inv[..., 1, 0] = -qp[..., 1, 0] / det
    inv[..., 1, 1] = qp[..., 0, 0] / det
    return inv @ qm


def impact_map(x, p: WalkerParams | None = None):
    """Reset map g(x): swap the leg angles and map the rates through the
    angular-momentum-conserving plastic collision."""
    p = p or WalkerParams()
    x = np.asarray(x, dtype=float)
    alpha = x[..., 1] - x[..., 0]
    W = velocity_map(alpha, p)
    qd = x[..., 2:]
    qd_plus = np.einsum("...ij,...j->...i", W, qd)
    return np.concatenate(
        [x[..., 1:2], x[..., 0:1], qd_plus], axis=-1)


def impact_jacobian(x, p: WalkerParams | None = None):
    """Analytic dg/dx, shape (..., 4, 4)."""
    p = p or WalkerParams()
    x = np.asarray(x, dtype=float)
    alpha = x[..., 1] - x[..., 0]
    qm, qp = _impact_matrices(alpha, p)
    det = qp[..., 0, 0] * qp[..., 1, 1] - qp[..., 0, 1] * qp[..., 1, 0]
    inv = np.empty_like(qp)
    inv[..., 0, 0] = qp[..., 1, 1] / det
    inv[..., 0, 1] = -qp[..., 0, 1] / det
    inv[..., 1, 0] = -qp[..., 1, 0] / det
    inv[..., 1, 1] = qp[..., 0, 0] / det
    W = inv @ qm

    sa = np.sin(alpha)
    dqm = np.zeros_like(qm)
    dqm[..., 0, 1] = -(p.m_h * p.l_o ** 2 + 2 * p.m_l * p.a * p.l_o) * sa
    mbl = p.m_l * p.b * p.l_o
    dqp = np.zeros_like(qp)
    dqp[..., 0, 0] = mbl * sa
    dqp[..., 0, 1] = mbl * sa
    dqp[..., 1, 1] = mbl * sa
    dW = inv @ (dqm - dqp @ W)

    qd = x[..., 2:]
    dv_dalpha = np.einsum("...ij,...j->...i", dW, qd)
    J = np.zeros(x.shape[:-1] + (4, 4))
    J[..., 0, 1] = 1.0
    J[..., 1, 0] = 1.0
    J[..., 2:, 0] = -dv_dalpha
    J[..., 2:, 1] = dv_dalpha
    J[..., 2:, 2:] = W
    return J


def event_and_operating(T, xT, x0, sigma, p: WalkerParams | None = None):
    """Touchdown event e = theta_sw(T) + theta_st(T) + 2 gamma and the
    speed condition omega = 2 sin(theta_sw(T) + gamma) - v_avg T."""
    p = p or WalkerParams()
    xT = np.asarray(xT, dtype=float)
    gamma, v_avg = float(sigma[0]), float(sigma[1])
    e = xT[..., 0] + xT[..., 1] + 2.0 * gamma
    om = 2.0 * np.sin(xT[..., 0] + gamma) - v_avg * T
    return e, om


def stage_and_terminal_cost(u, T, yT, sigma, p: WalkerParams | None = None):
    """Stage cost rate l = (k/2) u^2 and the cost of transport
    c = y(T) / (m g v_avg T)."""
    p = p or WalkerParams()
    us = np.asarray(u, dtype=float)
    if us.ndim and us.shape[-1] == 1:
        us = us[..., 0]
    l = 0.5 * p.k * us ** 2
    v_avg = float(sigma[1])
    denom = p.m * p.g * v_avg * float(T)
    if denom == 0.0:
        raise SingularCostError("zero traveled distance: T or v_avg is zero")
    return l, float(yT) / denom


def kinetic_energy(x, p: WalkerParams | None = None):
    p = p or WalkerParams()
    x = np.asarray(x, dtype=float)
    m11, m12, m22 = _mass_matrix_entries(x[..., 1] - x[..., 0], p)
    o1, o2 = x[..., 2], x[..., 3]
    return 0.5 * (m11 * o1 ** 2 + 2 * m12 * o1 * o2 + m22 * o2 ** 2)


def total_energy(x, p: WalkerParams | None = None):
    """Mechanical energy with the potential matching the gravity vector G."""
    p = p or WalkerParams()
    x = np.asarray(x, dtype=float)
    v = (-p.m_l * p.b * p.g * np.cos(x[..., 0])
         - (p.m_h * p.l_o + p.m_l * p.a + p.m_l * p.l_o) * p.g
         * (-np.cos(x[..., 1])))
    return kinetic_energy(x, p) + v


def make_ocp(p: WalkerParams | None = None) -> ParameterizedOCP:
    """Bundle the walker into the generic problem surface with sigma =
    (gamma [rad], v_avg)."""
    p = p or WalkerParams()
    k = p.k

    def f(x, u, s):
        return continuous_rhs(x, u, p)

    def g(x, s):
        return impact_map(x, p)

    def e(T, xT, x0, s):
        ev, _ = event_and_operating(T, xT, x0, s, p)
        return ev

    def omega(T, xT, x0, s):
        _, om = event_and_operating(T, xT, x0, s, p)
        return np.atleast_1d(om)

    def l(x, u, s):
        us = _split_u(np.asarray(x, float), u)
        return 0.5 * k * us ** 2

    def c(T, xT, yT, s):
        _, cost = stage_and_terminal_cost(0.0, T, yT, s, p)
        return cost

    def dh_dxT(T, xT, x0, s):
        out = np.zeros((2, 4))
        out[0, 0] = out[0, 1] = 1.0
        out[1, 0] = 2.0 * np.cos(xT[0] + float(s[0]))
        return out

    return ParameterizedOCP(
        n_x=4, n_u=1, n_omega=1, n_sigma=2,
        f=f, g=g, e=e, omega=omega, l=l, c=c,
        df_dx=lambda x, u, s: rhs_jacobian_state(x, u, p),
        df_du=lambda x, u, s: rhs_jacobian_input(x, u, p),
        dl_dx=lambda x, u, s: np.zeros(np.shape(x)),
        dl_du=lambda x, u, s: np.atleast_1d(
            k * _split_u(np.asarray(x, float), u)),
        dg_dx=lambda x, s: impact_jacobian(x, p),
        dh_dT=lambda T, xT, x0, s: np.array([0.0, -float(s[1])]),
        dh_dxT=dh_dxT,
        dh_dx0=lambda T, xT, x0, s: np.zeros((2, 4)),
        dc_dT=lambda T, xT, yT, s: -float(yT) / (p.m * p.g * float(s[1]) * T ** 2),
        dc_dxT=lambda T, xT, yT, s: np.zeros(4),
        dc_dyT=lambda T, xT, yT, s: 1.0 / (p.m * p.g * float(s[1]) * T),
        input_weight=k,
        state_bounds=(np.array([-0.6, -0.6, -1.5, -1.5]),
                      np.array([0.6, 0.6, 1.5, 1.5])),
        input_bounds=(np.array([-1.0]), np.array([1.0])),
        name="compass-gait",
        dynamics_depend_on_sigma=False,
    )


# Initial guesses for the passive-gait search at v_avg = 0.1 sqrt(g l_o);
# the damped Newton solve in reconstruct.find_passive_gait refines them to
# full accuracy. "long"/"short" refer to the two period branches.
PASSIVE_GUESSES = {
    "long": {"T": 2.16, "x0": np.array([-0.112, 0.105, -0.156, -0.172]),
             "gamma": 0.00343},
    "short": {"T": 1.95, "x0": np.array([-0.101, 0.094, -0.163, -0.165]),
              "gamma": 0.00384},
}
