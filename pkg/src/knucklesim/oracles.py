"""Independent numerical oracles for the crane dynamics.

Everything in this module is built from the position-level kinematics and
plain finite differences, deliberately bypassing the analytic mass matrix,
Coriolis and gravity expressions in :mod:`knucklesim.dynamics`.  The tests
and the ``validate`` command use these as ground truth: if an analytic
formula were transcribed wrongly, the disagreement shows up here.
"""

import numpy as np

from . import model
from .dynamics import (FD_STEP_FIRST, FD_STEP_SECOND, actuation_matrix,
                       friction_vector)


def body_velocities(q, qd, p):
    """Velocities of boom COM, jib COM and payload by the chain rule.

    Written directly from the three position maps; used to evaluate the
    kinetic energy without touching the mass matrix.
    """
    al, be, ga, d, t1, t2 = q
    ald, bed, gad, dd, t1d, t2d = qd
    ca, sa = np.cos(al), np.sin(al)
    cb, sb = np.cos(be), np.sin(be)
    cg, sg = np.cos(ga), np.sin(ga)
    c1, s1 = np.cos(t1), np.sin(t1)
    c2, s2 = np.cos(t2), np.sin(t2)

    e_rad = np.array([ca, sa, 0.0])
    e_tan = np.array([-sa, ca, 0.0])
    e_up = np.array([0.0, 0.0, 1.0])

    # unit-vector rates: e_boom = cb e_rad + sb e_up etc.,
    # with e_rad' = ald e_tan and e_tan' = -ald e_rad
    de_boom = (-sb * bed) * e_rad + (cb * ald) * e_tan + (cb * bed) * e_up
    de_jib = (-sg * gad) * e_rad + (cg * ald) * e_tan + (cg * gad) * e_up

    v_boom = 0.5 * p.l_b * de_boom
    v_jib = p.l_b * de_boom + 0.5 * p.l_j * de_jib
    v_tip = p.l_b * de_boom + p.l_j * de_jib

    r = model.cable_direction(q)
    dr = ((c2 * t2d - c2 * s1 * ald) * e_rad
          + (s2 * ald + c1 * c2 * t1d - s1 * s2 * t2d) * e_tan
          + (s1 * c2 * t1d + c1 * s2 * t2d) * e_up)
    v_pay = v_tip + dd * r + d * dr
    return v_boom, v_jib, v_pay


def kinetic_energy_kinematic(q, qd, p):
    """Kinetic energy from body velocities plus the three rotary terms."""
    v_b, v_j, v_p = body_velocities(q, qd, p)
    return (0.5 * p.m_b * v_b @ v_b
            + 0.5 * p.m_j * v_j @ v_j
            + 0.5 * p.m * v_p @ v_p
            + 0.5 * p.I_tot * qd[0] ** 2
            + 0.5 * p.I_B * qd[1] ** 2
            + 0.5 * p.I_J * qd[2] ** 2)


def mass_matrix_fd(q, p, h=FD_STEP_SECOND):
    """Hessian of the kinematic kinetic energy in qdot.

    T is exactly quadratic in qdot, so the central second-difference
    stencil has no truncation error; only round-off remains.
    """
    q = np.asarray(q, dtype=float)
    M = np.zeros((6, 6))
    for i in range(6):
        for j in range(i, 6):
            vpp = np.zeros(6)
            vpp[i] += h
            vpp[j] += h
            vpm = np.zeros(6)
            vpm[i] += h
            vpm[j] -= h
            val = (kinetic_energy_kinematic(q, vpp, p)
                   - kinetic_energy_kinematic(q, vpm, p)
                   - kinetic_energy_kinematic(q, -vpm, p)
                   + kinetic_energy_kinematic(q, -vpp, p)) / (4.0 * h * h)
            M[i, j] = val
            M[j, i] = val
    return M


def gravity_gradient_fd(q, p, h=FD_STEP_FIRST):
    """Gradient of the potential energy by central differences."""
    q = np.asarray(q, dtype=float)
    out = np.zeros(6)
    for i in range(6):
        qp = q.copy()
        qm = q.copy()
        qp[i] += h
        qm[i] -= h
        out[i] = (model.potential_energy(qp, p)
                  - model.potential_energy(qm, p)) / (2.0 * h)
    return out


def mass_rate_fd(q, qd, p, h=FD_STEP_FIRST):
    """Directional derivative of M along qd (the Mdot appearing in the
    skew-symmetry identity)."""
    from .dynamics import mass_matrix
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    return (mass_matrix(q + h * qd, p) - mass_matrix(q - h * qd, p)) / (2.0 * h)


def _lagrangian(q, qd, p):
    return kinetic_energy_kinematic(q, qd, p) - model.potential_energy(q, p)


def _dl_dqd(q, qd, p, h):
    # exact for the velocity-quadratic Lagrangian up to round-off
    out = np.zeros(6)
    for i in range(6):
        vp = qd.copy()
        vm = qd.copy()
        vp[i] += h
        vm[i] -= h
        out[i] = (_lagrangian(q, vp, p) - _lagrangian(q, vm, p)) / (2.0 * h)
    return out


def el_residual(q, qd, qdd, u, p, ht=FD_STEP_SECOND, hq=FD_STEP_FIRST):
    """Euler-Lagrange residual d/dt(dL/dqd) - dL/dq - (B u - F).

    The time derivative is taken along the local quadratic path
    q(t) = q + qd t + qdd t^2 / 2, entirely by finite differences of the
    kinematically evaluated Lagrangian.  A consistent (q, qd, qdd, u)
    quadruple from ``forward_dynamics`` drives this to the finite-difference
    noise floor; corrupting any analytic matrix entry raises it sharply.
    """
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    qdd = np.asarray(qdd, dtype=float)

    def path(t):
        return q + qd * t + 0.5 * qdd * t * t, qd + qdd * t

    def momentum(t):
        qt, vt = path(t)
        return _dl_dqd(qt, vt, p, ht)

    # fourth-order stencil: the path curvature (large accelerations) would
    # dominate a plain central difference
    dp_dt = (-momentum(2 * ht) + 8.0 * momentum(ht)
             - 8.0 * momentum(-ht) + momentum(-2 * ht)) / (12.0 * ht)

    dl_dq = np.zeros(6)
    for i in range(6):
        xp = q.copy()
        xm = q.copy()
        xp[i] += hq
        xm[i] -= hq
        dl_dq[i] = (_lagrangian(xp, qd, p) - _lagrangian(xm, qd, p)) / (2.0 * hq)

    zeta = actuation_matrix() @ np.asarray(u, dtype=float)
    return dp_dt - dl_dq - (zeta - friction_vector(q, qd, p))
