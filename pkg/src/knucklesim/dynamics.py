"""Rigid-body dynamics of the knuckle boom crane.

The crane is modelled with six generalized coordinates

    q = [alpha, beta, gamma, d, theta1, theta2]

where alpha is the tower slew angle, beta and gamma are the boom and jib
luff angles (both measured from the horizontal plane, gamma absolute),
d is the hoisting cable length, theta1 the tangential payload swing
(out of the boom plane, excited mainly by slewing) and theta2 the radial
swing (in the boom plane, excited mainly by luffing).

The equations of motion have the standard manipulator form

    M(q) qdd + C(q, qd) qd + F(q, qd) + g(q) = B u,      B = [I4; 0]

with a symmetric positive definite mass matrix M, a Coriolis/centrifugal
matrix C built from Christoffel symbols of M, an aerodynamic swing
friction vector F acting on the two swing coordinates only, and the
gravity vector g = dU/dq.  Only the first four coordinates are actuated
(slew torque, boom torque, jib torque, hoist force).

The mass matrix below was derived from the kinetic energy of the three
bodies (boom and jib as uniform slender rods with centres of mass at half
length, payload as a point mass at cable distance d from the jib tip) plus
lumped rotary inertias for the tower slew and the two luff drives.  C is
assembled from central finite differences of M, which makes the structural
identity z'(Mdot/2 - C)z = 0 hold by construction.

All angles are radians, all units SI.  Every function here is pure and
thread-safe; the hot kernels are JIT compiled with numba.
"""

import numpy as np
from numba import njit

# layout of the packed parameter vector used by the kernels
# [m_b, m_j, m, l_b, l_j, I_tot, I_B, I_J, d_th1, d_th2, g]
P_MB, P_MJ, P_M, P_LB, P_LJ, P_ITOT, P_IB, P_IJ, P_DTH1, P_DTH2, P_G = range(11)

# finite-difference steps: first derivatives / second derivatives
FD_STEP_FIRST = 1e-6
FD_STEP_SECOND = 1e-4

# Cholesky pivot threshold below which M is reported as not positive definite
PD_PIVOT_TOL = 1e-10


class SingularMass(Exception):
    """Mass matrix not numerically positive definite at the given state."""

    def __init__(self, q):
        self.state = np.asarray(q, dtype=float).copy()
        super().__init__(
            "mass matrix not positive definite at q = %s "
            "(state outside the admissible region, e.g. d ~ 0)" % (self.state,)
        )


def _pack(p):
    """Pack a CraneParams-like object into the kernel parameter vector."""
    arr = getattr(p, "_packed", None)
    if arr is not None:
        return arr
    return np.array(
        [p.m_b, p.m_j, p.m, p.l_b, p.l_j, p.I_tot, p.I_B, p.I_J,
         p.d_th1, p.d_th2, p.g],
        dtype=np.float64,
    )


@njit(cache=True)
def _mass_kernel(q, par):
    m_b = par[P_MB]
    m_j = par[P_MJ]
    m = par[P_M]
    l_b = par[P_LB]
    l_j = par[P_LJ]

    be, ga, d, t1, t2 = q[1], q[2], q[3], q[4], q[5]
    cb, sb = np.cos(be), np.sin(be)
    cg, sg = np.cos(ga), np.sin(ga)
    c1, s1 = np.cos(t1), np.sin(t1)
    c2, s2 = np.cos(t2), np.sin(t2)

    # rod/point-mass inertia groups
    a1 = l_b * l_b * (m + 0.25 * m_b + m_j)
    a2 = l_j * l_j * (m + 0.25 * m_j)
    a3 = l_b * l_j * (2.0 * m + m_j)
    a4 = l_b * m
    a5 = l_j * m

    M = np.zeros((6, 6))
    M[0, 0] = (par[P_ITOT] + a1 * cb * cb + a2 * cg * cg + a3 * cb * cg
               + 2.0 * a4 * d * cb * s2 + 2.0 * a5 * d * cg * s2
               + d * d * m * (1.0 - c1 * c1 * c2 * c2))
    M[0, 1] = a4 * d * c2 * sb * s1
    M[0, 2] = a5 * d * c2 * sg * s1
    M[0, 3] = c2 * s1 * (a4 * cb + a5 * cg)
    M[0, 4] = d * c1 * c2 * (a4 * cb + a5 * cg + d * m * s2)
    M[0, 5] = -d * s1 * (d * m + a4 * cb * s2 + a5 * cg * s2)
    M[1, 1] = a1 + par[P_IB]
    M[1, 2] = 0.5 * a3 * np.cos(be - ga)
    M[1, 3] = -a4 * (sb * s2 + cb * c1 * c2)
    M[1, 4] = a4 * d * cb * c2 * s1
    M[1, 5] = -a4 * d * (c2 * sb - cb * c1 * s2)
    M[2, 2] = a2 + par[P_IJ]
    M[2, 3] = -a5 * (sg * s2 + cg * c1 * c2)
    M[2, 4] = a5 * d * cg * c2 * s1
    M[2, 5] = -a5 * d * (c2 * sg - cg * c1 * s2)
    M[3, 3] = m
    M[4, 4] = m * d * d * c2 * c2
    M[5, 5] = m * d * d

    for i in range(6):
        for j in range(i):
            M[i, j] = M[j, i]
    return M


@njit(cache=True)
def _dmass_kernel(q, par):
    """dM/dq_k for k = 1..5 by central differences (M does not depend on alpha)."""
    dM = np.zeros((6, 6, 6))
    h = FD_STEP_FIRST
    for k in range(1, 6):
        qp = q.copy()
        qm = q.copy()
        qp[k] += h
        qm[k] -= h
        Mp = _mass_kernel(qp, par)
        Mm = _mass_kernel(qm, par)
        for i in range(6):
            for j in range(6):
                dM[k, i, j] = (Mp[i, j] - Mm[i, j]) / (2.0 * h)
    return dM


@njit(cache=True)
def _coriolis_kernel(q, qd, par):
    dM = _dmass_kernel(q, par)
    C = np.zeros((6, 6))
    for i in range(6):
        for j in range(6):
            acc = 0.0
            for k in range(6):
                acc += (dM[k, i, j] + dM[j, i, k] - dM[i, j, k]) * qd[k]
            C[i, j] = 0.5 * acc
    return C


@njit(cache=True)
def _gravity_kernel(q, par):
    m_b = par[P_MB]
    m_j = par[P_MJ]
    m = par[P_M]
    g = par[P_G]
    be, ga, d, t1, t2 = q[1], q[2], q[3], q[4], q[5]
    c1, c2 = np.cos(t1), np.cos(t2)
    out = np.zeros(6)
    out[1] = 0.5 * g * par[P_LB] * np.cos(be) * (2.0 * m + m_b + 2.0 * m_j)
    out[2] = 0.5 * g * par[P_LJ] * np.cos(ga) * (2.0 * m + m_j)
    out[3] = -g * m * c1 * c2
    out[4] = g * m * d * c2 * np.sin(t1)
    out[5] = g * m * d * c1 * np.sin(t2)
    return out


@njit(cache=True)
def _friction_kernel(q, qd, par):
    t1, t2 = q[4], q[5]
    c2 = np.cos(t2)
    out = np.zeros(6)
    out[4] = par[P_DTH1] * c2 * c2 * abs(t1) * qd[4]
    out[5] = par[P_DTH2] * abs(t2) * qd[5]
    return out


@njit(cache=True)
def _chol_solve(M, rhs):
    """Solve M x = rhs for symmetric M via Cholesky.

    Returns (x, ok); ok is False when a pivot drops below PD_PIVOT_TOL,
    i.e. M is not numerically positive definite.
    """
    L = np.zeros((6, 6))
    x = np.zeros(6)
    for j in range(6):
        s = M[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if s <= PD_PIVOT_TOL:
            return x, False
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, 6):
            t = M[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / L[j, j]
    # forward then backward substitution
    y = np.zeros(6)
    for i in range(6):
        t = rhs[i]
        for k in range(i):
            t -= L[i, k] * y[k]
        y[i] = t / L[i, i]
    for i in range(5, -1, -1):
        t = y[i]
        for k in range(i + 1, 6):
            t -= L[k, i] * x[k]
        x[i] = t / L[i, i]
    return x, True


@njit(cache=True)
def _forward_kernel(q, qd, u, par):
    M = _mass_kernel(q, par)
    C = _coriolis_kernel(q, qd, par)
    rhs = -(_gravity_kernel(q, par) + _friction_kernel(q, qd, par))
    for i in range(6):
        for j in range(6):
            rhs[i] -= C[i, j] * qd[j]
    for i in range(4):
        rhs[i] += u[i]
    return _chol_solve(M, rhs)


def mass_matrix(q, p):
    """Mass matrix M(q), symmetric 6x6.

    Positive definite for every admissible state (|theta| < pi/2, d > 0).
    The rows/columns follow the coordinate order alpha, beta, gamma, d,
    theta1, theta2.
    """
    return _mass_kernel(np.asarray(q, dtype=np.float64), _pack(p))


def coriolis_matrix(q, qd, p):
    """Coriolis/centrifugal matrix C(q, qd).

    Built from Christoffel symbols of the first kind of M, so
    z' (Mdot/2 - C) z = 0 holds for all z and M qdd + C qd + F + g
    reproduces the Euler-Lagrange equations of the crane.
    """
    return _coriolis_kernel(np.asarray(q, dtype=np.float64),
                            np.asarray(qd, dtype=np.float64), _pack(p))


def gravity_vector(q, p):
    """Gravity vector g(q) = dU/dq; the slew component is identically zero."""
    return _gravity_kernel(np.asarray(q, dtype=np.float64), _pack(p))


def friction_vector(q, qd, p):
    """Aerodynamic swing friction, nonzero only on the two swing coordinates.

    The model is quadratic in the swing amplitude:
    F_theta1 = d_th1 cos(theta2)^2 |theta1| theta1_dot and
    F_theta2 = d_th2 |theta2| theta2_dot, so qd' F >= 0 always.
    """
    return _friction_kernel(np.asarray(q, dtype=np.float64),
                            np.asarray(qd, dtype=np.float64), _pack(p))


def forward_dynamics(q, qd, u, p):
    """Accelerations qdd from state and actuator inputs.

    Solves M qdd = B u - C qd - F - g with a Cholesky factorization
    (never an explicit inverse).

    Parameters
    ----------
    q, qd : array, shape (6,)
        Generalized coordinates and velocities.
    u : array, shape (4,)
        Slew torque, boom torque, jib torque, hoist force.
    p : CraneParams

    Raises
    ------
    SingularMass
        If M is not numerically positive definite at q.
    """
    q = np.asarray(q, dtype=np.float64)
    qdd, ok = _forward_kernel(q, np.asarray(qd, dtype=np.float64),
                              np.asarray(u, dtype=np.float64), _pack(p))
    if not ok:
        raise SingularMass(q)
    return qdd


def actuation_matrix():
    """The 6x4 selector mapping u onto the actuated coordinates."""
    B = np.zeros((6, 4))
    B[:4, :4] = np.eye(4)
    return B
