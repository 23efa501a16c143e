"""Set-point controllers for the crane.

Two controllers are provided:

* :func:`nonlinear_control` - a passivity/energy based law.  Each actuated
  coordinate gets proportional-derivative feedback on its set-point error
  plus a feedforward that cancels gravity at the target; the swing
  coordinates are left unactuated and settle through the natural coupling
  and the aerodynamic friction.  Along the closed loop the storage function
  V (kinetic energy + payload swing potential + weighted squared errors)
  satisfies Vdot = -kd_alpha alpha_dot^2 - ... - kd_d d_dot^2 - qd'F <= 0,
  and the only invariant set with Vdot = 0 inside the admissible region is
  the target equilibrium, so the set point is asymptotically stable.

* :func:`lqr_control` - a linear quadratic regulator around the target
  equilibrium, obtained by finite-difference linearization and a
  continuous-time algebraic Riccati solve.  Used as the comparison
  baseline.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numba import njit

from .dynamics import (FD_STEP_FIRST, P_G, P_LB, P_LJ, P_M, P_MB, P_MJ,
                       _friction_kernel, _gravity_kernel, _mass_kernel, _pack,
                       forward_dynamics)
from .model import Reference


class NotAnEquilibrium(Exception):
    """The requested linearization point is not an equilibrium of the model."""


class RiccatiDiverged(Exception):
    """No stabilizing Riccati solution found within the iteration cap."""


@dataclass(frozen=True)
class GainSet:
    """Positive gains of the nonlinear set-point controller."""

    kp_alpha: float
    kp_beta: float
    kp_gamma: float
    kp_d: float
    kd_alpha: float
    kd_beta: float
    kd_gamma: float
    kd_d: float

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0.0:
                raise ValueError(f"controller gain {name} must be strictly positive")

    def as_array(self):
        return np.array([self.kp_alpha, self.kp_beta, self.kp_gamma, self.kp_d,
                         self.kd_alpha, self.kd_beta, self.kd_gamma, self.kd_d])


# gains used throughout the examples and the reference experiments
DEFAULT_GAINS = GainSet(kp_alpha=30.0, kp_beta=10.0, kp_gamma=10.0, kp_d=1.0,
                        kd_alpha=50.0, kd_beta=30.0, kd_gamma=50.0, kd_d=10.0)

# baseline LQR weights, state ordering [q; qdot]
DEFAULT_LQR_Q = np.array(
    [25.0, 400.0, 450.0, 200.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 120.0, 120.0])
DEFAULT_LQR_R = np.array([0.1, 0.1, 0.1, 1.0])


@njit(cache=True)
def _nl_control_kernel(q, qd, ref, gains, par):
    g = par[P_G]
    m = par[P_M]
    u = np.empty(4)
    u[0] = gains[0] * (ref[0] - q[0]) - gains[4] * qd[0]
    u[1] = (gains[1] * (ref[1] - q[1]) - gains[5] * qd[1]
            + g * par[P_LB] * np.cos(q[1]) * (m + 0.5 * par[P_MB] + par[P_MJ]))
    u[2] = (gains[2] * (ref[2] - q[2]) - gains[6] * qd[2]
            + g * par[P_LJ] * np.cos(q[2]) * (m + 0.5 * par[P_MJ]))
    u[3] = gains[3] * (ref[3] - q[3]) - gains[7] * qd[3] - m * g
    return u


@njit(cache=True)
def _lyapunov_kernel(q, qd, ref, gains, par):
    M = _mass_kernel(q, par)
    kin = 0.0
    for i in range(6):
        for j in range(6):
            kin += qd[i] * M[i, j] * qd[j]
    kin *= 0.5
    swing = par[P_M] * par[P_G] * q[3] * (1.0 - np.cos(q[4]) * np.cos(q[5]))
    err = 0.0
    for i in range(4):
        e = ref[i] - q[i]
        err += gains[i] * e * e
    return kin + swing + 0.5 * err


@njit(cache=True)
def _lyapunov_rate_kernel(q, qd, ref, gains, u, par):
    gvec = _gravity_kernel(q, par)
    mg = par[P_M] * par[P_G]
    rate = (qd[0] * (u[0] - gains[0] * (ref[0] - q[0]))
            + qd[1] * (u[1] - gains[1] * (ref[1] - q[1]) - gvec[1])
            + qd[2] * (u[2] - gains[2] * (ref[2] - q[2]) - gvec[2])
            + qd[3] * (u[3] - gains[3] * (ref[3] - q[3]) + mg))
    F = _friction_kernel(q, qd, par)
    rate -= qd[4] * F[4] + qd[5] * F[5]
    return rate


def nonlinear_control(q, qd, ref: Reference, gains: GainSet, p):
    """Energy-based set-point control input u = [u1, u2, u3, u4].

    u1 = kp_alpha e_alpha - kd_alpha alpha_dot
    u2 = kp_beta  e_beta  - kd_beta  beta_dot + g l_b cos(beta) (m + m_b/2 + m_j)
    u3 = kp_gamma e_gamma - kd_gamma gamma_dot + g l_j cos(gamma) (m + m_j/2)
    u4 = kp_d     e_d     - kd_d     d_dot - m g

    with errors e = reference - actual.  The gravity feedforwards equal the
    corresponding components of g(q), so at the set point the closed loop is
    in exact force balance.  Note the hoist feedforward is -m g: gravity
    pulls the rope out (dU/dd < 0), so the winch must hold against it.
    """
    return _nl_control_kernel(np.asarray(q, dtype=np.float64),
                              np.asarray(qd, dtype=np.float64),
                              ref.as_array(), gains.as_array(), _pack(p))


def lyapunov_value(q, qd, ref: Reference, gains: GainSet, p):
    """Storage function V >= 0: kinetic + swing potential + weighted errors.

    Zero exactly at the target equilibrium (inside the admissible region).
    """
    return float(_lyapunov_kernel(np.asarray(q, dtype=np.float64),
                                  np.asarray(qd, dtype=np.float64),
                                  ref.as_array(), gains.as_array(), _pack(p)))


def lyapunov_rate(q, qd, ref: Reference, gains: GainSet, p, u):
    """Closed-form time derivative of V for an arbitrary input u.

    Vdot = alpha_dot (u1 - kp_alpha e_alpha)
         + beta_dot  (u2 - kp_beta  e_beta  - g_2)
         + gamma_dot (u3 - kp_gamma e_gamma - g_3)
         + d_dot     (u4 - kp_d     e_d     + m g)
         - qd' F

    With u from :func:`nonlinear_control` this collapses to
    -kd_alpha alpha_dot^2 - kd_beta beta_dot^2 - kd_gamma gamma_dot^2
    - kd_d d_dot^2 - qd'F, which is never positive.
    """
    return float(_lyapunov_rate_kernel(np.asarray(q, dtype=np.float64),
                                       np.asarray(qd, dtype=np.float64),
                                       ref.as_array(), gains.as_array(),
                                       np.asarray(u, dtype=np.float64),
                                       _pack(p)))


def equilibrium_input(ref: Reference, p):
    """The unique constant input holding the set-point equilibrium.

    Equals the gravity vector on the actuated coordinates: u = [0, g_2, g_3,
    g_4] evaluated at the target, with g_4 = -m g (zero swing).
    """
    from .dynamics import gravity_vector
    q_star = np.concatenate([ref.as_array(), [0.0, 0.0]])
    return gravity_vector(q_star, p)[:4].copy()


def linearize(ref: Reference, p, h=FD_STEP_FIRST):
    """Linearized state-space model around the set-point equilibrium.

    State x = [q; qdot].  Returns (A, B, u_eq) with A of shape (12, 12) and
    B of shape (12, 4), obtained by central finite differences of the
    forward dynamics around (x*, u_eq).  The upper half of A is the exact
    kinematic identity [0 | I] and the upper half of B is zero.

    Raises
    ------
    NotAnEquilibrium
        If the residual acceleration at (x*, u_eq) exceeds 1e-9.
    """
    x_star = ref.target_state()
    u_eq = equilibrium_input(ref, p)
    q_star, v_star = x_star[:6], x_star[6:]

    resid = np.max(np.abs(forward_dynamics(q_star, v_star, u_eq, p)))
    if resid > 1e-9:
        raise NotAnEquilibrium(
            f"residual acceleration {resid:.3e} at the requested set point")

    A = np.zeros((12, 12))
    A[:6, 6:] = np.eye(6)
    B = np.zeros((12, 4))
    for i in range(12):
        xp = x_star.copy()
        xm = x_star.copy()
        xp[i] += h
        xm[i] -= h
        accp = forward_dynamics(xp[:6], xp[6:], u_eq, p)
        accm = forward_dynamics(xm[:6], xm[6:], u_eq, p)
        A[6:, i] = (accp - accm) / (2.0 * h)
    for i in range(4):
        up = u_eq.copy()
        um = u_eq.copy()
        up[i] += h
        um[i] -= h
        accp = forward_dynamics(q_star, v_star, up, p)
        accm = forward_dynamics(q_star, v_star, um, p)
        B[6:, i] = (accp - accm) / (2.0 * h)
    return A, B, u_eq


def care_residual(A, B, Q, R, P):
    """Residual of the continuous algebraic Riccati equation for P."""
    return A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q


def solve_care(A, B, Q, R, tol=1e-9, max_iter=200):
    """Stabilizing solution of A'P + PA - PBR^-1B'P + Q = 0 and K = R^-1 B'P.

    A Schur-based solve provides the starting point, refined by Newton
    iterations (each one a Lyapunov solve with the current closed-loop
    matrix) until the residual is below tol * ||Q||.

    Raises
    ------
    RiccatiDiverged
        If no stabilizing solution is found within ``max_iter`` iterations.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    bound = tol * np.linalg.norm(Q, np.inf)

    try:
        P = scipy.linalg.solve_continuous_are(A, B, Q, R)
    except np.linalg.LinAlgError as exc:
        raise RiccatiDiverged(f"Riccati solver failed: {exc}") from exc

    for _ in range(max_iter):
        K = np.linalg.solve(R, B.T @ P)
        if np.max(np.linalg.eigvals(A - B @ K).real) >= 0.0:
            raise RiccatiDiverged("intermediate gain is not stabilizing")
        res = care_residual(A, B, Q, R, P)
        if np.linalg.norm(res, np.inf) <= bound:
            return P, K
        # Newton step: (A-BK)'P + P(A-BK) = -(Q + K'RK)
        P = scipy.linalg.solve_continuous_lyapunov(
            (A - B @ K).T, -(Q + K.T @ R @ K))
        P = 0.5 * (P + P.T)
    raise RiccatiDiverged(
        f"residual above {bound:.3e} after {max_iter} Newton iterations")


@dataclass
class LqrDesign:
    """A solved LQR baseline around one set point."""

    ref: Reference
    Q: np.ndarray
    R: np.ndarray
    A: np.ndarray
    B_lin: np.ndarray
    K: np.ndarray
    P: np.ndarray
    u_eq: np.ndarray
    x_star: np.ndarray = field(init=False)

    def __post_init__(self):
        self.x_star = self.ref.target_state()


def design_lqr(ref: Reference, p, Q=None, R=None):
    """Linearize at ``ref`` and solve for the LQR gain.

    Q and R may be given as diagonal vectors (length 12 / 4) or full
    matrices; they default to the baseline weights.
    """
    Q = DEFAULT_LQR_Q if Q is None else np.asarray(Q, dtype=float)
    R = DEFAULT_LQR_R if R is None else np.asarray(R, dtype=float)
    if Q.ndim == 1:
        Q = np.diag(Q)
    if R.ndim == 1:
        R = np.diag(R)
    if np.any(np.diag(R) <= 0.0):
        raise ValueError("LQR weight R must have strictly positive diagonal")
    if np.any(np.diag(Q) < 0.0):
        raise ValueError("LQR weight Q must have nonnegative diagonal")
    A, B, u_eq = linearize(ref, p)
    P, K = solve_care(A, B, Q, R)
    return LqrDesign(ref=ref, Q=Q, R=R, A=A, B_lin=B, K=K, P=P, u_eq=u_eq)


def lqr_control(q, qd, design: LqrDesign, ref: Reference = None):
    """LQR feedback u = u_eq - K (x - x*), with x* built from ``ref``.

    ``ref`` defaults to the design's own set point.
    """
    x_star = design.x_star if ref is None else ref.target_state()
    x = np.concatenate([np.asarray(q, dtype=float), np.asarray(qd, dtype=float)])
    return design.u_eq - design.K @ (x - x_star)
