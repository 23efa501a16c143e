"""Physical parameters, kinematics and energies of the knuckle boom crane.

Geometry: the boom (length l_b, mass m_b) is pinned to the tower at the
origin and luffs by beta; the jib (length l_j, mass m_j) is pinned to the
boom tip and luffs by gamma.  Both luff angles are measured from the
horizontal plane, so the jib tip height is l_b sin(beta) + l_j sin(gamma).
The payload of mass m hangs from the jib tip on a massless rigid cable of
length d whose direction is parametrized by the tangential swing theta1
and the radial swing theta2.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import mass_matrix


@dataclass(frozen=True)
class CraneParams:
    """Physical parameters of the crane, SI units.

    The luff inertias default to the uniform-rod value about the centre of
    mass (m l^2 / 12), matching the half-length centres of mass used in the
    kinematics.  Swing friction coefficients are small and positive by
    default so the aerodynamic dissipation is active.
    """

    m_b: float = 2.0     # boom mass (kg)
    m_j: float = 3.0     # jib mass (kg)
    m: float = 1.0       # payload mass (kg)
    l_b: float = 5.0     # boom length (m)
    l_j: float = 4.0     # jib length (m)
    I_tot: float = 10.0  # tower slew inertia (kg m^2)
    I_B: float = None    # boom luff inertia about its COM (kg m^2)
    I_J: float = None    # jib luff inertia about its COM (kg m^2)
    d_th1: float = 0.2   # tangential swing friction (N m s/rad)
    d_th2: float = 0.2   # radial swing friction (N m s/rad)
    g: float = 9.81      # gravitational acceleration (m/s^2)
    _packed: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.I_B is None:
            object.__setattr__(self, "I_B", self.m_b * self.l_b ** 2 / 12.0)
        if self.I_J is None:
            object.__setattr__(self, "I_J", self.m_j * self.l_j ** 2 / 12.0)
        for name in ("m_b", "m_j", "m", "l_b", "l_j", "I_tot", "I_B", "I_J", "g"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"crane parameter {name} must be strictly positive")
        for name in ("d_th1", "d_th2"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"friction coefficient {name} must be >= 0")
        object.__setattr__(self, "_packed", np.array(
            [self.m_b, self.m_j, self.m, self.l_b, self.l_j, self.I_tot,
             self.I_B, self.I_J, self.d_th1, self.d_th2, self.g]))

    def as_array(self):
        """Packed parameter vector used by the numeric kernels."""
        return self._packed.copy()


@dataclass
class CraneState:
    """Generalized coordinates q and velocities qdot.

    q = [alpha, beta, gamma, d, theta1, theta2] (rad, rad, rad, m, rad, rad).
    """

    q: np.ndarray
    qdot: np.ndarray = None

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).reshape(6).copy()
        if self.qdot is None:
            self.qdot = np.zeros(6)
        self.qdot = np.asarray(self.qdot, dtype=float).reshape(6).copy()
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qdot))):
            raise ValueError("crane state must be finite")

    def in_assumption_region(self):
        """True when |theta1|, |theta2| < pi/2 and d > 0 (model admissible)."""
        return bool(abs(self.q[4]) < np.pi / 2
                    and abs(self.q[5]) < np.pi / 2
                    and self.q[3] > 0.0)

    def as_x(self):
        """Stacked state vector [q; qdot] of length 12."""
        return np.concatenate([self.q, self.qdot])


@dataclass(frozen=True)
class Reference:
    """Constant set-point for the four actuated coordinates."""

    alpha_d: float
    beta_d: float
    gamma_d: float
    d_d: float

    def __post_init__(self):
        if not self.d_d > 0.0:
            raise ValueError("reference cable length d_d must be positive "
                             "(the model is singular at d = 0)")

    def as_array(self):
        return np.array([self.alpha_d, self.beta_d, self.gamma_d, self.d_d])

    def target_state(self):
        """Equilibrium state vector with zero swing and zero velocity."""
        return np.concatenate([self.as_array(), np.zeros(2), np.zeros(6)])


def in_assumption_region(q):
    """Admissibility check on a bare coordinate vector."""
    q = np.asarray(q, dtype=float)
    return bool(abs(q[4]) < np.pi / 2 and abs(q[5]) < np.pi / 2 and q[3] > 0.0)


def cable_direction(q):
    """Unit vector from jib tip to payload.

    Radial offset sin(theta2) in the boom plane, tangential offset
    cos(theta2) sin(theta1) perpendicular to it, vertical part
    -cos(theta1) cos(theta2).  The norm is 1 for all angles.
    """
    al, t1, t2 = q[0], q[4], q[5]
    ca, sa = np.cos(al), np.sin(al)
    c1, s1 = np.cos(t1), np.sin(t1)
    c2, s2 = np.cos(t2), np.sin(t2)
    return np.array([
        ca * s2 - sa * c2 * s1,
        sa * s2 + ca * c2 * s1,
        -c1 * c2,
    ])


def tip_position(q, p):
    """World position of the jib tip."""
    al, be, ga = q[0], q[1], q[2]
    reach = p.l_b * np.cos(be) + p.l_j * np.cos(ga)
    return np.array([
        reach * np.cos(al),
        reach * np.sin(al),
        p.l_b * np.sin(be) + p.l_j * np.sin(ga),
    ])


def payload_position(q, p):
    """World position of the payload: jib tip plus d times the cable direction."""
    return tip_position(q, p) + q[3] * cable_direction(q)


def boom_com_position(q, p):
    """Centre of mass of the boom (uniform rod, half length)."""
    al, be = q[0], q[1]
    return 0.5 * p.l_b * np.array([
        np.cos(be) * np.cos(al), np.cos(be) * np.sin(al), np.sin(be)])


def jib_com_position(q, p):
    """Centre of mass of the jib (uniform rod, half length from the boom tip)."""
    al, be, ga = q[0], q[1], q[2]
    reach = p.l_b * np.cos(be) + 0.5 * p.l_j * np.cos(ga)
    return np.array([
        reach * np.cos(al),
        reach * np.sin(al),
        p.l_b * np.sin(be) + 0.5 * p.l_j * np.sin(ga),
    ])


def potential_energy(q, p):
    """Gravitational potential energy of boom, jib and payload (J).

    Equals g times the mass-weighted heights of the three bodies; the zero
    level is the tower pivot plane.
    """
    be, ga, d, t1, t2 = q[1], q[2], q[3], q[4], q[5]
    sb, sg = np.sin(be), np.sin(ga)
    return (p.g * p.m * (p.l_b * sb + p.l_j * sg - np.cos(t1) * np.cos(t2) * d)
            + p.g * p.m_j * (p.l_b * sb + 0.5 * p.l_j * sg)
            + 0.5 * p.g * p.l_b * p.m_b * sb)


def kinetic_energy(q, qdot, p):
    """Kinetic energy 0.5 qd' M(q) qd (J), nonnegative."""
    qdot = np.asarray(qdot, dtype=float)
    return 0.5 * qdot @ mass_matrix(q, p) @ qdot


def swing_energy(q, qdot, p):
    """Kinetic energy plus the payload swing potential m g d (1 - c1 c2).

    This is the energy-like quantity the anti-sway controller is built on:
    it is zero exactly when the crane is at rest with the payload hanging
    straight down.
    """
    d, t1, t2 = q[3], q[4], q[5]
    rel = p.m * p.g * d * (1.0 - np.cos(t1) * np.cos(t2))
    return kinetic_energy(q, qdot, p) + rel


def total_energy(q, qdot, p):
    """Full mechanical energy T + U (J); conserved when u = 0 and friction is off."""
    return kinetic_energy(q, qdot, p) + potential_energy(q, p)
