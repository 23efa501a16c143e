"""Structural property checks of the implemented dynamics.

Each check samples seeded random states inside the admissible region and
compares an analytic quantity against its independent finite-difference
oracle.  They are cheap enough to run at configuration time (the
``validate`` CLI command) and strict enough to catch any transcription
error in the dynamics.

The checks accept injectable function handles so the test suite can verify
that a corrupted build is actually detected (negative controls).
"""

from dataclasses import dataclass

import numpy as np

from . import dynamics, model, oracles

SKEW_TOL = 1e-6
GRADIENT_TOL = 1e-6
SYMMETRY_TOL = 1e-12
EL_TOL = 1e-5
RESIDUAL_TOL = 1e-8


@dataclass
class PropertyReport:
    name: str
    passed: bool
    worst: float
    tolerance: float
    worst_state: np.ndarray = None

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        msg = f"{flag}  {self.name}: worst {self.worst:.3e} (tol {self.tolerance:.1e})"
        if not self.passed and self.worst_state is not None:
            msg += f"\n      at state q={np.array2string(self.worst_state, precision=6)}"
        return msg


def sample_state(rng, d_range=(0.5, 20.0), swing_margin=0.1, vel_scale=1.0):
    """Random admissible state: |theta| < pi/2 - margin, d in d_range."""
    q = np.array([
        rng.uniform(-np.pi, np.pi),
        rng.uniform(-1.2, 1.2),
        rng.uniform(-1.2, 1.2),
        rng.uniform(*d_range),
        rng.uniform(-(np.pi / 2 - swing_margin), np.pi / 2 - swing_margin),
        rng.uniform(-(np.pi / 2 - swing_margin), np.pi / 2 - swing_margin),
    ])
    qd = rng.uniform(-vel_scale, vel_scale, size=6)
    return q, qd


def check_mass_symmetry(p, rng, samples=1000, mass_fn=None):
    """max |M_ij - M_ji| over random states."""
    mass_fn = mass_fn or dynamics.mass_matrix
    worst, worst_q = 0.0, None
    for _ in range(samples):
        q, _ = sample_state(rng)
        M = mass_fn(q, p)
        err = np.max(np.abs(M - M.T))
        if err > worst:
            worst, worst_q = err, q
    return PropertyReport("mass matrix symmetry", worst <= SYMMETRY_TOL,
                          worst, SYMMETRY_TOL, worst_q)


def check_positive_definite(p, rng, samples=1000, mass_fn=None):
    """Smallest eigenvalue of M over random admissible states."""
    mass_fn = mass_fn or dynamics.mass_matrix
    worst, worst_q = np.inf, None
    for _ in range(samples):
        q, _ = sample_state(rng)
        lam = np.linalg.eigvalsh(mass_fn(q, p))[0]
        if lam < worst:
            worst, worst_q = lam, q
    return PropertyReport("mass matrix positive definite", worst > 0.0,
                          worst, 0.0, worst_q)


def check_skew_symmetry(p, rng, samples=1000, coriolis_fn=None):
    """max |z'(Mdot/2 - C)z| / |z|^2 with Mdot from directional differences."""
    coriolis_fn = coriolis_fn or dynamics.coriolis_matrix
    worst, worst_q = 0.0, None
    for _ in range(samples):
        q, qd = sample_state(rng)
        z = rng.normal(size=6)
        Mdot = oracles.mass_rate_fd(q, qd, p)
        C = coriolis_fn(q, qd, p)
        val = abs(z @ (0.5 * Mdot - C) @ z) / (z @ z)
        if val > worst:
            worst, worst_q = val, q
    return PropertyReport("skew symmetry of Mdot/2 - C", worst <= SKEW_TOL,
                          worst, SKEW_TOL, worst_q)


def check_gravity_gradient(p, rng, samples=1000, gravity_fn=None):
    """max |g(q) - dU/dq|_inf against the finite-difference gradient."""
    gravity_fn = gravity_fn or dynamics.gravity_vector
    worst, worst_q = 0.0, None
    for _ in range(samples):
        q, _ = sample_state(rng)
        err = np.max(np.abs(gravity_fn(q, p) - oracles.gravity_gradient_fd(q, p)))
        if err > worst:
            worst, worst_q = err, q
    return PropertyReport("gravity vector is the potential gradient",
                          worst <= GRADIENT_TOL, worst, GRADIENT_TOL, worst_q)


def check_el_oracle(p, rng, samples=50, forward_fn=None):
    """Euler-Lagrange residual of accelerations from the forward dynamics."""
    forward_fn = forward_fn or dynamics.forward_dynamics
    worst, worst_q = 0.0, None
    for _ in range(samples):
        q, qd = sample_state(rng, d_range=(0.5, 10.0))
        u = rng.uniform(-100.0, 100.0, size=4)
        qdd = forward_fn(q, qd, u, p)
        res = np.max(np.abs(oracles.el_residual(q, qd, qdd, u, p)))
        if res > worst:
            worst, worst_q = res, q
    return PropertyReport("Euler-Lagrange oracle residual", worst <= EL_TOL,
                          worst, EL_TOL, worst_q)


def check_substitute_back(p, rng, samples=200, forward_fn=None):
    """Residual |M qdd + C qd + F + g - B u| for forward-dynamics output."""
    forward_fn = forward_fn or dynamics.forward_dynamics
    B = dynamics.actuation_matrix()
    worst, worst_q = 0.0, None
    for _ in range(samples):
        q, qd = sample_state(rng)
        u = rng.uniform(-100.0, 100.0, size=4)
        qdd = forward_fn(q, qd, u, p)
        res = np.max(np.abs(
            dynamics.mass_matrix(q, p) @ qdd
            + dynamics.coriolis_matrix(q, qd, p) @ qd
            + dynamics.friction_vector(q, qd, p)
            + dynamics.gravity_vector(q, p) - B @ u))
        if res > worst:
            worst, worst_q = res, q
    return PropertyReport("forward dynamics substitute-back residual",
                          worst <= RESIDUAL_TOL, worst, RESIDUAL_TOL, worst_q)


def run_property_suite(p=None, seed=0, samples=50):
    """The fast invariant suite: returns the list of property reports."""
    p = p or model.CraneParams()
    reports = [
        check_mass_symmetry(p, np.random.default_rng(seed), samples),
        check_positive_definite(p, np.random.default_rng(seed + 1), samples),
        check_skew_symmetry(p, np.random.default_rng(seed + 2), samples),
        check_gravity_gradient(p, np.random.default_rng(seed + 3), samples),
        check_el_oracle(p, np.random.default_rng(seed + 4), min(samples, 50)),
    ]
    return reports
