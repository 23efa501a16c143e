"""Equation-of-motion matrices against the finite-difference oracles.

Resolved source discrepancies, decided by the Euler-Lagrange oracle (the
kinematic construction is ground truth throughout):

* the payload-distance entries of the mass matrix are quadratic in the
  cable length: M[4,4] = m d^2 cos(theta2)^2 and M[5,5] = m d^2 (a linear
  d would be dimensionally wrong);
* the cross terms coupling the payload to the boom/jib carry the factors
  l_b*m and l_j*m (not twice that);
* the Coriolis matrix is not transcribed entry by entry at all: it is
  assembled from Christoffel symbols of the mass matrix, which guarantees
  the skew-symmetry identity and the Euler-Lagrange equations by
  construction.
"""

import numpy as np
import pytest

from knucklesim import (SingularMass, coriolis_matrix, forward_dynamics,
                        friction_vector, gravity_vector, mass_matrix,
                        nonlinear_control)
from knucklesim.dynamics import actuation_matrix
from knucklesim.model import CraneParams
from knucklesim.oracles import (el_residual, gravity_gradient_fd,
                                mass_matrix_fd, mass_rate_fd)
from knucklesim.validation import sample_state


# -- mass matrix ------------------------------------------------------------

def test_mass_matrix_pinned_entries(params, rng):
    # m is the payload mass and the hoist inertia; the boom luff inertia
    # group is l_b^2 (m + m_b/4 + m_j) = 112.5 with the reference parameters
    for _ in range(20):
        q, _ = sample_state(rng)
        M = mass_matrix(q, params)
        assert M[3, 3] == pytest.approx(1.0, rel=1e-14)
        assert M[1, 1] == pytest.approx(112.5 + params.I_B, rel=1e-14)


def test_mass_matrix_slew_rows_vanish_at_zero_tangential_swing(params, rng):
    # every slew/boom, slew/jib and slew/hoist coupling carries sin(theta1)
    for _ in range(20):
        q, _ = sample_state(rng)
        q[4] = 0.0
        M = mass_matrix(q, params)
        assert M[0, 1] == M[0, 2] == M[0, 3] == 0.0


def test_mass_matrix_sparsity(params, rng):
    for _ in range(50):
        q, _ = sample_state(rng)
        M = mass_matrix(q, params)
        assert M[3, 4] == M[3, 5] == M[4, 5] == 0.0


def test_mass_matrix_symmetry(params, rng):
    worst = 0.0
    for _ in range(1000):
        q, _ = sample_state(rng)
        M = mass_matrix(q, params)
        worst = max(worst, np.max(np.abs(M - M.T)))
    assert worst <= 1e-12


def test_mass_matrix_positive_definite(params, rng):
    smallest = np.inf
    for _ in range(1000):
        q, _ = sample_state(rng)
        smallest = min(smallest, np.linalg.eigvalsh(mass_matrix(q, params))[0])
    assert smallest > 0.0


def test_mass_matrix_against_hessian_oracle(params, rng):
    for _ in range(200):
        q, _ = sample_state(rng)
        M = mass_matrix(q, params)
        M_fd = mass_matrix_fd(q, params)
        scale = 1.0 + np.max(np.abs(M))
        assert np.max(np.abs(M - M_fd)) <= 1e-6 * scale


# -- Coriolis matrix ---------------------------------------------------------

def test_coriolis_zero_at_rest(params, rng):
    for _ in range(20):
        q, _ = sample_state(rng)
        assert np.all(coriolis_matrix(q, np.zeros(6), params) == 0.0)


def test_skew_symmetry(params, rng):
    worst = 0.0
    for _ in range(1000):
        q, qd = sample_state(rng)
        z = rng.normal(size=6)
        Mdot = mass_rate_fd(q, qd, params)
        C = coriolis_matrix(q, qd, params)
        worst = max(worst, abs(z @ (0.5 * Mdot - C) @ z) / (z @ z))
    assert worst <= 1e-6


# -- gravity and friction ----------------------------------------------------

def test_gravity_pinned_values(params):
    q = np.array([0.3, 0.0, 0.0, 5.0, 0.0, 0.0])
    g = gravity_vector(q, params)
    assert g[0] == 0.0
    assert g[1] == pytest.approx(245.25)          # boom term at beta = 0
    assert g[2] == pytest.approx(98.10)           # jib term at gamma = 0
    assert g[3] == pytest.approx(-9.81)           # hoist term at zero swing
    assert g[4] == 0.0 and g[5] == 0.0


def test_gravity_is_potential_gradient(params, rng):
    worst = 0.0
    for _ in range(1000):
        q, _ = sample_state(rng)
        worst = max(worst, np.max(np.abs(
            gravity_vector(q, params) - gravity_gradient_fd(q, params))))
    assert worst <= 1e-6


def test_friction_trivial_cases(params):
    q = np.array([0, 0, 0, 5.0, 0.1, 0.2])
    assert np.all(friction_vector(q, np.zeros(6), params) == 0.0)
    # |theta1| factor kills the tangential term at theta1 = 0
    q = np.array([0, 0, 0, 5.0, 0.0, 0.2])
    qd = np.array([0, 0, 0, 0, 3.0, 0.0])
    assert friction_vector(q, qd, params)[4] == 0.0


def test_friction_frozen_value():
    p = CraneParams(d_th1=0.2, d_th2=0.2)
    q = np.array([0, 0, 0, 5.0, 0.1, 0.2])
    qd = np.array([0, 0, 0, 0, 0.5, 0.0])
    F = friction_vector(q, qd, p)
    assert F[4] == pytest.approx(0.009605304970014427, rel=1e-12)
    assert np.all(F[:4] == 0.0) and F[5] == 0.0


def test_friction_dissipative(params, rng):
    for _ in range(300):
        q, qd = sample_state(rng, vel_scale=3.0)
        assert qd @ friction_vector(q, qd, params) >= 0.0


# -- forward dynamics ---------------------------------------------------------

def test_equilibrium_force_balance(params):
    # holding input equal to the gravity vector on the actuated coordinates;
    # note the hoist component is g_4 = -m g (the winch holds against
    # gravity pulling the rope out), not +m g
    q = np.array([0.4, 0.25, 0.1, 6.0, 0.0, 0.0])
    u = gravity_vector(q, params)[:4]
    qdd = forward_dynamics(q, np.zeros(6), u, params)
    assert np.max(np.abs(qdd)) <= 1e-12


def test_forward_dynamics_substitute_back(params, rng):
    B = actuation_matrix()
    worst = 0.0
    for _ in range(200):
        q, qd = sample_state(rng)
        u = rng.uniform(-100, 100, size=4)
        qdd = forward_dynamics(q, qd, u, params)
        res = (mass_matrix(q, params) @ qdd + coriolis_matrix(q, qd, params) @ qd
               + friction_vector(q, qd, params) + gravity_vector(q, params)
               - B @ u)
        worst = max(worst, np.max(np.abs(res)))
    assert worst <= 1e-8


def test_singular_mass_raises(params):
    q = np.array([0, 0.2, 0.1, 1e-13, 0.0, 0.0])
    with pytest.raises(SingularMass):
        forward_dynamics(q, np.zeros(6), np.zeros(4), params)


def test_pendulum_frequency_with_held_actuators(params):
    # lock the actuated coordinates with very stiff PD control and release
    # a small radial swing: the payload must oscillate at sqrt(g/d)
    from knucklesim import GainSet, Reference
    from knucklesim.sim import step

    d0 = 5.0
    ref = Reference(0.0, 0.3, 0.1, d0)
    stiff = GainSet(*([1e4] * 4 + [200.0] * 4))
    q = np.array([0.0, 0.3, 0.1, d0, 0.0, 0.01])
    qd = np.zeros(6)
    dt = 2e-4  # small enough for RK4 stability on the stiff hold channels
    crossings = []
    prev = q[5]
    for k in range(int(15.0 / dt)):
        u = nonlinear_control(q, qd, ref, stiff, params)
        q, qd = step(q, qd, u, dt, params)
        if prev < 0.0 <= q[5]:
            # linear interpolation of the upward zero crossing
            frac = -prev / (q[5] - prev)
            crossings.append((k + frac) * dt)
        prev = q[5]
    assert len(crossings) >= 3
    period = np.mean(np.diff(crossings))
    omega = 2 * np.pi / period
    assert omega == pytest.approx(np.sqrt(params.g / d0), rel=1e-3)


# -- Euler-Lagrange oracle -----------------------------------------------------

def test_el_residual_for_consistent_accelerations(params, rng):
    worst = 0.0
    for _ in range(50):
        q, qd = sample_state(rng, d_range=(0.5, 10.0))
        u = rng.uniform(-100, 100, size=4)
        qdd = forward_dynamics(q, qd, u, params)
        worst = max(worst, np.max(np.abs(el_residual(q, qd, qdd, u, params))))
    assert worst <= 1e-5


def test_el_residual_at_supported_rest(params):
    q = np.array([0.4, 0.25, 0.1, 6.0, 0.0, 0.0])
    u = gravity_vector(q, params)[:4]
    res = el_residual(q, np.zeros(6), np.zeros(6), u, params)
    assert np.max(np.abs(res)) <= 1e-7


def test_el_oracle_detects_corrupted_mass_matrix(params, rng):
    # the oracle must notice a 1 percent error in a single mass entry
    baseline, corrupted = 0.0, np.inf
    for _ in range(10):
        q, qd = sample_state(rng, d_range=(2.0, 8.0))
        u = rng.uniform(-50, 50, size=4)
        qdd = forward_dynamics(q, qd, u, params)
        baseline = max(baseline, np.max(np.abs(el_residual(q, qd, qdd, u, params))))

        M_bad = mass_matrix(q, params)
        M_bad[0, 0] *= 1.01
        rhs = (actuation_matrix() @ u - coriolis_matrix(q, qd, params) @ qd
               - friction_vector(q, qd, params) - gravity_vector(q, params))
        qdd_bad = np.linalg.solve(M_bad, rhs)
        corrupted = min(corrupted, np.max(np.abs(
            el_residual(q, qd, qdd_bad, u, params))))
    assert corrupted > 10.0 * baseline
