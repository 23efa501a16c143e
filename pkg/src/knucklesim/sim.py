"""Fixed-step closed-loop simulation, trajectory recording and metrics.

The integrator holds the control input constant over each step (zero-order
hold) and queries the controller once per step on the current state.  The
admissible-region assumptions (|theta| < pi/2, d > 0) are monitored every
step; a violating state aborts the run before being recorded, so recorded
trajectories never contain inadmissible rows.

Runs are strictly deterministic: the same configuration and parameters
produce bit-identical trajectories on the same platform.
"""

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numba import njit

from .control import (DEFAULT_GAINS, GainSet, _lyapunov_kernel,
                      _lyapunov_rate_kernel, _nl_control_kernel, design_lqr)
from .dynamics import (P_G, P_M, SingularMass, _forward_kernel, _mass_kernel,
                       _pack)
from .model import CraneParams, CraneState, Reference

CTRL_NONLINEAR = 0
CTRL_LQR = 1
CTRL_OPEN_LOOP = 2

INTEGRATOR_RK4 = 0
INTEGRATOR_SEMI_IMPLICIT = 1

STATUS_OK = 0
STATUS_SWING_BOUND = 1
STATUS_CABLE_LENGTH = 2
STATUS_NONFINITE = 3
STATUS_SINGULAR = 4
STATUS_NOT_SETTLED = 5

# default thresholds for the set-point objective check at the end of a run
OBJECTIVE_POS_TOL = 0.05
OBJECTIVE_VEL_TOL = 0.05


class AssumptionViolated(Exception):
    """A swing angle reached pi/2 or the cable length dropped to zero."""

    def __init__(self, row, which):
        self.row = row
        self.which = which
        super().__init__(
            f"assumption violated at step {row}: {which} "
            f"({'|theta| >= pi/2' if which == 'swing' else 'd <= 0'})")


class NonFinite(Exception):
    """The integrator produced a NaN or infinity."""

    def __init__(self, row):
        self.row = row
        super().__init__(f"non-finite state at step {row}")


@njit(cache=True)
def _rk4_step(q, qd, u, dt, par):
    a1, ok = _forward_kernel(q, qd, u, par)
    if not ok:
        return q, qd, False
    q2 = q + 0.5 * dt * qd
    v2 = qd + 0.5 * dt * a1
    a2, ok = _forward_kernel(q2, v2, u, par)
    if not ok:
        return q, qd, False
    q3 = q + 0.5 * dt * v2
    v3 = qd + 0.5 * dt * a2
    a3, ok = _forward_kernel(q3, v3, u, par)
    if not ok:
        return q, qd, False
    q4 = q + dt * v3
    v4 = qd + dt * a3
    a4, ok = _forward_kernel(q4, v4, u, par)
    if not ok:
        return q, qd, False
    q_new = q + dt / 6.0 * (qd + 2.0 * v2 + 2.0 * v3 + v4)
    v_new = qd + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return q_new, v_new, True


@njit(cache=True)
def _semi_implicit_step(q, qd, u, dt, par):
    acc, ok = _forward_kernel(q, qd, u, par)
    if not ok:
        return q, qd, False
    v_new = qd + dt * acc
    q_new = q + dt * v_new
    return q_new, v_new, True


@njit(cache=True)
def _energy_kernel(q, qd, par):
    M = _mass_kernel(q, par)
    kin = 0.0
    for i in range(6):
        for j in range(6):
            kin += qd[i] * M[i, j] * qd[j]
    swing = par[P_M] * par[P_G] * q[3] * (1.0 - np.cos(q[4]) * np.cos(q[5]))
    return 0.5 * kin + swing


@njit(cache=True)
def _state_status(q, qd):
    for i in range(6):
        if not (np.isfinite(q[i]) and np.isfinite(qd[i])):
            return STATUS_NONFINITE
    if abs(q[4]) >= np.pi / 2 or abs(q[5]) >= np.pi / 2:
        return STATUS_SWING_BOUND
    if q[3] <= 0.0:
        return STATUS_CABLE_LENGTH
    return STATUS_OK


@njit(cache=True)
def _control_in_loop(ctrl_code, k, q, qd, ref, gains, K, x_star, u_eq, sched, par):
    if ctrl_code == CTRL_NONLINEAR:
        return _nl_control_kernel(q, qd, ref, gains, par)
    if ctrl_code == CTRL_LQR:
        u = np.empty(4)
        for i in range(4):
            acc = u_eq[i]
            for j in range(6):
                acc -= K[i, j] * (q[j] - x_star[j])
                acc -= K[i, j + 6] * (qd[j] - x_star[j + 6])
            u[i] = acc
        return u
    idx = k if k < sched.shape[0] else sched.shape[0] - 1
    return sched[idx].copy()


@njit(cache=True)
def _run_loop(q0, qd0, dt, n_steps, par, ctrl_code, ref, gains,
              K, x_star, u_eq, sched, sat, lyap_ref, lyap_gains,
              integrator_code):
    data = np.zeros((n_steps + 1, 20))
    q = q0.copy()
    qd = qd0.copy()
    for k in range(n_steps + 1):
        u = _control_in_loop(ctrl_code, k, q, qd, ref, gains,
                             K, x_star, u_eq, sched, par)
        for i in range(4):
            if np.isfinite(sat[i]):
                if u[i] > sat[i]:
                    u[i] = sat[i]
                elif u[i] < -sat[i]:
                    u[i] = -sat[i]
            if not np.isfinite(u[i]):
                return data[:k], STATUS_NONFINITE, k
        data[k, 0] = k * dt
        for i in range(6):
            data[k, 1 + i] = q[i]
            data[k, 7 + i] = qd[i]
        for i in range(4):
            data[k, 13 + i] = u[i]
        data[k, 17] = _energy_kernel(q, qd, par)
        data[k, 18] = _lyapunov_kernel(q, qd, lyap_ref, lyap_gains, par)
        data[k, 19] = _lyapunov_rate_kernel(q, qd, lyap_ref, lyap_gains, u, par)
        if k == n_steps:
            break
        if integrator_code == INTEGRATOR_RK4:
            q, qd, ok = _rk4_step(q, qd, u, dt, par)
        else:
            q, qd, ok = _semi_implicit_step(q, qd, u, dt, par)
        if not ok:
            return data[:k + 1], STATUS_SINGULAR, k + 1
        status = _state_status(q, qd)
        if status != STATUS_OK:
            return data[:k + 1], status, k + 1
    return data, STATUS_OK, -1


@njit(cache=True)
def _regulate_loop(q0, qd0, dt, n_max, par, ref, gains, tol_q, tol_qd):
    """Run the nonlinear closed loop until the set point is reached.

    Returns (status, steps, max_v_increase, q, qd); status 0 means the
    state entered the (tol_q, tol_qd) ball around the target.
    """
    q = q0.copy()
    qd = qd0.copy()
    v_prev = _lyapunov_kernel(q, qd, ref, gains, par)
    max_dv = -np.inf
    for k in range(1, n_max + 1):
        u = _nl_control_kernel(q, qd, ref, gains, par)
        q, qd, ok = _rk4_step(q, qd, u, dt, par)
        if not ok:
            return STATUS_SINGULAR, k, max_dv, q, qd
        status = _state_status(q, qd)
        if status != STATUS_OK:
            return status, k, max_dv, q, qd
        v = _lyapunov_kernel(q, qd, ref, gains, par)
        if v - v_prev > max_dv:
            max_dv = v - v_prev
        v_prev = v
        err = 0.0
        vel = 0.0
        for i in range(6):
            target = ref[i] if i < 4 else 0.0
            err += (q[i] - target) ** 2
            vel += qd[i] * qd[i]
        if err <= tol_q * tol_q and vel <= tol_qd * tol_qd:
            return STATUS_OK, k, max_dv, q, qd
    return STATUS_NOT_SETTLED, n_max, max_dv, q, qd


@dataclass
class NonlinearController:
    gains: GainSet = field(default_factory=lambda: DEFAULT_GAINS)
    name: str = "nonlinear"


@dataclass
class LqrController:
    Q: np.ndarray = None
    R: np.ndarray = None
    name: str = "lqr"


@dataclass
class OpenLoopController:
    """Fixed input schedule; a (4,) vector is held constant, an (n, 4)
    array is indexed per step (last row held beyond the end)."""

    schedule: np.ndarray = None
    name: str = "open_loop"


ControllerSpec = Union[NonlinearController, LqrController, OpenLoopController]


@dataclass
class SimConfig:
    """Everything needed to reproduce one closed-loop run."""

    initial: CraneState
    ref: Reference
    controller: ControllerSpec
    dt: float = 1e-3
    t_final: float = 60.0
    integrator: str = "rk4"
    saturation: Optional[np.ndarray] = None     # per-channel symmetric bound
    lyapunov_gains: Optional[GainSet] = None    # gains used for the recorded V

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.t_final < self.dt:
            raise ValueError("t_final must be at least one step")
        if self.integrator not in ("rk4", "semi-implicit-euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if not self.initial.in_assumption_region():
            raise ValueError(
                "initial state violates the model assumptions "
                "(|theta| < pi/2 and d > 0 required)")


@dataclass
class Trajectory:
    """Time-indexed record of one run.

    Columns of ``data``: t, q (6), qdot (6), u (4), E, V, Vdot.  E is the
    kinetic plus payload-swing energy; V and Vdot are the controller
    storage function and its closed-form rate, evaluated with the gains in
    the metadata (for non-nonlinear controllers they are diagnostic only).
    """

    data: np.ndarray
    metadata: dict

    @property
    def t(self):
        return self.data[:, 0]

    @property
    def q(self):
        return self.data[:, 1:7]

    @property
    def qdot(self):
        return self.data[:, 7:13]

    @property
    def u(self):
        return self.data[:, 13:17]

    @property
    def energy(self):
        return self.data[:, 17]

    @property
    def lyapunov(self):
        return self.data[:, 18]

    @property
    def lyapunov_rate(self):
        return self.data[:, 19]

    @property
    def final_state(self):
        return CraneState(q=self.data[-1, 1:7], qdot=self.data[-1, 7:13])


@dataclass
class Metrics:
    """Scalar summary of a regulation run."""

    settling_time: dict          # per actuated coordinate, 2 percent band
    peak_theta1: float
    peak_theta2: float
    rms_theta1: float            # over the final 10 percent of the run
    rms_theta2: float
    max_input: np.ndarray        # per channel
    objective_met: bool

    def as_dict(self):
        out = {}
        for key in ("alpha", "beta", "gamma", "d"):
            out[f"settling_{key}"] = float(self.settling_time[key])
        out["peak_theta1"] = float(self.peak_theta1)
        out["peak_theta2"] = float(self.peak_theta2)
        out["rms_theta1"] = float(self.rms_theta1)
        out["rms_theta2"] = float(self.rms_theta2)
        for i in range(4):
            out[f"max_u{i + 1}"] = float(self.max_input[i])
        out["objective_met"] = bool(self.objective_met)
        return out

    METRIC_NAMES = ("settling_alpha", "settling_beta", "settling_gamma",
                    "settling_d", "peak_theta1", "peak_theta2", "rms_theta1",
                    "rms_theta2", "max_u1", "max_u2", "max_u3", "max_u4",
                    "objective_met")


def step(q, qd, u, dt, p, integrator="rk4"):
    """One integrator step with the input held constant.

    Raises SingularMass if the mass matrix loses positive definiteness
    during the step and NonFinite if the result is not finite.
    """
    q = np.asarray(q, dtype=np.float64)
    qd = np.asarray(qd, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    par = _pack(p)
    if integrator == "rk4":
        q_new, v_new, ok = _rk4_step(q, qd, u, dt, par)
    elif integrator == "semi-implicit-euler":
        q_new, v_new, ok = _semi_implicit_step(q, qd, u, dt, par)
    else:
        raise ValueError(f"unknown integrator {integrator!r}")
    if not ok:
        raise SingularMass(q)
    if not (np.all(np.isfinite(q_new)) and np.all(np.isfinite(v_new))):
        raise NonFinite(0)
    return q_new, v_new


def _controller_arrays(cfg: SimConfig, p: CraneParams):
    """Translate the controller spec into the arrays the loop kernel wants."""
    ref4 = cfg.ref.as_array()
    gains8 = np.zeros(8)
    K = np.zeros((4, 12))
    x_star = np.zeros(12)
    u_eq = np.zeros(4)
    sched = np.zeros((1, 4))
    ctrl = cfg.controller
    if isinstance(ctrl, NonlinearController):
        code = CTRL_NONLINEAR
        gains8 = ctrl.gains.as_array()
    elif isinstance(ctrl, LqrController):
        code = CTRL_LQR
        design = design_lqr(cfg.ref, p, ctrl.Q, ctrl.R)
        K = design.K
        x_star = design.x_star
        u_eq = design.u_eq
    elif isinstance(ctrl, OpenLoopController):
        code = CTRL_OPEN_LOOP
        if ctrl.schedule is None:
            sched = np.zeros((1, 4))
        else:
            sched = np.atleast_2d(np.asarray(ctrl.schedule, dtype=np.float64))
        if sched.shape[1] != 4:
            raise ValueError("open-loop schedule must have 4 input columns")
    else:
        raise TypeError(f"unknown controller spec {ctrl!r}")
    return code, ref4, gains8, K, x_star, u_eq, sched


def config_fingerprint(cfg: SimConfig, p: CraneParams):
    """Stable hash of a configuration, for trajectory provenance."""
    payload = {
        "params": list(p.as_array()),
        "initial_q": list(cfg.initial.q),
        "initial_qdot": list(cfg.initial.qdot),
        "ref": list(cfg.ref.as_array()),
        "controller": cfg.controller.name,
        "dt": cfg.dt,
        "t_final": cfg.t_final,
        "integrator": cfg.integrator,
        "saturation": None if cfg.saturation is None else list(cfg.saturation),
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def simulate(cfg: SimConfig, p: CraneParams) -> Trajectory:
    """Run the closed loop over the full horizon and record every step.

    Raises
    ------
    AssumptionViolated
        If a swing angle reaches pi/2 or the cable length reaches zero;
        the exception carries the step index at which it happened.
    NonFinite, SingularMass
        Propagated integrator failures.
    """
    n_steps = int(np.floor(cfg.t_final / cfg.dt + 1e-9))
    code, ref4, gains8, K, x_star, u_eq, sched = _controller_arrays(cfg, p)

    lyap_gains = cfg.lyapunov_gains
    if lyap_gains is None:
        lyap_gains = (cfg.controller.gains
                      if isinstance(cfg.controller, NonlinearController)
                      else DEFAULT_GAINS)
    sat = (np.full(4, np.inf) if cfg.saturation is None
           else np.asarray(cfg.saturation, dtype=np.float64))
    integrator_code = (INTEGRATOR_RK4 if cfg.integrator == "rk4"
                       else INTEGRATOR_SEMI_IMPLICIT)

    data, status, abort_row = _run_loop(
        cfg.initial.q, cfg.initial.qdot, cfg.dt, n_steps, _pack(p),
        code, ref4, gains8, K, x_star, u_eq, sched, sat,
        ref4, lyap_gains.as_array(), integrator_code)

    if status == STATUS_SWING_BOUND:
        raise AssumptionViolated(abort_row, "swing")
    if status == STATUS_CABLE_LENGTH:
        raise AssumptionViolated(abort_row, "cable")
    if status == STATUS_NONFINITE:
        raise NonFinite(abort_row)
    if status == STATUS_SINGULAR:
        raise SingularMass(data[-1, 1:7] if len(data) else cfg.initial.q)

    metadata = {
        "config_hash": config_fingerprint(cfg, p),
        "controller": cfg.controller.name,
        "dt": cfg.dt,
        "t_final": cfg.t_final,
        "integrator": cfg.integrator,
        "lyapunov_gains": list(lyap_gains.as_array()),
        "params": {k: float(v) for k, v in zip(
            ("m_b", "m_j", "m", "l_b", "l_j", "I_tot", "I_B", "I_J",
             "d_th1", "d_th2", "g"), p.as_array())},
    }
    return Trajectory(data=data, metadata=metadata)


@dataclass
class RegulationResult:
    converged: bool
    t_converged: float
    max_v_increase: float
    final: CraneState


def regulate_to(ref: Reference, initial: CraneState, gains: GainSet,
                p: CraneParams, dt=2e-3, t_max=300.0,
                tol_q=1e-3, tol_qd=1e-3) -> RegulationResult:
    """Drive the nonlinear closed loop to the set point, stopping early.

    Convergence means ||q - q_target|| <= tol_q and ||qdot|| <= tol_qd
    (Euclidean norms, swing targets zero).  Also tracks the largest
    step-to-step increase of the storage function V, which should never
    exceed integration noise.
    """
    if not initial.in_assumption_region():
        raise ValueError("initial state violates the model assumptions")
    n_max = int(np.ceil(t_max / dt))
    status, steps, max_dv, q, qd = _regulate_loop(
        initial.q, initial.qdot, dt, n_max, _pack(p),
        ref.as_array(), gains.as_array(), tol_q, tol_qd)
    if status == STATUS_SWING_BOUND:
        raise AssumptionViolated(steps, "swing")
    if status == STATUS_CABLE_LENGTH:
        raise AssumptionViolated(steps, "cable")
    if status == STATUS_NONFINITE:
        raise NonFinite(steps)
    if status == STATUS_SINGULAR:
        raise SingularMass(q)
    return RegulationResult(
        converged=(status == STATUS_OK),
        t_converged=steps * dt if status == STATUS_OK else np.inf,
        max_v_increase=float(max_dv),
        final=CraneState(q=q, qdot=qd),
    )


def compute_metrics(traj: Trajectory, ref: Reference,
                    pos_tol=OBJECTIVE_POS_TOL,
                    vel_tol=OBJECTIVE_VEL_TOL) -> Metrics:
    """Deterministic summary metrics of a completed trajectory.

    Settling time per actuated coordinate is the last time the signal sits
    outside a 2 percent band of its initial-to-reference step (0 if it
    never leaves the band).  The set-point objective is met when every
    coordinate error (swing targets are zero) is within ``pos_tol`` and
    every velocity within ``vel_tol`` at the end of the run.
    """
    t = traj.t
    q = traj.q
    qd = traj.qdot
    ref4 = ref.as_array()

    settling = {}
    for idx, name in enumerate(("alpha", "beta", "gamma", "d")):
        step_size = abs(ref4[idx] - q[0, idx])
        band = 0.02 * max(step_size, 1e-9)
        outside = np.abs(q[:, idx] - ref4[idx]) > band
        settling[name] = float(t[np.nonzero(outside)[0][-1]]) if outside.any() else 0.0

    tail = slice(int(np.floor(0.9 * (len(t) - 1))), None)
    target = np.concatenate([ref4, [0.0, 0.0]])
    pos_err = np.abs(q[-1] - target)
    metrics = Metrics(
        settling_time=settling,
        peak_theta1=float(np.max(np.abs(q[:, 4]))),
        peak_theta2=float(np.max(np.abs(q[:, 5]))),
        rms_theta1=float(np.sqrt(np.mean(q[tail, 4] ** 2))),
        rms_theta2=float(np.sqrt(np.mean(q[tail, 5] ** 2))),
        max_input=np.max(np.abs(traj.u), axis=0),
        objective_met=bool(np.all(pos_err <= pos_tol)
                           and np.all(np.abs(qd[-1]) <= vel_tol)),
    )
    return metrics
