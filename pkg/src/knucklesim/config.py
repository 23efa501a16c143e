"""Experiment configuration files.

A single YAML document describes one experiment: the crane parameters, the
scenario (initial state, set point, horizon, step), the controllers to run
and the output location.  Validation is strict: unknown keys anywhere in
the document are rejected, and every physical invariant (positive masses,
positive cable length, admissible initial state, positive gains, ...) is
checked before anything runs.

All angles are radians, lengths metres, times seconds.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .control import DEFAULT_LQR_Q, DEFAULT_LQR_R, GainSet
from .model import CraneParams, CraneState, Reference
from .sim import (LqrController, NonlinearController, OpenLoopController,
                  SimConfig)


class ConfigError(Exception):
    """A configuration file failed validation; the message names the field."""


_STATE_KEYS = ("alpha", "beta", "gamma", "d", "theta1", "theta2")
_REF_KEYS = ("alpha", "beta", "gamma", "d")
_GAIN_KEYS = ("kp_alpha", "kp_beta", "kp_gamma", "kp_d",
              "kd_alpha", "kd_beta", "kd_gamma", "kd_d")
_CRANE_KEYS = ("m_b", "m_j", "m", "l_b", "l_j", "I_tot", "I_B", "I_J",
               "d_th1", "d_th2", "g")

# the scenario used by the reference experiments: a combined slew/luff
# motion with a long hoist (9 m -> 3 m), starting with a small swing
DEFAULT_SCENARIO = {
    "initial": {"alpha": 0.0, "beta": 0.3, "gamma": 0.2, "d": 9.0,
                "theta1": 0.05, "theta2": 0.05},
    "reference": {"alpha": 0.5, "beta": 0.9, "gamma": 0.6, "d": 3.0},
    "t_final": 90.0,
    "dt": 1e-3,
    "integrator": "rk4",
}

DEFAULT_GAIN_VALUES = {"kp_alpha": 30.0, "kp_beta": 10.0, "kp_gamma": 10.0,
                       "kp_d": 1.0, "kd_alpha": 50.0, "kd_beta": 30.0,
                       "kd_gamma": 50.0, "kd_d": 10.0}


def _require_mapping(node, name):
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    return node


def _reject_unknown(node, allowed, name):
    unknown = set(node) - set(allowed)
    if unknown:
        raise ConfigError(
            f"unknown key(s) in '{name}': {', '.join(sorted(map(str, unknown)))}")


def _number(node, key, name, default=None):
    if key not in node:
        if default is None:
            raise ConfigError(f"missing required key '{key}' in '{name}'")
        return float(default)
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{name}.{key}' must be a number, got {value!r}")
    return float(value)


@dataclass
class ExperimentConfig:
    """A fully validated experiment description."""

    params: CraneParams
    initial: CraneState
    ref: Reference
    t_final: float
    dt: float
    integrator: str
    saturation: Optional[np.ndarray]
    controllers: dict            # name -> controller spec
    output_dir: str
    seed: int
    samples: int

    def sim_config(self, controller_name) -> SimConfig:
        if controller_name not in self.controllers:
            raise ConfigError(
                f"controller '{controller_name}' is not defined in the config "
                f"(available: {', '.join(sorted(self.controllers))})")
        return SimConfig(
            initial=CraneState(q=self.initial.q, qdot=self.initial.qdot),
            ref=self.ref,
            controller=self.controllers[controller_name],
            dt=self.dt,
            t_final=self.t_final,
            integrator=self.integrator,
            saturation=self.saturation,
        )


def _parse_crane(node):
    node = _require_mapping(node, "crane")
    _reject_unknown(node, _CRANE_KEYS, "crane")
    defaults = CraneParams()
    kwargs = {}
    for key in _CRANE_KEYS:
        if key in ("I_B", "I_J") and key not in node:
            continue  # keep the rod-formula defaults
        kwargs[key] = _number(node, key, "crane", default=getattr(defaults, key))
    try:
        return CraneParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_state_map(node, name, keys, defaults):
    node = _require_mapping(node, name)
    _reject_unknown(node, keys, name)
    return np.array([_number(node, k, name, default=defaults[i])
                     for i, k in enumerate(keys)])


def _parse_scenario(node):
    node = _require_mapping(node, "scenario")
    _reject_unknown(node, ("initial", "initial_velocity", "reference",
                           "t_final", "dt", "integrator", "saturation"),
                    "scenario")
    init_defaults = [DEFAULT_SCENARIO["initial"][k] for k in _STATE_KEYS]
    q0 = _parse_state_map(node.get("initial"), "scenario.initial",
                          _STATE_KEYS, init_defaults)
    qd0 = _parse_state_map(node.get("initial_velocity"),
                           "scenario.initial_velocity", _STATE_KEYS,
                           [0.0] * 6)
    ref_defaults = [DEFAULT_SCENARIO["reference"][k] for k in _REF_KEYS]
    ref_arr = _parse_state_map(node.get("reference"), "scenario.reference",
                               _REF_KEYS, ref_defaults)

    if ref_arr[3] <= 0.0:
        raise ConfigError(
            "scenario.reference.d violates the positive-cable-length "
            "assumption (Assumption 2: d > 0)")
    ref = Reference(*ref_arr)

    initial = CraneState(q=q0, qdot=qd0)
    if q0[3] <= 0.0:
        raise ConfigError(
            "scenario.initial.d violates the positive-cable-length "
            "assumption (Assumption 2: d > 0)")
    if abs(q0[4]) >= np.pi / 2 or abs(q0[5]) >= np.pi / 2:
        raise ConfigError(
            "scenario.initial swing violates the swing-bound assumption "
            "(Assumption 1: |theta| < pi/2)")

    t_final = _number(node, "t_final", "scenario",
                      default=DEFAULT_SCENARIO["t_final"])
    dt = _number(node, "dt", "scenario", default=DEFAULT_SCENARIO["dt"])
    if dt <= 0.0:
        raise ConfigError("scenario.dt must be positive")
    if t_final < dt:
        raise ConfigError("scenario.t_final must be at least one step")

    integrator = node.get("integrator", DEFAULT_SCENARIO["integrator"])
    if integrator not in ("rk4", "semi-implicit-euler"):
        raise ConfigError(
            f"scenario.integrator must be 'rk4' or 'semi-implicit-euler', "
            f"got {integrator!r}")

    saturation = None
    if node.get("saturation") is not None:
        sat = node["saturation"]
        if not (isinstance(sat, list) and len(sat) == 4):
            raise ConfigError("scenario.saturation must be a list of 4 bounds")
        saturation = np.array([float(s) for s in sat])
        if np.any(saturation <= 0.0):
            raise ConfigError("scenario.saturation bounds must be positive")

    return initial, ref, t_final, dt, integrator, saturation


def _parse_controllers(node):
    node = _require_mapping(node, "controllers")
    if not node:
        node = {"nonlinear": None, "lqr": None}
    controllers = {}
    for name, spec in node.items():
        spec = _require_mapping(spec, f"controllers.{name}")
        if name == "nonlinear":
            _reject_unknown(spec, ("gains",), "controllers.nonlinear")
            gnode = _require_mapping(spec.get("gains"),
                                     "controllers.nonlinear.gains")
            _reject_unknown(gnode, _GAIN_KEYS, "controllers.nonlinear.gains")
            values = {k: _number(gnode, k, "controllers.nonlinear.gains",
                                 default=DEFAULT_GAIN_VALUES[k])
                      for k in _GAIN_KEYS}
            try:
                gains = GainSet(**values)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            controllers[name] = NonlinearController(gains=gains)
        elif name == "lqr":
            _reject_unknown(spec, ("Q", "R"), "controllers.lqr")
            Q = spec.get("Q", list(DEFAULT_LQR_Q))
            R = spec.get("R", list(DEFAULT_LQR_R))
            if not (isinstance(Q, list) and len(Q) == 12):
                raise ConfigError("controllers.lqr.Q must be a list of 12 "
                                  "diagonal weights")
            if not (isinstance(R, list) and len(R) == 4):
                raise ConfigError("controllers.lqr.R must be a list of 4 "
                                  "diagonal weights")
            Q = np.array([float(v) for v in Q])
            R = np.array([float(v) for v in R])
            if np.any(Q < 0.0):
                raise ConfigError("controllers.lqr.Q entries must be >= 0")
            if np.any(R <= 0.0):
                raise ConfigError("controllers.lqr.R entries must be > 0")
            controllers[name] = LqrController(Q=Q, R=R)
        elif name == "open_loop":
            _reject_unknown(spec, ("schedule",), "controllers.open_loop")
            sched = spec.get("schedule", [[0.0, 0.0, 0.0, 0.0]])
            arr = np.atleast_2d(np.asarray(sched, dtype=float))
            if arr.shape[1] != 4:
                raise ConfigError(
                    "controllers.open_loop.schedule rows must have 4 inputs")
            controllers[name] = OpenLoopController(schedule=arr)
        else:
            raise ConfigError(
                f"unknown controller '{name}' (expected nonlinear, lqr or "
                f"open_loop)")
    return controllers


def parse_config(doc) -> ExperimentConfig:
    """Validate a parsed YAML document into an ExperimentConfig."""
    doc = _require_mapping(doc, "<root>")
    _reject_unknown(doc, ("crane", "scenario", "controllers", "output",
                          "validation"), "<root>")
    params = _parse_crane(doc.get("crane"))
    initial, ref, t_final, dt, integrator, saturation = _parse_scenario(
        doc.get("scenario"))
    controllers = _parse_controllers(doc.get("controllers"))

    out_node = _require_mapping(doc.get("output"), "output")
    _reject_unknown(out_node, ("directory",), "output")
    output_dir = out_node.get("directory", "out")
    if not isinstance(output_dir, str):
        raise ConfigError("output.directory must be a string")

    val_node = _require_mapping(doc.get("validation"), "validation")
    _reject_unknown(val_node, ("seed", "samples"), "validation")
    seed = val_node.get("seed", 0)
    samples = val_node.get("samples", 200)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("validation.seed must be an integer")
    if not isinstance(samples, int) or isinstance(samples, bool) or samples < 1:
        raise ConfigError("validation.samples must be a positive integer")

    return ExperimentConfig(
        params=params, initial=initial, ref=ref, t_final=t_final, dt=dt,
        integrator=integrator, saturation=saturation, controllers=controllers,
        output_dir=output_dir, seed=seed, samples=samples)


def load_config(path) -> ExperimentConfig:
    """Load and validate a YAML experiment file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}")
    return parse_config(doc)


def default_config() -> ExperimentConfig:
    """The built-in default experiment (used when no file is given)."""
    return parse_config({})
