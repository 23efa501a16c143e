"""Simulation and anti-sway control of a 6-DoF knuckle boom crane.

The crane has four actuated coordinates (tower slew, boom luff, jib luff,
cable hoist) and two unactuated payload swing angles.  This package
provides the full nonlinear rigid-body model, an energy-based set-point
controller that damps the swing, an LQR baseline built by numerical
linearization, a deterministic fixed-step simulator, and a CLI for running
and comparing controllers.
"""

from .control import (DEFAULT_GAINS, DEFAULT_LQR_Q, DEFAULT_LQR_R, GainSet,
                      LqrDesign, NotAnEquilibrium, RiccatiDiverged,
                      design_lqr, equilibrium_input, linearize, lqr_control,
                      lyapunov_rate, lyapunov_value, nonlinear_control,
                      solve_care)
from .dynamics import (SingularMass, coriolis_matrix, forward_dynamics,
                       friction_vector, gravity_vector, mass_matrix)
from .model import (CraneParams, CraneState, Reference, cable_direction,
                    in_assumption_region, kinetic_energy, payload_position,
                    potential_energy, swing_energy, tip_position,
                    total_energy)
from .sim import (AssumptionViolated, LqrController, Metrics, NonFinite,
                  NonlinearController, OpenLoopController, RegulationResult,
                  SimConfig, Trajectory, compute_metrics, regulate_to,
                  simulate, step)

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolated", "CraneParams", "CraneState", "DEFAULT_GAINS",
    "DEFAULT_LQR_Q", "DEFAULT_LQR_R", "GainSet", "LqrController",
    "LqrDesign", "Metrics", "NonFinite", "NonlinearController",
    "NotAnEquilibrium", "OpenLoopController", "Reference",
    "RegulationResult", "RiccatiDiverged", "SimConfig", "SingularMass",
    "Trajectory", "cable_direction", "compute_metrics", "coriolis_matrix",
    "design_lqr", "equilibrium_input", "forward_dynamics",
    "friction_vector", "gravity_vector", "in_assumption_region",
    "kinetic_energy", "linearize", "lqr_control", "lyapunov_rate",
    "lyapunov_value", "mass_matrix", "nonlinear_control",
    "payload_position", "potential_energy", "regulate_to", "simulate",
    "solve_care", "step", "swing_energy", "tip_position", "total_energy",
]
