"""Energy-based anti-sway regulation to a set point.

Drives the crane from rest through a combined slew/luff/hoist motion using
the energy-based controller.  The storage function V (kinetic energy +
payload swing potential + weighted set-point errors) is recorded every
step: it decreases monotonically, which is exactly the mechanism that
pulls the swing angles to zero without actuating them directly.

Run:  python demos/02_antisway_regulation.py
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from knucklesim import (CraneParams, CraneState, DEFAULT_GAINS, Reference,
                        compute_metrics, simulate)
from knucklesim.sim import NonlinearController, SimConfig

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

params = CraneParams()
ref = Reference(alpha_d=0.5, beta_d=0.9, gamma_d=0.6, d_d=3.0)
cfg = SimConfig(initial=CraneState(q=[0.0, 0.3, 0.2, 9.0, 0.05, 0.05]),
                ref=ref,
                controller=NonlinearController(gains=DEFAULT_GAINS),
                dt=1e-3, t_final=90.0)

print("regulating to alpha=0.5, beta=0.9, gamma=0.6, d=3.0 ...")
traj = simulate(cfg, params)
metrics = compute_metrics(traj, ref)

print(f"  peak swings: |theta1| {metrics.peak_theta1:.4f} rad, "
      f"|theta2| {metrics.peak_theta2:.4f} rad")
print(f"  settling times (2% band): alpha {metrics.settling_time['alpha']:.1f} s, "
      f"beta {metrics.settling_time['beta']:.1f} s, "
      f"gamma {metrics.settling_time['gamma']:.1f} s, "
      f"d {metrics.settling_time['d']:.1f} s")
print(f"  set-point objective met: {metrics.objective_met}")
print(f"  largest step-to-step V increase: {np.max(np.diff(traj.lyapunov)):.2e} "
      f"(never above integration noise)")

fig, axes = plt.subplots(3, 1, figsize=(8, 8), sharex=True)
labels = ("alpha", "beta", "gamma", "d")
for i, lab in enumerate(labels):
    axes[0].plot(traj.t, traj.q[:, i], label=lab)
axes[0].set_ylabel("actuated coordinates")
axes[0].legend(ncol=4)
axes[1].plot(traj.t, traj.q[:, 4], label="theta1")
axes[1].plot(traj.t, traj.q[:, 5], label="theta2")
axes[1].set_ylabel("swing (rad)")
axes[1].legend()
axes[2].semilogy(traj.t, np.maximum(traj.lyapunov, 1e-12))
axes[2].set_ylabel("storage function V (J)")
axes[2].set_xlabel("time (s)")
fig.tight_layout()
path = os.path.join(OUT, "antisway_regulation.png")
fig.savefig(path, dpi=140)
print(f"wrote {path}")
