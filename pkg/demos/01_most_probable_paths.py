"""Most probable paths of a bistable diffusion, free and pinned.

The state obeys du = f(u) dt + sigma dW in the double-well potential with
stable rest points at -1 and +1.  Relative to the driftless reference
measure, the log-density of a tube around a smooth path u is, up to
constants, minus

    value(u) = integral psi(u(t)) dt - F(u(T))/sigma^2
               + h1_seminorm_sq(u - shift) / (2 sigma^2),

so the most probable path is the minimiser of that functional.  Three
minimisations tell the story:

* unconditioned, started in the home well: resting at -1 is already
  stationary, and it is the global minimum.
* unconditioned, started in the far well: the optimiser settles into a
  different, worse local minimum that transits and rests at +1.  Even the
  free problem is multimodal, which is why everything downstream uses
  multistart.
* bridge, pinned to u(T) = +1: the minimiser must cross the barrier and
  is the classic S-shaped transition, far from the straight line between
  the endpoints.
"""

import numpy as np

import _bootstrap
from ompath import (
    GridPath,
    OMProblem,
    bridge_mean,
    double_well,
    minimize,
    om_value,
    phi,
    write_path_csv,
)

out = _bootstrap.output_dir("most_probable_paths")
model = double_well()
sigma, t_end, dt = 1.0, 5.0, 0.02
n = int(t_end / dt)

print("== unconditioned: the most probable path rests in its well ==")
free = OMProblem("unconditioned", model, sigma, -1.0, dt, n)
home = GridPath(0.0, dt, np.full(n + 1, -1.0))
res_home = minimize(free, home, tol=1e-6)
print(f"from the home well: value {res_home.value:9.4f} "
      f"in {res_home.iterations} iterations (resting is stationary)")

far = np.ones(n + 1)
far[0] = -1.0  # the initial state is always pinned
res_far = minimize(free, GridPath(0.0, dt, far), tol=1e-6)
print(f"from the far well:  value {res_far.value:9.4f} "
      f"in {res_far.iterations} iterations, converged: {res_far.converged}")
print(f"-> a distinct local minimum ending at u(T) = {res_far.minimizer.values[-1]:+.3f};"
      " the free problem is already multimodal")
write_path_csv(res_home.minimizer, f"{out}/unconditioned_map.csv")
write_path_csv(res_far.minimizer, f"{out}/unconditioned_local.csv")

print()
print("== bridge: pinned to reach the opposite well ==")
pinned = OMProblem("bridge", model, sigma, -1.0, dt, n, u_plus=1.0)
line = bridge_mean(-1.0, 1.0, dt, n)
res = minimize(pinned, line, tol=1e-6)
print(f"straight line value {om_value(pinned, line):9.4f}"
      f" -> minimum {res.value:9.4f} after {res.iterations} iterations")
mid = res.minimizer.values[n // 2]
print(f"midpoint of the transition path: {mid:+.4f} (near the barrier top 0)")
print(f"phi part {phi(pinned, res.minimizer):+.4f}, "
      f"energy part {res.value - phi(pinned, res.minimizer):+.4f}")
write_path_csv(res.minimizer, f"{out}/bridge_map.csv")
print(f"paths written to {out}")
