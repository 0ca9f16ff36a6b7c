"""Discretised path functionals for conditioned scalar diffusions.

For a diffusion du = f(u) dt + sigma dW started at u_minus, the most
probable paths relative to the driftless reference minimise

    value(u) = phi(u) + h1_seminorm_sq(u - shift) / (2 sigma^2)

where phi collects the drift-dependent and data-dependent terms and the
quadratic term measures path energy relative to the reference mean.
Three variants are supported:

* ``unconditioned``  phi = integral of psi(u(t)) dt - F(u(T)) / sigma^2,
  with only u(0) = u_minus constrained; shift is the constant u_minus.
* ``bridge``         u(T) = u_plus is also constrained; the endpoint term
  F(u_plus)/sigma^2 is a constant and is dropped, so reported values are
  comparable only within this convention; shift is the straight line
  between the endpoints.
* ``smoothing``      adds the misfit sum (1/2 gamma^2) sum_j (y_j - u(t_j))^2
  for point observations on grid nodes; shift as in the unconditioned case.
  With gamma = 0 the observations become hard equality constraints: the
  observed nodes are pinned and the misfit term is dropped.

The integral of psi uses trapezoidal quadrature, second order and
consistent with piecewise-linear paths.  Gradients with respect to the
free node values are exact for the quadrature, point-evaluation and
path-energy terms; the second drift derivative needed for d(psi)/du comes
from central differences of f'.  Constrained nodes always carry gradient
zero.
"""

import json
import os
from dataclasses import dataclass, replace

import numpy as np

from . import drift as drift_mod
from .errors import InvalidPathError
from .gaussian import GridPath, bridge_mean, nearest_node_index
from .sde import ObservationSet, read_observations_csv

__all__ = [
    "OMProblem",
    "UNCONDITIONED",
    "BRIDGE",
    "SMOOTHING",
    "phi",
    "om_value",
    "om_gradient",
    "free_node_mask",
    "observation_indices",
    "derivative_jumps",
    "load_problem",
    "problem_to_dict",
]

UNCONDITIONED = "unconditioned"
BRIDGE = "bridge"
SMOOTHING = "smoothing"
_VARIANTS = (UNCONDITIONED, BRIDGE, SMOOTHING)

_ENDPOINT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class OMProblem:
    """A fully specified functional instance on the grid 0, dt, ..., n_steps*dt.

    ``u_plus`` is required exactly for the bridge variant and
    ``observations`` exactly for the smoothing variant; smoothing
    observation times must sit on grid nodes.
    """

    variant: str
    model: drift_mod.DriftModel
    sigma: float
    u_minus: float
    dt: float
    n_steps: int
    u_plus: float | None = None
    observations: ObservationSet | None = None

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"variant must be one of {_VARIANTS}, got {self.variant!r}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if (self.variant == BRIDGE) != (self.u_plus is not None):
            raise ValueError("u_plus is required exactly for the bridge variant")
        if (self.variant == SMOOTHING) != (self.observations is not None):
            raise ValueError("observations are required exactly for the smoothing variant")
        if self.variant == SMOOTHING:
            observation_indices(self)  # raises if off-grid or out of range

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    def with_observations(self, obs: ObservationSet) -> "OMProblem":
        """Smoothing problem on the same grid and model with the given data."""
        return replace(self, variant=SMOOTHING, observations=obs, u_plus=None)


def observation_indices(problem: OMProblem) -> np.ndarray:
    """Grid indices of the observation times; they must lie on grid nodes."""
    obs = problem.observations
    if obs is None:
        return np.empty(0, dtype=int)
    idx = np.empty(len(obs), dtype=int)
    for j, t in enumerate(obs.times):
        i = nearest_node_index(0.0, problem.dt, problem.n_steps, t)
        if abs(t - i * problem.dt) > 1e-9 * problem.dt:
            raise ValueError(f"observation time {t} does not coincide with a grid node")
        idx[j] = i
    if idx.size and np.any(np.diff(idx) <= 0):
        raise ValueError("observation times map to duplicate grid nodes")
    return idx


def free_node_mask(problem: OMProblem) -> np.ndarray:
    """Boolean mask of nodes the optimiser may move.

    Node 0 is always fixed; the terminal node is fixed for bridges; with
    gamma = 0 the smoothing observation nodes are pinned to their data.
    """
    free = np.ones(problem.n_steps + 1, dtype=bool)
    free[0] = False
    if problem.variant == BRIDGE:
        free[-1] = False
    if problem.variant == SMOOTHING and problem.observations.gamma == 0:
        free[observation_indices(problem)] = False
    return free


def _check_path(problem: OMProblem, path: GridPath) -> np.ndarray:
    """Validate grid conformity and endpoint constraints; return the values."""
    if path.n_steps != problem.n_steps:
        raise InvalidPathError(
            f"path has {path.n_steps} steps, problem expects {problem.n_steps}")
    if abs(path.dt - problem.dt) > 1e-12 * problem.dt or abs(path.t0) > 1e-12:
        raise InvalidPathError("path grid does not match the problem grid on [0, T]")
    v = path.values
    if abs(v[0] - problem.u_minus) > _ENDPOINT_TOL:
        raise InvalidPathError(
            f"path(0) = {v[0]} violates the constraint u(0) = {problem.u_minus}")
    if problem.variant == BRIDGE and abs(v[-1] - problem.u_plus) > _ENDPOINT_TOL:
        raise InvalidPathError(
            f"path(T) = {v[-1]} violates the constraint u(T) = {problem.u_plus}")
    if problem.variant == SMOOTHING and problem.observations.gamma == 0:
        idx = observation_indices(problem)
        if idx.size and np.max(np.abs(v[idx] - problem.observations.values)) > _ENDPOINT_TOL:
            raise InvalidPathError("gamma = 0 observations act as constraints; "
                                   "path must interpolate the data")
    return v


def _shift(problem: OMProblem) -> np.ndarray:
    if problem.variant == BRIDGE:
        return bridge_mean(problem.u_minus, problem.u_plus,
                           problem.dt, problem.n_steps).values
    return np.full(problem.n_steps + 1, problem.u_minus)


class _Kernel:
    """Precomputed arrays for fast repeated evaluation on one problem."""

    def __init__(self, problem: OMProblem):
        self.problem = problem
        self.sig2 = problem.sigma**2
        self.dt = problem.dt
        n = problem.n_steps
        w = np.full(n + 1, problem.dt)
        w[0] *= 0.5
        w[-1] *= 0.5
        self.weights = w
        self.shift = _shift(problem)
        self.free = free_node_mask(problem)
        self.has_endpoint_term = problem.variant != BRIDGE
        obs = problem.observations
        if problem.variant == SMOOTHING and obs.gamma > 0 and len(obs):
            self.obs_idx = observation_indices(problem)
            self.obs_y = obs.values
            self.obs_w = 1.0 / obs.gamma**2
        else:
            self.obs_idx = None

    def phi(self, values: np.ndarray) -> float:
        p = self.problem
        psi_vals = drift_mod.psi(p.model, values, p.sigma)
        val = float(np.dot(self.weights, psi_vals))
        if self.has_endpoint_term:
            val -= float(p.model.potential(values[-1])) / self.sig2
        if self.obs_idx is not None:
            r = self.obs_y - values[self.obs_idx]
            val += 0.5 * self.obs_w * float(np.dot(r, r))
        return val

    def value(self, values: np.ndarray) -> float:
        d = np.diff(values - self.shift)
        return self.phi(values) + 0.5 * float(np.dot(d, d)) / (self.dt * self.sig2)

    def gradient(self, values: np.ndarray) -> np.ndarray:
        p = self.problem
        g = self.weights * np.asarray(drift_mod.psi_prime(p.model, values, p.sigma))
        if self.has_endpoint_term:
            g[-1] -= float(p.model.drift(values[-1])) / self.sig2
        if self.obs_idx is not None:
            g[self.obs_idx] += self.obs_w * (values[self.obs_idx] - self.obs_y)
        v = values - self.shift
        lap = np.empty_like(v)
        lap[1:-1] = 2.0 * v[1:-1] - v[:-2] - v[2:]
        lap[0] = v[0] - v[1]
        lap[-1] = v[-1] - v[-2]
        g += lap / (self.sig2 * self.dt)
        g[~self.free] = 0.0
        return g


def phi(problem: OMProblem, path: GridPath) -> float:
    """Data/drift part of the functional for this problem variant.

    Trapezoidal quadrature of psi(u(t)) over the grid, minus
    F(u(T))/sigma^2 except for bridges, plus the observation misfit for
    smoothing with gamma > 0.
    """
    values = _check_path(problem, path)
    return _Kernel(problem).phi(values)


def om_value(problem: OMProblem, path: GridPath) -> float:
    """Full functional: phi plus the shifted squared H1 seminorm over 2 sigma^2."""
    values = _check_path(problem, path)
    return _Kernel(problem).value(values)


def om_gradient(problem: OMProblem, path: GridPath) -> GridPath:
    """Exact gradient of :func:`om_value` with respect to the node values.

    Returned as a path on the same grid; constrained nodes carry zero.
    """
    values = _check_path(problem, path)
    return path.with_values(_Kernel(problem).gradient(values))


def derivative_jumps(path: GridPath) -> np.ndarray:
    """Absolute jump of the discrete derivative at each interior node.

    Entry i-1 is |(u[i+1]-u[i])/dt - (u[i]-u[i-1])/dt| for i = 1..n-1.
    Minimisers of the smoothing functional show jumps at observation nodes
    far larger than the smooth background, which is a useful signature of
    convergence toward the data.
    """
    d = np.diff(path.values) / path.dt
    return np.abs(np.diff(d))


def load_problem(source) -> OMProblem:
    """Build a problem from a JSON document.

    Expected keys: variant, drift, sigma, u_minus, dt, n_steps, and
    optionally u_plus and observations_file (CSV path, resolved relative
    to the JSON file, with its gamma sidecar next to it).
    """
    if isinstance(source, dict):
        doc = dict(source)
        base = "."
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        base = os.path.dirname(os.fspath(source)) or "."
    obs = None
    obs_file = doc.get("observations_file")
    if obs_file is not None:
        csv_path = os.path.join(base, obs_file)
        sidecar = os.path.splitext(csv_path)[0] + ".json"
        obs = read_observations_csv(
            csv_path, sidecar if os.path.exists(sidecar) else None,
            gamma=doc.get("gamma"))
    return OMProblem(
        variant=doc["variant"],
        model=drift_mod.by_name(doc["drift"]),
        sigma=float(doc["sigma"]),
        u_minus=float(doc["u_minus"]),
        dt=float(doc["dt"]),
        n_steps=int(doc["n_steps"]),
        u_plus=None if doc.get("u_plus") is None else float(doc["u_plus"]),
        observations=obs,
    )


def problem_to_dict(problem: OMProblem, observations_file: str | None = None) -> dict:
    """JSON-ready description of a problem; inverse of :func:`load_problem`."""
    out = {
        "variant": problem.variant,
        "drift": problem.model.name,
        "sigma": problem.sigma,
        "u_minus": problem.u_minus,
        "dt": problem.dt,
        "n_steps": problem.n_steps,
    }
    if problem.u_plus is not None:
        out["u_plus"] = problem.u_plus
    if observations_file is not None:
        out["observations_file"] = observations_file
    return out
