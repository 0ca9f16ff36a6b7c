"""Euler-Maruyama truth paths and noisy point observations.

The integrator advances u[i+1] = u[i] + f(u[i]) dt + sigma sqrt(dt) xi[i]
with standard normal increments drawn once from the supplied generator,
so identical inputs and stream state give bit-identical paths.  With
sigma = 0 the arithmetic degenerates to the forward-Euler ODE step
exactly.

Observations are point evaluations of a path at requested times, snapped
to the nearest grid node (ties toward the earlier node) and perturbed by
i.i.d. centred Gaussian noise of standard deviation gamma.  Keeping
observations on grid nodes makes the point-evaluation contributions to
the functional gradients exactly representable on the same grid.
"""

import json
from dataclasses import dataclass

import numpy as np

from .drift import DriftModel
from .errors import IntegrationDivergedError
from .gaussian import GridPath, nearest_node_index

__all__ = [
    "ObservationSet",
    "euler_maruyama",
    "observe",
    "even_observation_times",
    "write_observations_csv",
    "read_observations_csv",
]


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Noisy point observations y_j of a path at strictly increasing times t_j > 0."""

    times: np.ndarray
    values: np.ndarray
    gamma: float

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        y = np.array(self.values, dtype=float)
        if t.ndim != 1 or y.shape != t.shape:
            raise ValueError("times and values must be 1-d sequences of equal length")
        if t.size and (np.any(np.diff(t) <= 0) or t[0] <= 0):
            raise ValueError("observation times must be strictly increasing and positive")
        if not (self.gamma >= 0):
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise ValueError("observations must be finite")
        t.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", y)
        object.__setattr__(self, "gamma", float(self.gamma))

    def __len__(self):
        return self.times.size


def euler_maruyama(model: DriftModel, sigma: float, u0: float, dt: float,
                   n_steps: int, rng: np.random.Generator,
                   t0: float = 0.0) -> GridPath:
    """Integrate du = f(u) dt + sigma dW from u0 over n_steps steps of size dt.

    Raises :class:`IntegrationDivergedError` with the offending step index
    if the state becomes non-finite.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if not sigma >= 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    xi = rng.standard_normal(n_steps)
    noise_scale = sigma * np.sqrt(dt)
    values = np.empty(n_steps + 1)
    u = float(u0)
    values[0] = u
    for i in range(n_steps):
        u = u + float(model.drift(u)) * dt + noise_scale * xi[i]
        if not np.isfinite(u):
            raise IntegrationDivergedError(i)
        values[i + 1] = u
    return GridPath(t0, dt, values)


def observe(path: GridPath, times, gamma: float, rng: np.random.Generator) -> ObservationSet:
    """Observe a path at the given times with noise level gamma.

    Each time snaps to the nearest grid node; the snapped times are the
    ones recorded.  Two requested times may not snap to the same node.
    With gamma = 0 this is the exact projection of the path onto the
    snapped nodes.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1:
        raise ValueError("times must be a 1-d sequence")
    if not gamma >= 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    idx = np.array([nearest_node_index(path.t0, path.dt, path.n_steps, t) for t in times])
    if idx.size and np.any(np.diff(idx) <= 0):
        raise ValueError("observation times must snap to distinct, increasing grid nodes")
    snapped = path.t0 + path.dt * idx
    noise = gamma * rng.standard_normal(times.size)
    return ObservationSet(snapped, path.values[idx] + noise, gamma)


def even_observation_times(duration: float, n_obs: int) -> np.ndarray:
    """n_obs evenly spaced times j * duration / (n_obs + 1), all interior."""
    if n_obs < 1:
        raise ValueError("need at least one observation")
    return duration * np.arange(1, n_obs + 1) / (n_obs + 1)


def write_observations_csv(obs: ObservationSet, csv_file, sidecar_file=None,
                           extra: dict | None = None) -> None:
    """Write observations as CSV ``t,y`` plus a JSON sidecar holding gamma.

    ``extra`` entries (seed, drift, sigma, ...) are merged into the sidecar.
    """
    lines = ["t,y"]
    for t, y in zip(obs.times, obs.values):
        lines.append(f"{t:.17g},{y:.17g}")
    text = "\n".join(lines) + "\n"
    if hasattr(csv_file, "write"):
        csv_file.write(text)
    else:
        with open(csv_file, "w", encoding="utf-8") as fh:
            fh.write(text)
    if sidecar_file is not None:
        meta = {"gamma": obs.gamma}
        meta.update(extra or {})
        payload = json.dumps(meta, sort_keys=True, indent=2) + "\n"
        if hasattr(sidecar_file, "write"):
            sidecar_file.write(payload)
        else:
            with open(sidecar_file, "w", encoding="utf-8") as fh:
                fh.write(payload)


def read_observations_csv(csv_file, sidecar_file=None, gamma: float | None = None) -> ObservationSet:
    """Read observations written by :func:`write_observations_csv`.

    gamma comes from the sidecar JSON unless given explicitly.
    """
    raw = np.loadtxt(csv_file, delimiter=",", skiprows=1, ndmin=2)
    if raw.size == 0:
        t = np.empty(0)
        y = np.empty(0)
    else:
        t, y = raw[:, 0], raw[:, 1]
    if gamma is None:
        if sidecar_file is None:
            raise ValueError("gamma unknown: pass gamma or a sidecar file")
        with open(sidecar_file, "r", encoding="utf-8") as fh:
            gamma = float(json.load(fh)["gamma"])
    return ObservationSet(t, y, gamma)
