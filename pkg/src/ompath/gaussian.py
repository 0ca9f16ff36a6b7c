"""Grid paths, discrete Cameron-Martin geometry, and diagonal Gaussian testbeds.

A :class:`GridPath` is a scalar function sampled on a uniform time grid.
The squared H1 seminorm of a path is discretised with forward differences,

    sum_i (v[i+1] - v[i])**2 / dt,

which is exact on piecewise-linear interpolants and turns the quadratic
path-energy term of the functionals in :mod:`ompath.functional` into a
tridiagonal form with an exact analytic gradient.

:class:`FiniteGaussian` is a centred Gaussian with diagonal covariance,
used as the finite-dimensional testbed for the small-ball Monte Carlo
checks in :mod:`ompath.smallball`.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridPath",
    "FiniteGaussian",
    "h1_seminorm_sq",
    "cameron_martin_norm_sq",
    "bridge_mean",
    "sample_finite_gaussian",
    "nearest_node_index",
    "write_path_csv",
    "read_path_csv",
]


@dataclass(frozen=True, eq=False)
class GridPath:
    """Scalar path on the uniform grid t0, t0+dt, ..., t0+n_steps*dt.

    Values are stored read-only; derived quantities such as the duration
    n_steps*dt are computed on demand and never stored.
    """

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("a grid path needs at least two nodes")
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not np.all(np.isfinite(vals)) or not np.isfinite(self.t0):
            raise ValueError("grid path values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_steps(self) -> int:
        return self.values.size - 1

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    def with_values(self, values) -> "GridPath":
        """New path on the same grid with different values."""
        return GridPath(self.t0, self.dt, values)


@dataclass(frozen=True, eq=False)
class FiniteGaussian:
    """Centred Gaussian on R^n with diagonal covariance.

    ``eigenvalues`` is the covariance spectrum, ordered non-increasing and
    strictly positive, so 1/eigenvalues[0] is the smallest inverse
    eigenvalue.
    """

    eigenvalues: np.ndarray

    def __post_init__(self):
        eigs = np.array(self.eigenvalues, dtype=float)
        if eigs.ndim != 1 or eigs.size < 1:
            raise ValueError("eigenvalues must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(eigs)) or np.any(eigs <= 0):
            raise ValueError("eigenvalues must be finite and strictly positive")
        if np.any(np.diff(eigs) > 0):
            raise ValueError("eigenvalues must be non-increasing")
        eigs.setflags(write=False)
        object.__setattr__(self, "eigenvalues", eigs)

    @property
    def dimension(self) -> int:
        return self.eigenvalues.size


def h1_seminorm_sq(path: GridPath) -> float:
    """Squared H1 seminorm of a path, sum of squared forward differences over dt.

    Invariant under adding a constant, quadratically homogeneous, and exact
    under midpoint refinement of a piecewise-linear path.
    """
    d = np.diff(path.values)
    return float(np.dot(d, d) / path.dt)


def cameron_martin_norm_sq(path: GridPath, sigma: float) -> float:
    """Squared Cameron-Martin norm for noise level sigma: h1_seminorm_sq / sigma**2."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return h1_seminorm_sq(path) / sigma**2


def bridge_mean(u_minus: float, u_plus: float, dt: float, n_steps: int,
                t0: float = 0.0) -> GridPath:
    """Linear path from u_minus at t0 to u_plus at t0 + n_steps*dt.

    Endpoint values are exact; interior nodes interpolate linearly.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    s = np.arange(n_steps + 1) / n_steps
    return GridPath(t0, dt, u_minus * (1.0 - s) + u_plus * s)


def sample_finite_gaussian(measure: FiniteGaussian, rng: np.random.Generator,
                           size: int | None = None) -> np.ndarray:
    """Draw from the measure: independent components with variances eigenvalues[j].

    Returns shape (dimension,) when size is None, else (size, dimension).
    Deterministic given the generator state.
    """
    scale = np.sqrt(measure.eigenvalues)
    if size is None:
        return rng.standard_normal(measure.dimension) * scale
    return rng.standard_normal((int(size), measure.dimension)) * scale


def nearest_node_index(t0: float, dt: float, n_steps: int, t: float) -> int:
    """Index of the grid node nearest to t, ties resolved toward the earlier node.

    t must lie within the grid span up to a 1e-9*dt tolerance.
    """
    rel = (t - t0) / dt
    if rel < -1e-9 or rel > n_steps + 1e-9:
        raise ValueError(f"time {t} outside grid span [{t0}, {t0 + n_steps * dt}]")
    idx = int(np.ceil(rel - 0.5))
    return min(max(idx, 0), n_steps)


def write_path_csv(path: GridPath, file) -> None:
    """Write a path as CSV with header t,value at full double precision."""
    lines = ["t,value"]
    t0, dt = path.t0, path.dt
    for i, v in enumerate(path.values):
        lines.append(f"{t0 + i * dt:.17g},{v:.17g}")
    _write_text(file, "\n".join(lines) + "\n")


def read_path_csv(file) -> GridPath:
    """Read a path written by :func:`write_path_csv`, checking grid uniformity."""
    raw = np.loadtxt(file, delimiter=",", skiprows=1, ndmin=2)
    t, v = raw[:, 0], raw[:, 1]
    if t.size < 2:
        raise ValueError("path CSV needs at least two rows")
    dt = (t[-1] - t[0]) / (t.size - 1)
    if not dt > 0 or np.max(np.abs(np.diff(t) - dt)) > 1e-9 * dt:
        raise ValueError("path CSV grid is not uniform")
    return GridPath(t[0], dt, v)


def _write_text(file, text):
    if hasattr(file, "write"):
        file.write(text)
    else:
        with open(file, "w", encoding="utf-8") as fh:
            fh.write(text)
