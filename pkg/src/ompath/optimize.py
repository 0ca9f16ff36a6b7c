"""Quasi-Newton minimisation of path functionals, with multistart.

The core is a dense BFGS iteration on the free node values: inverse
Hessian updates, backtracking Armijo line search (c = 1e-4, step halving,
at most 50 halvings), and termination on the sup norm of the gradient.
Dense updates are fine at the grid sizes this package targets (up to a
few thousand nodes) and keep the algorithm easy to reason about.  A
failed line search ends the run with ``converged=False`` rather than
raising.

Constraints are handled by projection: fixed nodes (the initial node,
the terminal node of a bridge, pinned gamma = 0 observation nodes) are
excluded from the optimisation variables and never move.

Because the functionals are generally non-convex, :func:`multistart`
minimises from a collection of starting paths and deduplicates the
resulting local minima by sup-norm distance, keeping the best value per
cluster.  Results are combined by sorting on (value, start label), so the
report does not depend on execution order.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import json
import os

import numpy as np

from .functional import (
    BRIDGE,
    SMOOTHING,
    OMProblem,
    _check_path,
    _Kernel,
    observation_indices,
)
from .gaussian import GridPath, bridge_mean, write_path_csv

__all__ = [
    "MinimizationResult",
    "MultistartReport",
    "BFGSResult",
    "bfgs",
    "minimize",
    "multistart",
    "default_starts",
    "write_multistart_report",
]

ARMIJO_C = 1e-4
MAX_HALVINGS = 50


@dataclass(frozen=True, eq=False)
class BFGSResult:
    """Raw outcome of a BFGS run on a flat vector."""

    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    status: str  # "gradient" | "max_iter" | "line_search" | "stalled"


@dataclass(frozen=True, eq=False)
class MinimizationResult:
    """A local minimiser of a path functional."""

    minimizer: GridPath
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    start_label: str


@dataclass(frozen=True, eq=False)
class MultistartReport:
    """Deduplicated local minima, sorted by ascending value."""

    minima: tuple
    dedup_threshold: float

    @property
    def best(self) -> MinimizationResult:
        return self.minima[0]


def bfgs(fun, grad, x0, tol: float = 1e-8, max_iter: int = 1000) -> BFGSResult:
    """Minimise fun from x0 using BFGS with Armijo backtracking.

    Terminates when the gradient sup norm drops to tol, after max_iter
    accepted steps, when the line search cannot find decrease within 50
    halvings, or when accepted steps shrink to the floating-point floor
    (three consecutive relative steps below 1e-14).  Accepted values are
    non-increasing by construction.
    """
    x = np.array(x0, dtype=float)
    n = x.size
    fx = float(fun(x))
    g = np.asarray(grad(x), dtype=float)
    gnorm = float(np.max(np.abs(g))) if n else 0.0
    h = np.eye(n)
    first_update = True
    stalls = 0
    for k in range(max_iter):
        if gnorm <= tol:
            return BFGSResult(x, fx, gnorm, k, True, "gradient")
        p = -h @ g
        m = float(np.dot(g, p))
        if m >= 0.0:  # stale curvature; fall back to steepest descent
            h = np.eye(n)
            first_update = True
            p = -g
            m = -float(np.dot(g, g))
        alpha = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            x_new = x + alpha * p
            f_new = float(fun(x_new))
            if f_new <= fx + ARMIJO_C * alpha * m:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            return BFGSResult(x, fx, gnorm, k, gnorm <= tol, "line_search")
        g_new = np.asarray(grad(x_new), dtype=float)
        s = x_new - x
        y = g_new - g
        if float(np.max(np.abs(s))) <= 1e-14 * max(1.0, float(np.max(np.abs(x_new)))):
            stalls += 1
            if stalls >= 3:
                return BFGSResult(x_new, f_new, float(np.max(np.abs(g_new))),
                                  k + 1, float(np.max(np.abs(g_new))) <= tol, "stalled")
        else:
            stalls = 0
        sy = float(np.dot(s, y))
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            if first_update:
                h *= sy / float(np.dot(y, y))
                first_update = False
            hy = h @ y
            rho = 1.0 / sy
            hs = np.outer(s, hy)
            h -= rho * (hs + hs.T)
            h += (rho * rho * float(np.dot(y, hy)) + rho) * np.outer(s, s)
        x, fx, g = x_new, f_new, g_new
        gnorm = float(np.max(np.abs(g)))
    return BFGSResult(x, fx, gnorm, max_iter, gnorm <= tol, "max_iter")


def minimize(problem: OMProblem, start: GridPath, tol: float = 1e-8,
             max_iter: int | None = None, start_label: str = "start") -> MinimizationResult:
    """Minimise the problem's functional from a feasible starting path.

    tol bounds the sup norm of the gradient over the free nodes; max_iter
    defaults to 10 times the number of grid steps.  The result value never
    exceeds the value at the start.
    """
    values = np.array(_check_path(problem, start), dtype=float)
    kernel = _Kernel(problem)
    free = kernel.free
    if max_iter is None:
        max_iter = 10 * problem.n_steps
    base = values.copy()

    def assemble(x):
        v = base.copy()
        v[free] = x
        return v

    def fun(x):
        return kernel.value(assemble(x))

    def grad(x):
        return kernel.gradient(assemble(x))[free]

    res = bfgs(fun, grad, values[free], tol=tol, max_iter=max_iter)
    return MinimizationResult(
        minimizer=start.with_values(assemble(res.x)),
        value=res.value,
        grad_norm=res.grad_norm,
        iterations=res.iterations,
        converged=res.converged,
        start_label=start_label,
    )


def multistart(problem: OMProblem, starts, tol: float = 1e-8,
               max_iter: int | None = None, dedup_threshold: float = 1e-3,
               labels=None, threads: int = 1) -> MultistartReport:
    """Minimise from every start and report the distinct local minima.

    Minima closer than dedup_threshold in sup norm are clustered and only
    the lowest value per cluster is kept.  Sorting on (value, label) makes
    the report independent of the number of threads.
    """
    starts = list(starts)
    if not starts:
        raise ValueError("multistart needs at least one start")
    if not dedup_threshold > 0:
        raise ValueError("dedup_threshold must be positive")
    if labels is None:
        labels = [f"start-{i:02d}" for i in range(len(starts))]
    if len(labels) != len(starts):
        raise ValueError("labels and starts must have equal length")

    def run(pair):
        label, start = pair
        return minimize(problem, start, tol=tol, max_iter=max_iter, start_label=label)

    jobs = list(zip(labels, starts))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    results.sort(key=lambda r: (r.value, r.start_label))
    kept = []
    for res in results:
        dup = any(
            np.max(np.abs(res.minimizer.values - k.minimizer.values)) < dedup_threshold
            for k in kept)
        if not dup:
            kept.append(res)
    return MultistartReport(minima=tuple(kept), dedup_threshold=dedup_threshold)


def default_starts(problem: OMProblem, k: int, rng: np.random.Generator):
    """Canonical deterministic starts, padded with smoothed prior samples.

    For unconditioned and smoothing problems the canonical starts are the
    constant path at u_minus, the constant path at +1 for the double-well
    model, and (smoothing) the piecewise-linear interpolant of the data;
    bridges start from the straight line between the endpoints.  Remaining
    slots are Brownian paths from the reference measure, smoothed with a
    short moving average and projected onto the constraints.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n = problem.n_steps
    t = problem.dt * np.arange(n + 1)
    raw = []
    if problem.variant == BRIDGE:
        raw.append(bridge_mean(problem.u_minus, problem.u_plus, problem.dt, n).values)
    else:
        raw.append(np.full(n + 1, problem.u_minus))
        if problem.model.name == "double-well":
            raw.append(np.ones(n + 1))
        obs = problem.observations
        if problem.variant == SMOOTHING and obs is not None and len(obs):
            knots_t = np.concatenate(([0.0], obs.times))
            knots_y = np.concatenate(([problem.u_minus], obs.values))
            raw.append(np.interp(t, knots_t, knots_y))
    raw = raw[:k]
    while len(raw) < k:
        raw.append(_prior_sample_values(problem, rng))
    return [GridPath(0.0, problem.dt, _project(problem, v)) for v in raw]


def _project(problem, values):
    """Force a candidate start onto the problem's constraint set."""
    values = np.array(values, dtype=float)
    values[0] = problem.u_minus
    if problem.variant == BRIDGE:
        values[-1] = problem.u_plus
    elif problem.variant == SMOOTHING and problem.observations.gamma == 0:
        values[observation_indices(problem)] = problem.observations.values
        values[0] = problem.u_minus
    return values


def _prior_sample_values(problem, rng):
    n = problem.n_steps
    w = np.empty(n + 1)
    w[0] = 0.0
    w[1:] = np.cumsum(rng.standard_normal(n)) * problem.sigma * np.sqrt(problem.dt)
    w = _moving_average(w, max(3, (n + 1) // 20) | 1)
    w -= w[0]
    if problem.variant == BRIDGE:
        w -= (np.arange(n + 1) / n) * w[-1]
        base = bridge_mean(problem.u_minus, problem.u_plus, problem.dt, n).values
    else:
        base = np.full(n + 1, problem.u_minus)
    return base + w


def _moving_average(x, window):
    if window <= 1:
        return x.copy()
    pad = window // 2
    xp = np.pad(x, pad, mode="edge")
    return np.convolve(xp, np.full(window, 1.0 / window), mode="valid")


def write_multistart_report(report: MultistartReport, out_dir, prefix: str = "minimum") -> dict:
    """Write the report as JSON plus one CSV per retained minimiser.

    Returns the JSON payload.  Paths land in out_dir as
    ``<prefix>_00.csv`` etc., referenced from ``<prefix>_report.json``.
    """
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for i, res in enumerate(report.minima):
        path_file = f"{prefix}_{i:02d}.csv"
        write_path_csv(res.minimizer, os.path.join(out_dir, path_file))
        entries.append({
            "value": res.value,
            "grad_norm": res.grad_norm,
            "iterations": res.iterations,
            "converged": res.converged,
            "start_label": res.start_label,
            "path_file": path_file,
        })
    payload = {"dedup_threshold": report.dedup_threshold, "minima": entries}
    with open(os.path.join(out_dir, f"{prefix}_report.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return payload
