"""Posterior-consistency experiments for penalised least-squares estimators.

Two families of checks live here.

Finite-dimensional: for a forward map G from R^d to R^K with Gaussian
observational noise of diagonal covariance, the penalised functionals

    large-sample   sum_i u_i^2/prior_i + sum_{j<=n} |y_j - G(u)|^2_C1
    small-noise    sum_i u_i^2/prior_i + n^2 |y_n - G(u)|^2_C1

are minimised by BFGS (finite-difference Jacobian of G, exact otherwise),
with a closed-form direct solve available for linear G as a
cross-validation oracle.  |v|^2_C1 denotes sum_k v_k^2 / noise_cov_eigs[k].
As n grows, the image G(u_n) should approach G at the truth.

SDE smoothing: for a fixed simulated truth path, observations are
regenerated per noise level gamma (or per observation count J), the
smoothing MAP path is computed as the best of a multistart minimisation,
and the error against the truth is recorded: the sup distance over the
observation nodes for the gamma sweep, the sup (or L2) path distance for
the J sweep.  A power law c * x^alpha is fitted through the error curve
in log-log coordinates.

Experiments take an integer master seed, derive labelled substreams per
abscissa point, and record the seed in their report, so reruns with the
same seed are bit-identical and abscissa points are independent.
"""

import hashlib
import json
import os
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import FitError, StagnationError
from .functional import OMProblem, observation_indices
from .gaussian import GridPath
from .optimize import bfgs, default_starts, multistart
from .rng import substream
from .sde import even_observation_times, observe

__all__ = [
    "ForwardMap",
    "ConsistencyReport",
    "tikhonov_map_finite",
    "tikhonov_direct",
    "large_sample_experiment",
    "small_noise_experiment",
    "smoothing_small_noise",
    "smoothing_large_sample",
    "fit_power_law",
    "e_norm_sq",
    "c1_distance",
    "write_consistency_report",
]


@dataclass(frozen=True, eq=False)
class ForwardMap:
    """Forward operator with diagonal observational noise covariance.

    ``apply`` maps a length-dimension_in vector to a length-dimension_out
    vector; it must be finite on bounded inputs.
    """

    dimension_in: int
    dimension_out: int
    apply: Callable
    noise_cov_eigs: np.ndarray

    def __post_init__(self):
        eigs = np.array(self.noise_cov_eigs, dtype=float)
        if eigs.shape != (self.dimension_out,) or np.any(eigs <= 0):
            raise ValueError("noise_cov_eigs must be positive with length dimension_out")
        eigs.setflags(write=False)
        object.__setattr__(self, "noise_cov_eigs", eigs)


@dataclass(frozen=True, eq=False)
class ConsistencyReport:
    """Error curve of one experiment plus its fitted power law.

    ``fit_c``/``fit_alpha`` are None when fewer than two points were
    usable; indices of failed abscissa points are listed in ``failed``.
    """

    abscissa: np.ndarray
    errors: np.ndarray
    error_kind: str
    seed: int
    fit_c: float | None
    fit_alpha: float | None
    failed: tuple = ()

    def __post_init__(self):
        a = np.array(self.abscissa, dtype=float)
        e = np.array(self.errors, dtype=float)
        if a.shape != e.shape or a.ndim != 1:
            raise ValueError("abscissa and errors must be 1-d with equal length")
        d = np.diff(a)
        if a.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("abscissa must be strictly monotone")
        a.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "abscissa", a)
        object.__setattr__(self, "errors", e)


def e_norm_sq(u, prior_eigs) -> float:
    """Squared prior norm sum u_i^2 / prior_eigs[i]."""
    u = np.asarray(u, dtype=float)
    return float(np.sum(u * u / np.asarray(prior_eigs, dtype=float)))


def c1_distance(forward: ForwardMap, a, b) -> float:
    """Noise-weighted distance between two points in observation space."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(np.sqrt(np.sum(d * d / forward.noise_cov_eigs)))


def _fd_jacobian(forward: ForwardMap, u, step: float = 1e-5) -> np.ndarray:
    jac = np.empty((forward.dimension_out, forward.dimension_in))
    for j in range(forward.dimension_in):
        up = u.copy()
        um = u.copy()
        up[j] += step
        um[j] -= step
        jac[:, j] = (np.asarray(forward.apply(up)) - np.asarray(forward.apply(um))) / (2 * step)
    return jac


def tikhonov_map_finite(forward: ForwardMap, prior_eigs, data, mode: str = "large-sample",
                        n: int | None = None, start=None, tol: float = 1e-8,
                        max_iter: int | None = None, jac_step: float = 1e-5) -> np.ndarray:
    """Minimise the penalised misfit functional by BFGS.

    mode "large-sample" takes ``data`` as an (n, K) stack of repeated
    observations; mode "small-noise" takes a single length-K vector with
    the scaling exponent ``n`` (misfit weight n^2).  The gradient uses a
    central-difference Jacobian of the forward map, exact for linear maps
    up to roundoff.  ``tol`` bounds the gradient sup norm relative to the
    misfit weight (effective tolerance tol * max(1, weight)), which keeps
    the accuracy of the returned minimiser independent of the weight.
    Raises :class:`StagnationError` if that tolerance is not met.
    """
    prior = np.asarray(prior_eigs, dtype=float)
    if prior.shape != (forward.dimension_in,) or np.any(prior <= 0):
        raise ValueError("prior_eigs must be positive with length dimension_in")
    inv_noise = 1.0 / forward.noise_cov_eigs
    data = np.asarray(data, dtype=float)
    if mode == "large-sample":
        if data.ndim != 2 or data.shape[1] != forward.dimension_out:
            raise ValueError("large-sample data must be an (n, K) array")
        n_rep = data.shape[0]
        y_bar = data.mean(axis=0)
        resid = data - y_bar
        const = float(np.sum(resid * resid * inv_noise))
        weight = float(n_rep)
        target = y_bar
    elif mode == "small-noise":
        if data.shape != (forward.dimension_out,):
            raise ValueError("small-noise data must be a length-K vector")
        if n is None or not n > 0:
            raise ValueError("small-noise mode needs a positive scaling n")
        const = 0.0
        weight = float(n) ** 2
        target = data
    else:
        raise ValueError(f"unknown mode {mode!r}")

    def fun(u):
        g = np.asarray(forward.apply(u), dtype=float)
        d = g - target
        return float(np.sum(u * u / prior)) + weight * float(np.sum(d * d * inv_noise)) + const

    def grad(u):
        g = np.asarray(forward.apply(u), dtype=float)
        jac = _fd_jacobian(forward, u, jac_step)
        return 2.0 * u / prior + 2.0 * weight * (jac.T @ ((g - target) * inv_noise))

    x0 = np.zeros(forward.dimension_in) if start is None else np.asarray(start, dtype=float)
    if max_iter is None:
        max_iter = max(200, 50 * forward.dimension_in)
    gtol = tol * max(1.0, weight)
    res = bfgs(fun, grad, x0, tol=gtol, max_iter=max_iter)
    if not res.converged:
        raise StagnationError(
            f"penalised least squares stalled: status {res.status}, "
            f"grad sup norm {res.grad_norm:.3e} > tol {gtol:.3e}")
    return res.x


def tikhonov_direct(matrix, noise_cov_eigs, prior_eigs, data,
                    mode: str = "large-sample", n: int | None = None) -> np.ndarray:
    """Closed-form minimiser for a linear forward map given as a matrix.

    Solves the normal equations of the penalised functional directly:
    (diag(1/prior) + w A^T C1^-1 A) u = w A^T C1^-1 t, with w = n and t the
    observation mean for large-sample data, w = n^2 and t the single
    observation for small-noise data.  Cross-validation oracle for
    :func:`tikhonov_map_finite`.
    """
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    prior = np.asarray(prior_eigs, dtype=float)
    inv_noise = 1.0 / np.asarray(noise_cov_eigs, dtype=float)
    data = np.asarray(data, dtype=float)
    ata = a.T @ (a * inv_noise[:, None])
    if mode == "large-sample":
        if data.ndim != 2:
            raise ValueError("large-sample data must be an (n, K) array")
        weight = float(data.shape[0])
        target = data.mean(axis=0)
    elif mode == "small-noise":
        if n is None or not n > 0:
            raise ValueError("small-noise mode needs a positive scaling n")
        weight = float(n) ** 2
        target = data
    else:
        raise ValueError(f"unknown mode {mode!r}")
    system = np.diag(1.0 / prior) + weight * ata
    rhs = weight * (a.T @ (target * inv_noise))
    return np.linalg.solve(system, rhs)


def large_sample_experiment(forward: ForwardMap, u_truth, n_values, seed: int,
                            tol: float = 1e-8) -> ConsistencyReport:
    """Repeated-observation consistency: error of G(u_n) against G at the truth.

    Per n, draws n fresh noise vectors, minimises the penalised functional
    and records the noise-weighted image distance.  Stalled minimisations
    are excluded from the power-law fit and listed in ``failed``.
    """
    n_values = [int(n) for n in n_values]
    if any(n < 1 for n in n_values) or any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly increasing positive counts")
    u_truth = np.asarray(u_truth, dtype=float)
    g_truth = np.asarray(forward.apply(u_truth), dtype=float)
    scale = np.sqrt(forward.noise_cov_eigs)
    errors = np.empty(len(n_values))
    failed = []
    for i, n in enumerate(n_values):
        rng = substream(seed, "large-sample-noise", i)
        data = g_truth + rng.standard_normal((n, forward.dimension_out)) * scale
        try:
            u_n = tikhonov_map_finite(forward, np.ones(forward.dimension_in),
                                      data, mode="large-sample", tol=tol)
            errors[i] = c1_distance(forward, forward.apply(u_n), g_truth)
        except StagnationError:
            errors[i] = np.nan
            failed.append(i)
    return _finish_report(n_values, errors, "gimage-c1", seed, failed)


def small_noise_experiment(forward: ForwardMap, u_truth, n_values, seed: int,
                           tol: float = 1e-8) -> ConsistencyReport:
    """Small-noise consistency under the gamma = 1/n scaling.

    Per n, observes once with noise shrunk by 1/n, minimises the
    n^2-weighted functional and records the image distance as above.
    """
    n_values = [int(n) for n in n_values]
    if any(n < 1 for n in n_values) or any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly increasing positive counts")
    u_truth = np.asarray(u_truth, dtype=float)
    g_truth = np.asarray(forward.apply(u_truth), dtype=float)
    scale = np.sqrt(forward.noise_cov_eigs)
    errors = np.empty(len(n_values))
    failed = []
    for i, n in enumerate(n_values):
        rng = substream(seed, "small-noise-noise", i)
        y = g_truth + rng.standard_normal(forward.dimension_out) * scale / n
        try:
            u_n = tikhonov_map_finite(forward, np.ones(forward.dimension_in), y,
                                      mode="small-noise", n=n, tol=tol)
            errors[i] = c1_distance(forward, forward.apply(u_n), g_truth)
        except StagnationError:
            errors[i] = np.nan
            failed.append(i)
    return _finish_report(n_values, errors, "gimage-c1", seed, failed)


def smoothing_small_noise(template: OMProblem, u_truth: GridPath, gamma_values,
                          seed: int, n_obs: int = 5, n_starts: int = 4,
                          tol: float = 1e-6, threads: int = 1) -> ConsistencyReport:
    """Small-noise sweep for the SDE smoothing problem.

    The truth path is fixed; per gamma, observations at ``n_obs`` evenly
    spaced interior times are regenerated, the MAP path is the best
    converged multistart minimum, and the error is the sup distance over
    the observation nodes between the MAP path and the truth.
    """
    gammas = np.asarray(gamma_values, dtype=float)
    if gammas.size and (np.any(np.diff(gammas) >= 0) or np.any(gammas < 0)):
        raise ValueError("gamma values must be strictly decreasing and non-negative")
    _check_truth(template, u_truth)
    times = even_observation_times(template.duration, n_obs)
    errors = np.empty(gammas.size)
    failed = []
    for i, gamma in enumerate(gammas):
        obs = observe(u_truth, times, gamma, substream(seed, "smoothing-noise", i))
        problem = template.with_observations(obs)
        best = _best_map(problem, n_starts, substream(seed, "smoothing-starts", i),
                         tol, threads)
        if best is None:
            errors[i] = np.nan
            failed.append(i)
            continue
        idx = observation_indices(problem)
        errors[i] = float(np.max(np.abs(best.minimizer.values[idx] - u_truth.values[idx])))
    return _finish_report(gammas, errors, "gimage-sup", seed, failed)


def smoothing_large_sample(template: OMProblem, u_truth: GridPath, j_values,
                           seed: int, gamma: float = 1.0, n_starts: int = 4,
                           tol: float = 1e-6, metric: str = "sup",
                           threads: int = 1) -> ConsistencyReport:
    """Large-sample sweep: more and more observations at fixed gamma.

    Per J, observations at J evenly spaced interior times are generated on
    the fixed truth, the MAP path is the best converged multistart
    minimum, and the error is the whole-path distance to the truth in the
    chosen metric ("sup" or "l2").
    """
    j_values = [int(j) for j in j_values]
    if any(j < 1 for j in j_values) or any(b <= a for a, b in zip(j_values, j_values[1:])):
        raise ValueError("j_values must be strictly increasing positive counts")
    if metric not in ("sup", "l2"):
        raise ValueError("metric must be 'sup' or 'l2'")
    _check_truth(template, u_truth)
    errors = np.empty(len(j_values))
    failed = []
    for i, j in enumerate(j_values):
        times = even_observation_times(template.duration, j)
        obs = observe(u_truth, times, gamma, substream(seed, "smoothing-noise", i))
        problem = template.with_observations(obs)
        best = _best_map(problem, n_starts, substream(seed, "smoothing-starts", i),
                         tol, threads)
        if best is None:
            errors[i] = np.nan
            failed.append(i)
            continue
        diff = best.minimizer.values - u_truth.values
        if metric == "sup":
            errors[i] = float(np.max(np.abs(diff)))
        else:
            errors[i] = float(np.sqrt(np.trapezoid(diff * diff, dx=template.dt)))
    return _finish_report(j_values, errors, f"path-{metric}", seed, failed)


def _check_truth(template: OMProblem, u_truth: GridPath):
    if (u_truth.n_steps != template.n_steps
            or abs(u_truth.dt - template.dt) > 1e-12 * template.dt
            or abs(u_truth.t0) > 1e-12):
        raise ValueError("truth path must live on the template grid")


def _best_map(problem, n_starts, rng, tol, threads):
    starts = default_starts(problem, n_starts, rng)
    report = multistart(problem, starts, tol=tol, threads=threads)
    for res in report.minima:
        if res.converged:
            return res
    return None


def _finish_report(abscissa, errors, error_kind, seed, failed):
    fit_c = fit_alpha = None
    usable = np.isfinite(errors) & (errors > 0)
    if int(np.count_nonzero(usable)) >= 2:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit_c, fit_alpha = fit_power_law(np.asarray(abscissa, float)[usable],
                                             np.asarray(errors, float)[usable])
    return ConsistencyReport(abscissa=np.asarray(abscissa, dtype=float),
                             errors=errors, error_kind=error_kind, seed=int(seed),
                             fit_c=fit_c, fit_alpha=fit_alpha, failed=tuple(failed))


def fit_power_law(abscissa, errors):
    """Least-squares power-law fit (c, alpha) through an error curve.

    Ordinary least squares on (log x, log err).  alpha is oriented so that
    alpha > 0 means the errors decay toward the limit the experiment
    drives at: x -> infinity when the abscissa increases (fit c x^-alpha),
    x -> 0 when it decreases (fit c x^alpha).  Points with non-positive
    abscissa or error are excluded with a warning; fewer than two usable
    points raise :class:`FitError`.
    """
    x = np.asarray(abscissa, dtype=float)
    e = np.asarray(errors, dtype=float)
    if x.shape != e.shape or x.ndim != 1:
        raise ValueError("abscissa and errors must be 1-d with equal length")
    usable = (x > 0) & (e > 0) & np.isfinite(x) & np.isfinite(e)
    if not np.all(usable):
        warnings.warn(f"excluding {int(np.sum(~usable))} non-positive or non-finite "
                      "points from the power-law fit", stacklevel=2)
    x, e = x[usable], e[usable]
    if x.size < 2:
        raise FitError("need at least two usable points to fit a power law")
    slope, intercept = np.polyfit(np.log(x), np.log(e), 1)
    alpha = -slope if x[-1] > x[0] else slope
    return float(np.exp(intercept)), float(alpha)


def write_consistency_report(report: ConsistencyReport, out_dir, kind: str,
                             config: dict | None = None, metric: str | None = None) -> str:
    """Write a report as consistency_<kind>_<seed>.csv plus a JSON summary.

    The JSON carries the fit, the seed, the metric label and a hash of the
    resolved configuration so that runs can be matched to their inputs.
    Returns the CSV path.
    """
    os.makedirs(out_dir, exist_ok=True)
    stem = f"consistency_{kind}_{report.seed}"
    csv_path = os.path.join(out_dir, stem + ".csv")
    lines = ["abscissa,error"]
    for a, e in zip(report.abscissa, report.errors):
        lines.append(f"{a:.17g},{e:.17g}")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    cfg = json.dumps(config or {}, sort_keys=True)
    payload = {
        "fit_c": report.fit_c,
        "fit_alpha": report.fit_alpha,
        "metric": metric or report.error_kind,
        "seed": report.seed,
        "failed": list(report.failed),
        "config_hash": hashlib.sha256(cfg.encode("utf-8")).hexdigest(),
    }
    with open(os.path.join(out_dir, stem + ".json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return csv_path
