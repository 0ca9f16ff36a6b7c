"""Self-contained invariant suite behind the ``check`` command.

Each check exercises one contract of the package against an independent
computation (finite differences, closed forms, direct linear solves,
Monte Carlo error bands) and reports pass/fail with a one-line detail.
The suite is sized to finish in well under a minute; the full test suite
covers the same ground more exhaustively.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import consistency as cns
from . import drift as dr
from . import functional as fn
from . import gaussian as ga
from . import optimize as op
from . import sde
from . import smallball as sb
from .rng import substream

__all__ = ["CheckResult", "run_all", "CHECKS"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_path(problem, rng, pin_end=None):
    n = problem.n_steps
    v = problem.u_minus + np.concatenate(
        [[0.0], np.cumsum(rng.standard_normal(n)) * np.sqrt(problem.dt) * 0.7])
    if pin_end is not None:
        v = v - (np.arange(n + 1) / n) * (v[-1] - pin_end)
    return ga.GridPath(0.0, problem.dt, v)


def _fd_gradient(problem, path, step=1e-6):
    free = fn.free_node_mask(problem)
    base = path.values
    g = np.zeros_like(base)
    for i in np.nonzero(free)[0]:
        vp = base.copy()
        vm = base.copy()
        vp[i] += step
        vm[i] -= step
        g[i] = (fn.om_value(problem, path.with_values(vp))
                - fn.om_value(problem, path.with_values(vm))) / (2 * step)
    return g


def _problems(n_steps=120, dt=1.0 / 120):
    dw = dr.double_well()
    rng = substream(101, "check-observations")
    truth = sde.euler_maruyama(dw, 1.0, -1.0, dt, n_steps, rng)
    obs = sde.observe(truth, np.array([0.3, 0.55, 0.8]) * n_steps * dt, 0.5,
                      substream(101, "check-noise"))
    return {
        "unconditioned": fn.OMProblem("unconditioned", dw, 1.0, -1.0, dt, n_steps),
        "bridge": fn.OMProblem("bridge", dw, 1.0, -1.0, dt, n_steps, u_plus=1.0),
        "smoothing": fn.OMProblem("smoothing", dw, 1.0, -1.0, dt, n_steps, observations=obs),
    }


def check_drift_derivatives():
    worst = 0.0
    for model in (dr.double_well(), dr.ou(), dr.zero()):
        worst = max(worst, *dr.verify_derivatives(model))
    return worst < 1e-6, f"max relative derivative mismatch {worst:.2e} (tol 1e-6)"


def check_psi_shift_invariance():
    dw = dr.double_well()
    shifted = dr.DriftModel("double-well+c", lambda u: dw.potential(u) + 5.0,
                            dw.drift, dw.drift_prime)
    u = np.linspace(-3, 3, 101)
    diff = float(np.max(np.abs(dr.psi(dw, u, 0.7) - dr.psi(shifted, u, 0.7))))
    return diff == 0.0, f"psi shift sensitivity {diff:.2e} (exactly 0 expected)"


def check_gradients():
    rng = substream(7, "check-gradient")
    worst = 0.0
    for name, problem in _problems().items():
        for _ in range(5):
            path = _random_path(problem, rng, 1.0 if name == "bridge" else None)
            g = fn.om_gradient(problem, path).values
            gfd = _fd_gradient(problem, path)
            err = np.max(np.abs(g - gfd) / np.maximum(1.0, np.maximum(np.abs(g), np.abs(gfd))))
            worst = max(worst, float(err))
    return worst < 1e-5, f"max relative gradient error {worst:.2e} (tol 1e-5)"


def check_quadrature_consistency():
    dw = dr.double_well()
    diffs = []
    for n in (100, 200, 400):
        t = np.linspace(0.0, 1.0, n + 1)
        path = ga.GridPath(0.0, 1.0 / n, -1.0 + 0.5 * np.sin(2 * np.pi * t) + 0.3 * t)
        problem = fn.OMProblem("unconditioned", dw, 1.0, -1.0, 1.0 / n, n)
        diffs.append(fn.om_value(problem, path))
    r = (diffs[0] - diffs[1]) / (diffs[1] - diffs[2])
    return 3.5 <= r <= 4.5, f"successive refinement ratio {r:.2f} (expected in [3.5, 4.5])"


def linear_smoothing_solve(problem):
    """Dense normal-equations solve for the driftless smoothing problem."""
    n = problem.n_steps
    sig2 = problem.sigma**2
    dt = problem.dt
    idx = fn.observation_indices(problem)
    gamma2 = problem.observations.gamma**2
    a = np.zeros((n, n))
    for k in range(n):
        a[k, k] = (2.0 if k + 1 < n else 1.0) / (sig2 * dt)
    np.fill_diagonal(a[1:], -1.0 / (sig2 * dt))
    np.fill_diagonal(a[:, 1:], -1.0 / (sig2 * dt))
    b = np.zeros(n)
    b[0] += problem.u_minus / (sig2 * dt)
    for j, i in enumerate(idx):
        a[i - 1, i - 1] += 1.0 / gamma2
        b[i - 1] += problem.observations.values[j] / gamma2
    sol = np.linalg.solve(a, b)
    return np.concatenate([[problem.u_minus], sol])


def check_linear_smoothing_oracle():
    rng = substream(3, "check-linear")
    worst = 0.0
    n, dt = 64, 1.0 / 64
    for _ in range(3):
        times = np.sort(rng.choice(np.arange(5, n - 1), size=4, replace=False)) * dt
        values = rng.normal(scale=1.2, size=4)
        obs = sde.ObservationSet(times, values, 0.5)
        problem = fn.OMProblem("smoothing", dr.zero(), 1.0, 0.3, dt, n, observations=obs)
        start = ga.GridPath(0.0, dt, np.full(n + 1, 0.3))
        res = op.minimize(problem, start, tol=1e-12)
        exact = linear_smoothing_solve(problem)
        worst = max(worst, float(np.max(np.abs(res.minimizer.values - exact))))
    return worst < 1e-8, f"BFGS vs direct solve sup distance {worst:.2e} (tol 1e-8)"


def check_minimize_fixed_point():
    problems = _problems()
    problem = problems["smoothing"]
    start = op.default_starts(problem, 1, substream(4, "check-fp"))[0]
    first = op.minimize(problem, start, tol=1e-8)
    again = op.minimize(problem, first.minimizer, tol=1e-8)
    move = float(np.max(np.abs(again.minimizer.values - first.minimizer.values)))
    return again.iterations == 0 and move == 0.0, \
        f"restart moved {move:.2e} in {again.iterations} iterations"


def check_multistart_convex_unique():
    rng = substream(5, "check-unique")
    n, dt = 48, 1.0 / 48
    obs = sde.ObservationSet(np.array([0.5]), np.array([0.8]), 0.4)
    problem = fn.OMProblem("smoothing", dr.zero(), 1.0, 0.0, dt, n, observations=obs)
    starts = [ga.GridPath(0.0, dt, np.concatenate(
        [[0.0], rng.normal(scale=1.0, size=n)])) for _ in range(10)]
    report = op.multistart(problem, starts, tol=1e-10)
    return len(report.minima) == 1, f"{len(report.minima)} cluster(s) on a convex instance"


def check_smallball_closed_form():
    table = sb.om_ratio_check(ga.FiniteGaussian([1.0]), None, [1.0], [0.0],
                              radii=sb.default_radii(0.5, 4), n_samples=200_000,
                              rng=substream(6, "check-ratio"))
    last = table.rows[-1]
    ref = math.exp(-0.5)
    return table.converged and abs(last.ratio - ref) <= 4 * last.stderr, \
        f"final ratio {last.ratio:.4f} vs e^-1/2 = {ref:.4f} (4se = {4 * last.stderr:.4f})"


def check_lemma_bound():
    rep = sb.lemma_bound_check(ga.FiniteGaussian([1.0]), [2.0], 0.25, 500_000,
                               substream(8, "check-lemma"))
    return rep.passed, f"ratio {rep.ratio:.4f} vs bound {rep.bound:.4f}"


def check_anderson():
    meas = ga.FiniteGaussian([1.0, 0.5])
    rng = substream(9, "check-anderson")
    at0 = sb.ball_prob(meas, None, [0.0, 0.0], 0.5, 300_000, rng)
    atz = sb.ball_prob(meas, None, [0.7, -0.4], 0.5, 300_000, rng)
    se = math.hypot(at0.stderr, atz.stderr)
    return at0.probability >= atz.probability - 4 * se, \
        f"p(0) = {at0.probability:.4f} >= p(z) = {atz.probability:.4f} - 4se"


def check_em_ode_oracle():
    path = sde.euler_maruyama(dr.ou(), 0.0, 1.0, 1e-4, 10_000, substream(10, "check-em"))
    err = abs(path.values[-1] - math.exp(-1.0))
    return err < 1e-3, f"sigma=0 terminal error {err:.2e} vs exp(-1) (tol 1e-3)"


def check_observe_projection():
    path = sde.euler_maruyama(dr.double_well(), 1.0, -1.0, 0.01, 300, substream(11, "check-obs"))
    obs = sde.observe(path, [0.5, 1.7, 2.9], 0.0, substream(11, "check-obs-noise"))
    idx = [ga.nearest_node_index(0.0, 0.01, 300, t) for t in obs.times]
    exact = np.array_equal(obs.values, path.values[idx])
    return exact, "gamma=0 observation equals the node values exactly" if exact \
        else "gamma=0 observation differs from node values"


def check_tikhonov_oracle():
    rng = substream(12, "check-tikhonov")
    a = np.array([[1.3, -0.4], [0.2, 0.9], [0.5, 0.5]])
    noise = np.array([1.0, 0.5, 2.0])
    prior = np.array([1.0, 0.25])
    fwd = cns.ForwardMap(2, 3, lambda u: a @ u, noise)
    data = (a @ np.array([0.4, -0.7])) + rng.standard_normal((7, 3)) * np.sqrt(noise)
    u1 = cns.tikhonov_map_finite(fwd, prior, data, mode="large-sample", tol=1e-9)
    u2 = cns.tikhonov_direct(a, noise, prior, data, mode="large-sample")
    err = float(np.max(np.abs(u1 - u2)))
    return err < 1e-8, f"BFGS vs direct Tikhonov solve sup distance {err:.2e} (tol 1e-8)"


def check_fit_power_law():
    x = np.array([2.0, 4.0, 8.0, 16.0])
    c1, a1 = cns.fit_power_law(x, 3.0 * x**-0.25)
    g = np.array([1.0, 0.5, 0.25, 0.125])
    c2, a2 = cns.fit_power_law(g, 0.7 * g)
    ok = abs(c1 - 3.0) < 1e-12 and abs(a1 - 0.25) < 1e-12 \
        and abs(c2 - 0.7) < 1e-12 and abs(a2 - 1.0) < 1e-12
    return ok, f"recovered (c, alpha) = ({c1:.3f}, {a1:.3f}) and ({c2:.3f}, {a2:.3f})"


def check_experiment_reproducibility():
    dw = dr.double_well()
    n, dt = 100, 0.05
    template = fn.OMProblem("unconditioned", dw, 1.0, -1.0, dt, n)
    truth = sde.euler_maruyama(dw, 1.0, -1.0, dt, n, substream(21, "truth"))
    reps = [cns.smoothing_small_noise(template, truth, (0.5, 0.25), seed=21,
                                      n_obs=3, n_starts=2, tol=1e-6)
            for _ in range(2)]
    same = np.array_equal(reps[0].errors, reps[1].errors)
    return same, "identical seeds give bit-identical error curves" if same \
        else f"reruns differ: {reps[0].errors} vs {reps[1].errors}"


CHECKS = [
    ("drift-derivatives", check_drift_derivatives),
    ("psi-shift-invariance", check_psi_shift_invariance),
    ("functional-gradients", check_gradients),
    ("quadrature-consistency", check_quadrature_consistency),
    ("linear-smoothing-oracle", check_linear_smoothing_oracle),
    ("minimize-fixed-point", check_minimize_fixed_point),
    ("multistart-convex-unique", check_multistart_convex_unique),
    ("smallball-closed-form", check_smallball_closed_form),
    ("lemma-bound", check_lemma_bound),
    ("anderson-inequality", check_anderson),
    ("euler-ode-oracle", check_em_ode_oracle),
    ("observe-projection", check_observe_projection),
    ("tikhonov-oracle", check_tikhonov_oracle),
    ("fit-power-law", check_fit_power_law),
    ("experiment-reproducibility", check_experiment_reproducibility),
]


def run_all():
    """Run every check; returns the list of results."""
    results = []
    for name, fun in CHECKS:
        try:
            passed, detail = fun()
        except Exception as exc:  # a crashed check is a failed check
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail))
    return results
