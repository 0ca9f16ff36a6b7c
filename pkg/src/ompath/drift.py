"""Drift models for the scalar SDE du = f(u) dt + sigma dW.

Each model carries the potential F, the drift f = F', and f' = F'' in
closed form.  Closed-form derivatives keep the gradient of the path
functionals exact; the second derivative of f, needed only inside the
functional gradient, is obtained by central differences of f'.

Shipped models, selectable by name:

* ``double-well``  F(u) = -(1-u^2)^2 / (1+u^2), bistable with stable
  equilibria at -1 and +1.
* ``ou``           f(u) = -u, the linear drift with known transients.
* ``zero``         f = 0, driftless (Brownian) reference.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "DriftModel",
    "double_well",
    "ou",
    "zero",
    "by_name",
    "psi",
    "psi_prime",
    "check_assumption",
    "AssumptionReport",
    "verify_derivatives",
]

MODEL_NAMES = ("double-well", "ou", "zero")


@dataclass(frozen=True)
class DriftModel:
    """Potential F, drift f = F', and derivative f' = F'' of a scalar SDE.

    All three callables accept floats or numpy arrays.  ``bound_m`` is an
    optional constant expected to satisfy psi >= bound_m and F <= bound_m;
    it is only used by :func:`check_assumption`, never enforced.
    """

    name: str
    potential: Callable
    drift: Callable
    drift_prime: Callable
    bound_m: float | None = None


def double_well() -> DriftModel:
    """Bistable model with wells at -1 and +1.

    F(u) = -(1-u)^2 (1+u)^2 / (1+u^2), so F(+-1) = 0 and f(+-1) = f(0) = 0.
    """

    def potential(u):
        u = np.asarray(u, dtype=float)
        q = 1.0 - u * u
        return -(q * q) / (1.0 + u * u)

    def drift(u):
        u = np.asarray(u, dtype=float)
        u2 = u * u
        return 2.0 * u * (1.0 - u2) * (3.0 + u2) / (1.0 + u2) ** 2

    def drift_prime(u):
        u = np.asarray(u, dtype=float)
        u2 = u * u
        num = 3.0 - u2 * (15.0 + u2 * (3.0 + u2))
        return 2.0 * num / (1.0 + u2) ** 3

    return DriftModel("double-well", potential, drift, drift_prime)


def ou() -> DriftModel:
    """Linear drift f(u) = -u with potential F(u) = -u^2/2."""

    def potential(u):
        u = np.asarray(u, dtype=float)
        return -0.5 * u * u

    def drift(u):
        return -np.asarray(u, dtype=float)

    def drift_prime(u):
        return -np.ones_like(np.asarray(u, dtype=float))

    return DriftModel("ou", potential, drift, drift_prime)


def zero() -> DriftModel:
    """Driftless model: F = f = f' = 0."""

    def const0(u):
        return np.zeros_like(np.asarray(u, dtype=float))

    return DriftModel("zero", const0, const0, const0)


def by_name(name: str) -> DriftModel:
    """Look up a shipped model by its CLI name."""
    table = {"double-well": double_well, "ou": ou, "zero": zero}
    if name not in table:
        raise ValueError(f"unknown drift model {name!r}; choose from {MODEL_NAMES}")
    return table[name]()


def psi(model: DriftModel, u, sigma: float):
    """Running cost psi(u) = (f(u)^2 + sigma^2 f'(u)) / (2 sigma^2).

    Depends on F only through its derivatives, so it is invariant under
    shifting F by a constant.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    f = model.drift(u)
    return (f * f + sigma**2 * model.drift_prime(u)) / (2.0 * sigma**2)


def psi_prime(model: DriftModel, u, sigma: float, fd_step: float = 1e-5):
    """Derivative of psi: (2 f f' + sigma^2 f'') / (2 sigma^2).

    f'' is taken by central differences of ``drift_prime`` with step
    ``fd_step``; models only need two exact derivatives.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    u = np.asarray(u, dtype=float)
    f = model.drift(u)
    fp = model.drift_prime(u)
    fpp = (model.drift_prime(u + fd_step) - model.drift_prime(u - fd_step)) / (2.0 * fd_step)
    return (2.0 * f * fp + sigma**2 * fpp) / (2.0 * sigma**2)


@dataclass(frozen=True)
class AssumptionReport:
    """Probe-grid evidence about boundedness of psi and F; advisory only."""

    u_lo: float
    u_hi: float
    n_probe: int
    sigma: float
    min_psi: float
    argmin_psi: float
    max_potential: float
    argmax_potential: float
    lipschitz_drift: float
    bound_m: float | None
    psi_violation: bool
    potential_violation: bool


def check_assumption(model: DriftModel, u_range=(-3.0, 3.0), n_probe: int = 1000,
                     sigma: float = 1.0) -> AssumptionReport:
    """Probe psi and F on a uniform grid and report extremes.

    If the model declares ``bound_m``, violations are flagged whenever
    min psi < bound_m or max F > bound_m at a probe point.  Probing cannot
    certify global bounds, so this reports evidence and never raises.
    """
    if n_probe < 2:
        raise ValueError("n_probe must be at least 2")
    lo, hi = float(u_range[0]), float(u_range[1])
    if not hi > lo:
        raise ValueError("u_range must be an increasing interval")
    u = np.linspace(lo, hi, int(n_probe))
    psi_vals = psi(model, u, sigma)
    pot_vals = np.asarray(model.potential(u), dtype=float)
    f_vals = np.asarray(model.drift(u), dtype=float)
    lip = float(np.max(np.abs(np.diff(f_vals)) / np.diff(u)))
    i_min = int(np.argmin(psi_vals))
    i_max = int(np.argmax(pot_vals))
    m = model.bound_m
    return AssumptionReport(
        u_lo=lo,
        u_hi=hi,
        n_probe=int(n_probe),
        sigma=float(sigma),
        min_psi=float(psi_vals[i_min]),
        argmin_psi=float(u[i_min]),
        max_potential=float(pot_vals[i_max]),
        argmax_potential=float(u[i_max]),
        lipschitz_drift=lip,
        bound_m=m,
        psi_violation=(m is not None and float(psi_vals[i_min]) < m),
        potential_violation=(m is not None and float(pot_vals[i_max]) > m),
    )


def verify_derivatives(model: DriftModel, u_lo: float = -3.0, u_hi: float = 3.0,
                       n: int = 601, fd_step: float = 1e-4):
    """Max mismatch of f against dF and of f' against df by central differences.

    Errors are relative to max(1, |derivative|) so that zeros of f do not
    inflate them.  Returns (err_f, err_f_prime).
    """
    u = np.linspace(u_lo, u_hi, n)
    fd_f = (model.potential(u + fd_step) - model.potential(u - fd_step)) / (2 * fd_step)
    fd_fp = (model.drift(u + fd_step) - model.drift(u - fd_step)) / (2 * fd_step)
    f = np.asarray(model.drift(u), dtype=float)
    fp = np.asarray(model.drift_prime(u), dtype=float)
    err_f = np.max(np.abs(fd_f - f) / np.maximum(1.0, np.abs(f)))
    err_fp = np.max(np.abs(fd_fp - fp) / np.maximum(1.0, np.abs(fp)))
    return float(err_f), float(err_fp)
