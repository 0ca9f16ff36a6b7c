import io

import numpy as np
import pytest

from ompath.gaussian import (
    FiniteGaussian,
    GridPath,
    bridge_mean,
    cameron_martin_norm_sq,
    h1_seminorm_sq,
    nearest_node_index,
    read_path_csv,
    sample_finite_gaussian,
    write_path_csv,
)


def linear_path(n=100, slope=1.0, t_end=1.0):
    dt = t_end / n
    return GridPath(0.0, dt, slope * dt * np.arange(n + 1))


class TestH1Seminorm:
    def test_linear_path_is_exact(self):
        # piecewise-linear path is its own interpolant: integral of 1 over [0,1]
        assert h1_seminorm_sq(linear_path()) == pytest.approx(1.0, abs=1e-13)

    def test_constant_path_is_zero(self):
        p = GridPath(0.0, 0.1, np.full(11, 2.7))
        assert h1_seminorm_sq(p) == 0.0

    def test_quadratic_path_converges_to_analytic_integral(self):
        # int_0^1 (2t)^2 dt = 4/3; forward differences are second-order here
        t = np.linspace(0.0, 1.0, 1001)
        err_n = abs(h1_seminorm_sq(GridPath(0.0, 1e-3, t**2)) - 4.0 / 3.0)
        assert err_n < 1e-4
        t2 = np.linspace(0.0, 1.0, 2001)
        err_2n = abs(h1_seminorm_sq(GridPath(0.0, 5e-4, t2**2)) - 4.0 / 3.0)
        assert err_n / err_2n == pytest.approx(4.0, rel=0.05)

    def test_constant_shift_invariance(self):
        rng = np.random.default_rng(0)
        p = GridPath(0.0, 0.01, rng.normal(size=51))
        shifted = p.with_values(p.values + 13.7)
        assert h1_seminorm_sq(shifted) == pytest.approx(h1_seminorm_sq(p), rel=1e-12)

    def test_quadratic_homogeneity(self):
        rng = np.random.default_rng(1)
        p = GridPath(0.0, 0.02, rng.normal(size=40))
        for alpha in (-2.0, 0.5, 3.25):
            assert h1_seminorm_sq(p.with_values(alpha * p.values)) == pytest.approx(
                alpha**2 * h1_seminorm_sq(p), rel=1e-12)

    def test_midpoint_refinement_leaves_seminorm_unchanged(self):
        rng = np.random.default_rng(2)
        p = GridPath(0.0, 0.1, rng.normal(size=21))
        fine = np.empty(41)
        fine[::2] = p.values
        fine[1::2] = 0.5 * (p.values[:-1] + p.values[1:])
        refined = GridPath(0.0, 0.05, fine)
        assert h1_seminorm_sq(refined) == pytest.approx(h1_seminorm_sq(p), rel=1e-12)


class TestCameronMartinNorm:
    def test_linear_path_sigma_one(self):
        assert cameron_martin_norm_sq(linear_path(), 1.0) == pytest.approx(1.0, abs=1e-13)

    def test_sigma_scaling_identity(self):
        p = linear_path(50, slope=2.0)
        assert cameron_martin_norm_sq(p, 2.0) == pytest.approx(
            h1_seminorm_sq(p) / 4.0, rel=1e-14)

    def test_sine_path_analytic_value(self):
        # int_0^1 (pi cos(pi t))^2 dt = pi^2 / 2
        t = np.linspace(0.0, 1.0, 1001)
        p = GridPath(0.0, 1e-3, np.sin(np.pi * t))
        assert cameron_martin_norm_sq(p, 1.0) == pytest.approx(np.pi**2 / 2, abs=1e-3)

    def test_invalid_sigma_raises(self):
        with pytest.raises(ValueError):
            cameron_martin_norm_sq(linear_path(), 0.0)
        with pytest.raises(ValueError):
            cameron_martin_norm_sq(linear_path(), -1.0)


class TestBridgeMean:
    def test_midpoint_symmetry(self):
        m = bridge_mean(-1.0, 1.0, 0.01, 100)
        assert m.values[50] == pytest.approx(0.0, abs=1e-15)

    def test_constant_when_endpoints_agree(self):
        m = bridge_mean(0.7, 0.7, 0.1, 10)
        assert np.all(m.values == 0.7)

    def test_direct_substitution(self):
        # m(t) = ((T-t)/T) u- + (t/T) u+ with u-=-1, u+=2, T=2 at t=0.5
        m = bridge_mean(-1.0, 2.0, 0.01, 200)
        assert m.values[50] == pytest.approx(-0.25, abs=1e-14)

    def test_endpoints_exact(self):
        m = bridge_mean(-1.3, 0.9, 0.03, 77)
        assert m.values[0] == -1.3 and m.values[-1] == 0.9

    def test_affinity(self):
        a = bridge_mean(-1.0, 2.0, 0.05, 60)
        b = bridge_mean(0.5, -0.25, 0.05, 60)
        c = bridge_mean(-0.5, 1.75, 0.05, 60)
        np.testing.assert_allclose(a.values + b.values, c.values, atol=1e-14)


class TestFiniteGaussianSampling:
    def test_deterministic_given_seed(self):
        meas = FiniteGaussian([1.0])
        x1 = sample_finite_gaussian(meas, np.random.default_rng(42))
        x2 = sample_finite_gaussian(meas, np.random.default_rng(42))
        assert np.array_equal(x1, x2)

    def test_component_variances_match_eigenvalues(self):
        meas = FiniteGaussian([4.0, 1.0, 0.25])
        n = 100_000
        x = sample_finite_gaussian(meas, np.random.default_rng(7), size=n)
        for j, lam in enumerate(meas.eigenvalues):
            stderr = lam * np.sqrt(2.0 / n)  # stderr of a variance estimate
            assert abs(x[:, j].var() - lam) < 5 * stderr

    def test_components_uncorrelated(self):
        meas = FiniteGaussian([4.0, 1.0])
        n = 100_000
        x = sample_finite_gaussian(meas, np.random.default_rng(8), size=n)
        cov = float(np.mean(x[:, 0] * x[:, 1]))
        stderr = np.sqrt(4.0 * 1.0 / n)
        assert abs(cov) < 5 * stderr

    def test_eigenvalue_validation(self):
        with pytest.raises(ValueError):
            FiniteGaussian([1.0, 2.0])  # increasing
        with pytest.raises(ValueError):
            FiniteGaussian([1.0, 0.0])
        with pytest.raises(ValueError):
            FiniteGaussian([])


class TestGridPath:
    def test_validation(self):
        with pytest.raises(ValueError):
            GridPath(0.0, 0.0, np.zeros(3))
        with pytest.raises(ValueError):
            GridPath(0.0, -0.1, np.zeros(3))
        with pytest.raises(ValueError):
            GridPath(0.0, 0.1, np.array([0.0]))
        with pytest.raises(ValueError):
            GridPath(0.0, 0.1, np.array([0.0, np.nan]))

    def test_duration_is_derived(self):
        p = GridPath(0.5, 0.25, np.zeros(5))
        assert p.n_steps == 4
        assert p.duration == 1.0
        np.testing.assert_allclose(p.times(), [0.5, 0.75, 1.0, 1.25, 1.5])

    def test_values_are_read_only(self):
        p = GridPath(0.0, 0.1, np.zeros(3))
        with pytest.raises(ValueError):
            p.values[0] = 1.0


class TestNearestNode:
    def test_ties_resolve_to_earlier_node(self):
        assert nearest_node_index(0.0, 0.1, 10, 0.25) == 2
        assert nearest_node_index(0.0, 0.1, 10, 0.26) == 3
        assert nearest_node_index(0.0, 0.1, 10, 0.24) == 2

    def test_bounds(self):
        assert nearest_node_index(0.0, 0.1, 10, 0.0) == 0
        assert nearest_node_index(0.0, 0.1, 10, 1.0) == 10
        with pytest.raises(ValueError):
            nearest_node_index(0.0, 0.1, 10, 1.2)
        with pytest.raises(ValueError):
            nearest_node_index(0.0, 0.1, 10, -0.05)


class TestPathCsv:
    def test_roundtrip_full_precision(self):
        rng = np.random.default_rng(3)
        p = GridPath(0.25, 0.125, rng.normal(size=17))
        buf = io.StringIO()
        write_path_csv(p, buf)
        buf.seek(0)
        q = read_path_csv(buf)
        assert q.t0 == p.t0 and q.dt == p.dt
        assert np.array_equal(q.values, p.values)

    def test_header_and_precision(self):
        p = GridPath(0.0, 0.1, np.array([1.0 / 3.0, 2.0 / 3.0]))
        buf = io.StringIO()
        write_path_csv(p, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "t,value"
        assert lines[1].split(",")[1] == "0.33333333333333331"
