import io
import math

import numpy as np
import pytest

from ompath.gaussian import FiniteGaussian
from ompath.rng import substream
from ompath.smallball import (
    ball_prob,
    default_radii,
    empirical_map,
    lemma_bound_check,
    om_point_value,
    om_ratio_check,
    write_ratio_table_csv,
)

STD1 = FiniteGaussian([1.0])


def linear_phi(coeff):
    c = np.asarray(coeff, dtype=float)
    return lambda x: x @ c


class TestBallProb:
    def test_standard_normal_unit_ball(self):
        # P(|x| < 1) = erf(1/sqrt(2)) for N(0, 1)
        est = ball_prob(STD1, None, [0.0], 1.0, 100_000, substream(0, "ball"))
        exact = math.erf(1.0 / math.sqrt(2.0))
        assert abs(est.probability - exact) <= 4 * est.stderr
        assert est.stderr == pytest.approx(
            math.sqrt(est.probability * (1 - est.probability) / est.n_samples))

    def test_huge_radius_captures_everything(self):
        est = ball_prob(STD1, None, [0.0], 100.0, 10_000, substream(1, "ball"))
        assert est.probability == 1.0 and est.stderr == 0.0

    def test_symmetric_centers_agree(self):
        rng = substream(2, "ball")
        a = ball_prob(STD1, None, [1.3], 0.5, 200_000, rng)
        b = ball_prob(STD1, None, [-1.3], 0.5, 200_000, rng)
        assert abs(a.probability - b.probability) <= 4 * math.hypot(a.stderr, b.stderr)

    def test_zero_hits_flagged(self):
        est = ball_prob(STD1, None, [50.0], 0.01, 1000, substream(3, "ball"))
        assert est.probability == 0.0 and est.stderr == 0.0
        assert est.n_hits == 0 and est.low_hits

    def test_validation(self):
        rng = substream(4, "ball")
        with pytest.raises(ValueError):
            ball_prob(STD1, None, [0.0], 0.0, 100, rng)
        with pytest.raises(ValueError):
            ball_prob(STD1, None, [0.0, 0.0], 1.0, 100, rng)
        with pytest.raises(ValueError):
            ball_prob(STD1, None, [0.0], 1.0, 0, rng)


class TestOmPointValue:
    def test_quadratic_part(self):
        meas = FiniteGaussian([1.0, 0.5])
        assert om_point_value(meas, None, [0.8, 0.4]) == pytest.approx(
            0.5 * (0.8**2 / 1.0 + 0.4**2 / 0.5))

    def test_with_linear_reweighting(self):
        assert om_point_value(STD1, linear_phi([-2.0]), [1.5]) == pytest.approx(
            -3.0 + 0.5 * 1.5**2)


class TestOmRatioCheck:
    def test_identical_centers_give_exact_unit_ratio(self):
        table = om_ratio_check(STD1, None, [0.7], [0.7], n_samples=20_000,
                               rng=substream(5, "ratio"))
        assert all(r.ratio == 1.0 for r in table.rows)
        assert table.reference == 1.0
        assert table.converged

    def test_gaussian_closed_form(self):
        # ratio of ball masses at 1 and 0 under N(0,1) tends to exp(-1/2)
        table = om_ratio_check(STD1, None, [1.0], [0.0], n_samples=200_000,
                               rng=substream(6, "ratio"))
        last = table.rows[-1]
        assert table.reference == pytest.approx(math.exp(-0.5), rel=1e-12)
        assert abs(last.ratio - table.reference) <= 4 * last.stderr
        assert table.converged

    def test_linear_reweighting_reference(self):
        meas = FiniteGaussian([1.0, 0.5])
        phi = linear_phi([1.0, 0.0])
        z1, z2 = [0.8, 0.4], [0.0, 0.0]
        table = om_ratio_check(meas, phi, z1, z2, n_samples=100_000,
                               rng=substream(7, "ratio"))
        expected = math.exp(om_point_value(meas, phi, z2) - om_point_value(meas, phi, z1))
        assert table.reference == pytest.approx(expected, rel=1e-12)
        last = table.rows[-1]
        assert abs(last.ratio - expected) <= 4 * last.stderr

    def test_ratio_symmetry(self):
        ab = om_ratio_check(STD1, None, [0.9], [0.2], n_samples=200_000,
                            rng=substream(8, "ratio"))
        ba = om_ratio_check(STD1, None, [0.2], [0.9], n_samples=200_000,
                            rng=substream(9, "ratio"))
        a, b = ab.rows[-1], ba.rows[-1]
        prod = a.ratio * b.ratio
        se = prod * math.hypot(a.stderr / a.ratio, b.stderr / b.ratio)
        assert abs(prod - 1.0) <= 4 * se

    def test_scaling_invariance(self):
        # lambda -> c lambda with z -> sqrt(c) z leaves the limit unchanged
        c = 4.0
        base = om_ratio_check(STD1, None, [1.0], [0.0], n_samples=200_000,
                              rng=substream(10, "ratio"))
        scaled = om_ratio_check(FiniteGaussian([c]), None, [math.sqrt(c)], [0.0],
                                radii=default_radii(0.5 * math.sqrt(c), 6),
                                n_samples=200_000, rng=substream(11, "ratio"))
        assert scaled.reference == pytest.approx(base.reference, rel=1e-12)
        a, b = base.rows[-1], scaled.rows[-1]
        assert abs(a.ratio - b.ratio) <= 4 * math.hypot(a.stderr, b.stderr)

    def test_radii_validation(self):
        rng = substream(12, "ratio")
        with pytest.raises(ValueError):
            om_ratio_check(STD1, None, [1.0], [0.0], radii=[0.1, 0.2], rng=rng)
        with pytest.raises(ValueError):
            om_ratio_check(STD1, None, [1.0], [0.0], radii=[0.1, -0.05], rng=rng)


class TestLemmaBound:
    def test_center_zero_is_trivially_bounded(self):
        rep = lemma_bound_check(STD1, [0.0], 0.3, 50_000, substream(13, "lemma"))
        assert rep.ratio == 1.0
        assert rep.bound == pytest.approx(1.0)  # c and the decay factor cancel
        assert rep.passed

    def test_one_dimensional_plugin_value(self):
        # bound = exp(1/32) exp(-(1/2)(1.75)^2) for z = 2, delta = 1/4
        rep = lemma_bound_check(STD1, [2.0], 0.25, 400_000, substream(14, "lemma"))
        assert rep.bound == pytest.approx(
            math.exp(1.0 / 32.0) * math.exp(-0.5 * 1.75**2), rel=1e-12)
        assert rep.bound == pytest.approx(0.223, abs=5e-4)
        assert rep.passed

    def test_two_dimensional_uses_smallest_inverse_eigenvalue(self):
        meas = FiniteGaussian([1.0, 0.25])
        rep = lemma_bound_check(meas, [1.0, 1.0], 0.2, 400_000, substream(15, "lemma"))
        assert rep.a1 == 1.0
        norm_z = math.sqrt(2.0)
        assert rep.bound == pytest.approx(
            math.exp(0.5 * 0.2**2) * math.exp(-0.5 * (norm_z - 0.2) ** 2), rel=1e-12)
        assert rep.passed


class TestEmpiricalMap:
    def test_centred_case_prefers_origin(self):
        rank = empirical_map(STD1, None, [[0.0], [1.0]], 0.4, 100_000,
                             substream(16, "map"))
        assert rank.mc_argmax == 0 and rank.om_argmin == 0 and rank.agree

    def test_symmetric_quadratic_reweighting(self):
        phi = lambda x: 0.5 * x[:, 0] ** 2  # noqa: E731
        rank = empirical_map(STD1, phi, [[-1.0], [0.0], [1.0]], 0.4, 100_000,
                             substream(17, "map"))
        assert rank.mc_argmax == 1 and rank.agree

    def test_tilted_measure(self):
        # exp(2u) reweighting centres the measure at 2
        phi = linear_phi([-2.0])
        cands = [[0.0], [0.5], [1.0], [1.5], [2.0]]
        oms = [om_point_value(STD1, phi, c) for c in cands]
        assert int(np.argmin(oms)) == 4
        rank = empirical_map(STD1, phi, cands, 0.4, 200_000, substream(18, "map"))
        assert rank.mc_argmax == 4 and rank.agree

    def test_rows_sorted_by_probability(self):
        rank = empirical_map(STD1, None, [[0.0], [0.5], [1.0]], 0.4, 50_000,
                             substream(19, "map"))
        probs = [r.probability for r in rank.rows]
        assert probs == sorted(probs, reverse=True)

    def test_needs_two_candidates(self):
        with pytest.raises(ValueError):
            empirical_map(STD1, None, [[0.0]], 0.4, 1000, substream(20, "map"))


def test_anderson_inequality_origin_dominates():
    meas = FiniteGaussian([1.0, 0.5])
    rng = substream(21, "anderson")
    at0 = ball_prob(meas, None, [0.0, 0.0], 0.6, 200_000, rng)
    for center in ([0.5, 0.0], [0.0, 0.7], [-0.6, 0.3]):
        atz = ball_prob(meas, None, center, 0.6, 200_000, rng)
        assert at0.probability >= atz.probability - 4 * math.hypot(at0.stderr, atz.stderr)


def test_ratio_decays_as_dimension_grows():
    # finite-dimensional stand-in for the degeneracy of shifts outside the
    # admissible-shift space: as the dimension grows with the shifted energy,
    # the centred ball-mass ratio decays toward zero
    ratios = []
    for i, d in enumerate((1, 2, 4)):
        meas = FiniteGaussian(np.ones(d))
        z = np.full(d, 0.8)
        rng = substream(30, "degeneracy", i)
        at_z = ball_prob(meas, None, z, 0.6, 400_000, rng)
        at_0 = ball_prob(meas, None, np.zeros(d), 0.6, 400_000, rng)
        assert not at_z.low_hits
        ratios.append(at_z.probability / at_0.probability)
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 0.45  # the shifted energy 0.32 d drives the decay


def test_ratio_table_csv_format():
    table = om_ratio_check(STD1, None, [1.0], [0.0], radii=[0.5, 0.25],
                           n_samples=10_000, rng=substream(22, "csv"))
    buf = io.StringIO()
    write_ratio_table_csv(table, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "radius,ratio,stderr,reference,verdict"
    assert len(lines) == 3
    assert lines[1].split(",")[4] in ("true", "false")
