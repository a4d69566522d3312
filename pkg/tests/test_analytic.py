"""Closed-form bound: values, identities, and the p_b grid."""

import math

import numpy as np
import pytest
from scipy.stats import poisson

from particle_ancestry import (
    CounterexampleParams,
    ParameterError,
    analytic_report,
    f_weight,
    r_curve,
)
from particle_ancestry.serialize import parse_r_curve_csv, render_r_curve_csv

HEADLINE = CounterexampleParams(0.5, 1.0, 0.075)

# Frozen from a 50-digit evaluation of the defining formulas (mpmath),
# rounded to float64.
QA = 1.8604651162790697
QB = 0.13953488372093023
QAP = 1.0689869484151647
QBP = 0.08017402113113735
F_QA = 0.26929192658409553
R_HEADLINE = 1.0410494200165208


class TestFWeight:
    def test_zero(self):
        assert f_weight(0.0) == 0.0

    def test_unit_input(self):
        assert f_weight(1.0) == pytest.approx(math.exp(-1.0) / 2.0, abs=1e-15)

    def test_pinned_value(self):
        # 50-digit evaluation of x^2 exp(-x) / 2 at the q_a float
        assert f_weight(1.8604651) == pytest.approx(0.2692919262553089, abs=1e-12)

    def test_matches_poisson_mass_at_two(self):
        x = np.linspace(0.0, 12.0, 241)
        np.testing.assert_allclose(f_weight(x), poisson.pmf(2, x), atol=1e-12)

    def test_rejects_negative(self):
        with pytest.raises(ParameterError):
            f_weight(-0.5)

    def test_vectorized(self):
        out = f_weight([0.0, 1.0, 2.0])
        assert out.shape == (3,)


class TestAnalyticReport:
    def test_headline_R(self):
        assert analytic_report(HEADLINE).R == pytest.approx(1.04104942, abs=1e-6)

    def test_headline_q_values(self):
        rep = analytic_report(HEADLINE)
        assert rep.q_a == pytest.approx(QA, abs=1e-12)
        assert rep.q_b == pytest.approx(QB, abs=1e-12)
        assert rep.q_a_prime == pytest.approx(QAP, abs=1e-12)
        assert rep.q_b_prime == pytest.approx(QBP, abs=1e-12)

    def test_equal_potentials_collapse(self):
        for alpha, p in [(0.5, 1.0), (0.3, 2.5), (0.9, 0.07)]:
            rep = analytic_report(CounterexampleParams(alpha, p, p))
            for q in (rep.q_a, rep.q_b, rep.q_a_prime, rep.q_b_prime):
                assert q == pytest.approx(1.0, abs=1e-12)
            assert rep.t1 == pytest.approx(1.0 / alpha, abs=1e-12)
            assert rep.t2 == pytest.approx(alpha, abs=1e-12)
            assert rep.t3 == pytest.approx(alpha, abs=1e-12)
            assert rep.R == pytest.approx(alpha, abs=1e-12)

    def test_identities_on_random_grid(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            alpha = float(rng.uniform(0.02, 0.98))
            p_a = float(rng.uniform(0.05, 5.0))
            p_b = float(rng.uniform(0.0, 1.0)) * p_a or p_a * 0.5
            rep = analytic_report(CounterexampleParams(alpha, p_a, p_b))
            assert alpha * rep.q_a + (1 - alpha) * rep.q_b == pytest.approx(
                1.0, abs=1e-12
            )
            mean_gq = alpha * p_a * rep.q_a + (1 - alpha) * p_b * rep.q_b
            assert rep.q_a_prime * mean_gq == pytest.approx(p_a, abs=1e-12)
            assert rep.q_a_prime / rep.q_b_prime == pytest.approx(
                p_a / p_b, rel=1e-12
            )
            assert rep.R == pytest.approx(rep.t1 * rep.t2 * rep.t3, rel=1e-15)
            assert 0.0 < rep.t2 < 1.0
            assert 0.0 < rep.t3 < 1.0

    def test_param_validation(self):
        with pytest.raises(ParameterError):
            CounterexampleParams(0.0, 1.0, 0.5)
        with pytest.raises(ParameterError):
            CounterexampleParams(1.0, 1.0, 0.5)
        with pytest.raises(ParameterError):
            CounterexampleParams(0.5, -1.0, 0.5)
        with pytest.raises(ParameterError):
            CounterexampleParams(0.5, 1.0, 0.0)
        with pytest.raises(ParameterError):
            analytic_report(CounterexampleParams(0.5, 0.075, 1.0))


class TestRCurve:
    def test_headline_grid(self):
        rows = r_curve(0.5, 1.0, 0.0, 0.2, 500)
        assert rows.shape == (500, 2)
        assert np.all(rows[:, 0] > 0)
        assert (rows[:, 1] > 1.0).any()
        nearest = rows[np.argmin(np.abs(rows[:, 0] - 0.075))]
        assert nearest[1] == pytest.approx(1.04104942, abs=2e-3)

    def test_zero_endpoint_maps_to_first_positive(self):
        rows = r_curve(0.5, 1.0, 0.0, 0.2, 500)
        step = 0.2 / 499
        assert rows[0, 0] == pytest.approx(step, rel=1e-12)

    def test_degenerate_narrow_grid(self):
        rows = r_curve(0.5, 1.0, 0.1, 0.1 + 1e-9, 2)
        assert rows.shape == (2, 2)
        assert np.all(np.isfinite(rows))
        assert np.all(rows[:, 1] > 0)

    def test_deterministic_and_monotone_grid(self):
        a = r_curve(0.5, 1.0, 0.01, 0.2, 64)
        b = r_curve(0.5, 1.0, 0.01, 0.2, 64)
        np.testing.assert_array_equal(a, b)
        assert np.all(np.diff(a[:, 0]) > 0)

    def test_invalid_grids(self):
        with pytest.raises(ParameterError):
            r_curve(0.5, 1.0, 0.2, 0.1, 10)
        with pytest.raises(ParameterError):
            r_curve(0.5, 1.0, 0.0, 0.2, 1)
        with pytest.raises(ParameterError):
            r_curve(0.5, 1.0, -0.1, 0.2, 10)

    def test_csv_round_trip(self):
        rows = r_curve(0.5, 1.0, 0.0, 0.2, 25)
        text = render_r_curve_csv(rows)
        assert text.startswith("# schema: r-curve/1\np_b,R\n")
        back = parse_r_curve_csv(text)
        np.testing.assert_array_equal(back, rows)
