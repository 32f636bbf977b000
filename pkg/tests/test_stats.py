import math

import numpy as np
import pytest
from scipy import special, stats

from granger_dr.core.stats import (
    TDist,
    log_beta,
    log_gamma,
    regularized_incomplete_beta,
    student_t_two_sided_p,
)
from granger_dr.utils.errors import DomainError


class TestIncompleteBeta:
    def test_endpoints(self):
        assert regularized_incomplete_beta(2.5, 0.5, 0.0) == 0.0
        assert regularized_incomplete_beta(2.5, 0.5, 1.0) == 1.0

    def test_uniform_case(self):
        assert regularized_incomplete_beta(1.0, 1.0, 0.37) == pytest.approx(0.37, abs=1e-12)

    def test_symmetric_case(self):
        assert regularized_incomplete_beta(2.0, 2.0, 0.5) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("a, b", [(0.5, 0.5), (1.5, 0.5), (10.0, 0.5), (50.0, 3.0)])
    def test_matches_scipy(self, a, b):
        for x in np.linspace(0.01, 0.99, 25):
            assert regularized_incomplete_beta(a, b, x) == pytest.approx(
                special.betainc(a, b, x), abs=1e-12
            ), f"I_{x}({a}, {b})"

    def test_domain(self):
        with pytest.raises(DomainError):
            regularized_incomplete_beta(0.0, 1.0, 0.5)
        with pytest.raises(DomainError):
            regularized_incomplete_beta(1.0, 1.0, 1.5)

    @pytest.mark.parametrize("a, b", [(0.5, 0.5), (3.0, 7.5), (250_000.0, 0.5), (40.0, 60.0)])
    def test_log_beta(self, a, b):
        assert log_beta(a, b) == pytest.approx(special.betaln(a, b), rel=1e-13, abs=1e-12)
        assert log_beta(a, b) == log_beta(b, a)

    def test_log_gamma_domain(self):
        assert log_gamma(5.0) == pytest.approx(math.log(24.0))
        with pytest.raises(DomainError):
            log_gamma(0.0)


class TestStudentT:
    def test_zero_statistic(self):
        for dof in (1, 2, 30):
            assert student_t_two_sided_p(0.0, dof) == 1.0

    def test_cauchy(self):
        assert student_t_two_sided_p(1.0, 1) == pytest.approx(0.5, abs=1e-12)

    def test_two_dof_closed_form(self):
        t = 2.0 * math.sqrt(3.0)
        expected = 2.0 * (1.0 - (0.5 + t / (2.0 * math.sqrt(2.0 + t * t))))
        assert student_t_two_sided_p(t, 2) == pytest.approx(expected, abs=1e-12)
        assert student_t_two_sided_p(t, 2) == pytest.approx(0.0742, abs=1e-4)

    @pytest.mark.parametrize("dof", [1, 3, 9, 200, 2000])
    def test_matches_scipy(self, dof):
        for t in (-7.0, -2.1, -0.3, 0.4, 1.96, 5.0, 40.0):
            assert student_t_two_sided_p(t, dof) == pytest.approx(
                2.0 * stats.t.sf(abs(t), dof), rel=1e-9, abs=1e-14
            )

    @pytest.mark.parametrize("dof", [100_000, 500_000])
    def test_large_dof(self, dof):
        for t in (0.5, 2.0, 4.0):
            assert student_t_two_sided_p(t, dof) == pytest.approx(
                2.0 * stats.t.sf(t, dof), abs=1e-12
            ), f"t={t}"

    def test_monotone_in_abs_t(self):
        p_values = [student_t_two_sided_p(t, 7) for t in np.linspace(0.0, 12.0, 50)]
        assert all(a > b for a, b in zip(p_values, p_values[1:]))

    def test_cdf(self):
        dist = TDist(4)
        assert dist.cdf(0.0) == pytest.approx(0.5)
        assert dist.cdf(2.0) + dist.cdf(-2.0) == pytest.approx(1.0)

    def test_rejects_bad_input(self):
        with pytest.raises(DomainError):
            TDist(0)
        with pytest.raises(DomainError):
            student_t_two_sided_p(math.inf, 3)


class TestClosedForms:
    @pytest.mark.parametrize("t", [0.1, 0.9, 2.5, 13.0])
    def test_one_dof(self, t):
        expected = 1.0 - 2.0 * math.atan(t) / math.pi
        assert student_t_two_sided_p(t, 1) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("t", [0.1, 0.9, 2.5, 13.0])
    def test_two_dof(self, t):
        expected = 1.0 - t / math.sqrt(2.0 + t * t)
        assert student_t_two_sided_p(t, 2) == pytest.approx(expected, abs=1e-9)
