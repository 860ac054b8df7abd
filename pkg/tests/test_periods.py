import math
from fractions import Fraction

import numpy as np
import pytest

from toricbranes.errors import NotConvergent, NotEligible, ToleranceNotReached
from toricbranes.periods import (
    QuadratureSpec,
    a_central_charge,
    asymptotic_leading_term,
    asymptotics_check,
    bbgkz_residual,
    convergence_check,
    large_radius_point,
    tropical_cover,
)


def line_charge(a, k, x1, x2):
    """Z_{(a,k)} on the line fan, 0 < a < k: one residue term in closed form."""
    return (-1) ** (k + 1) * math.factorial(k - a - 1) * math.factorial(a - 1) \
        / (4 * math.pi ** 2) * x1 ** (a - k) * x2 ** (-a)


def closed_form(x1, x2):
    return -1 / (4 * math.pi ** 2 * x1 * x2)


class TestConvergence:
    def test_examples(self, line, p2):
        assert convergence_check(line, (1, 2))
        assert not convergence_check(line, (0, 1))
        assert convergence_check(p2, (0, 0, 1))
        assert not convergence_check(p2, (1, 0, 1))

    def test_rejects_boundary_and_bad_x(self, line):
        with pytest.raises(NotConvergent):
            a_central_charge(line, (0, 1), (1.0, 1.0))
        with pytest.raises(NotConvergent):
            a_central_charge(line, (1, 2), (1.0, 0.0))


class TestLineFan:
    def test_closed_form(self, line):
        res = a_central_charge(line, (1, 2), (1.3, 0.7))
        assert res.value.real == pytest.approx(closed_form(1.3, 0.7), rel=1e-10)
        assert abs(res.value.imag) < 1e-25

    def test_error_estimate_bounds_true_error(self, line):
        rng = np.random.default_rng(11)
        spec = QuadratureSpec(rel_tol=1e-8)
        for x in rng.uniform(0.2, 5.0, size=(20, 2)):
            res = a_central_charge(line, (1, 2), x, spec)
            err = abs(res.value - closed_form(*x))
            assert err <= res.err_est + 1e-16
            assert err <= 1e-8 * abs(closed_form(*x))

    @pytest.mark.parametrize("c", [(1, 3), (2, 3), (1, 4), (2, 5)])
    def test_higher_degree(self, line, c):
        res = a_central_charge(line, c, (0.8, 1.5))
        assert res.value.real == pytest.approx(line_charge(*c, 0.8, 1.5), rel=1e-10)

    def test_homogeneity(self, line):
        x = np.array([1.1, 0.6])
        z1 = a_central_charge(line, (1, 2), x).value
        z2 = a_central_charge(line, (1, 2), 3 * x).value
        assert z2 == pytest.approx(z1 / 9, rel=1e-10)

    def test_sub_roundoff_target_refused(self, line):
        with pytest.raises(ToleranceNotReached):
            a_central_charge(line, (1, 2), (1.3, 0.7), QuadratureSpec(rel_tol=1e-17, max_subdivisions=2000))


class TestLocalP2:
    def test_outer_symmetry(self, p2):
        a = a_central_charge(p2, (0, 0, 1), (1.0, 2.0, 3.0, 10.0)).value
        b = a_central_charge(p2, (0, 0, 1), (3.0, 1.0, 2.0, 10.0)).value
        assert a == pytest.approx(b, rel=1e-9)

    def test_raw_integral_is_real_and_positive(self, p2):
        res = a_central_charge(p2, (0, 0, 1), large_radius_point(p2, 20))
        assert isinstance(res.raw_integral, float) and res.raw_integral > 0

    def test_tail_bound_is_honest(self, p2):
        base = a_central_charge(p2, (0, 0, 1), large_radius_point(p2, 20), QuadratureSpec(rel_tol=1e-12))
        wide = a_central_charge(p2, (0, 0, 1), large_radius_point(p2, 20),
                                QuadratureSpec(box_radius=1.5 * base.box_radius, rel_tol=1e-12))
        assert abs(wide.value - base.value) <= base.tail_bound + base.err_est + wide.err_est


class TestResiduals:
    def test_line_fan(self, line):
        rep = bbgkz_residual(line, lambda c, x: a_central_charge(line, c, x, QuadratureSpec(rel_tol=1e-13)).value,
                             (1, 2), (1.2, 0.9))
        assert rep.passed()
        assert all(1.8 < o < 2.2 for o in rep.orders)

    def test_closed_form_residual_is_second_order(self, line):
        rep = bbgkz_residual(line, lambda c, x: line_charge(*c, *x), (1, 2), (1.2, 0.9))
        assert all(1.9 < o < 2.1 for o in rep.orders)
        assert rep.passed()

    def test_local_p2(self, p2):
        spec = QuadratureSpec(rel_tol=1e-13)
        x = large_radius_point(p2, 3.0, [1.0, 1.1, 1.2, 1.3])
        rep = bbgkz_residual(p2, lambda c, y: a_central_charge(p2, c, y, spec).value, (0, 0, 1), x)
        assert rep.passed()


class TestTropicalCover:
    def test_line(self, line):
        cover = tropical_cover(line, 10.0)
        assert cover.nonempty() == {(0, frozenset()), (0, frozenset({1})), (1, frozenset({0})), (1, frozenset())}

    def test_matches_cones(self, any_fan):
        if any_fan.dim == 0:
            pytest.skip("no tropical directions")
        cover = tropical_cover(any_fan, 10.0)
        for (q, K), (ok, _) in cover.regions.items():
            assert ok == any_fan.is_cone(K | {q}), (q, K)

    def test_rejects_nonpositive_eps(self, p2):
        with pytest.raises(ValueError):
            tropical_cover(p2, 10.0, Fraction(0))


class TestAsymptotics:
    def test_line_leading_term(self, line):
        lead = asymptotic_leading_term(line, (1, 2))
        assert lead.exponent == 0
        assert lead(50.0) == pytest.approx(-1 / (4 * math.pi ** 2), rel=1e-14)

    def test_line_ratio_is_one(self, line):
        rep = asymptotics_check(line, (1, 2), (20, 40))
        assert max(rep.deviations) < 1e-9

    def test_not_eligible(self, p2):
        with pytest.raises(NotEligible):
            asymptotic_leading_term(p2, (0, 0, 2))
        with pytest.raises(NotEligible):
            asymptotic_leading_term(p2, (1, 0, 1))

    def test_log_polynomial_degree(self, any_fan):
        from toricbranes.lattice import decompose_point, lattice_points

        for c in lattice_points(any_fan, 1, interior=True):
            if decompose_point(any_fan, c).asymptotics_eligible:
                lead = asymptotic_leading_term(any_fan, c)
                sector = decompose_point(any_fan, c).sector
                assert len(lead.log_coefficients) - 1 <= any_fan.rank - len(sector.sigma)

    @pytest.mark.parametrize("c", [(0, 0, 1), (1, 0, 2)])
    def test_local_p2(self, p2, c):
        rep = asymptotics_check(p2, c)
        assert rep.monotone
        assert rep.final_deviation < 0.05
        assert rep.fitted_exponent == pytest.approx(rep.expected_exponent, rel=0.02)
        assert rep.passed()

    def test_local_p121_slow_point_needs_a_longer_grid(self, fans):
        fan = fans["local_p121"]
        short = asymptotics_check(fan, (0, -1, 2))
        assert short.monotone and short.final_deviation < 0.05
        long = asymptotics_check(fan, (0, -1, 2), (160, 320, 640, 1280, 2560))
        assert long.passed()
