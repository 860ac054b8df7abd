import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from toricbranes import exact
from toricbranes.cohomology import as_stack
from toricbranes.duality import (
    beta_identity_check,
    build_xi_table,
    cohomological_euler_matrix,
    cohomological_volume,
    constancy_check,
    curve_samples,
    euler_inverse_check,
    gamma_vector,
    main_theorem_check,
    normalization,
    pairing,
    sample_volume_cases,
    structure_sheaf_charges,
    volume_formula_check,
)
from toricbranes.errors import FormulaInapplicable, MissingEntry, NonGenericV
from toricbranes.hypergeometric import LogBranch, SeriesTruncation
from toricbranes.periods import QuadratureSpec, a_central_charge

EPS = Fraction(1, 10 ** 9)


def brute_xi_entries(fan, v):
    """Scan lattice points of each closed parallelepiped and test c + eps v, d - eps v numerically small eps."""
    out = set()
    for I in itertools.combinations(range(fan.n), fan.rank):
        mat = exact.transpose([fan.points[i] for i in I])
        det = exact.det(mat)
        if det == 0:
            continue
        vI = [sum(fan.points[i][r] for i in I) for r in range(fan.rank)]
        lo = [min(0, *[fan.points[i][r] for i in I]) * fan.rank for r in range(fan.rank)]
        hi = [max(0, *[fan.points[i][r] for i in I]) * fan.rank for r in range(fan.rank)]
        for c in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
            d = [a - b for a, b in zip(vI, c)]
            cp = exact.solve(mat, [Fraction(a) + EPS * b for a, b in zip(c, v)])
            dm = exact.solve(mat, [Fraction(a) - EPS * b for a, b in zip(d, v)])
            if all(x > 0 for x in cp) and all(x > 0 for x in dm):
                out.add((tuple(c), tuple(d), frozenset(I), (-1) ** c[-1], abs(int(det))))
    return out


def line_charges(x):
    # Z_{(a,k)} on the line fan
    def z(a, k):
        return (-1) ** (k + 1) * math.factorial(k - a - 1) * math.factorial(a - 1) \
            / (4 * math.pi ** 2) * x[0] ** (a - k) * x[1] ** (-a)
    return z


class TestXiTable:
    def test_line_fixture(self, line):
        table = build_xi_table(line)
        assert [e.to_dict() for e in table.entries] == [{"c": [0, 0], "d": [1, 2], "I": [1, 2], "xi": 1, "vol": 1}]

    @pytest.mark.parametrize("seed", [0, 1])
    def test_matches_brute_force(self, any_fan, seed):
        table = build_xi_table(any_fan, seed=seed)
        ours = {(e.c, e.d, e.I, e.xi, e.volume) for e in table.entries}
        assert ours == brute_xi_entries(any_fan, table.generic_v)

    def test_structure(self, any_fan):
        table = build_xi_table(any_fan)
        for e in table.entries:
            assert all(a + b == sum(any_fan.points[i][r] for i in e.I) for r, (a, b) in enumerate(zip(e.c, e.d)))
            assert e.xi == (-1) ** e.c[-1]
            if e.c[-1] == 0:
                assert e.xi == 1
            assert any_fan.in_cone(e.d, interior=True)

    def test_rejects_wall_vector(self, fans):
        with pytest.raises(NonGenericV):
            build_xi_table(fans["a1_resolved"], v=[2, 2])

    def test_rejects_boundary_vector(self, line):
        with pytest.raises(NonGenericV):
            build_xi_table(line, v=[0, 1])

    @pytest.mark.parametrize("name", ["line", "c3_z3", "a1_orbifold", "local_p121"])
    def test_single_chamber_tables_do_not_depend_on_v(self, fans, name):
        assert build_xi_table(fans[name], seed=1).same_entries(build_xi_table(fans[name], seed=2))

    def test_pairing_does_not_depend_on_v(self, any_fan):
        stack = as_stack(any_fan)
        x = curve_samples(any_fan, [40.0], seed=3)[0]
        branch = LogBranch.principal(x)
        values = []
        for seed in (1, 2):
            table = build_xi_table(any_fan, seed=seed)
            value = pairing(any_fan, gamma_vector(stack, table, branch),
                            structure_sheaf_charges(stack, table, branch), x, table)
            values.append(np.concatenate([np.asarray(value[k].coeffs, dtype=complex) for k in sorted(value)]))
        assert np.allclose(values[0] * normalization(any_fan), values[1] * normalization(any_fan), atol=1e-9)


class TestPairing:
    def test_zero_second_argument(self, p2):
        table = build_xi_table(p2)
        phi = {c: 1.0 for c in table.c_points}
        psi = {d: 0.0 for d in table.d_points}
        assert pairing(p2, phi, psi, [1, 1, 1, 20.0], table) == 0

    def test_bilinear(self, p2):
        rng = np.random.default_rng(5)
        table = build_xi_table(p2)
        x = [1.0, 1.2, 0.8, 30.0]
        phi = {c: complex(*rng.normal(size=2)) for c in table.c_points}
        p1 = {d: complex(*rng.normal(size=2)) for d in table.d_points}
        p2v = {d: complex(*rng.normal(size=2)) for d in table.d_points}
        mix = {d: 2 * p1[d] - 3j * p2v[d] for d in table.d_points}
        lhs = pairing(p2, phi, mix, x, table)
        rhs = 2 * pairing(p2, phi, p1, x, table) - 3j * pairing(p2, phi, p2v, x, table)
        assert lhs == pytest.approx(rhs, rel=1e-13)

    def test_missing_entry(self, p2):
        table = build_xi_table(p2)
        with pytest.raises(MissingEntry):
            pairing(p2, {}, {d: 1.0 for d in table.d_points}, [1, 1, 1, 20.0], table)

    def test_line_gives_structure_sheaf(self, line):
        stack = as_stack(line)
        table = build_xi_table(line)
        x = (1.0, 1.0)
        z = line_charges(x)
        value = pairing(line, gamma_vector(stack, table, LogBranch.principal(x)), {(1, 2): z(1, 2)}, x, table)
        assert complex(value[0].coeffs[0]) * normalization(line) == pytest.approx(1.0, abs=1e-14)

    def test_line_quadrature_gives_structure_sheaf(self, line):
        stack = as_stack(line)
        table = build_xi_table(line)
        x = (0.7, 1.9)
        za = {d: a_central_charge(line, d, x).value for d in table.d_points}
        value = pairing(line, gamma_vector(stack, table, LogBranch.principal(x)), za, x, table)
        assert complex(value[0].coeffs[0]) * normalization(line) == pytest.approx(1.0, rel=1e-10)


class TestConstancy:
    def test_line_exact(self, line):
        table = build_xi_table(line)
        samples = [[1.0, 1.0], [0.3, 2.0], [5.0, 0.1]]
        rep = constancy_check(line, lambda x: {(0, 0): 1.0}, lambda x: {(1, 2): line_charges(x)(1, 2)}, samples,
                              table=table)
        assert rep.spread < 1e-16

    def test_local_p2(self, p2):
        stack = as_stack(p2)
        table = build_xi_table(p2)
        trunc = SeriesTruncation(12, 1e-9)
        samples = curve_samples(p2, [20, 40, 80, 160, 320], seed=1)
        rep = constancy_check(p2, lambda x: gamma_vector(stack, table, LogBranch.principal(x), trunc),
                              lambda x: structure_sheaf_charges(stack, table, LogBranch.principal(x), trunc),
                              samples, 1e-6, table)
        assert rep.passed

    def test_scaling_family(self, p2):
        stack = as_stack(p2)
        table = build_xi_table(p2)
        base = np.array(curve_samples(p2, [60.0], seed=2)[0])
        samples = [list(base * lam) for lam in (0.5, 1.0, 3.0)]
        rep = constancy_check(p2, lambda x: gamma_vector(stack, table, LogBranch.principal(x)),
                              lambda x: structure_sheaf_charges(stack, table, LogBranch.principal(x)),
                              samples, 1e-9, table)
        assert rep.passed


class TestEulerInverse:
    def test_line(self, line):
        rep = euler_inverse_check(line, [1.0, 1.0])
        assert rep.left_deviation < 1e-15 and rep.right_deviation < 1e-15

    @pytest.mark.parametrize("name", ["local_p2", "c3_z3", "a1_resolved", "a1_orbifold", "local_p121"])
    def test_fans(self, fans, name):
        fan = fans[name]
        x = curve_samples(fan, [40.0], seed=1)[0]
        rep = euler_inverse_check(fan, x, trunc=SeriesTruncation(12, 1e-9))
        assert rep.passed
        assert rep.pairing_matrix.shape == (fan.volume, fan.volume)
        assert abs(np.linalg.det(rep.pairing_matrix)) > 1e-12

    def test_euler_matrix_is_invertible(self, any_fan):
        X = cohomological_euler_matrix(as_stack(any_fan))
        assert abs(np.linalg.det(X)) > 1e-12


class TestMainTheorem:
    def test_line(self, line):
        rep = main_theorem_check(line, x_curve=[[1.3, 0.7], [0.2, 4.0]], tol=1e-10, points=[(1, 2), (1, 3), (2, 3)])
        assert rep.passed
        assert rep.pairing_deviation < 1e-10

    def test_local_p2(self, p2):
        rep = main_theorem_check(p2, x_curve=curve_samples(p2, [80.0], jitter=0.0), tol=1e-4,
                                 points=[(0, 0, 1), (0, 0, 2), (1, 0, 2)],
                                 spec=QuadratureSpec(rel_tol=1e-10, max_subdivisions=20_000))
        assert rep.passed, rep.to_dict()
        assert len(rep.rows) == 3

    def test_branch_shift(self, p2):
        rep = main_theorem_check(p2, a=[1, 0, 0, 0], x_curve=curve_samples(p2, [40.0], jitter=0.0),
                                 points=[(0, 0, 1)], check_pairing=False)
        assert rep.passed
        assert rep.branch_reports


class TestVolume:
    def test_line_point(self, line):
        rep = volume_formula_check(line, (1, 2), 1, (0,), (0,))
        assert rep.oracle == rep.formula == 1

    def test_local_p2_triangle(self, p2):
        rep = volume_formula_check(p2, (0, 0, 1), 3, (), ())
        assert rep.passed
        assert rep.formula == Fraction(9, 2)

    def test_empty_polytope(self, p2):
        assert cohomological_volume(p2, (0, 0, 1), 3, (0, 1, 2), (0, 0, 0)) == 0

    def test_boundary_cone_rejected(self, p2):
        with pytest.raises(FormulaInapplicable):
            cohomological_volume(p2, (1, 0, 2), 0, (1,), (0,))

    def test_samples_on_all_fans(self, any_fan):
        cases = sample_volume_cases(any_fan, 10)
        assert len(cases) >= 10
        for case in cases:
            rep = volume_formula_check(any_fan, *case)
            assert rep.passed, rep.to_dict()
            assert isinstance(rep.formula, Fraction)


class TestBeta:
    def test_unit(self):
        rep = beta_identity_check((1, 1))
        assert rep.gamma_quotient == pytest.approx(1.0, rel=1e-15)
        assert rep.quadrature == pytest.approx(1.0, rel=1e-12)

    def test_half(self):
        rep = beta_identity_check((0.5, 0.5), tol=1e-8)
        assert rep.passed and rep.gamma_quotient == pytest.approx(math.pi, rel=1e-14)

    def test_three(self):
        assert beta_identity_check((1 / 3, 1 / 2, 2)).passed

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            beta_identity_check((1.0,))
        with pytest.raises(ValueError):
            beta_identity_check((1.0, -1.0))
