import itertools
from fractions import Fraction

import numpy as np
import pytest

from toricbranes.cohomology import TWO_PI_I, as_stack
from toricbranes.errors import ClassNotInK0, ClassNotInK0c
from toricbranes.ktheory import (
    KClass,
    chern_character,
    chern_character_compact,
    euler_characteristic,
    euler_matrix,
    euler_pairing,
    k_bases,
    monodromy_multiplier,
)


def unit(n, i, power=1):
    e = [0] * n
    e[i] = power
    return e


def close(x, y, tol=1e-12):
    return np.allclose(np.asarray(x.coeffs, dtype=complex), np.asarray(y.coeffs, dtype=complex), atol=tol)


class TestChernCharacter:
    def test_untwisted_line_bundles(self, any_fan):
        stack = as_stack(any_fan)
        ring = stack.ring(0)
        for i in range(any_fan.n):
            ch = chern_character(stack, KClass.line_bundle(unit(any_fan.n, i)))
            assert close(ch[0], ring.D(i).exp())

    def test_structure_sheaf(self, any_fan):
        stack = as_stack(any_fan)
        ch = chern_character(stack, KClass.structure_sheaf(any_fan.n))
        for k, cls in ch.items():
            assert close(cls, stack.ring(k).one())

    def test_point_sector_phase(self, c3z3):
        stack = as_stack(c3z3)
        ch = chern_character(stack, KClass.line_bundle([1, 0, 0]))
        assert complex(ch[1].coeffs[0]) == pytest.approx(np.exp(TWO_PI_I / 3), abs=1e-15)
        assert complex(ch[2].coeffs[0]) == pytest.approx(np.exp(2 * TWO_PI_I / 3), abs=1e-15)

    def test_rejects_compact(self, p2):
        with pytest.raises(ClassNotInK0):
            chern_character(p2, KClass.G({3}, 4))

    def test_ring_homomorphism(self, any_fan):
        stack = as_stack(any_fan)
        n = any_fan.n
        a = KClass.line_bundle(unit(n, 0, 2)) + KClass.line_bundle(unit(n, n - 1, -1))
        b = KClass.line_bundle(unit(n, 1)) * 3 + KClass.structure_sheaf(n)
        cha, chb, chab = (chern_character(stack, E) for E in (a, b, a * b))
        for k in range(len(stack)):
            assert close(chab[k], cha[k] * chb[k])

    def test_relations(self, any_fan):
        """prod_i ch(R_i)^{mu(v_i)} = 1 in every sector."""
        stack = as_stack(any_fan)
        for r in range(any_fan.rank):
            exps = [p[r] for p in any_fan.points]
            ch = chern_character(stack, KClass.line_bundle(exps))
            for k in range(len(stack)):
                assert close(ch[k], stack.ring(k).one())


class TestCompactCharacter:
    def test_top_generators(self, p2, line):
        s = as_stack(line)
        assert close(chern_character_compact(s, KClass.G({0, 1}, 2))[0], s.module(0).F({0, 1}))
        s = as_stack(p2)
        assert close(chern_character_compact(s, KClass.G({0, 1, 3}, 4))[0], s.module(0).F({0, 1, 3}))

    def test_koszul_correction(self, p2):
        # ch^c(R_4 G_4) = e^{D_4} (1 - e^{-D_4}) / D_4 F_4; its leading term is F_4
        s = as_stack(p2)
        ring, module = s.ring(0), s.module(0)
        got = chern_character_compact(s, KClass.G({3}, 4, [0, 0, 0, 1]))[0]
        factor = ring.series_in(3, [Fraction(1), Fraction(1, 2), Fraction(1, 6)])  # (e^x - 1)/x
        assert close(got, module.act(factor, module.F({3})))

    def test_rejects_boundary_generator(self, p2):
        with pytest.raises(ClassNotInK0c):
            chern_character_compact(p2, KClass.G({0}, 4))

    def test_rejects_noncompact(self, p2):
        with pytest.raises(ClassNotInK0c):
            chern_character_compact(p2, KClass.structure_sheaf(4))


class TestEulerPairing:
    @pytest.mark.parametrize("name,cone", [("line", {0, 1}), ("local_p2", {0, 1, 3}), ("c3_z3", {0, 1, 2})])
    def test_skyscrapers(self, fans, name, cone):
        fan = fans[name]
        stack = as_stack(fan)
        v = KClass.G(cone, fan.n)
        chi = euler_pairing(stack, chern_character(stack, KClass.structure_sheaf(fan.n)),
                            chern_character_compact(stack, v))
        assert complex(chi) == pytest.approx(1, abs=1e-12)
        assert complex(euler_characteristic(stack, v)) == pytest.approx(1, abs=1e-12)

    @pytest.mark.parametrize("k", range(-3, 4))
    def test_riemann_roch_on_p2(self, p2, k):
        # G_4 is the structure sheaf of the zero section P^2; R_1 restricts to O(1)
        v = KClass.G({3}, 4, [k, 0, 0, 0])
        assert complex(euler_characteristic(p2, v)) == pytest.approx((k + 1) * (k + 2) / 2, abs=1e-10)

    @pytest.mark.parametrize("k", range(-2, 3))
    def test_riemann_roch_on_p2_line(self, p2, k):
        v = KClass.G({0, 3}, 4, [k, 0, 0, 0])
        assert complex(euler_characteristic(p2, v)) == pytest.approx(k + 1, abs=1e-10)

    @pytest.mark.parametrize("a,b", [(0, 0), (1, 2), (-1, 3), (2, -2)])
    def test_riemann_roch_on_f0(self, fans, a, b):
        fan = fans["local_f0"]
        v = KClass.G({0}, 5, [0, a, b, 0, 0])
        assert complex(euler_characteristic(fan, v)) == pytest.approx((a + 1) * (b + 1), abs=1e-10)

    def test_two_formulas_agree(self, any_fan):
        stack = as_stack(any_fan)
        one = chern_character(stack, KClass.structure_sheaf(any_fan.n))
        _, k0c = k_bases(stack)
        for v in k0c:
            left = euler_pairing(stack, one, chern_character_compact(stack, v))
            assert complex(left) == pytest.approx(complex(euler_characteristic(stack, v)), abs=1e-12)

    def test_integral_invertible_matrix(self, any_fan):
        stack = as_stack(any_fan)
        k0, k0c = k_bases(stack)
        assert len(k0) == len(k0c) == any_fan.volume
        m = euler_matrix(stack, k0, k0c)
        assert np.max(np.abs(m - np.round(m.real))) < 1e-9
        assert abs(np.linalg.det(np.round(m.real))) >= 1


class TestMultiplier:
    def test_zero(self, any_fan):
        stack = as_stack(any_fan)
        mult = monodromy_multiplier(stack, [0] * any_fan.n)
        for k in range(len(stack)):
            assert close(mult[k], stack.ring(k).one())

    def test_additive(self, any_fan):
        stack = as_stack(any_fan)
        n = any_fan.n
        for a, b in itertools.combinations([unit(n, 0), unit(n, n - 1, 2), [1] * n], 2):
            left = monodromy_multiplier(stack, [x + y for x, y in zip(a, b)])
            ma, mb = monodromy_multiplier(stack, a), monodromy_multiplier(stack, b)
            for k in range(len(stack)):
                assert close(left[k], ma[k] * mb[k])

    def test_line_fan(self, line):
        stack = as_stack(line)
        ring = stack.ring(0)
        assert close(monodromy_multiplier(stack, [1, 0])[0], (-ring.D(0)).exp())


def test_kclass_json_round_trip():
    v = KClass.G({0, 3}, 4, [1, 0, 0, -2]) + KClass.line_bundle([0, 1, 0, 0]) * 3
    assert KClass.from_dict(v.to_dict()) == v
