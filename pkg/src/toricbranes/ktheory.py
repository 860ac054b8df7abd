"""K-groups as formal R-monomial sums, Chern characters and the Euler pairing."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .cohomology import (
    TWO_PI_I,
    CompactClass,
    SectorClass,
    ToricStack,
    as_stack,
    involution,
    todd_class,
)
from .errors import ClassNotInK0, ClassNotInK0c, SectorMismatch

__all__ = [
    "KClass",
    "chern_character",
    "chern_character_compact",
    "euler_pairing",
    "euler_characteristic",
    "monodromy_multiplier",
    "k_bases",
    "euler_matrix",
]


@dataclass(frozen=True)
class KClass:
    """Integer combination of terms R^l (optionally times a generator G_I)."""

    terms: tuple[tuple[int, tuple[int, ...], frozenset[int] | None], ...]

    @classmethod
    def line_bundle(cls, exps: Sequence[int]) -> "KClass":
        """O(sum a_i D_i) = prod R_i^{a_i}."""
        return cls(((1, tuple(int(a) for a in exps), None),))

    @classmethod
    def structure_sheaf(cls, n: int) -> "KClass":
        return cls.line_bundle([0] * n)

    @classmethod
    def G(cls, I: Iterable[int], n: int, exps: Sequence[int] | None = None) -> "KClass":
        exps = tuple(int(a) for a in exps) if exps is not None else (0,) * n
        return cls(((1, exps, frozenset(I)),))

    @classmethod
    def zero(cls) -> "KClass":
        return cls(())

    def __add__(self, other: "KClass") -> "KClass":
        return KClass(self.terms + other.terms)

    def __mul__(self, other):
        if isinstance(other, int):
            return KClass(tuple((c * other, e, g) for c, e, g in self.terms))
        if isinstance(other, KClass):
            out = []
            for (c1, e1, g1), (c2, e2, g2) in itertools.product(self.terms, other.terms):
                if g1 is not None and g2 is not None:
                    raise ClassNotInK0c("product of two compactly supported generators")
                out.append((c1 * c2, tuple(a + b for a, b in zip(e1, e2)), g1 if g1 is not None else g2))
            return KClass(tuple(out))
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self) -> "KClass":
        return self * -1

    @property
    def is_compact(self) -> bool:
        return bool(self.terms) and all(g is not None for _, _, g in self.terms)

    def to_dict(self) -> dict:
        return {"terms": [{"coef": c, "exps": list(e), "G": sorted(i + 1 for i in g) if g is not None else None}
                          for c, e, g in self.terms]}

    @classmethod
    def from_dict(cls, doc: dict) -> "KClass":
        terms = []
        for t in doc["terms"]:
            g = t.get("G")
            terms.append((int(t.get("coef", 1)), tuple(int(x) for x in t["exps"]),
                          frozenset(int(i) - 1 for i in g) if g is not None else None))
        return cls(tuple(terms))


def _log_ch(stack: ToricStack, k: int, exps: Sequence[int]) -> tuple[Fraction, SectorClass]:
    """Phase (in turns) and nilpotent exponent of ch_k(prod R_i^{l_i})."""
    ring = stack.ring(k)
    sector = stack.sectors[k]
    phase = sum((l * sector.frac[i] for i, l in enumerate(exps)), Fraction(0))
    nil = ring.zero()
    for i, l in enumerate(exps):
        if l:
            nil = nil + ring.D(i) * l
    return phase, nil


def _ch_monomial(stack: ToricStack, k: int, exps: Sequence[int]) -> SectorClass:
    phase, nil = _log_ch(stack, k, exps)
    val = nil.exp()
    phase = phase - (phase.numerator // phase.denominator)
    if phase == 0:
        return val
    return val * complex(np.exp(TWO_PI_I * float(phase)))


def chern_character(stack, E: KClass) -> dict[int, SectorClass]:
    stack = as_stack(stack)
    out = {}
    for k in range(len(stack)):
        acc = stack.ring(k).zero()
        for coef, exps, gen in E.terms:
            if gen is not None:
                raise ClassNotInK0("class carries a compactly supported generator")
            acc = acc + _ch_monomial(stack, k, exps) * coef
        out[k] = acc
    return out


def _inverse_td_series(order: int) -> list[Fraction]:
    """Coefficients of (1 - e^{-x}) / x."""
    from math import factorial

    return [Fraction((-1) ** j, factorial(j + 1)) for j in range(order + 1)]


def chern_character_compact(stack, E: KClass) -> dict[int, CompactClass]:
    """Compactly supported Chern character.

    A generator G_I restricted to sector gamma is the Koszul class of the
    divisors in I; on the sector this gives the F-generator for the part of I
    outside sigma(gamma), corrected by (1 - e^{-D})/D for those indices and by
    1 - ch(R_i)^{-1} for indices inside sigma(gamma).
    """
    stack = as_stack(stack)
    fan = stack.fan
    out = {}
    for k in range(len(stack)):
        ring = stack.ring(k)
        module = stack.module(k)
        sigma = ring.sigma
        acc = module.zero()
        for coef, exps, gen in E.terms:
            if gen is None:
                raise ClassNotInK0c("term without a compactly supported generator")
            if not (fan.is_cone(gen) and fan.is_interior_cone(gen)):
                raise ClassNotInK0c(f"G_{sorted(i + 1 for i in gen)} is not an interior cone")
            if not fan.is_cone(gen | sigma):
                continue
            factor = _ch_monomial(stack, k, exps)
            for i in sorted(gen & sigma):
                unit = [0] * fan.n
                unit[i] = -1
                factor = factor * (1 - _ch_monomial(stack, k, unit))
            inv_td = _inverse_td_series(ring.top)
            for i in sorted(gen - sigma):
                factor = factor * ring.series_in(i, inv_td)
            acc = acc + module.act(factor, module.F(gen - sigma)) * coef
        out[k] = acc
    return out


def euler_pairing(stack, a: dict[int, SectorClass], b: dict[int, CompactClass]) -> complex:
    """chi(a, b) = sum_gamma |Box(sigma)|^{-1} int_{gamma^v} Td * a^* * b."""
    stack = as_stack(stack)
    total = 0
    for k in range(len(stack)):
        dk = stack.dual(k)
        if k not in a or dk not in b:
            raise SectorMismatch(f"missing sector {stack.sectors[k].label()}")
        astar = involution(stack, k, a[k])
        if b[dk].module is not stack.module(dk):
            raise SectorMismatch("compact class belongs to another sector")
        prod = stack.module(dk).act(todd_class(stack, dk) * astar, b[dk])
        total = total + prod.integrate() / stack.box_sizes[k]
    return total


def euler_characteristic(stack, v: KClass) -> complex:
    stack = as_stack(stack)
    ch = chern_character_compact(stack, v)
    total = 0
    for k in range(len(stack)):
        prod = stack.module(k).act(todd_class(stack, k), ch[k])
        total = total + prod.integrate() / stack.box_sizes[k]
    return total


def monodromy_multiplier(stack, a: Sequence[int]) -> dict[int, SectorClass]:
    """ch(O(-sum a_i D_i))."""
    return chern_character(stack, KClass.line_bundle([-int(x) for x in a]))


def _flatten(stack: ToricStack, classes: dict) -> np.ndarray:
    return np.concatenate([np.array([complex(x) for x in classes[k].coeffs]) for k in range(len(stack))])


def k_bases(stack, max_exp: int = 2) -> tuple[list[KClass], list[KClass]]:
    """Line-bundle classes spanning K_0 and G-classes spanning K_0^c (over Q).

    Candidates are scanned in a fixed order and kept when their Chern
    characters are linearly independent; the search stops at vol(Delta).
    """
    stack = as_stack(stack)
    fan = stack.fan
    target = fan.volume
    n = fan.n

    def exps_iter():
        ranges = [range(0, max_exp + 1)] * n
        for e in sorted(itertools.product(*ranges), key=lambda e: (sum(e), e)):
            yield e

    def pick(cands, flatten):
        chosen, vecs = [], []
        for cand in cands:
            vec = flatten(cand)
            trial = np.array(vecs + [vec])
            if np.linalg.matrix_rank(trial, tol=1e-8) == len(vecs) + 1:
                chosen.append(cand)
                vecs.append(vec)
            if len(chosen) == target:
                break
        return chosen

    k0 = pick((KClass.line_bundle(e) for e in exps_iter()),
              lambda E: _flatten(stack, chern_character(stack, E)))
    interior = [c for c in fan.cones if c and fan.is_interior_cone(c)]
    interior.sort(key=lambda c: (-len(c), sorted(c)))

    def compact_cands():
        for e in exps_iter():
            for c in interior:
                yield KClass.G(c, n, e)

    k0c = pick(compact_cands(), lambda E: _flatten(stack, chern_character_compact(stack, E)))
    return k0, k0c


def euler_matrix(stack, k0: Sequence[KClass], k0c: Sequence[KClass]) -> np.ndarray:
    stack = as_stack(stack)
    chs = [chern_character(stack, E) for E in k0]
    chcs = [chern_character_compact(stack, F) for F in k0c]
    return np.array([[complex(euler_pairing(stack, a, b)) for b in chcs] for a in chs])
