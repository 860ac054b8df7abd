"""Cohomology-valued Gamma series and B-brane central charges.

A term of the series for a point c and sector gamma is indexed by a rational
vector l with sum_i l_i v_i = -c and l = gamma (mod Z^n).  It reads

    prod_i x_i^{l_i + D_i/2 pi i} / Gamma(1 + l_i + D_i/2 pi i)

and, for the compactly supported version, the factor x_i = D_i/2 pi i coming
from every negative integer l_i is replaced by the generator F over those
indices (times 1/2 pi i each) instead of being divided out.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import exact, special
from .cohomology import TWO_PI_I, CompactClass, SectorClass, ToricStack, as_stack
from .errors import CompactFactorNotCancelled, DivergenceSuspected, PointOutsideCone
from .ktheory import KClass, chern_character, euler_pairing, monodromy_multiplier
from .lattice import TwistedSector

__all__ = [
    "LogBranch",
    "SeriesTruncation",
    "ExponentSolution",
    "enumerate_exponents",
    "gamma_series",
    "b_central_charge",
    "termwise_bbgkz_check",
    "branch_shift_equivalence",
    "TermwiseReport",
    "BranchShiftReport",
]


@dataclass(frozen=True)
class LogBranch:
    log_x: tuple[complex, ...]

    @classmethod
    def principal(cls, x: Sequence[complex]) -> "LogBranch":
        if any(complex(v) == 0 for v in x):
            raise ValueError("coefficients must be nonzero")
        return cls(tuple(cmath.log(complex(v)) for v in x))

    def shifted(self, a: Sequence[int]) -> "LogBranch":
        """The branch log x_i - 2 pi i a_i."""
        return LogBranch(tuple(lx - TWO_PI_I * ai for lx, ai in zip(self.log_x, a)))

    @property
    def x(self) -> tuple[complex, ...]:
        return tuple(cmath.exp(v) for v in self.log_x)


@dataclass(frozen=True)
class SeriesTruncation:
    degree_bound: int = 12
    target_tolerance: float = 1e-12

    def __post_init__(self):
        if self.degree_bound < 0:
            raise ValueError("degree_bound must be nonnegative")
        if self.target_tolerance <= 0:
            raise ValueError("target_tolerance must be positive")


@dataclass(frozen=True)
class ExponentSolution:
    l: tuple[Fraction, ...]
    sector: TwistedSector
    sigma_neg: frozenset[int]
    shell: int = 0


def _matrix(fan) -> list[list[int]]:
    return [[fan.points[i][r] for i in range(fan.n)] for r in range(fan.rank)]


@lru_cache(maxsize=64)
def _kernel(fan) -> tuple[tuple[int, ...], ...]:
    if fan.n == fan.rank:
        return ()
    return tuple(tuple(k) for k in exact.integer_kernel(_matrix(fan)))


def _base_point(fan, c: Sequence[int], sector: TwistedSector) -> list[Fraction] | None:
    for cone in fan.max_cones:
        if not sector.sigma <= cone:
            continue
        idx = sorted(cone)
        sol = exact.solve(exact.transpose([fan.points[i] for i in idx]), [-x for x in c])
        l = [Fraction(0)] * fan.n
        for i, v in zip(idx, sol):
            l[i] = v
        if all((l[i] - sector.frac[i]).denominator == 1 for i in range(fan.n)):
            return l
    shift = [-c[r] - sector.gamma[r] for r in range(fan.rank)]
    m = exact.integer_solution(_matrix(fan), shift)
    if m is None:
        return None
    return [sector.frac[i] + m[i] for i in range(fan.n)]


def _ball(rank: int, bound: int):
    """Integer vectors ordered by l1 norm, then lexicographically."""
    if rank == 0:
        yield 0, ()
        return
    for norm in range(bound + 1):
        shell = []
        for signs_mags in itertools.product(range(-norm, norm + 1), repeat=rank):
            if sum(abs(v) for v in signs_mags) == norm:
                shell.append(signs_mags)
        for k in sorted(shell):
            yield norm, k


def enumerate_exponents(stack, c: Sequence[int], sector, trunc: SeriesTruncation | None = None
                        ) -> list[ExponentSolution]:
    stack = as_stack(stack)
    fan = stack.fan
    trunc = trunc or SeriesTruncation()
    if isinstance(sector, int):
        sector = stack.sectors[sector]
    l0 = _base_point(fan, c, sector)
    if l0 is None:
        return []
    kernel = _kernel(fan)
    out = []
    for norm, k in _ball(len(kernel), trunc.degree_bound):
        l = tuple(l0[i] + sum(kj * kv[i] for kj, kv in zip(k, kernel)) for i in range(fan.n))
        neg = frozenset(i for i, v in enumerate(l) if v.denominator == 1 and v < 0)
        out.append(ExponentSolution(l, sector, neg, norm))
    return out


# ---------------------------------------------------------------- numeric terms


def _exp_class(stack: ToricStack, k: int, branch: LogBranch) -> SectorClass:
    ring = stack.ring(k)
    expo = ring.zero(False)
    for i, lx in enumerate(branch.log_x):
        expo = expo + ring.D(i) * (lx / TWO_PI_I)
    return expo.nilpotent_part().exp()


def _term(stack: ToricStack, k: int, sol: ExponentSolution, branch: LogBranch, compact: bool,
          expo: SectorClass):
    fan = stack.fan
    ring = stack.ring(k)
    support = set(ring.variables) | ring.sigma
    if not fan.is_cone(sol.sigma_neg | ring.sigma):
        return None
    order = ring.top
    logscale = 0j
    cls = expo
    for i, li in enumerate(sol.l):
        if li != 0:
            logscale += complex(li) * branch.log_x[i]
        scale, series, power = special.rgamma_parts(1 + li, order)
        logscale += scale
        if i not in support:
            if power:
                return None
            continue
        if i in sol.sigma_neg:
            if power != 1:
                raise CompactFactorNotCancelled(f"index {i + 1}: expected one linear factor, got {power}")
            if compact:
                logscale += -cmath.log(TWO_PI_I)
                coeffs = [series[m] / TWO_PI_I ** m for m in range(order + 1)]
            else:
                coeffs = [0j] + [series[m - 1] / TWO_PI_I ** m for m in range(1, order + 1)]
        else:
            if power:
                raise CompactFactorNotCancelled(f"index {i + 1}: unexpected vanishing factor")
            coeffs = [series[m] / TWO_PI_I ** m for m in range(order + 1)]
        if order:
            cls = cls * ring.series_in(i, coeffs)
        else:
            cls = cls * coeffs[0]
    value = cls * cmath.exp(logscale)
    if compact:
        return stack.module(k).act(value, stack.module(k).F(sol.sigma_neg))
    return value


def _sector_sum(stack, k, c, branch, trunc, compact, check, mass=None):
    sols = enumerate_exponents(stack, c, k, trunc)
    module = stack.module(k) if compact else None
    total = module.zero(False) if compact else stack.ring(k).zero(False)
    if not sols:
        return total
    expo = _exp_class(stack, k, branch)
    shells: dict[int, object] = {}
    for sol in sols:
        t = _term(stack, k, sol, branch, compact, expo)
        if t is None:
            continue
        total = total + t
        if mass is not None:
            mass[0] += t.norm()
        shells[sol.shell] = shells[sol.shell] + t if sol.shell in shells else t
    if check and trunc.degree_bound >= 2:
        last = shells.get(trunc.degree_bound)
        prev = shells.get(trunc.degree_bound - 1)
        size = total.norm()
        if last is not None and last.norm() > trunc.target_tolerance * max(size, 1e-300):
            if prev is None or last.norm() >= prev.norm():
                raise DivergenceSuspected(
                    f"sector {stack.sectors[k].label()}: boundary shell {last.norm():.3e} "
                    f"is not decreasing (total {size:.3e})")
    return total


def gamma_series(stack, c: Sequence[int], branch: LogBranch, trunc: SeriesTruncation | None = None,
                 compact: bool = False, check: bool = True, mass: list | None = None) -> dict:
    """Gamma series at c as a dict sector index -> class.

    If mass is a one-element list, the norms of all summed terms are added to it;
    this sizes the rounding floor when the terms cancel.
    """
    stack = as_stack(stack)
    trunc = trunc or SeriesTruncation()
    c = tuple(int(v) for v in c)
    if compact and not stack.fan.in_cone(c, interior=True):
        raise PointOutsideCone(f"{c} is not in the interior of C")
    if not compact and not stack.fan.in_cone(c):
        raise PointOutsideCone(f"{c} is not in C")
    return {k: _sector_sum(stack, k, c, branch, trunc, compact, check, mass) for k in range(len(stack))}


def b_central_charge(stack, E: KClass, c: Sequence[int], branch: LogBranch,
                     trunc: SeriesTruncation | None = None, gate: bool = True) -> complex:
    """chi(ch(E), compact Gamma series at c).

    With gate, the series is re-summed with a doubled degree bound and the two
    classes must agree to the target tolerance, up to a rounding floor set by
    the total size of the summed terms.
    """
    stack = as_stack(stack)
    trunc = trunc or SeriesTruncation()
    ch = chern_character(stack, E)
    series = gamma_series(stack, c, branch, trunc, compact=True)
    if gate and trunc.degree_bound > 0 and _kernel(stack.fan):
        wider = SeriesTruncation(2 * trunc.degree_bound, trunc.target_tolerance)
        mass = [0.0]
        series2 = gamma_series(stack, c, branch, wider, compact=True, check=False, mass=mass)
        size = sum(series2[k].norm() for k in series2)
        moved = sum((series2[k] - series[k]).norm() for k in series2)
        floor = 256 * np.finfo(float).eps * mass[0]
        if moved > max(trunc.target_tolerance * size, floor):
            raise DivergenceSuspected(f"doubling the truncation moved the series by {moved:.3e} (size {size:.3e})")
        series = series2
    return complex(euler_pairing(stack, ch, series))


# ---------------------------------------------------------------- exact termwise check


def _exact_factor_series(b: Fraction, m: int, order: int, drop_zero: bool) -> list[Fraction]:
    """Exact series of Gamma(b + x) / Gamma(b + m + x), optionally without its factor x."""
    out = [Fraction(0)] * (order + 1)
    out[0] = Fraction(1)
    if m >= 0:
        for t in range(m):
            r = b + t
            geo = [Fraction(-1) ** j / r ** (j + 1) for j in range(order + 1)]
            out = [sum((out[a] * geo[j - a] for a in range(j + 1)), Fraction(0)) for j in range(order + 1)]
        return out
    for t in range(-m):
        r = b + m + t
        if r == 0:
            if drop_zero:
                continue
            lin = [Fraction(0), Fraction(1)] + [Fraction(0)] * (order - 1)
        else:
            lin = [r, Fraction(1)] + [Fraction(0)] * (order - 1)
        lin = lin[:order + 1]
        out = [sum((out[a] * lin[j - a] for a in range(j + 1) if j - a < len(lin)), Fraction(0))
               for j in range(order + 1)]
    return out


def _exact_term(stack: ToricStack, k: int, l: Sequence[Fraction]) -> CompactClass | None:
    """Rational part of the compact term for l (degree-k parts carry (2 pi i)^-k)."""
    fan = stack.fan
    ring = stack.ring(k)
    sector = stack.sectors[k]
    module = stack.module(k)
    neg = frozenset(i for i, v in enumerate(l) if v.denominator == 1 and v < 0)
    if not fan.is_cone(neg | ring.sigma):
        return module.zero()
    support = set(ring.variables) | ring.sigma
    cls = ring.one()
    for i, li in enumerate(l):
        b = sector.frac[i] if i in ring.sigma else Fraction(1)
        m = int(1 + li - b)
        coeffs = _exact_factor_series(b, m, ring.top, drop_zero=i in neg)
        if i not in support:
            cls = cls * coeffs[0]
        else:
            cls = cls * ring.series_in(i, coeffs)
    return module.act(cls, module.F(neg))


@dataclass
class TermwiseReport:
    c: tuple[int, ...]
    terms_checked: int = 0
    derivative_checks: int = 0
    linear_checks: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def termwise_bbgkz_check(stack, c: Sequence[int], trunc: SeriesTruncation | None = None) -> TermwiseReport:
    """Exact check of both bbGKZ equation families on the truncated compact series."""
    stack = as_stack(stack)
    fan = stack.fan
    trunc = trunc or SeriesTruncation(6)
    c = tuple(int(v) for v in c)
    report = TermwiseReport(c)
    mus = [[int(r == s) for s in range(fan.rank)] for r in range(fan.rank)]
    for k in range(len(stack)):
        ring = stack.ring(k)
        module = stack.module(k)
        # D-shift identity: sum_i mu(v_i) D_i acts as zero
        for mu in mus:
            op = ring.zero()
            for i in range(fan.n):
                coef = exact.dot(mu, fan.points[i])
                if coef:
                    op = op + ring.D(i) * coef
            if not op.is_zero():
                report.failures.append(f"sector {stack.sectors[k].label()}: relation for mu={mu} fails")
        for sol in enumerate_exponents(stack, c, k, trunc):
            l = sol.l
            if any(sum(l[i] * fan.points[i][r] for i in range(fan.n)) != -c[r] for r in range(fan.rank)):
                report.failures.append(f"l={l}: not a solution")
                continue
            term = _exact_term(stack, k, l)
            report.terms_checked += 1
            for mu in mus:
                scalar = sum((l[i] * exact.dot(mu, fan.points[i]) for i in range(fan.n)), Fraction(0)) \
                    + exact.dot(mu, c)
                report.linear_checks += 1
                if scalar != 0:
                    report.failures.append(f"l={l}, mu={mu}: scalar part {scalar}")
            for i in range(fan.n):
                shifted = tuple(l[j] - (1 if j == i else 0) for j in range(fan.n))
                lhs = term * l[i] + module.act(ring.D(i), term)
                rhs = _exact_term(stack, k, shifted)
                report.derivative_checks += 1
                if not (lhs - rhs).is_zero():
                    report.failures.append(f"sector {stack.sectors[k].label()}, l={tuple(map(str, l))}, i={i + 1}")
    return report


# ---------------------------------------------------------------- monodromy


@dataclass
class BranchShiftReport:
    a: tuple[int, ...]
    max_relative_deviation: float
    terms_compared: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_relative_deviation <= self.tolerance


def branch_shift_equivalence(stack, c: Sequence[int], a: Sequence[int], branch: LogBranch,
                             trunc: SeriesTruncation | None = None, compact: bool = True,
                             tol: float = 1e-12) -> BranchShiftReport:
    """Compare series on the shifted branch with the ch-multiplier times the original, term by term."""
    stack = as_stack(stack)
    trunc = trunc or SeriesTruncation()
    a = tuple(int(v) for v in a)
    shifted = branch.shifted(a)
    mult = monodromy_multiplier(stack, a)
    worst = 0.0
    count = 0
    for k in range(len(stack)):
        e0 = _exp_class(stack, k, branch)
        e1 = _exp_class(stack, k, shifted)
        for sol in enumerate_exponents(stack, c, k, trunc):
            left = _term(stack, k, sol, shifted, compact, e1)
            right = _term(stack, k, sol, branch, compact, e0)
            if left is None and right is None:
                continue
            right = right * mult[k]
            scale = max(right.norm(), left.norm(), 1e-300)
            worst = max(worst, (left - right).norm() / scale)
            count += 1
    return BranchShiftReport(a, worst, count, tol)
