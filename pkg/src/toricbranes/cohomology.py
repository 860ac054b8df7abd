"""Orbifold cohomology of a toric Calabi-Yau stack, one twisted sector at a time.

For a sector gamma with minimal cone sigma, ``SectorRing`` is the graded ring
generated by D_j (j in the star of sigma, outside sigma) modulo
Stanley-Reisner monomials and the linear relations, with a monomial basis found
by exact row reduction.  ``CompactModule`` is the compactly supported module
generated by F_I over interior cones.

Coefficient vectors are numpy arrays: ``dtype=object`` holding Fractions for
exact work, ``complex128`` for evaluations.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable

import numpy as np

from . import exact, special
from .errors import SectorMismatch
from .lattice import (
    StackyFanData,
    TwistedSector,
    dual_sector,
    enumerate_box,
    star_and_quotient,
)

TWO_PI_I = 2j * np.pi

__all__ = [
    "SectorRing",
    "SectorClass",
    "CompactModule",
    "CompactClass",
    "ToricStack",
    "as_stack",
    "build_sector_ring",
    "build_compact_module",
    "integrate",
    "todd_class",
    "gamma_class",
    "involution",
]


def _zeros(dim: int, exact_: bool) -> np.ndarray:
    if exact_:
        return np.array([Fraction(0)] * dim, dtype=object)
    return np.zeros(dim, dtype=complex)


def _is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object


def _as_complex(arr: np.ndarray) -> np.ndarray:
    if _is_exact(arr):
        return np.array([complex(x) for x in arr], dtype=complex)
    return arr


def _align(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if _is_exact(a) == _is_exact(b):
        return a, b
    return _as_complex(a), _as_complex(b)


def _apply(matrix: np.ndarray, vec: np.ndarray, matrix_c: np.ndarray) -> np.ndarray:
    """Exact matrix for exact vectors, complex copy for complex vectors."""
    if _is_exact(vec):
        return matrix.dot(vec)
    return matrix_c @ vec


# ---------------------------------------------------------------- ring


class SectorRing:
    """H_gamma as a finite-dimensional graded algebra with a monomial basis."""

    def __init__(self, fan: StackyFanData, sector: TwistedSector):
        self.fan = fan
        self.sector = sector
        self.sigma = sector.sigma
        star = [c for c in fan.max_cones if self.sigma <= c]
        self.variables = tuple(sorted(set().union(*star) - self.sigma)) if star else ()
        self.top = fan.rank - len(self.sigma)
        self._var_pos = {v: k for k, v in enumerate(self.variables)}
        self._build()

    # -- construction
    def _monomials(self, degree: int) -> list[tuple[int, ...]]:
        return list(itertools.combinations_with_replacement(self.variables, degree))

    def _is_zero_monomial(self, mono: tuple[int, ...]) -> bool:
        return not self.fan.is_cone(set(mono) | self.sigma)

    def _annihilator(self) -> list[list[Fraction]]:
        rows = [list(self.fan.points[i]) for i in sorted(self.sigma)]
        if not rows:
            return [[Fraction(int(i == j)) for j in range(self.fan.rank)] for i in range(self.fan.rank)]
        return exact.nullspace(rows, self.fan.rank)

    def _build(self) -> None:
        fan = self.fan
        ann = self._annihilator()
        self.linear_relations = [
            {j: exact.dot(mu, fan.points[j]) for j in self.variables} for mu in ann
        ]
        basis: list[tuple[int, ...]] = []
        degree_of: list[int] = []
        normal_forms: dict[tuple[int, ...], dict[int, Fraction]] = {}
        prev = [()]
        for k in range(0, self.top + 2):
            monos = self._monomials(k)
            col = {m: t for t, m in enumerate(monos)}
            rows = []
            for m in monos:
                if self._is_zero_monomial(m):
                    rows.append({col[m]: Fraction(1)})
            if k >= 1:
                for rel in self.linear_relations:
                    for m in prev:
                        row: dict[int, Fraction] = {}
                        for j, coef in rel.items():
                            if coef == 0:
                                continue
                            t = col[tuple(sorted(m + (j,)))]
                            row[t] = row.get(t, Fraction(0)) + coef
                        if row:
                            rows.append(row)
            dense = [[r.get(t, Fraction(0)) for t in range(len(monos))] for r in rows]
            red, pivots = exact.rref(dense, len(monos)) if dense else ([], [])
            free = [t for t in range(len(monos)) if t not in set(pivots)]
            if k == self.top + 1:
                assert not free, "sector ring does not vanish above its top degree"
                break
            offset = len(basis)
            for t in free:
                basis.append(monos[t])
                degree_of.append(k)
            pos = {t: offset + s for s, t in enumerate(free)}
            for t in free:
                normal_forms[monos[t]] = {pos[t]: Fraction(1)}
            for r, p in zip(red, pivots):
                normal_forms[monos[p]] = {pos[t]: -r[t] for t in free if r[t] != 0}
            prev = monos
        self.basis = tuple(basis)
        self.degrees = tuple(degree_of)
        self._nf = normal_forms
        dim = self.dim
        # left multiplication by each basis element
        mult = np.empty((dim, dim, dim), dtype=object)
        for a in range(dim):
            for b in range(dim):
                vec = self.monomial_vector(tuple(sorted(self.basis[a] + self.basis[b])))
                mult[a, :, b] = vec
        self.mult = mult
        self.mult_c = mult.astype(complex)
        # action of D_i for every point index i
        actions = []
        for i in range(fan.n):
            actions.append(self._d_matrix(i))
        self.d_action = actions
        self.d_action_c = [m.astype(complex) for m in actions]

    def monomial_vector(self, mono: tuple[int, ...]) -> np.ndarray:
        vec = _zeros(self.dim, True)
        if len(mono) > self.top:
            return vec
        for t, coef in self._nf[tuple(sorted(mono))].items():
            vec[t] = coef
        return vec

    def _d_matrix(self, i: int) -> np.ndarray:
        dim = self.dim
        if i in self._var_pos:
            mono = (i,)
            vec = self.monomial_vector(mono)
            return np.array([[x for x in row] for row in self.left_matrix(vec)], dtype=object)
        if i in self.sigma:
            idx = sorted(self.sigma)
            mu = exact.solve([list(self.fan.points[k]) for k in idx], [Fraction(int(k == i)) for k in idx])
            vec = _zeros(dim, True)
            for j in self.variables:
                coef = exact.dot(mu, self.fan.points[j])
                if coef:
                    vec = vec - coef * self.monomial_vector((j,))
            return self.left_matrix(vec)
        return np.array([[Fraction(0)] * dim for _ in range(dim)], dtype=object)

    # -- structure
    @property
    def dim(self) -> int:
        return len(self.basis)

    def left_matrix(self, vec: np.ndarray) -> np.ndarray:
        """Matrix of multiplication by the element with coefficient vector vec."""
        if _is_exact(vec):
            return np.tensordot(vec, self.mult, axes=1)
        return np.tensordot(vec, self.mult_c, axes=1)

    def one(self, exact_: bool = True) -> "SectorClass":
        vec = _zeros(self.dim, exact_)
        vec[0] = Fraction(1) if exact_ else 1.0
        return SectorClass(self, vec)

    def zero(self, exact_: bool = True) -> "SectorClass":
        return SectorClass(self, _zeros(self.dim, exact_))

    def D(self, i: int) -> "SectorClass":
        """The divisor class D_i (solved linear combination for i in sigma)."""
        return SectorClass(self, self.d_action[i][:, 0].copy())

    def series_in(self, i: int, coeffs) -> "SectorClass":
        """sum_k coeffs[k] * D_i**k, truncated by nilpotency."""
        coeffs = list(coeffs)
        exact_ = all(isinstance(c, (int, Fraction)) for c in coeffs)
        vec = self.one(exact_).coeffs
        acc = _zeros(self.dim, exact_)
        for k, c in enumerate(coeffs):
            if k > self.top:
                break
            acc = acc + (Fraction(c) if exact_ else complex(c)) * vec
            vec = _apply(self.d_action[i], vec, self.d_action_c[i])
        return SectorClass(self, acc)

    def monomial_label(self, t: int) -> str:
        mono = self.basis[t]
        if not mono:
            return "1"
        return "*".join(f"D{i + 1}" for i in mono)


class SectorClass:
    """Element of H_gamma."""

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: SectorRing, coeffs: np.ndarray):
        self.ring = ring
        self.coeffs = coeffs

    @property
    def is_exact(self) -> bool:
        return _is_exact(self.coeffs)

    def to_complex(self) -> "SectorClass":
        return SectorClass(self.ring, _as_complex(self.coeffs))

    def _check(self, other: "SectorClass") -> None:
        if other.ring is not self.ring:
            raise SectorMismatch("classes live in different sector rings")

    def __add__(self, other):
        if isinstance(other, SectorClass):
            self._check(other)
            a, b = _align(self.coeffs, other.coeffs)
            return SectorClass(self.ring, a + b)
        return self + self.ring.one(self.is_exact) * other

    __radd__ = __add__

    def __neg__(self):
        return SectorClass(self.ring, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, SectorClass):
            self._check(other)
            a, b = _align(self.coeffs, other.coeffs)
            mat = self.ring.left_matrix(a)
            return SectorClass(self.ring, mat.dot(b) if _is_exact(a) else mat @ b)
        if isinstance(other, CompactClass):
            return other.module.act(self, other)
        if isinstance(other, (int, Fraction)) and self.is_exact:
            return SectorClass(self.ring, self.coeffs * Fraction(other))
        return SectorClass(self.ring, _as_complex(self.coeffs) * complex(other))

    def __rmul__(self, other):
        return self * other

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and self.is_exact:
            return SectorClass(self.ring, self.coeffs / Fraction(other))
        return self * (1 / complex(other))

    def constant(self):
        return self.coeffs[0]

    def nilpotent_part(self) -> "SectorClass":
        c = self.coeffs.copy()
        c[0] = 0 * c[0]
        return SectorClass(self.ring, c)

    def power_series(self, coeffs) -> "SectorClass":
        """sum_k coeffs[k] * N**k where N = self must be nilpotent."""
        if self.coeffs[0] != 0:
            raise ValueError("power_series needs a nilpotent argument")
        coeffs = list(coeffs)
        exact_ = self.is_exact and all(isinstance(c, (int, Fraction)) for c in coeffs)
        base = self if exact_ else self.to_complex()
        acc = self.ring.zero(exact_)
        term = self.ring.one(exact_)
        for k, c in enumerate(coeffs):
            if k > self.ring.top:
                break
            acc = acc + term * (Fraction(c) if exact_ else complex(c))
            term = term * base
        return acc

    def exp(self) -> "SectorClass":
        """Exponential; the constant part is exponentiated as a scalar."""
        c0 = self.coeffs[0]
        nil = self.nilpotent_part()
        n = self.ring.top + 1
        series = nil.power_series([Fraction(1, math.factorial(k)) for k in range(n)])
        if c0 == 0:
            return series
        return series * complex(np.exp(complex(c0)))

    def inverse(self) -> "SectorClass":
        c0 = self.coeffs[0]
        if c0 == 0:
            raise ZeroDivisionError("class with zero constant term is not invertible")
        nil = self.nilpotent_part() / c0 if self.is_exact else self.nilpotent_part() * (1 / complex(c0))
        n = self.ring.top + 1
        series = nil.power_series([Fraction((-1) ** k) for k in range(n)])
        return series / c0 if self.is_exact else series * (1 / complex(c0))

    def part(self, degree: int) -> "SectorClass":
        c = self.coeffs.copy()
        for t, deg in enumerate(self.ring.degrees):
            if deg != degree:
                c[t] = 0 * c[t]
        return SectorClass(self.ring, c)

    def is_zero(self, tol: float = 0.0) -> bool:
        if self.is_exact:
            return all(x == 0 for x in self.coeffs)
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def norm(self) -> float:
        return float(np.max(np.abs(_as_complex(self.coeffs)))) if self.ring.dim else 0.0

    def to_dict(self) -> dict:
        return {self.ring.monomial_label(t): (str(x) if self.is_exact else [float(x.real), float(x.imag)])
                for t, x in enumerate(self.coeffs)}

    def __repr__(self) -> str:
        terms = [f"{x}*{self.ring.monomial_label(t)}" for t, x in enumerate(self.coeffs) if x != 0]
        return f"SectorClass[{self.ring.sector.label()}]({' + '.join(terms) or '0'})"


# ---------------------------------------------------------------- module


class CompactModule:
    """H^c_gamma generated by F_I over interior cones containing sigma(gamma)."""

    def __init__(self, ring: SectorRing):
        self.ring = ring
        fan = ring.fan
        sigma = ring.sigma
        gens = []
        for cone in fan.cones:
            if sigma <= cone and fan.is_interior_cone(cone):
                gens.append(frozenset(cone - sigma))
        self.generators = tuple(sorted(set(gens), key=lambda s: (len(s), sorted(s))))
        self._gen_pos = {g: k for k, g in enumerate(self.generators)}
        self._build()

    def _build(self) -> None:
        ring = self.ring
        fan = ring.fan
        rdim = ring.dim
        cells = [(g, b) for g in range(len(self.generators)) for b in range(rdim)]
        cell_pos = {c: k for k, c in enumerate(cells)}
        deg = lambda c: len(self.generators[c[0]]) + ring.degrees[c[1]]
        # prefer pure generators F_I as surviving basis elements: put them last
        order = sorted(range(len(cells)), key=lambda k: (-ring.degrees[cells[k][1]], cells[k][0], cells[k][1]))
        col_of = {k: t for t, k in enumerate(order)}
        rows = []
        for g, gen in enumerate(self.generators):
            for i in ring.variables:
                if i in gen:
                    continue
                bigger = gen | {i}
                target = self._gen_pos.get(frozenset(bigger)) if fan.is_cone(bigger | ring.sigma) else None
                for b in range(rdim):
                    row = {}
                    prod = ring.d_action[i][:, b]
                    for b2, coef in enumerate(prod):
                        if coef != 0:
                            row[col_of[cell_pos[(g, b2)]]] = coef
                    if target is not None:
                        t = col_of[cell_pos[(target, b)]]
                        row[t] = row.get(t, Fraction(0)) - 1
                    if any(v != 0 for v in row.values()):
                        rows.append(row)
        ncols = len(cells)
        dense = [[r.get(t, Fraction(0)) for t in range(ncols)] for r in rows]
        red, pivots = exact.rref(dense, ncols) if dense else ([], [])
        pivset = set(pivots)
        free = [t for t in range(ncols) if t not in pivset]
        self.basis = tuple(cells[order[t]] for t in free)
        self.degrees = tuple(deg(c) for c in self.basis)
        pos = {t: s for s, t in enumerate(free)}
        dim = len(free)
        nf = np.empty((dim, ncols), dtype=object)
        nf[:, :] = Fraction(0)
        for t in free:
            nf[pos[t], order[t]] = Fraction(1)
        for r, p in zip(red, pivots):
            for t in free:
                if r[t] != 0:
                    nf[pos[t], order[p]] = -r[t]
        self._nf = nf  # basis coords of each (generator, ring basis) cell
        self._cells = cells
        self._cell_pos = cell_pos
        # action of ring basis elements on module basis elements
        actions = []
        for a in range(rdim):
            mat = np.empty((dim, dim), dtype=object)
            for s, (g, b) in enumerate(self.basis):
                prod = ring.mult[a, :, b]
                vec = _zeros(len(cells), True)
                for b2, coef in enumerate(prod):
                    if coef != 0:
                        vec[cell_pos[(g, b2)]] = coef
                mat[:, s] = nf.dot(vec)
            actions.append(mat)
        self.ring_action = np.array(actions, dtype=object).reshape(rdim, dim, dim) if dim else \
            np.zeros((rdim, 0, 0), dtype=object)
        self.ring_action_c = self.ring_action.astype(complex)
        self._integral = self._integration_functional()

    @property
    def dim(self) -> int:
        return len(self.basis)

    def F(self, I: Iterable[int]) -> "CompactClass":
        """The generator F_I (I disjoint from sigma); zero when I u sigma is not a cone."""
        I = frozenset(I)
        if I & self.ring.sigma:
            raise ValueError("F_I takes I outside the sector's cone")
        if not self.ring.fan.is_cone(I | self.ring.sigma):
            return self.zero()
        if I not in self._gen_pos:
            raise KeyError(f"F_{sorted(i + 1 for i in I)} is a boundary cone; it has no compact class")
        col = self._cell_pos[(self._gen_pos[I], 0)]
        return CompactClass(self, self._nf[:, col].copy())

    def zero(self, exact_: bool = True) -> "CompactClass":
        return CompactClass(self, _zeros(self.dim, exact_))

    def act(self, x: SectorClass, m: "CompactClass") -> "CompactClass":
        if x.ring is not self.ring:
            raise SectorMismatch("ring element and module element come from different sectors")
        a, b = _align(x.coeffs, m.coeffs)
        if _is_exact(a):
            mat = np.tensordot(a, self.ring_action, axes=1)
            return CompactClass(self, mat.dot(b))
        mat = np.tensordot(a, self.ring_action_c, axes=1)
        return CompactClass(self, mat @ b)

    def _integration_functional(self) -> np.ndarray:
        ring = self.ring
        top = ring.top
        quotient = star_and_quotient(ring.fan, ring.sigma)
        top_idx = [s for s, dg in enumerate(self.degrees) if dg == top]
        lam = _zeros(self.dim, True)
        if not top_idx:
            return lam
        rows, rhs = [], []
        for J in self.generators:
            if len(J) != top:
                continue
            vec = self.F(J).coeffs
            rows.append([vec[s] for s in top_idx])
            rhs.append(Fraction(1, quotient.volumes[J]))
        sol = exact.solve(rows, rhs)
        assert sol is not None, "inconsistent integration data"
        for s, val in zip(top_idx, sol):
            lam[s] = val
        for row, r in zip(rows, rhs):
            assert exact.dot(row, sol) == r, "integration is not consistent across top cones"
        return lam

    def integrate(self, m: "CompactClass"):
        if m.is_exact:
            return self._integral.dot(m.coeffs)
        return complex(_as_complex(self._integral) @ m.coeffs)

    def label(self, s: int) -> str:
        g, b = self.basis[s]
        gen = self.generators[g]
        mono = self.ring.monomial_label(b)
        f = "F{" + ",".join(str(i + 1) for i in sorted(gen)) + "}"
        return f if mono == "1" else f"{mono}*{f}"


class CompactClass:
    """Element of H^c_gamma."""

    __slots__ = ("module", "coeffs")

    def __init__(self, module: CompactModule, coeffs: np.ndarray):
        self.module = module
        self.coeffs = coeffs

    @property
    def is_exact(self) -> bool:
        return _is_exact(self.coeffs)

    def to_complex(self) -> "CompactClass":
        return CompactClass(self.module, _as_complex(self.coeffs))

    def __add__(self, other):
        if not isinstance(other, CompactClass):
            return NotImplemented
        if other.module is not self.module:
            raise SectorMismatch("compact classes from different sectors")
        a, b = _align(self.coeffs, other.coeffs)
        return CompactClass(self.module, a + b)

    def __neg__(self):
        return CompactClass(self.module, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, SectorClass):
            return self.module.act(other, self)
        if isinstance(other, (int, Fraction)) and self.is_exact:
            return CompactClass(self.module, self.coeffs * Fraction(other))
        return CompactClass(self.module, _as_complex(self.coeffs) * complex(other))

    __rmul__ = __mul__

    def is_zero(self, tol: float = 0.0) -> bool:
        if self.is_exact:
            return all(x == 0 for x in self.coeffs)
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def norm(self) -> float:
        return float(np.max(np.abs(_as_complex(self.coeffs)))) if self.module.dim else 0.0

    def integrate(self):
        return self.module.integrate(self)

    def to_dict(self) -> dict:
        return {self.module.label(s): (str(x) if self.is_exact else [float(x.real), float(x.imag)])
                for s, x in enumerate(self.coeffs)}

    def __repr__(self) -> str:
        terms = [f"{x}*{self.module.label(s)}" for s, x in enumerate(self.coeffs) if x != 0]
        return f"CompactClass[{self.module.ring.sector.label()}]({' + '.join(terms) or '0'})"


# ---------------------------------------------------------------- whole stack


class ToricStack:
    """Sectors, rings and compact modules of one fan, built lazily and cached."""

    def __init__(self, fan: StackyFanData):
        self.fan = fan
        self.sectors = tuple(enumerate_box(fan))
        self._index = {s.gamma: k for k, s in enumerate(self.sectors)}
        self._rings: dict[int, SectorRing] = {}
        self._modules: dict[int, CompactModule] = {}

    def index(self, sector: TwistedSector) -> int:
        return self._index[sector.gamma]

    def ring(self, k: int) -> SectorRing:
        if k not in self._rings:
            self._rings[k] = SectorRing(self.fan, self.sectors[k])
        return self._rings[k]

    def module(self, k: int) -> CompactModule:
        if k not in self._modules:
            self._modules[k] = CompactModule(self.ring(k))
        return self._modules[k]

    def dual(self, k: int) -> int:
        return self._index[dual_sector(self.fan, self.sectors[k]).gamma]

    @cached_property
    def box_sizes(self) -> tuple[int, ...]:
        """|Box(sigma(gamma))| for each sector."""
        return tuple(sum(1 for t in self.sectors if t.sigma <= s.sigma) for s in self.sectors)

    def __len__(self) -> int:
        return len(self.sectors)

    def one(self) -> dict:
        return {k: self.ring(k).one() for k in range(len(self))}


@lru_cache(maxsize=64)
def _stack_for(fan: StackyFanData) -> ToricStack:
    return ToricStack(fan)


def as_stack(obj) -> ToricStack:
    return obj if isinstance(obj, ToricStack) else _stack_for(obj)


# ---------------------------------------------------------------- operations


def build_sector_ring(fan: StackyFanData, sector: TwistedSector) -> SectorRing:
    stack = as_stack(fan)
    return stack.ring(stack.index(sector))


def build_compact_module(ring: SectorRing) -> CompactModule:
    stack = as_stack(ring.fan)
    return stack.module(stack.index(ring.sector))


def integrate(x: CompactClass):
    return x.module.integrate(x)


def _td_series(order: int) -> list[Fraction]:
    """Coefficients of x / (1 - e^{-x})."""
    base = [Fraction((-1) ** k, math.factorial(k + 1)) for k in range(order + 1)]
    inv = [Fraction(0)] * (order + 1)
    inv[0] = Fraction(1)
    for k in range(1, order + 1):
        inv[k] = -sum((base[j] * inv[k - j] for j in range(1, k + 1)), Fraction(0))
    return inv


def _twisted_td_series(phase: Fraction, order: int) -> np.ndarray:
    """Coefficients in x of 1 / (1 - exp(-2 pi i phase) e^{-x})."""
    zeta = np.exp(-TWO_PI_I * float(phase))
    denom = np.array([-zeta * (-1) ** k / math.factorial(k) for k in range(order + 1)], dtype=complex)
    denom[0] += 1.0
    return special.series_inv(denom)


def todd_class(stack, k: int) -> SectorClass:
    """Twisted Todd class of sector k."""
    stack = as_stack(stack)
    ring = stack.ring(k)
    sector = stack.sectors[k]
    order = ring.top
    td = _td_series(order)
    out = ring.one()
    for i in ring.variables:
        out = out * ring.series_in(i, td)
    for i in sorted(ring.sigma):
        out = out * ring.series_in(i, list(_twisted_td_series(sector.frac[i], order)))
    return out


def gamma_class(stack, k: int, conj: bool = False) -> SectorClass:
    """Gamma class of sector k; with conj, its image under the involution."""
    stack = as_stack(stack)
    ring = stack.ring(k)
    sector = stack.sectors[k]
    order = ring.top
    sign = -1 if conj else 1
    out = ring.one(False)
    for i in sorted(ring.sigma) + list(ring.variables):
        a = sector.frac[i] if i in ring.sigma else Fraction(1)
        coeffs = special.gamma_taylor(a, order)
        scaled = [coeffs[m] * (sign / TWO_PI_I) ** m for m in range(order + 1)]
        out = out * ring.series_in(i, scaled)
    if conj:
        return involution(stack, k, out, sign_only=True)
    return out


def involution(stack, k: int, x: SectorClass, sign_only: bool = False) -> SectorClass:
    """Send a class of sector k to sector dual(k), with D_i -> -D_i.

    With ``sign_only`` the argument has already been built with negated D's
    and is merely transported to the dual sector.
    """
    stack = as_stack(stack)
    target = stack.ring(stack.dual(k))
    if x.ring is not stack.ring(k):
        raise SectorMismatch("class does not belong to the given sector")
    coeffs = x.coeffs.copy()
    if not sign_only:
        for t, deg in enumerate(x.ring.degrees):
            if deg % 2:
                coeffs[t] = -coeffs[t]
    return SectorClass(target, coeffs)
