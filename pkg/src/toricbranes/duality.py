"""The xi-coefficient pairing between solutions over C and over its interior.

Solutions are passed as charge vectors: a mapping (or callable) from lattice
points to values.  Values over C may be scalars or per-sector cohomology
classes; values over the interior are scalars.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from . import exact
from .cohomology import TWO_PI_I, ToricStack, as_stack
from .errors import FormulaInapplicable, MissingEntry, NonGenericV
from .hypergeometric import LogBranch, SeriesTruncation, b_central_charge, branch_shift_equivalence, gamma_series
from .ktheory import KClass, euler_pairing
from .lattice import StackyFanData, _parallelepiped, decompose_point, residual_volume_oracle, tropical_polytope
from .periods import QuadratureSpec, a_central_charge

__all__ = [
    "XiEntry",
    "XiTable",
    "build_xi_table",
    "pairing",
    "normalization",
    "gamma_vector",
    "structure_sheaf_charges",
    "curve_samples",
    "cohomological_euler_matrix",
    "sample_volume_cases",
    "ConstancyReport",
    "constancy_check",
    "EulerInverseReport",
    "euler_inverse_check",
    "MainTheoremReport",
    "main_theorem_check",
    "VolumeReport",
    "volume_formula_check",
    "cohomological_volume",
    "BetaReport",
    "beta_identity_check",
]


@dataclass(frozen=True)
class XiEntry:
    c: tuple[int, ...]
    d: tuple[int, ...]
    I: frozenset[int]
    xi: int
    volume: int

    def to_dict(self) -> dict:
        return {"c": list(self.c), "d": list(self.d), "I": sorted(i + 1 for i in self.I), "xi": self.xi,
                "vol": self.volume}


@dataclass(frozen=True)
class XiTable:
    generic_v: tuple[Fraction, ...]
    entries: tuple[XiEntry, ...]

    @property
    def c_points(self) -> list[tuple[int, ...]]:
        return sorted({e.c for e in self.entries})

    @property
    def d_points(self) -> list[tuple[int, ...]]:
        return sorted({e.d for e in self.entries})

    def same_entries(self, other: "XiTable") -> bool:
        return set(self.entries) == set(other.entries)

    def to_dict(self) -> dict:
        return {"v": [str(a) for a in self.generic_v], "entries": [e.to_dict() for e in self.entries]}


def _full_index_sets(fan: StackyFanData):
    """(I, facet functionals as rows of V_I^{-1}, |det V_I|) for independent I of size rk N."""
    out = []
    for I in itertools.combinations(range(fan.n), fan.rank):
        cols = [list(fan.points[i]) for i in I]
        mat = exact.transpose(cols)
        det = exact.det(mat)
        if det == 0:
            continue
        out.append((I, exact.inverse(mat), abs(int(det))))
    return out


def _random_interior(fan: StackyFanData, rng) -> tuple[Fraction, ...]:
    weights = [Fraction(int(rng.integers(1, 1000)), 997) for _ in range(fan.n)]
    used = sorted(fan.used_points)
    return tuple(sum((weights[i] * fan.points[i][r] for i in used), Fraction(0)) for r in range(fan.rank))


def build_xi_table(fan: StackyFanData, v: Sequence | None = None, seed: int = 0, attempts: int = 50) -> XiTable:
    """Exhaustive xi table for a generic interior v.

    c + eps v and d - eps v lie in the open cone spanned by I for small eps
    exactly when, for each facet functional h, h(c) > 0 or h(c) = 0 < h(v),
    and h(d) > 0 or h(d) = 0 > h(v).
    """
    index_sets = _full_index_sets(fan)
    rng = np.random.default_rng(seed)
    fixed = v is not None
    for _ in range(attempts if not fixed else 1):
        vv = tuple(exact.as_fraction(a) for a in v) if fixed else _random_interior(fan, rng)
        if len(vv) != fan.rank:
            raise NonGenericV("v has the wrong length")
        generic = fan.in_cone(vv, interior=True) and all(
            exact.dot(h, vv) != 0 for _, inv, _ in index_sets for h in inv)
        if generic:
            break
        if fixed:
            raise NonGenericV(f"v = {[str(a) for a in vv]} is not a generic interior point")
    else:
        raise NonGenericV("could not draw a generic interior point")
    entries = []
    for I, inv, vol in index_sets:
        hv = [exact.dot(h, vv) for h in inv]
        cols = [fan.points[i] for i in I]
        for frac in _parallelepiped(fan, I):
            # a vanishing coefficient moves to 1 when v points out of that facet
            coeffs = [Fraction(1) if a == 0 and s < 0 else a for a, s in zip(frac, hv)]
            c = tuple(int(sum(a * col[r] for a, col in zip(coeffs, cols))) for r in range(fan.rank))
            d = tuple(sum(col[r] for col in cols) - c[r] for r in range(fan.rank))
            entries.append(XiEntry(c, d, frozenset(I), (-1) ** c[-1], vol))
    return XiTable(vv, tuple(entries))


def _lookup(vector, point, side: str):
    if callable(vector):
        return vector(point)
    try:
        return vector[point]
    except KeyError:
        raise MissingEntry(f"{side} charge vector has no value at {point}") from None


def _scale(value, factor):
    if isinstance(value, dict):
        return {k: cls * factor for k, cls in value.items()}
    return value * factor


def _accumulate(total, term):
    if total is None:
        return term
    if isinstance(term, dict):
        return {k: total[k] + term[k] for k in term}
    return total + term


def pairing(fan: StackyFanData, phi, psi, x: Sequence[complex], table: XiTable):
    """sum xi Vol_I (prod_{i in I} x_i) phi_c psi_d over the table.

    phi may be scalar-valued or return per-sector classes; the result has the same shape.
    """
    total = None
    for e in table.entries:
        weight = e.xi * e.volume * math.prod(complex(x[i]) for i in e.I)
        if weight == 0:
            continue
        term = _scale(_lookup(phi, e.c, "first"), weight * complex(_lookup(psi, e.d, "second")))
        total = _accumulate(total, term)
    if total is None:
        return 0.0
    return total


def normalization(fan: StackyFanData) -> complex:
    """Factor (2 pi i)^{rk N} that turns the literal pairing of Gamma series into ch(O)."""
    return TWO_PI_I ** fan.rank


def _flatten(value) -> np.ndarray:
    if isinstance(value, dict):
        return np.concatenate([np.asarray(value[k].to_complex().coeffs, dtype=complex) for k in sorted(value)])
    return np.atleast_1d(np.asarray(value, dtype=complex))


def gamma_vector(stack: ToricStack, table: XiTable, branch: LogBranch,
                 trunc: SeriesTruncation | None = None) -> dict:
    """Class-valued Gamma series at every first-slot point of the table."""
    return {c: gamma_series(stack, c, branch, trunc) for c in table.c_points}


def structure_sheaf_charges(stack: ToricStack, table: XiTable, branch: LogBranch,
                            trunc: SeriesTruncation | None = None) -> dict:
    O = KClass.structure_sheaf(stack.fan.n)
    return {d: b_central_charge(stack, O, d, branch, trunc) for d in table.d_points}


# ---------------------------------------------------------------- constancy


@dataclass
class ConstancyReport:
    samples: list[tuple[float, ...]]
    values: list
    spread: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.spread < self.tol


def constancy_check(fan: StackyFanData, phi_at: Callable, psi_at: Callable, x_samples, tol: float = 1e-6,
                    table: XiTable | None = None) -> ConstancyReport:
    """Evaluate the pairing at each sample; phi_at(x) and psi_at(x) return charge vectors.

    The spread is the largest deviation (max-norm over all components) from the first sample.
    """
    table = table or build_xi_table(fan)
    values = []
    for x in x_samples:
        values.append(pairing(fan, phi_at(x), psi_at(x), x, table))
    flat = [_flatten(v) for v in values]
    spread = max((float(np.max(np.abs(f - flat[0]))) for f in flat), default=0.0)
    return ConstancyReport([tuple(float(a) for a in x) for x in x_samples], values, spread, tol)


def curve_samples(fan: StackyFanData, t_values, seed: int = 0, jitter: float = 0.2) -> list[list[float]]:
    """x_i = s_i t^{-psi(v_i)} with random scalings s_i in [1 - jitter, 1 + jitter]."""
    rng = np.random.default_rng(seed)
    out = []
    for t in t_values:
        s = 1 + jitter * (2 * rng.random(fan.n) - 1)
        out.append([float(si) * float(t) ** (-float(p)) for si, p in zip(s, fan.psi)])
    return out


# ---------------------------------------------------------------- Euler inverse


def _basis_classes(stack: ToricStack, compact: bool):
    out = []
    for k in range(len(stack)):
        space = stack.module(k) if compact else stack.ring(k)
        for s in range(space.dim):
            out.append((k, s))
    return out


def _unit(stack: ToricStack, k: int, s: int, compact: bool) -> dict:
    from .cohomology import CompactClass, SectorClass

    out = {}
    for j in range(len(stack)):
        space = stack.module(j) if compact else stack.ring(j)
        vec = np.zeros(space.dim, dtype=complex)
        if j == k:
            vec[s] = 1
        out[j] = CompactClass(space, vec) if compact else SectorClass(space, vec)
    return out


@dataclass
class EulerInverseReport:
    pairing_matrix: np.ndarray
    euler_matrix: np.ndarray
    left_deviation: float
    right_deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.left_deviation, self.right_deviation) < self.tol


def cohomological_euler_matrix(stack) -> np.ndarray:
    """chi(e_s, f_r) on the monomial bases of H and H_c."""
    stack = as_stack(stack)
    rows = _basis_classes(stack, False)
    cols = _basis_classes(stack, True)
    units_c = [_unit(stack, k, r, True) for k, r in cols]
    out = np.zeros((len(rows), len(cols)), dtype=complex)
    for a, (k, s) in enumerate(rows):
        e = _unit(stack, k, s, False)
        for b, f in enumerate(units_c):
            out[a, b] = complex(euler_pairing(stack, e, f))
    return out


def euler_inverse_check(fan: StackyFanData, x: Sequence[float], table: XiTable | None = None,
                        trunc: SeriesTruncation | None = None, tol: float = 1e-6) -> EulerInverseReport:
    """Pairing of the coordinate functions of Gamma and Gamma° against the Euler matrix.

    With M the normalized pairing of coordinates and X the Euler matrix on the
    same bases, the copairing identity reads M X^T = 1 and X^T M = 1.
    """
    stack = as_stack(fan)
    table = table or build_xi_table(fan)
    branch = LogBranch.principal(x)
    gam = gamma_vector(stack, table, branch, trunc)
    gam_c = {d: gamma_series(stack, d, branch, trunc, compact=True) for d in table.d_points}
    rows = _basis_classes(stack, False)
    cols = _basis_classes(stack, True)
    M = np.zeros((len(rows), len(cols)), dtype=complex)
    for a, (k, s) in enumerate(rows):
        phi = {c: complex(gam[c][k].coeffs[s]) for c in gam}
        for b, (kk, r) in enumerate(cols):
            psi = {d: complex(gam_c[d][kk].coeffs[r]) for d in gam_c}
            M[a, b] = pairing(fan, phi, psi, x, table)
    M *= normalization(fan)
    X = cohomological_euler_matrix(stack)
    eye_r = np.eye(len(rows))
    left = float(np.max(np.abs(M @ X.T - eye_r)))
    right = float(np.max(np.abs(X.T @ M - np.eye(len(cols)))))
    return EulerInverseReport(M, X, left, right, tol)


# ---------------------------------------------------------------- main theorem


@dataclass
class MainTheoremReport:
    a: tuple[int, ...]
    rows: list[dict] = field(default_factory=list)
    max_relative_deviation: float = 0.0
    pairing_deviation: float | None = None
    branch_reports: list = field(default_factory=list)
    tol: float = 1e-4
    note: str = ""

    @property
    def passed(self) -> bool:
        ok = self.max_relative_deviation < self.tol
        if self.pairing_deviation is not None:
            ok = ok and self.pairing_deviation < self.tol
        return ok and all(r.passed for _, r in self.branch_reports)

    def to_dict(self) -> dict:
        return {"a": list(self.a), "passed": self.passed, "max_relative_deviation": self.max_relative_deviation,
                "pairing_deviation": self.pairing_deviation, "rows": self.rows, "note": self.note,
                "branch_shift": [{"c": list(c), "deviation": r.max_relative_deviation, "passed": r.passed}
                                 for c, r in self.branch_reports]}


def main_theorem_check(fan: StackyFanData, a: Sequence[int] | None = None, x_curve=None, tol: float = 1e-4,
                       points: Sequence[Sequence[int]] | None = None, max_degree: int = 2,
                       spec: QuadratureSpec | None = None, trunc: SeriesTruncation | None = None,
                       check_pairing: bool = True) -> MainTheoremReport:
    """Compare A- and B-side charges for O, or check the monodromy reduction for O(sum a_i D_i).

    With a = 0 the period integrals over the positive real section are compared
    with the B-charges of O at every x of the curve, and the normalized pairing
    of Gamma with the period integrals is compared with ch(O).  With a != 0 the
    branch-shift identity is checked at every point, anchored by the a = 0 run.
    """
    a = tuple(int(v) for v in (a if a is not None else [0] * fan.n))
    stack = as_stack(fan)
    if x_curve is None:
        x_curve = curve_samples(fan, [40.0], jitter=0.0)
    if points is None:
        points = [c for deg in range(1, max_degree + 1) for c in _interior_points(fan, deg)]
    points = [tuple(int(v) for v in c) for c in points]
    report = MainTheoremReport(a, tol=tol)
    if any(a):
        report.note = "monodromy reduction: branch shift on the B-side plus the a = 0 anchor"
        anchor = main_theorem_check(fan, None, x_curve, tol, points, max_degree, spec, trunc, check_pairing=False)
        report.rows = anchor.rows
        report.max_relative_deviation = anchor.max_relative_deviation
        for x in x_curve:
            branch = LogBranch.principal(x)
            for c in points:
                report.branch_reports.append((c, branch_shift_equivalence(stack, c, a, branch, trunc)))
        return report
    O = KClass.structure_sheaf(fan.n)
    worst = 0.0
    pair_dev = 0.0
    for x in x_curve:
        branch = LogBranch.principal(x)
        for c in points:
            za = a_central_charge(fan, c, x, spec)
            zb = b_central_charge(stack, O, c, branch, trunc)
            dev = abs(za.value - zb) / abs(zb)
            worst = max(worst, dev)
            report.rows.append({"x": [float(v) for v in x], "c": list(c), "A_re": za.value.real,
                                "A_im": za.value.imag, "B_re": zb.real, "B_im": zb.imag, "rel_dev": dev})
        if check_pairing:
            table = build_xi_table(fan)
            za_vec = {d: a_central_charge(fan, d, x, spec).value for d in table.d_points}
            value = pairing(fan, gamma_vector(stack, table, branch, trunc), za_vec, x, table)
            flat = _flatten(value) * normalization(fan)
            pair_dev = max(pair_dev, float(np.max(np.abs(flat - _flatten(stack.one())))))
    report.max_relative_deviation = worst
    report.pairing_deviation = pair_dev if check_pairing else None
    return report


def _interior_points(fan: StackyFanData, degree: int):
    from .lattice import lattice_points

    return lattice_points(fan, degree, interior=True)


# ---------------------------------------------------------------- residual volume


@dataclass
class VolumeReport:
    c: tuple[int, ...]
    q: int
    J: tuple[int, ...]
    b: tuple[Fraction, ...]
    oracle: Fraction
    formula: Fraction

    @property
    def passed(self) -> bool:
        return self.oracle == self.formula

    def to_dict(self) -> dict:
        return {"c": list(self.c), "q": self.q + 1, "J": [j + 1 for j in self.J], "b": [str(x) for x in self.b],
                "oracle": str(self.oracle), "formula": str(self.formula), "passed": self.passed}


def cohomological_volume(fan: StackyFanData, c: Sequence[int], q: int, J: Sequence[int], b: Sequence) -> Fraction:
    """(1/|Box|) int_gamma e^{D - sum b_j D_j} D_{(q u J) - sigma(c)} F_{I_c} in exact arithmetic."""
    c = tuple(int(v) for v in c)
    J = tuple(J)
    b = [exact.as_fraction(x) for x in b]
    tau = frozenset((q,) + J)
    dec = decompose_point(fan, c)
    if not dec.interior:
        raise FormulaInapplicable(f"{c} is not an interior point")
    sigma_c = frozenset(dec.sigma_c)
    if not fan.is_cone(tau):
        return Fraction(0)
    if not fan.is_interior_cone(tau):
        raise FormulaInapplicable(f"cone {sorted(i + 1 for i in tau)} is not interior")
    if not sigma_c <= tau:
        raise FormulaInapplicable("q u J must contain sigma(c)")
    stack = as_stack(fan)
    k = stack.index(dec.sector)
    ring = stack.ring(k)
    module = stack.module(k)
    divisor = ring.zero()
    for i in range(fan.n):
        if fan.psi[i]:
            divisor = divisor + ring.D(i) * fan.psi[i]
    for j, bj in zip(J, b):
        if bj:
            divisor = divisor - ring.D(j) * bj
    factor = divisor.exp()
    for i in sorted(tau - sigma_c):
        factor = factor * ring.D(i)
    value = module.act(factor, module.F(dec.I_c)).integrate()
    return Fraction(value) / stack.box_sizes[k]


def volume_formula_check(fan: StackyFanData, c: Sequence[int], q: int, J: Sequence[int], b: Sequence) -> VolumeReport:
    formula = cohomological_volume(fan, c, q, J, b)
    P = tropical_polytope(fan, q, J, b)
    oracle = residual_volume_oracle(fan, P) if fan.is_cone(frozenset((q,) + tuple(J))) else Fraction(0)
    return VolumeReport(tuple(int(v) for v in c), q, tuple(J), tuple(exact.as_fraction(x) for x in b),
                        oracle, formula)


def sample_volume_cases(fan: StackyFanData, count: int = 10, seed: int = 0, max_degree: int = 3):
    """Random admissible (c, q, J, b): q u J an interior cone containing sigma(c), small rational b."""
    rng = np.random.default_rng(seed)
    cands = []
    for deg in range(1, max_degree + 1):
        for c in _interior_points(fan, deg):
            sigma_c = frozenset(decompose_point(fan, c).sigma_c)
            for tau in fan.cones:
                if tau and sigma_c <= tau and fan.is_interior_cone(tau):
                    for q in sorted(tau):
                        cands.append((c, q, tuple(sorted(tau - {q}))))
    if not cands:
        return []
    picks = rng.choice(len(cands), size=min(count, len(cands)), replace=False) if len(cands) >= count else \
        rng.choice(len(cands), size=count, replace=True)
    out = []
    for p in picks:
        c, q, J = cands[int(p)]
        b = tuple(Fraction(int(rng.integers(0, 5)), 16) for _ in J)
        out.append((c, q, J, b))
    return out


# ---------------------------------------------------------------- Beta identity


@dataclass
class BetaReport:
    a: tuple[float, ...]
    gamma_quotient: float
    quadrature: float
    tol: float

    @property
    def deviation(self) -> float:
        return abs(self.quadrature - self.gamma_quotient) / abs(self.gamma_quotient)

    @property
    def passed(self) -> bool:
        return self.deviation < self.tol


def _cube_integral(powers: Sequence[float], total: float) -> float:
    """int_{[0,1]^m} prod t_i^{p_i} / (1 + sum t_i)^total with algebraic endpoint weights."""
    m = len(powers)
    if m == 1:
        val, _ = integrate.quad(lambda t: (1.0 + t) ** (-total), 0.0, 1.0, weight="alg", wvar=(powers[0], 0.0),
                                epsabs=0, epsrel=1e-13, limit=200)
        return val
    if m == 2:
        def inner(t1):
            v, _ = integrate.quad(lambda t2: (1.0 + t1 + t2) ** (-total), 0.0, 1.0, weight="alg",
                                  wvar=(powers[1], 0.0), epsabs=0, epsrel=1e-13, limit=200)
            return v

        val, _ = integrate.quad(inner, 0.0, 1.0, weight="alg", wvar=(powers[0], 0.0), epsabs=0, epsrel=1e-12,
                                limit=200)
        return val
    raise ValueError("only n = 2 and n = 3 are supported")


def beta_identity_check(a: Sequence[float], tol: float = 1e-7) -> BetaReport:
    """Gamma(a_1)...Gamma(a_n)/Gamma(sum a) against the sum over q of unit-cube integrals."""
    a = tuple(float(v) for v in a)
    if len(a) < 2 or any(v <= 0 for v in a):
        raise ValueError("need n >= 2 positive parameters")
    total = sum(a)
    exact_value = math.exp(sum(gammaln(v) for v in a) - gammaln(total))
    quad = 0.0
    for q in range(len(a)):
        powers = [a[i] - 1 for i in range(len(a)) if i != q]
        quad += _cube_integral(powers, total)
    return BetaReport(a, exact_value, quad, tol)
