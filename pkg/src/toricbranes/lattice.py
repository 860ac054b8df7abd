"""Exact combinatorics of a simplicial stacky fan over a Gorenstein cone.

Everything here works over the integers and rationals; no floats.  Point
indices are 0-based internally.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import ConvexHull

from . import exact
from .errors import (
    DegenerateIndexSet,
    DegreeNotOne,
    FanError,
    NonConvexPsi,
    NonSimplicialCone,
    NotACone,
    OverlappingCones,
    PointOutsideCone,
    UnboundedPolytope,
)

__all__ = [
    "StackyFanData",
    "TwistedSector",
    "PointDecomposition",
    "QuotientFan",
    "TropicalPolytope",
    "ValidationReport",
    "validate_fan",
    "check_fan",
    "enumerate_box",
    "dual_sector",
    "decompose_point",
    "normalized_volume",
    "star_and_quotient",
    "tropical_polytope",
    "residual_volume_oracle",
    "lattice_count_volume",
    "lattice_points",
]


@dataclass(frozen=True)
class StackyFanData:
    """Points v_i (last coordinate 1), maximal cones and convex PL values psi."""

    points: tuple[tuple[int, ...], ...]
    max_cones: tuple[frozenset[int], ...]
    psi: tuple[Fraction, ...]
    name: str = field(default="", compare=False)

    @classmethod
    def build(cls, points, max_cones, psi, name: str = "") -> "StackyFanData":
        pts = tuple(tuple(int(x) for x in p) for p in points)
        cones = tuple(sorted((frozenset(int(i) for i in c) for c in max_cones), key=sorted))
        return cls(pts, cones, tuple(exact.as_fraction(x) for x in psi), name)

    @property
    def rank(self) -> int:
        return len(self.points[0])

    @property
    def dim(self) -> int:
        return self.rank - 1

    @property
    def n(self) -> int:
        return len(self.points)

    def bar(self, i: int) -> tuple[int, ...]:
        return self.points[i][:-1]

    def is_cone(self, indices: Iterable[int]) -> bool:
        s = frozenset(indices)
        return any(s <= c for c in self.max_cones)

    @cached_property
    def cones(self) -> tuple[frozenset[int], ...]:
        """All cones of the fan (faces of maximal cones), including the empty one."""
        out = set()
        for c in self.max_cones:
            for k in range(len(c) + 1):
                out.update(frozenset(s) for s in itertools.combinations(sorted(c), k))
        return tuple(sorted(out, key=lambda s: (len(s), sorted(s))))

    @cached_property
    def facets(self) -> tuple[tuple[int, ...], ...]:
        """Primitive inward normals of the facets of the cone C."""
        normals = set()
        for wall, owners in _walls(self).items():
            if len(owners) != 1:
                continue
            normals.add(tuple(_wall_normal(self, wall, next(iter(owners)) - wall)))
        return tuple(sorted(normals))

    @cached_property
    def used_points(self) -> frozenset[int]:
        return frozenset().union(*self.max_cones)

    @cached_property
    def volume(self) -> int:
        """Normalised volume of the polytope, i.e. the sum of cone multiplicities."""
        return sum(normalized_volume(self, c) for c in self.max_cones)

    def in_cone(self, c: Sequence[int], interior: bool = False) -> bool:
        vals = [exact.dot(h, c) for h in self.facets]
        return all(v > 0 for v in vals) if interior else all(v >= 0 for v in vals)

    def is_interior_cone(self, indices: Iterable[int]) -> bool:
        """True iff the relative interior of the cone lies in the interior of C."""
        s = list(indices)
        for h in self.facets:
            if all(exact.dot(h, self.points[i]) == 0 for i in s):
                return False
        return True

    def psi_linear(self, cone: Iterable[int]) -> list[Fraction]:
        """Linear functional agreeing with psi on the rays of a maximal cone."""
        idx = sorted(cone)
        sol = exact.solve([list(self.points[i]) for i in idx], [self.psi[i] for i in idx])
        return sol

    def psi_at(self, c: Sequence[int]) -> Fraction:
        """psi extended linearly on the cones of the fan."""
        dec = decompose_point(self, c)
        return sum((dec.coeffs[k] * self.psi[i] for k, i in enumerate(dec.sigma_c)), Fraction(0))


@dataclass(frozen=True)
class TwistedSector:
    gamma: tuple[int, ...]
    sigma: frozenset[int]
    frac: tuple[Fraction, ...]

    @property
    def is_untwisted(self) -> bool:
        return not self.sigma

    def age(self) -> Fraction:
        return sum(self.frac, Fraction(0))

    def label(self) -> str:
        return "(" + ",".join(map(str, self.gamma)) + ")"


@dataclass(frozen=True)
class PointDecomposition:
    point: tuple[int, ...]
    sigma_c: tuple[int, ...]
    coeffs: tuple[Fraction, ...]
    sector: TwistedSector
    I_c: frozenset[int]
    interior: bool

    @property
    def asymptotics_eligible(self) -> bool:
        return self.interior and all(x <= 1 for x in self.coeffs)

    def coeff(self, i: int) -> Fraction:
        return self.coeffs[self.sigma_c.index(i)] if i in self.sigma_c else Fraction(0)


@dataclass(frozen=True)
class QuotientFan:
    sigma: frozenset[int]
    star: tuple[frozenset[int], ...]
    rays: tuple[int, ...]
    projection: tuple[tuple[int, ...], ...]
    images: dict
    cones: tuple[frozenset[int], ...]
    volumes: dict


@dataclass
class ValidationReport:
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def add(self, check: str, witness: str) -> None:
        self.failures.append((check, witness))


# ---------------------------------------------------------------- validation

def _walls(fan: StackyFanData) -> dict:
    walls: dict = {}
    for cone in fan.max_cones:
        for i in cone:
            walls.setdefault(cone - {i}, set()).add(cone)
    return walls


def _wall_normal(fan: StackyFanData, wall: frozenset[int], opposite: Iterable[int]) -> list[int]:
    rows = [list(fan.points[i]) for i in sorted(wall)]
    kernel = exact.nullspace(rows, fan.rank) if rows else None
    assert kernel is not None and len(kernel) == 1, "wall is not a hyperplane"
    h = exact.primitive(kernel[0])
    o = next(iter(opposite))
    if exact.dot(h, fan.points[o]) < 0:
        h = [-x for x in h]
    return h


def validate_fan(fan: StackyFanData) -> ValidationReport:
    """Check degree, simpliciality, covering and strict convexity of psi."""
    report = ValidationReport()
    if not fan.points:
        report.add("EmptyFan", "no points")
        return report
    rk = fan.rank
    for i, p in enumerate(fan.points):
        if len(p) != rk or p[-1] != 1:
            report.add("DegreeNotOne", f"point {i + 1} = {p}")
    if len(fan.psi) != fan.n:
        report.add("PsiLength", f"{len(fan.psi)} values for {fan.n} points")
        return report
    for cone in fan.max_cones:
        if any(i < 0 or i >= fan.n for i in cone):
            report.add("NonSimplicialCone", f"cone {sorted(j + 1 for j in cone)} has bad index")
            return report
        if len(cone) != rk or exact.det([fan.points[i] for i in sorted(cone)]) == 0:
            report.add("NonSimplicialCone", f"cone {sorted(j + 1 for j in cone)}")
    if not report.ok:
        return report

    walls = _walls(fan)
    boundary = []
    for wall, owners in walls.items():
        owners = list(owners)
        label = sorted(j + 1 for j in wall)
        if len(owners) > 2:
            report.add("OverlappingCones", f"wall {label} lies in {len(owners)} cones")
            continue
        h = _wall_normal(fan, wall, owners[0] - wall)
        if len(owners) == 2:
            (b,) = owners[1] - wall
            if exact.dot(h, fan.points[b]) >= 0:
                report.add("OverlappingCones", f"cones across wall {label} lie on one side")
                continue
            ell = fan.psi_linear(owners[0])
            if exact.dot(ell, fan.points[b]) >= fan.psi[b]:
                report.add("NonConvexPsi", f"wall {label}")
        else:
            boundary.append((wall, h))
            if any(exact.dot(h, p) < 0 for p in fan.points):
                report.add("OverlappingCones", f"boundary wall {label} is not a facet of C")
    if not report.ok:
        return report

    # a generic interior point must be covered exactly once
    probe = [Fraction(sum(p[k] for p in fan.points)) for k in range(rk)]
    for k in range(rk):
        probe[k] += Fraction(1, 7919 ** (k + 1))
    hits = 0
    for cone in fan.max_cones:
        coeffs = exact.solve(exact.transpose([fan.points[i] for i in sorted(cone)]), probe)
        if all(x > 0 for x in coeffs):
            hits += 1
    if hits != 1:
        report.add("OverlappingCones", f"generic interior point covered {hits} times")

    # points not used as rays must lie strictly above the PL extension
    for j in range(fan.n):
        if j in fan.used_points:
            continue
        for cone in fan.max_cones:
            coeffs = exact.solve(exact.transpose([fan.points[i] for i in sorted(cone)]), fan.points[j])
            if all(x >= 0 for x in coeffs):
                if exact.dot(fan.psi_linear(cone), fan.points[j]) >= fan.psi[j]:
                    report.add("NonConvexPsi", f"unused point {j + 1} not lifted above cone")
                break
    return report


_ERRORS = {
    "DegreeNotOne": DegreeNotOne,
    "NonSimplicialCone": NonSimplicialCone,
    "OverlappingCones": OverlappingCones,
    "NonConvexPsi": NonConvexPsi,
}


def check_fan(fan: StackyFanData) -> StackyFanData:
    """Raise the first validation failure as its typed error."""
    report = validate_fan(fan)
    if not report.ok:
        check, witness = report.failures[0]
        raise _ERRORS.get(check, FanError)(f"{check}: {witness}")
    return fan


# ---------------------------------------------------------------- box

def _parallelepiped(fan: StackyFanData, cone: Sequence[int]) -> list[tuple[Fraction, ...]]:
    """Coefficient tuples (in [0,1)) of the lattice points in the half-open parallelepiped."""
    idx = sorted(cone)
    basis = [list(fan.points[i]) for i in idx]  # rows
    s, u, v = exact.smith(exact.transpose(basis))
    k = len(idx)
    # columns of B are the generators; lattice points w = B a.  Cosets of B Z^k in
    # the saturation are indexed by the Smith quotient of B^T ... simpler: use
    # U B V = S, so B Z^k = U^{-1} S Z^k and cosets are U^{-1}(j_1,...,j_k,0..) with 0<=j<s.
    u_inv = exact.inverse(u)
    diag = [s[t][t] for t in range(k)]
    bt = exact.transpose(basis)
    out = set()
    for js in itertools.product(*(range(d) for d in diag)):
        vec = list(js) + [0] * (len(bt) - k)
        w = exact.matvec(u_inv, vec)
        coeffs = exact.solve(bt, w)
        out.add(tuple(x - (x.numerator // x.denominator) for x in coeffs))
    assert len(out) == int(np.prod(diag)), "parallelepiped count mismatch"
    return sorted(out)


def _sector_from_coeffs(fan: StackyFanData, cone: Sequence[int], coeffs) -> TwistedSector:
    idx = sorted(cone)
    frac = [Fraction(0)] * fan.n
    for i, a in zip(idx, coeffs):
        frac[i] = Fraction(a)
    gamma = tuple(int(sum(frac[i] * fan.points[i][k] for i in idx)) for k in range(fan.rank))
    return TwistedSector(gamma, frozenset(i for i in idx if frac[i] != 0), tuple(frac))


def enumerate_box(fan: StackyFanData) -> list[TwistedSector]:
    """Every element of Box(fan), each once, untwisted sector first."""
    seen = {}
    for cone in fan.max_cones:
        for coeffs in _parallelepiped(fan, cone):
            sec = _sector_from_coeffs(fan, cone, coeffs)
            seen.setdefault(sec.gamma, sec)
    return sorted(seen.values(), key=lambda s: (len(s.sigma), s.age(), s.gamma))


def box_of_cone(fan: StackyFanData, cone: Iterable[int]) -> list[TwistedSector]:
    cone = frozenset(cone)
    return [s for s in enumerate_box(fan) if s.sigma <= cone]


def dual_sector(fan: StackyFanData, sector: TwistedSector) -> TwistedSector:
    frac = tuple((1 - a) if a != 0 else Fraction(0) for a in sector.frac)
    gamma = tuple(int(sum(frac[i] * fan.points[i][k] for i in sector.sigma)) for k in range(fan.rank))
    return TwistedSector(gamma, sector.sigma, frac)


# ---------------------------------------------------------------- points

def decompose_point(fan: StackyFanData, c: Sequence[int]) -> PointDecomposition:
    c = tuple(int(x) for x in c)
    if len(c) != fan.rank:
        raise PointOutsideCone(f"{c} has wrong length")
    for cone in fan.max_cones:
        idx = sorted(cone)
        coeffs = exact.solve(exact.transpose([fan.points[i] for i in idx]), c)
        if all(x >= 0 for x in coeffs):
            support = tuple(i for i, x in zip(idx, coeffs) if x != 0)
            vals = tuple(x for x in coeffs if x != 0)
            frac = [Fraction(0)] * fan.n
            for i, x in zip(support, vals):
                frac[i] = x - (x.numerator // x.denominator)
            sig = frozenset(i for i in support if frac[i] != 0)
            gamma = tuple(int(sum(frac[i] * fan.points[i][k] for i in sig)) for k in range(fan.rank))
            sector = TwistedSector(gamma, sig, tuple(frac))
            I_c = frozenset(i for i, x in zip(support, vals) if x.denominator == 1 and x >= 1)
            return PointDecomposition(c, support, vals, sector, I_c, fan.is_interior_cone(support))
    raise PointOutsideCone(f"{c} is not in the cone")


def normalized_volume(fan: StackyFanData, indices: Iterable[int]) -> int:
    idx = sorted(indices)
    if len(idx) != fan.rank:
        raise DegenerateIndexSet(f"{len(idx)} indices for rank {fan.rank}")
    d = exact.det([fan.points[i] for i in idx])
    if d == 0:
        raise DegenerateIndexSet(f"points {[i + 1 for i in idx]} are dependent")
    return abs(int(d))


def lattice_points(fan: StackyFanData, degree: int, interior: bool = False) -> list[tuple[int, ...]]:
    """Lattice points of C (or C°) with the given last coordinate."""
    bars = np.array([fan.bar(i) for i in range(fan.n)], dtype=int)
    lo = bars.min(axis=0) * degree
    hi = bars.max(axis=0) * degree
    out = []
    for pt in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        c = tuple(int(x) for x in pt) + (degree,)
        if fan.in_cone(c, interior=interior):
            out.append(c)
    return out


# ---------------------------------------------------------------- star / quotient

def star_and_quotient(fan: StackyFanData, sigma: Iterable[int]) -> QuotientFan:
    sigma = frozenset(sigma)
    if not fan.is_cone(sigma):
        raise NotACone(f"{sorted(i + 1 for i in sigma)} is not a cone")
    star = tuple(c for c in fan.max_cones if sigma <= c)
    rays = tuple(sorted(set().union(*star) - sigma))
    k = len(sigma)
    if k:
        # rows k.. of U kill the saturation of the span of sigma; the
        # torsion of N / span(sigma) is the box of sigma and is dropped here
        s, u, _ = exact.smith(exact.transpose([fan.points[i] for i in sorted(sigma)]))
        if any(s[t][t] == 0 for t in range(k)):
            raise FanError("cone generators are linearly dependent")
        proj = tuple(tuple(row) for row in u[k:])
    else:
        proj = tuple(tuple(int(i == j) for j in range(fan.rank)) for i in range(fan.rank))
    images = {i: tuple(int(x) for x in exact.matvec(proj, fan.points[i])) for i in rays}
    cones = tuple(sorted((c - sigma for c in star), key=sorted))
    volumes = {}
    for c in cones:
        m = [images[i] for i in sorted(c)]
        volumes[c] = abs(int(exact.det(m))) if m else 1
    return QuotientFan(sigma, star, rays, proj, images, cones, volumes)


# ---------------------------------------------------------------- tropical polytopes

@dataclass(frozen=True)
class TropicalPolytope:
    """{p : beta_q - beta_j = b_j (j in J), beta_q - beta_i >= 0 otherwise}."""

    q: int
    J: tuple[int, ...]
    b: tuple[Fraction, ...]
    equalities: tuple[tuple[tuple[Fraction, ...], Fraction], ...]
    inequalities: tuple[tuple[tuple[Fraction, ...], Fraction], ...]
    index: int


def tropical_polytope(fan: StackyFanData, q: int, J: Sequence[int], b: Sequence) -> TropicalPolytope:
    J = tuple(J)
    b = tuple(exact.as_fraction(x) for x in b)
    if len(J) != len(b):
        raise ValueError("J and b must have the same length")
    d = fan.dim
    vq = fan.bar(q)

    def row(i):
        return tuple(Fraction(vq[k] - fan.bar(i)[k]) for k in range(d))

    eqs = tuple((row(j), fan.psi[q] - fan.psi[j] + bj) for j, bj in zip(J, b))
    ineqs = tuple((row(i), fan.psi[q] - fan.psi[i]) for i in range(fan.n) if i != q and i not in J)
    if J:
        inv = exact.smith_invariants([[int(x) for x in r] for r, _ in eqs])
        index = int(np.prod(inv)) if len(inv) == len(J) else 0
    else:
        index = 1
    return TropicalPolytope(q, J, b, eqs, ineqs, index)


def _affine_chart(P: TropicalPolytope, d: int):
    """Particular rational point and Z-basis of the lattice inside the equality span."""
    if P.equalities:
        a = [list(r) for r, _ in P.equalities]
        rhs = [v for _, v in P.equalities]
        p0 = exact.solve(a, rhs)
        if p0 is None:
            return None, None
        basis = exact.integer_kernel([[int(x) for x in r] for r in a]) if exact.rank(a) < d else []
    else:
        p0 = [Fraction(0)] * d
        basis = [[int(i == j) for j in range(d)] for i in range(d)]
    return p0, basis


def _reduced_inequalities(P: TropicalPolytope, p0, basis):
    rows = []
    for r, v in P.inequalities:
        coeffs = [exact.dot(r, col) for col in basis]
        rows.append((coeffs, v - exact.dot(r, p0)))
    return rows


def _vertices(rows, k):
    if k == 0:
        return [()] if all(rhs <= 0 for _, rhs in rows) else []
    verts = set()
    for combo in itertools.combinations(range(len(rows)), k):
        a = [rows[i][0] for i in combo]
        if exact.det(a) == 0:
            continue
        u = exact.solve(a, [rows[i][1] for i in combo])
        if all(exact.dot(r, u) >= rhs for r, rhs in rows):
            verts.add(tuple(u))
    return sorted(verts)


def _bounded(rows, k) -> bool:
    if k == 0:
        return True
    mat = [r for r, _ in rows]
    if exact.rank(mat) < k:
        return False
    for combo in itertools.combinations(range(len(rows)), k - 1):
        sub = [rows[i][0] for i in combo]
        ker = exact.nullspace(sub, k) if sub else [[Fraction(int(i == j)) for j in range(k)] for i in range(k)]
        if len(ker) != 1:
            continue
        for sign in (1, -1):
            r = [sign * x for x in ker[0]]
            if all(exact.dot(row, r) >= 0 for row in mat):
                return False
    return True


def _exact_volume(verts, k) -> Fraction:
    if k == 0:
        return Fraction(1) if verts else Fraction(0)
    if len(verts) <= k:
        return Fraction(0)
    base = verts[0]
    diffs = [[v[j] - base[j] for j in range(k)] for v in verts[1:]]
    if exact.rank(diffs) < k:
        return Fraction(0)
    if k == 1:
        xs = [v[0] for v in verts]
        return max(xs) - min(xs)
    pts = np.array([[float(x) for x in v] for v in verts])
    hull = ConvexHull(pts, qhull_options="Qt")
    centre = [sum(v[j] for v in verts) / len(verts) for j in range(k)]
    total = Fraction(0)
    fact = 1
    for m in range(2, k + 1):
        fact *= m
    for simplex in hull.simplices:
        m = [[verts[s][j] - centre[j] for j in range(k)] for s in simplex]
        total += abs(exact.det(m))
    return total / fact


def residual_volume_oracle(fan: StackyFanData, P: TropicalPolytope) -> Fraction:
    """vol_aff(P) divided by the index of the b-lattice; 0 when P is empty."""
    d = fan.dim
    p0, basis = _affine_chart(P, d)
    if p0 is None or P.index == 0:
        return Fraction(0)
    k = len(basis)
    rows = _reduced_inequalities(P, p0, basis)
    verts = _vertices(rows, k)
    if not _bounded(rows, k):
        if verts or k == 0:
            raise UnboundedPolytope(f"q={P.q + 1}, J={[j + 1 for j in P.J]}")
        raise UnboundedPolytope(f"q={P.q + 1}, J={[j + 1 for j in P.J]} (unbounded or empty)")
    return _exact_volume(verts, k) / P.index


def lattice_count_volume(fan: StackyFanData, P: TropicalPolytope, scales=(6, 12, 24)) -> float:
    """Affine volume from the lattice-point counting limit |lP ∩ Z^d| / l^k.

    The leading Ehrhart coefficient is extracted by an exact polynomial fit
    through the supplied dilations (extra dilations are used when k = 3).
    """
    from .kernels import count_points

    d = fan.dim
    if P.equalities:
        a = [[int(x) for x in r] for r, _ in P.equalities]
    k = d - len(P.equalities)
    if k == 3 and len(scales) < 4:
        scales = tuple(scales) + (18,)
    scales = sorted(scales)
    counts = []
    for l in scales:
        if P.equalities:
            rhs = [l * v for _, v in P.equalities]
            if any(x.denominator != 1 for x in rhs):
                counts.append(0)
                continue
            p0 = exact.integer_solution(a, [int(x) for x in rhs])
            if p0 is None:
                counts.append(0)
                continue
            basis = exact.integer_kernel(a) if k else []
        else:
            p0 = [0] * d
            basis = [[int(i == j) for j in range(d)] for i in range(d)]
        rows = []
        for r, v in P.inequalities:
            coeffs = [exact.dot(r, col) for col in basis]
            rhs = l * v - exact.dot(r, p0)
            den = exact.lcm_denominator(list(coeffs) + [rhs])
            rows.append(([int(x * den) for x in coeffs], int(rhs * den) if (rhs * den).denominator == 1 else None, rhs * den))
        if k == 0:
            counts.append(int(all(row[2] <= 0 for row in rows)))
            continue
        # bounding box from the exact vertices of the dilated polytope
        frows = [(list(map(Fraction, c)), Fraction(r2)) for c, _, r2 in rows]
        verts = _vertices(frows, k)
        if not verts:
            counts.append(0)
            continue
        lo = [int(np.floor(float(min(v[j] for v in verts)))) - 1 for j in range(k)]
        hi = [int(np.ceil(float(max(v[j] for v in verts)))) + 1 for j in range(k)]
        amat = np.array([c for c, _, _ in rows], dtype=np.int64)
        # ceil of the exact right-hand side keeps the integer test exact
        bvec = np.array([int(-((-r2.numerator) // r2.denominator)) for _, _, r2 in rows], dtype=np.int64)
        counts.append(count_points(amat, bvec, np.array(lo, dtype=np.int64), np.array(hi, dtype=np.int64)))
    # leading coefficient of the Ehrhart polynomial through the dilations
    vander = np.vander(np.array(scales, dtype=float), k + 1)
    coef = np.linalg.lstsq(vander, np.array(counts, dtype=float), rcond=None)[0]
    return float(coef[0])
