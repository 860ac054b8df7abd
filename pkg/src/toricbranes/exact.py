"""Exact rational and integer linear algebra on small dense matrices.

Matrices are lists of rows.  Rational work uses :class:`fractions.Fraction`;
integer lattice work (Smith normal form, LLL) is delegated to sympy.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_decomp
from sympy.polys.matrices import DomainMatrix

Row = list
Mat = list


def to_fractions(rows: Iterable[Iterable]) -> Mat:
    return [[Fraction(x) for x in row] for row in rows]


def as_fraction(value) -> Fraction:
    """Parse ints, Fractions and ``"p/q"`` strings into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        if not value.is_integer():
            raise TypeError(f"refusing inexact float {value!r}; pass 'p/q' strings")
        return Fraction(int(value))
    return Fraction(value)


def rref(matrix: Sequence[Sequence], ncols: int | None = None) -> tuple[Mat, list[int]]:
    """Reduced row echelon form and pivot columns (leftmost pivots first)."""
    rows = [[Fraction(x) for x in row] for row in matrix]
    if not rows:
        return [], []
    ncols = len(rows[0]) if ncols is None else ncols
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = 1 / rows[r][col]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def rank(matrix: Sequence[Sequence]) -> int:
    return len(rref(matrix)[1])


def nullspace(matrix: Sequence[Sequence], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of the right kernel {x : M x = 0} over Q."""
    if ncols is None:
        ncols = len(matrix[0])
    if not matrix:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    red, pivots = rref(matrix, ncols)
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for row, p in zip(red, pivots):
            vec[p] = -row[f]
        basis.append(vec)
    return basis


def solve(matrix: Sequence[Sequence], rhs: Sequence) -> list[Fraction] | None:
    """One rational solution of M x = b (free variables set to 0), or None."""
    ncols = len(matrix[0])
    aug = [list(row) + [b] for row, b in zip(matrix, rhs)]
    red, pivots = rref(aug, ncols + 1)
    if ncols in pivots:
        return None
    sol = [Fraction(0)] * ncols
    for row, p in zip(red, pivots):
        sol[p] = row[ncols]
    return sol


def det(matrix: Sequence[Sequence]) -> Fraction:
    rows = [[Fraction(x) for x in row] for row in matrix]
    n = len(rows)
    result = Fraction(1)
    for col in range(n):
        pivot = next((i for i in range(col, n) if rows[i][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            rows[col], rows[pivot] = rows[pivot], rows[col]
            result = -result
        result *= rows[col][col]
        for i in range(col + 1, n):
            f = rows[i][col] / rows[col][col]
            if f:
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[col])]
    return result


def inverse(matrix: Sequence[Sequence]) -> Mat:
    n = len(matrix)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(matrix)]
    red, pivots = rref(aug, n)
    if pivots != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in red]


def matvec(matrix: Sequence[Sequence], vec: Sequence) -> list:
    return [sum((a * b for a, b in zip(row, vec)), Fraction(0)) for row in matrix]


def dot(u: Sequence, v: Sequence):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def transpose(matrix: Sequence[Sequence]) -> Mat:
    return [list(col) for col in zip(*matrix)]


def lcm_denominator(values: Iterable[Fraction]) -> int:
    out = 1
    for v in values:
        den = Fraction(v).denominator
        out = out * den // gcd(out, den)
    return out


def primitive(vec: Sequence) -> list[int]:
    """Scale a rational vector to a primitive integer vector (same direction)."""
    den = lcm_denominator(vec)
    ints = [int(Fraction(x) * den) for x in vec]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    return [x // g for x in ints] if g else ints


def smith(matrix: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]], list[list[int]]]:
    """Smith form S with unimodular U, V such that U * M * V = S."""
    m = Matrix([[int(x) for x in row] for row in matrix])
    s, u, v = smith_normal_decomp(m)
    conv = lambda a: [[int(a[i, j]) for j in range(a.cols)] for i in range(a.rows)]
    s, u, v = conv(s), conv(u), conv(v)
    # normalise to nonnegative diagonal
    for k in range(min(len(s), len(s[0]) if s else 0)):
        if s[k][k] < 0:
            s[k][k] = -s[k][k]
            u[k] = [-x for x in u[k]]
    return s, u, v


def smith_invariants(matrix: Sequence[Sequence[int]]) -> list[int]:
    s, _, _ = smith(matrix)
    return [s[k][k] for k in range(min(len(s), len(s[0]))) if s[k][k] != 0]


def lll(basis: Sequence[Sequence[int]]) -> list[list[int]]:
    """LLL-reduce a list of integer row vectors."""
    if len(basis) <= 1:
        return [list(map(int, b)) for b in basis]
    dm = DomainMatrix([[ZZ(int(x)) for x in row] for row in basis], (len(basis), len(basis[0])), ZZ)
    red = dm.lll().to_Matrix()
    return [[int(red[i, j]) for j in range(red.cols)] for i in range(red.rows)]


def integer_kernel(matrix: Sequence[Sequence[int]]) -> list[list[int]]:
    """Z-basis (LLL-reduced rows) of {k in Z^n : M k = 0}."""
    ncols = len(matrix[0])
    s, _, v = smith(matrix)
    r = sum(1 for k in range(min(len(s), ncols)) if s[k][k] != 0)
    basis = [[v[i][j] for i in range(ncols)] for j in range(r, ncols)]
    basis = lll(basis)
    out = []
    for b in basis:
        lead = next((x for x in b if x != 0), 0)
        out.append([-x for x in b] if lead < 0 else b)
    return out


def integer_solution(matrix: Sequence[Sequence[int]], rhs: Sequence) -> list[int] | None:
    """Some m in Z^n with M m = b, or None when no integer solution exists."""
    nrows, ncols = len(matrix), len(matrix[0])
    s, u, v = smith(matrix)
    ub = matvec(u, [Fraction(x) for x in rhs])
    y = [Fraction(0)] * ncols
    for k in range(nrows):
        sk = s[k][k] if k < ncols else 0
        if sk == 0:
            if ub[k] != 0:
                return None
        else:
            q = ub[k] / sk
            if q.denominator != 1:
                return None
            y[k] = q
    return [int(x) for x in matvec(v, y)]
