"""Globally adaptive tensor Gauss-Kronrod cubature on boxes in R^d (d <= 3).

The integrand family is fixed: exp(c.y - deg * log sum_i x_i e^{v_i.y}), which
is what every period integral in this package reduces to after y = log z.
Cells live in flat arrays; the worst cells are bisected along their worst
axis in batches so the compiled kernel always sees many cells at once.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import ToleranceNotReached
from .kernels import evaluate_cells

_ROUNDOFF = 50 * np.finfo(float).eps


@dataclass
class CubatureResult:
    value: float
    error: float
    cells: int
    converged: bool


@dataclass(frozen=True)
class LogSumExpIntegrand:
    """exp(shift + cbar.y - deg * log sum_i exp(logx_i + vbar_i.y))."""

    vbar: np.ndarray
    logx: np.ndarray
    cbar: np.ndarray
    deg: float
    shift: float = 0.0

    def __call__(self, y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(y)
        a = self.logx[None, :] + y @ self.vbar.T
        top = a.max(axis=1)
        lse = top + np.log(np.exp(a - top[:, None]).sum(axis=1))
        return np.exp(self.shift + y @ self.cbar - self.deg * lse)


def adaptive_cubature(f: LogSumExpIntegrand, lo, hi, rel_tol: float = 1e-10, abs_tol: float = 0.0,
                      max_cells: int = 200_000, initial_split: int = 4, batch: int = 64,
                      raise_on_failure: bool = True, use_numba: bool | None = None) -> CubatureResult:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = lo.shape[0]
    edges = [np.linspace(lo[j], hi[j], initial_split + 1) for j in range(d)]
    grid = np.stack(np.meshgrid(*([np.arange(initial_split)] * d), indexing="ij"), axis=-1).reshape(-1, d)
    c_lo = np.array([[edges[j][g[j]] for j in range(d)] for g in grid])
    c_hi = np.array([[edges[j][g[j] + 1] for j in range(d)] for g in grid])

    def run(a, b):
        return evaluate_cells(a, b, f.vbar, f.logx, f.cbar, f.deg, f.shift, use_numba=use_numba)

    def cell_error(kron, gauss):
        # rounding floor as in QUADPACK: no cell is trusted beyond 50 ulp of its value
        return np.abs(kron - gauss) + _ROUNDOFF * np.abs(kron)

    kron, gauss, axis = run(c_lo, c_hi)
    cap = max(max_cells * 2, len(kron))
    los = np.empty((cap, d))
    his = np.empty((cap, d))
    vals = np.zeros(cap)
    errs = np.zeros(cap)
    axes = np.zeros(cap, dtype=np.int64)
    alive = np.zeros(cap, dtype=bool)
    m = len(kron)
    los[:m], his[:m], vals[:m] = c_lo, c_hi, kron
    errs[:m] = cell_error(kron, gauss)
    axes[:m] = axis.argmax(axis=1)
    alive[:m] = True
    heap = [(-errs[k], k) for k in range(m)]
    heapq.heapify(heap)
    total = vals[:m].sum()
    err = errs[:m].sum()
    live = m
    while True:
        target = max(abs_tol, rel_tol * abs(total))
        if err <= target:
            return CubatureResult(float(vals[alive].sum()), float(err), live, True)
        if live + batch >= max_cells or m + 2 * batch >= cap:
            break
        picked = []
        while heap and len(picked) < batch:
            e, k = heapq.heappop(heap)
            if alive[k]:
                picked.append(k)
            if -e < 0.05 * target / max(live, 1) and picked:
                break
        if not picked:
            break
        picked = np.array(picked)
        ax = axes[picked]
        mid = 0.5 * (los[picked, ax] + his[picked, ax])
        lo1, hi1 = los[picked].copy(), his[picked].copy()
        hi1[np.arange(len(picked)), ax] = mid
        lo2, hi2 = los[picked].copy(), his[picked].copy()
        lo2[np.arange(len(picked)), ax] = mid
        new_lo = np.concatenate([lo1, lo2])
        new_hi = np.concatenate([hi1, hi2])
        kron, gauss, axis = run(new_lo, new_hi)
        alive[picked] = False
        total -= vals[picked].sum()
        err -= errs[picked].sum()
        cnt = len(kron)
        sl = slice(m, m + cnt)
        los[sl], his[sl], vals[sl] = new_lo, new_hi, kron
        errs[sl] = cell_error(kron, gauss)
        axes[sl] = axis.argmax(axis=1)
        alive[sl] = True
        for k in range(m, m + cnt):
            heapq.heappush(heap, (-errs[k], k))
        m += cnt
        live += cnt - len(picked)
        total += kron.sum()
        err += errs[sl].sum()
        # resum occasionally to stop drift in the running totals
        if live % 4096 < 2 * batch:
            total = vals[alive].sum()
            err = errs[alive].sum()
    result = CubatureResult(float(vals[alive].sum()), float(errs[alive].sum()), live, False)
    if raise_on_failure:
        raise ToleranceNotReached(
            f"cubature stopped at {live} cells with error {result.error:.3e} for value {result.value:.6e}")
    return result
