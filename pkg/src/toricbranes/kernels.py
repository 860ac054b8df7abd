"""Hot loops: tensor Gauss-Kronrod cell evaluation and lattice-point counting.

Each kernel exists twice, a loop version compiled by numba and a vectorised
numpy version.  The public wrappers pick one according to ``_backend``.
"""

from __future__ import annotations

import numpy as np

from ._backend import HAVE_NUMBA, njit

# 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS = np.zeros(15)
# Gauss nodes sit at the odd positions of the Kronrod node list
_g = np.concatenate([_WG[:-1], _WG[::-1]])
GAUSS[1::2] = _g


# ---------------------------------------------------------------- integrand cells

@njit
def _cells_loop(lo, hi, vbar, logx, cbar, degc, shift, nodes, wk, wg):
    m, d = lo.shape
    n = vbar.shape[0]
    q = nodes.shape[0]
    total = q ** d
    kron = np.zeros(m)
    gauss = np.zeros(m)
    axis = np.zeros((m, d))
    y = np.zeros(d)
    idx = np.zeros(d, dtype=np.int64)
    a = np.zeros(n)
    for cell in range(m):
        vol = 1.0
        for j in range(d):
            vol *= 0.5 * (hi[cell, j] - lo[cell, j])
        axis_acc = np.zeros(d)
        for flat in range(total):
            rem = flat
            for j in range(d):
                idx[j] = rem % q
                rem //= q
                y[j] = 0.5 * (lo[cell, j] + hi[cell, j]) + 0.5 * (hi[cell, j] - lo[cell, j]) * nodes[idx[j]]
            top = -1e300
            for i in range(n):
                s = logx[i]
                for j in range(d):
                    s += vbar[i, j] * y[j]
                a[i] = s
                if s > top:
                    top = s
            acc = 0.0
            for i in range(n):
                acc += np.exp(a[i] - top)
            expo = shift - degc * (top + np.log(acc))
            for j in range(d):
                expo += cbar[j] * y[j]
            f = np.exp(expo)
            wkp = 1.0
            wgp = 1.0
            for j in range(d):
                wkp *= wk[idx[j]]
                wgp *= wg[idx[j]]
            kron[cell] += wkp * f
            gauss[cell] += wgp * f
            for j in range(d):
                axis_acc[j] += (wkp / wk[idx[j]]) * (wk[idx[j]] - wg[idx[j]]) * f
        kron[cell] *= vol
        gauss[cell] *= vol
        for j in range(d):
            axis[cell, j] = abs(axis_acc[j]) * vol
    return kron, gauss, axis


def _cells_numpy(lo, hi, vbar, logx, cbar, degc, shift, nodes, wk, wg):
    m, d = lo.shape
    q = nodes.shape[0]
    grids = np.meshgrid(*([np.arange(q)] * d), indexing="ij")
    idx = np.stack([g.reshape(-1) for g in grids], axis=1)  # (q^d, d)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    y = mid[:, None, :] + half[:, None, :] * nodes[idx][None, :, :]  # (m, q^d, d)
    a = logx[None, None, :] + y @ vbar.T
    top = a.max(axis=2)
    lse = top + np.log(np.exp(a - top[..., None]).sum(axis=2))
    f = np.exp(shift + y @ cbar - degc * lse)
    wk_n = wk[idx]
    wg_n = wg[idx]
    wkp = wk_n.prod(axis=1)
    wgp = wg_n.prod(axis=1)
    vol = half.prod(axis=1)
    kron = (f * wkp).sum(axis=1) * vol
    gauss = (f * wgp).sum(axis=1) * vol
    axis = np.empty((m, d))
    for j in range(d):
        w = wkp / wk_n[:, j] * (wk_n[:, j] - wg_n[:, j])
        axis[:, j] = np.abs((f * w).sum(axis=1)) * vol
    return kron, gauss, axis


def evaluate_cells(lo, hi, vbar, logx, cbar, degc, shift, use_numba: bool | None = None):
    """Kronrod and Gauss estimates plus per-axis error indicators for a batch of boxes.

    The integrand is exp(shift + c.y - deg * log sum_i exp(logx_i + v_i.y)).
    """
    use_numba = HAVE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    args = (np.ascontiguousarray(lo, dtype=np.float64), np.ascontiguousarray(hi, dtype=np.float64),
            np.ascontiguousarray(vbar, dtype=np.float64), np.ascontiguousarray(logx, dtype=np.float64),
            np.ascontiguousarray(cbar, dtype=np.float64), float(degc), float(shift), NODES, KRONROD, GAUSS)
    if use_numba:
        return _cells_loop(*args)
    return _cells_numpy(*args)


# ---------------------------------------------------------------- lattice counting

@njit
def _count_loop(amat, bvec, lo, hi):
    k = lo.shape[0]
    r = amat.shape[0]
    u = lo.copy()
    count = 0
    while True:
        ok = True
        for i in range(r):
            s = 0
            for j in range(k):
                s += amat[i, j] * u[j]
            if s < bvec[i]:
                ok = False
                break
        if ok:
            count += 1
        j = 0
        while j < k:
            u[j] += 1
            if u[j] <= hi[j]:
                break
            u[j] = lo[j]
            j += 1
        if j == k:
            break
    return count


def _count_numpy(amat, bvec, lo, hi):
    k = lo.shape[0]
    axes = [np.arange(lo[j], hi[j] + 1, dtype=np.int64) for j in range(k)]
    count = 0
    # chunk over the first axis to keep memory flat
    for first in axes[0]:
        rest = np.meshgrid(*axes[1:], indexing="ij") if k > 1 else []
        pts = np.stack([np.full(rest[0].shape if rest else (1,), first)] + list(rest), axis=-1).reshape(-1, k)
        count += int(np.all(pts @ amat.T >= bvec, axis=1).sum())
    return count


def count_points(amat, bvec, lo, hi, use_numba: bool | None = None) -> int:
    """Number of integer u with lo <= u <= hi and amat @ u >= bvec."""
    use_numba = HAVE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    amat = np.ascontiguousarray(amat, dtype=np.int64)
    bvec = np.ascontiguousarray(bvec, dtype=np.int64)
    lo = np.ascontiguousarray(lo, dtype=np.int64)
    hi = np.ascontiguousarray(hi, dtype=np.int64)
    if lo.shape[0] == 0:
        return int(np.all(bvec <= 0))
    if use_numba:
        return int(_count_loop(amat, bvec, lo, hi))
    return _count_numpy(amat, bvec, lo, hi)
