"""A-brane central charges as period integrals over the positive real section.

In coordinates y = log z the charge of an interior point c is

    (-1)^d / (2 pi i)^{d+1} * (-1)^{deg c - 1} (deg c - 1)!
        * int_{R^d} e^{cbar.y} / f(e^y)^{deg c} dy,      f = sum_i x_i z^{vbar_i}.

The integral is truncated to a box around the minimiser of the dominant-monomial
bound; the neglected tail is bounded with the same piecewise-linear estimate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.special import gammaincc, gamma as gamma_fn

from . import exact
from .cohomology import TWO_PI_I, as_stack, gamma_class
from .errors import NotConvergent, NotEligible
from .lattice import StackyFanData, decompose_point
from .quadrature import LogSumExpIntegrand, adaptive_cubature

__all__ = [
    "QuadratureSpec",
    "ChargeResult",
    "convergence_check",
    "a_central_charge",
    "period_prefactor",
    "bbgkz_residual",
    "ResidualReport",
    "TropicalCover",
    "tropical_cover",
    "asymptotic_leading_term",
    "asymptotics_check",
    "AsymptoticsReport",
    "large_radius_point",
]


@dataclass(frozen=True)
class QuadratureSpec:
    box_radius: float | None = None
    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    max_subdivisions: int = 200_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol < 0:
            raise ValueError("tolerances must be positive")


@dataclass
class ChargeResult:
    value: complex
    err_est: float
    cells: int
    tail_bound: float
    raw_integral: float
    box_radius: float

    def to_dict(self) -> dict:
        return {"value_re": self.value.real, "value_im": self.value.imag, "err_est": self.err_est,
                "cells": self.cells, "tail_bound": self.tail_bound, "box_radius": self.box_radius}


def convergence_check(fan: StackyFanData, c: Sequence[int]) -> bool:
    """c lies in the interior of C (facet test on cbar / deg c)."""
    return fan.in_cone(tuple(int(v) for v in c), interior=True)


def period_prefactor(fan: StackyFanData, deg: int) -> complex:
    d = fan.dim
    return (-1) ** d / TWO_PI_I ** (d + 1) * (-1) ** (deg - 1) * math.factorial(deg - 1)


def large_radius_point(fan: StackyFanData, t: float, scale: Sequence[float] | None = None) -> list[float]:
    """x_i = s_i * t^{-psi(v_i)}."""
    scale = scale or [1.0] * fan.n
    return [float(s) * float(t) ** (-float(p)) for s, p in zip(scale, fan.psi)]


def _dominant_bound(vbar, logx, cbar, deg):
    """Centre, level and decay rate of the bound H(y) = max_i h_i(y) on the log integrand.

    h_i(y) = deg*(logx_i + vbar_i.y) - cbar.y, and the integrand is at most exp(-H).
    The minimum level s0 of H can be attained on a whole polytope; the centre is
    the midpoint of the bounding box of {H <= s0 + 1}.  The returned rate delta
    satisfies H(y0 + w) - s0 >= delta * |w|_inf whenever |w|_inf >= rho.
    """
    n, d = vbar.shape
    slopes = deg * vbar - cbar[None, :]
    a_ub = np.hstack([slopes, -np.ones((n, 1))])
    b_ub = -deg * logx
    free = [(None, None)] * (d + 1)
    res = linprog(np.r_[np.zeros(d), 1.0], A_ub=a_ub, b_ub=b_ub, bounds=free, method="highs")
    if res.status != 0:
        raise NotConvergent("dominant-monomial bound is unbounded below")
    s0 = res.x[d]
    lo, hi = np.empty(d), np.empty(d)
    fixed = free[:d] + [(s0 + 1.0, s0 + 1.0)]
    for j in range(d):
        for sign in (1.0, -1.0):
            obj = np.zeros(d + 1)
            obj[j] = sign
            r = linprog(obj, A_ub=a_ub, b_ub=b_ub, bounds=fixed, method="highs")
            if r.status != 0:
                raise NotConvergent("sublevel set of the bound is unbounded")
            (lo if sign > 0 else hi)[j] = r.x[j]
    y0 = 0.5 * (lo + hi)
    offsets = deg * logx + slopes @ y0 - s0
    rho = max(1.0, float(np.max(hi - lo)))
    for _ in range(60):
        delta = np.inf
        for j in range(d):
            for sign in (1.0, -1.0):
                bounds = [(-rho, rho)] * d + [(None, None)]
                bounds[j] = (sign * rho, sign * rho)
                r = linprog(np.r_[np.zeros(d), 1.0], A_ub=a_ub, b_ub=-offsets, bounds=bounds, method="highs")
                delta = min(delta, r.x[d])
        if delta >= 1.0:
            return y0, s0, delta / rho, rho
        rho *= 2.0
    raise NotConvergent("no exponential decay away from the dominant region")


def _tail(d: int, delta: float, radius: float) -> float:
    """int_{|w|_inf > R} exp(-delta |w|_inf) dw."""
    return 2 ** d * d * gammaincc(d, delta * radius) * gamma_fn(d) / delta ** d


def _radius_for(d: int, delta: float, budget: float, rho: float = 1.0) -> float:
    r = rho
    while _tail(d, delta, r) > budget:
        r *= 1.25
        if r > 1e4:
            break
    return r


def a_central_charge(fan: StackyFanData, c: Sequence[int], x: Sequence[float],
                     spec: QuadratureSpec | None = None) -> ChargeResult:
    spec = spec or QuadratureSpec()
    c = tuple(int(v) for v in c)
    if not convergence_check(fan, c):
        raise NotConvergent(f"{c} is not an interior point of C")
    x = np.asarray(x, dtype=float)
    if x.shape != (fan.n,) or np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise NotConvergent("coefficients must be finite and strictly positive")
    d = fan.dim
    deg = c[-1]
    vbar = np.array([fan.bar(i) for i in range(fan.n)], dtype=float)
    cbar = np.array(c[:-1], dtype=float)
    logx = np.log(x)
    y0, s0, delta, rho = _dominant_bound(vbar, logx, cbar, deg)
    # work in w = y - y0 with values scaled by e^{s0}
    logx_w = logx + vbar @ y0
    integrand = LogSumExpIntegrand(vbar, logx_w, cbar, float(deg), shift=s0 + float(cbar @ y0))
    # integrand(w) = e^{s0} * e^{cbar.(y0+w)} / f^deg <= exp(-delta |w|) for |w| >= rho
    if spec.box_radius is not None:
        radius = float(spec.box_radius)
    else:
        probe_r = _radius_for(d, delta, 1e-3, rho)
        probe = adaptive_cubature(integrand, -probe_r * np.ones(d), probe_r * np.ones(d), rel_tol=1e-4,
                                  max_cells=spec.max_subdivisions, raise_on_failure=False)
        budget = 0.1 * max(spec.abs_tol * math.exp(s0), spec.rel_tol * abs(probe.value))
        radius = _radius_for(d, delta, budget, rho)
    tail = _tail(d, delta, radius) if radius >= rho else float("inf")
    scaled_abs = spec.abs_tol * math.exp(s0)
    res = adaptive_cubature(integrand, -radius * np.ones(d), radius * np.ones(d), rel_tol=spec.rel_tol,
                            abs_tol=scaled_abs, max_cells=spec.max_subdivisions)
    scale = math.exp(-s0)
    raw = res.value * scale
    pref = period_prefactor(fan, deg)
    err = abs(pref) * (res.error + tail) * scale
    return ChargeResult(pref * raw, err, res.cells, abs(pref) * tail * scale, raw, radius)


# ---------------------------------------------------------------- bbGKZ residuals


@dataclass
class ResidualReport:
    c: tuple[int, ...]
    steps: tuple[float, ...]
    derivative_residuals: list[list[float]]  # [step][i], relative
    linear_residuals: list[list[float]]  # [step][mu], relative
    orders: list[float] = field(default_factory=list)

    @property
    def final_max(self) -> float:
        return max(self.derivative_residuals[-1] + self.linear_residuals[-1])

    def passed(self, threshold: float = 1e-4, min_order: float = 1.6) -> bool:
        return self.final_max < threshold and all(o >= min_order for o in self.orders)


def bbgkz_residual(fan: StackyFanData, charge_fn: Callable, c: Sequence[int], x: Sequence[float],
                   h: float = 0.02, halvings: int = 2) -> ResidualReport:
    """Finite-difference residuals of both equation families; steps are relative to x_i."""
    c = tuple(int(v) for v in c)
    x = [float(v) for v in x]
    z0 = charge_fn(c, x)
    shifted = {i: charge_fn(tuple(a + b for a, b in zip(c, fan.points[i])), x) for i in range(fan.n)}
    steps, dres, lres = [], [], []
    for k in range(halvings + 1):
        step = h / 2 ** k
        derivs = []
        for i in range(fan.n):
            hi = step * x[i]
            xp = list(x)
            xm = list(x)
            xp[i] += hi
            xm[i] -= hi
            derivs.append((charge_fn(c, xp) - charge_fn(c, xm)) / (2 * hi))
        dres.append([abs(derivs[i] - shifted[i]) / max(abs(shifted[i]), 1e-300) for i in range(fan.n)])
        lin = []
        for r in range(fan.rank):
            val = sum(fan.points[i][r] * x[i] * derivs[i] for i in range(fan.n)) + c[r] * z0
            lin.append(abs(val) / max(abs(z0), 1e-300))
        lres.append(lin)
        steps.append(step)
    orders = []
    for k in range(halvings):
        a = max(dres[k])
        b = max(dres[k + 1])
        if b > 0 and a > 0:
            orders.append(math.log2(a / b))
    return ResidualReport(c, tuple(steps), dres, lres, orders)


# ---------------------------------------------------------------- tropical cover


@dataclass
class TropicalCover:
    t: float
    eps: Fraction
    regions: dict  # (q, frozenset K) -> (nonempty, slack)

    def nonempty(self) -> set:
        return {key for key, (ok, _) in self.regions.items() if ok}

    def to_y(self, p):
        """Map a point of the tropical p-plane to y = p log t."""
        return np.asarray(p, dtype=float) * math.log(self.t)


def tropical_cover(fan: StackyFanData, t: float, eps=Fraction(1, 8), max_k: int | None = None) -> TropicalCover:
    """Regions where beta_q dominates and the beta_i, i in K, trail by at most eps."""
    eps = exact.as_fraction(eps) if not isinstance(eps, float) else Fraction(eps).limit_denominator()
    if eps <= 0:
        raise ValueError("eps must be positive")
    if t <= 1:
        raise ValueError("t must exceed 1")
    d = fan.dim
    n = fan.n
    max_k = d if max_k is None else max_k
    vbar = np.array([fan.bar(i) for i in range(n)], dtype=float)
    psi = np.array([float(p) for p in fan.psi])
    e = float(eps)
    regions = {}
    for q in range(n):
        others = [i for i in range(n) if i != q]
        for size in range(0, max_k + 1):
            for K in itertools.combinations(others, size):
                rows, rhs = [], []
                # g_i(p) = beta_q - beta_i = (v_q - v_i).p - psi_q + psi_i ; variables (p, s)
                for i in others:
                    a = vbar[q] - vbar[i]
                    const = -psi[q] + psi[i]
                    if i in K:
                        rows.append(np.r_[-a, 1.0])          # g_i >= s
                        rhs.append(const)
                        rows.append(np.r_[a, 1.0])           # eps - g_i >= s
                        rhs.append(e - const)
                    else:
                        rows.append(np.r_[-a, 1.0])          # g_i - eps >= s
                        rhs.append(const - e)
                res = linprog(np.r_[np.zeros(d), -1.0], A_ub=np.array(rows), b_ub=np.array(rhs),
                              bounds=[(None, None)] * d + [(None, 1.0)], method="highs")
                slack = -res.fun if res.status == 0 else -np.inf
                regions[(q, frozenset(K))] = (bool(slack > 1e-9), float(slack))
    return TropicalCover(float(t), eps, regions)


# ---------------------------------------------------------------- asymptotics


def _leading_data(fan: StackyFanData, c: Sequence[int]):
    dec = decompose_point(fan, c)
    if not dec.interior:
        raise NotEligible(f"{tuple(c)} is not interior")
    if not dec.asymptotics_eligible:
        raise NotEligible(f"{tuple(c)} has a coefficient larger than 1")
    stack = as_stack(fan)
    k = stack.index(dec.sector)
    ring = stack.ring(k)
    module = stack.module(k)
    omega = ring.zero(False)
    for i in range(fan.n):
        if fan.psi[i]:
            omega = omega + ring.D(i) * (float(fan.psi[i]) / TWO_PI_I)
    omega = omega.nilpotent_part()
    gam = gamma_class(stack, k)
    F = module.F(dec.I_c)
    rk = fan.rank
    deg = c[-1]
    pref = (-1) ** (rk - deg) / (TWO_PI_I ** len(dec.sigma_c) * stack.box_sizes[k])
    psi_c = sum((dec.coeffs[j] * fan.psi[i] for j, i in enumerate(dec.sigma_c)), Fraction(0))
    # coefficients of the polynomial in L = log t: int (omega^m / m!) Gamma F
    coeffs = []
    power = ring.one(False)
    for m in range(ring.top + 1):
        coeffs.append(pref * module.act(power * gam, F).integrate() / math.factorial(m))
        power = power * omega
    return psi_c, coeffs


def asymptotic_leading_term(fan: StackyFanData, c: Sequence[int]) -> Callable[[float], complex]:
    """t -> t^{psi(c)} * P(log t) from the Gamma class of the sector of c."""
    psi_c, coeffs = _leading_data(fan, tuple(int(v) for v in c))

    def leading(t: float) -> complex:
        L = math.log(t)
        return float(t) ** float(psi_c) * sum(a * L ** m for m, a in enumerate(coeffs))

    leading.exponent = psi_c
    leading.log_coefficients = coeffs
    return leading


@dataclass
class AsymptoticsReport:
    c: tuple[int, ...]
    t_grid: tuple[float, ...]
    ratios: list[complex]
    deviations: list[float]
    monotone: bool
    final_deviation: float
    fitted_exponent: float
    expected_exponent: float

    def passed(self, final_bound: float = 0.05, exponent_tol: float = 0.02) -> bool:
        exp_ok = abs(self.fitted_exponent - self.expected_exponent) <= exponent_tol * max(
            abs(self.expected_exponent), 1.0)
        return self.monotone and self.final_deviation < final_bound and exp_ok


def asymptotics_check(fan: StackyFanData, c: Sequence[int], t_grid=(20, 40, 80, 160),
                      spec: QuadratureSpec | None = None) -> AsymptoticsReport:
    """Compare period integrals along x_i = t^{-psi_i} with the predicted leading term.

    The exponent is fitted after dividing out the predicted polynomial in log t,
    because that factor bends a plain log-log slope at moderate t.
    """
    spec = spec or QuadratureSpec(rel_tol=1e-11)
    c = tuple(int(v) for v in c)
    lead = asymptotic_leading_term(fan, c)
    ratios, devs, logs, adj = [], [], [], []
    for t in t_grid:
        za = a_central_charge(fan, c, large_radius_point(fan, t), spec).value
        pred = lead(t)
        ratios.append(za / pred)
        devs.append(abs(za / pred - 1))
        logpoly = pred / float(t) ** float(lead.exponent)
        logs.append(math.log(t))
        adj.append(math.log(abs(za / logpoly)))
    slope = float(np.polyfit(logs, adj, 1)[0]) if len(t_grid) > 1 else float("nan")
    monotone = all(b < a for a, b in zip(devs, devs[1:]) if a > 1e-9)
    return AsymptoticsReport(c, tuple(t_grid), ratios, devs, monotone, devs[-1], slope, float(lead.exponent))
