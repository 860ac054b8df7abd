"""Taylor coefficients of Gamma-type functions at rational base points.

Two backends share one interface: scipy (double precision) and mpmath
(extended precision, rounded to complex128 at the end).  The active backend
is chosen with :func:`set_precision`.
"""

from __future__ import annotations

import math
from functools import lru_cache
from contextlib import contextmanager
from fractions import Fraction

import mpmath
import numpy as np
from scipy import special as sp

from .errors import PolygammaAtNonpositiveInteger

_STATE = {"precision": "double"}
_EXTENDED_DPS = 40


def set_precision(mode: str) -> None:
    if mode not in ("double", "extended"):
        raise ValueError(f"precision must be 'double' or 'extended', not {mode!r}")
    _STATE["precision"] = mode


def get_precision() -> str:
    return _STATE["precision"]


@contextmanager
def precision(mode: str):
    old = get_precision()
    set_precision(mode)
    try:
        yield
    finally:
        set_precision(old)


def loggamma_taylor(a, order: int) -> np.ndarray:
    """Coefficients of log Gamma(a + x) in powers of x, for real a > 0."""
    if a <= 0:
        raise PolygammaAtNonpositiveInteger(f"argument {a} must be positive here")
    out = np.zeros(order + 1)
    if get_precision() == "extended":
        with mpmath.workdps(_EXTENDED_DPS):
            am = mpmath.mpf(Fraction(a).numerator) / Fraction(a).denominator
            out[0] = float(mpmath.loggamma(am))
            for k in range(1, order + 1):
                out[k] = float(mpmath.psi(k - 1, am) / mpmath.factorial(k))
        return out
    af = float(a)
    out[0] = sp.gammaln(af)
    for k in range(1, order + 1):
        out[k] = float(sp.polygamma(k - 1, af)) / math.factorial(k)
    return out


def series_exp(coeffs: np.ndarray) -> np.ndarray:
    """exp of a power series given by its coefficients (same truncation order)."""
    c = np.asarray(coeffs, dtype=complex)
    n = len(c)
    out = np.zeros(n, dtype=complex)
    out[0] = np.exp(c[0])
    # f' = c' f
    for k in range(1, n):
        out[k] = sum(j * c[j] * out[k - j] for j in range(1, k + 1)) / k
    return out


def series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = min(len(a), len(b))
    return np.convolve(a[:n], b[:n])[:n]


def series_inv(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    n = len(a)
    out = np.zeros(n, dtype=complex)
    out[0] = 1 / a[0]
    for k in range(1, n):
        out[k] = -sum(a[j] * out[k - j] for j in range(1, k + 1)) / a[0]
    return out


def gamma_taylor(a, order: int) -> np.ndarray:
    """Coefficients of Gamma(a + x) for real a > 0."""
    return series_exp(loggamma_taylor(a, order)).real


def rgamma_parts(a, order: int) -> tuple[complex, np.ndarray, int]:
    return _rgamma_parts(Fraction(a), order, get_precision())


@lru_cache(maxsize=4096)
def _rgamma_parts(a: Fraction, order: int, _mode: str) -> tuple[complex, np.ndarray, int]:
    """Split 1/Gamma(a + x) into (log scale, normalised series, power of x).

    1/Gamma(a + x) = exp(scale) * x**p * series(x), with series(0) = 1.  The
    recurrence Gamma(z + 1) = z Gamma(z) moves nonpositive a into (0, 1];
    each vanishing linear factor contributes one power of x.
    """
    a = Fraction(a)
    shift = 0
    if a <= 0:
        shift = int(-math.floor(a)) if a.denominator != 1 else int(-a) + 1
    base = a + shift
    lg = loggamma_taylor(base, order)
    scale = complex(-lg[0])
    series = series_exp(np.concatenate([[0.0], -lg[1:]]))
    power = 0
    for k in range(shift):
        root = a + k
        if root == 0:
            power += 1
            continue
        scale += complex(np.log(complex(float(root))))
        lin = np.zeros(order + 1, dtype=complex)
        lin[0] = 1.0
        if order >= 1:
            lin[1] = 1.0 / float(root)
        series = series_mul(series, lin)
    series.setflags(write=False)
    return scale, series, power


def euler_gamma() -> float:
    if get_precision() == "extended":
        with mpmath.workdps(_EXTENDED_DPS):
            return float(mpmath.euler)
    return float(np.euler_gamma)
