import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import integrate

from toricbranes import kernels
from toricbranes._backend import HAVE_NUMBA
from toricbranes.quadrature import LogSumExpIntegrand, adaptive_cubature

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba backend disabled or missing")


def random_cells(n, d, seed=0):
    rng = np.random.default_rng(seed)
    lo = rng.uniform(-6, 6, size=(n, d))
    hi = lo + rng.uniform(0.1, 1.5, size=(n, d))
    return lo, hi


P2_VBAR = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0], [0.0, 0.0]])
P2_LOGX = np.log([1.0, 1.2, 0.8, 30.0])


@needs_numba
def test_cell_backends_agree():
    lo, hi = random_cells(300, 2)
    a = kernels.evaluate_cells(lo, hi, P2_VBAR, P2_LOGX, np.zeros(2), 1.0, 0.0, use_numba=True)
    b = kernels.evaluate_cells(lo, hi, P2_VBAR, P2_LOGX, np.zeros(2), 1.0, 0.0, use_numba=False)
    assert np.allclose(a[0], b[0], rtol=1e-13)
    assert np.allclose(a[1], b[1], rtol=1e-13)
    # the per-axis indicators are differences of rules, so only agree to rounding of the cell value
    scale = np.abs(a[0])[:, None]
    assert np.all(np.abs(a[2] - b[2]) <= 1e-13 * scale)


@needs_numba
def test_count_backends_agree():
    amat = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -2, -1]], dtype=np.int64)
    bvec = np.array([0, 0, 0, -12], dtype=np.int64)
    lo, hi = np.array([-1, -1, -1]), np.array([13, 13, 13])
    assert kernels.count_points(amat, bvec, lo, hi, use_numba=True) == \
        kernels.count_points(amat, bvec, lo, hi, use_numba=False)


def test_count_triangle_exact():
    # lattice points of the triangle x, y >= 0, x + y <= s: (s+1)(s+2)/2
    amat = np.array([[1, 0], [0, 1], [-1, -1]], dtype=np.int64)
    for s in (0, 1, 7, 30):
        bvec = np.array([0, 0, -s], dtype=np.int64)
        got = kernels.count_points(amat, bvec, np.array([-2, -2]), np.array([s + 2, s + 2]))
        assert got == (s + 1) * (s + 2) // 2


def test_single_cell_matches_scipy():
    lo, hi = np.array([[-1.0, -0.5]]), np.array([[0.5, 1.0]])
    kron, gauss, _ = kernels.evaluate_cells(lo, hi, P2_VBAR, P2_LOGX, np.zeros(2), 1.0, 0.0)

    def f(y2, y1):
        return 1.0 / np.sum(np.exp(P2_LOGX + P2_VBAR @ np.array([y1, y2])))

    ref, _ = integrate.dblquad(f, -1.0, 0.5, -0.5, 1.0, epsabs=0, epsrel=1e-13)
    assert kron[0] == pytest.approx(ref, rel=1e-12)
    assert abs(gauss[0] - ref) < 1e-6 * ref


def test_adaptive_cubature_on_gaussian_like_integrand():
    # 1 / (e^y + e^-y)^2 integrates to 1/2 over the line
    f = LogSumExpIntegrand(np.array([[1.0], [-1.0]]), np.zeros(2), np.zeros(1), 2.0)
    res = adaptive_cubature(f, np.array([-40.0]), np.array([40.0]), rel_tol=1e-12)
    assert res.value == pytest.approx(0.5, rel=1e-12)


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("", "numba")])
def test_env_flag_selects_backend(flag, expected):
    if expected == "numba" and not HAVE_NUMBA and not os.environ.get("TORICBRANES_NO_NUMBA"):
        pytest.skip("numba not installed")
    env = dict(os.environ, TORICBRANES_NO_NUMBA=flag)
    code = ("from toricbranes._backend import backend_name;"
            "from toricbranes.fanio import load_fan;"
            "from toricbranes.periods import a_central_charge;"
            "z = a_central_charge(load_fan('line'), (1, 2), (1.0, 1.0)).value;"
            "print(backend_name(), repr(z.real))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, value = out.stdout.split()
    assert name == expected
    assert float(value) == pytest.approx(-1 / (4 * np.pi ** 2), rel=1e-10)
