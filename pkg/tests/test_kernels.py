import subprocess
import sys

import numpy as np
import pytest

from gqd import kernels as K
from gqd._accel import HAVE_NUMBA

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed or disabled")


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(5)
    zs = rng.uniform(-5, 50, 300) + 1j * rng.uniform(0.05, 0.5, 300)
    e = np.sort(rng.uniform(0, 40, 500))
    w = rng.standard_normal(500) + 1j * rng.standard_normal(500)
    c = rng.standard_normal(300) + 1j * rng.standard_normal(300)
    r = rng.standard_normal(300) + 1j * rng.standard_normal(300)
    return zs, e, w, c, r


def test_numpy_resolvent_against_direct_sum(data):
    zs, e, w, _, _ = data
    got = K.resolvent_sums(zs, e, w, use_numba=False)
    ref = np.array([np.sum(w / (z - e)) for z in zs])
    assert np.allclose(got, ref, rtol=1e-13, atol=0)


def test_numpy_norm_quadratic_is_real_form(data):
    zs, _, _, c, r = data
    val = K.norm_quadratic(zs, c, r, np.conj(r), use_numba=False)
    assert isinstance(val, float) and np.isfinite(val)


@needs_numba
def test_twins_agree(data):
    zs, e, w, c, r = data
    assert np.allclose(K.resolvent_sums(zs, e, w, use_numba=True), K.resolvent_sums(zs, e, w, use_numba=False),
                       rtol=1e-12, atol=0)
    assert np.allclose(K.contour_synthesis(zs, c, e, use_numba=True),
                       K.contour_synthesis(zs, c, e, use_numba=False), rtol=1e-12, atol=0)
    a = K.norm_quadratic(zs, c, r, np.conj(r), use_numba=True)
    b = K.norm_quadratic(zs, c, r, np.conj(r), use_numba=False)
    assert abs(a - b) < 1e-11 * max(1.0, abs(a))
    d1, d2 = e - 20.0, e - 10.0
    a = K.eta_grid_sum(np.abs(w), w, d1, d2, 1e-3, use_numba=True)
    b = K.eta_grid_sum(np.abs(w), w, d1, d2, 1e-3, use_numba=False)
    assert abs(a - b) < 1e-11 * abs(a)


def test_disable_switch():
    code = "import gqd.kernels as k, gqd._accel as a; print(a.HAVE_NUMBA, k.USE_NUMBA)"
    env = {"GQD_DISABLE_NUMBA": "1", "PATH": ""}
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
    assert out.stdout.split() == ["False", "False"]
