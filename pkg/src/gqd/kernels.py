"""Hot loops of the contour and loop-integral code.

Each kernel exists twice: an explicit loop compiled by numba, and a
vectorized numpy twin.  ``USE_NUMBA`` picks one at import time; both are
importable so the benchmark and the tests can compare them directly.
"""
import numpy as np

from ._accel import HAVE_NUMBA, njit

USE_NUMBA = HAVE_NUMBA


# -- sum_j w_j / (z_n - E_j) ----------------------------------------------

@njit
def _resolvent_sums_loop(zs, energies, weights):
    out = np.zeros(zs.shape[0], dtype=np.complex128)
    for n in range(zs.shape[0]):
        acc = 0j
        z = zs[n]
        for j in range(energies.shape[0]):
            acc += weights[j] / (z - energies[j])
        out[n] = acc
    return out


CHUNK = 1 << 21  # matrix elements per numpy block


def _rows(n_rows, n_cols):
    step = max(1, CHUNK // max(n_cols, 1))
    for start in range(0, n_rows, step):
        yield slice(start, min(start + step, n_rows))


def _resolvent_sums_numpy(zs, energies, weights):
    out = np.empty(zs.shape[0], dtype=np.complex128)
    for sl in _rows(zs.shape[0], energies.shape[0]):
        out[sl] = (weights[None, :] / (zs[sl, None] - energies[None, :])).sum(axis=1)
    return out


# -- sum_n c_n / (z_n - E_j) ----------------------------------------------

@njit
def _contour_synthesis_loop(zs, coeffs, energies):
    out = np.zeros(energies.shape[0], dtype=np.complex128)
    for j in range(energies.shape[0]):
        acc = 0j
        e = energies[j]
        for n in range(zs.shape[0]):
            acc += coeffs[n] / (zs[n] - e)
        out[j] = acc
    return out


def _contour_synthesis_numpy(zs, coeffs, energies):
    out = np.empty(energies.shape[0], dtype=np.complex128)
    for sl in _rows(energies.shape[0], zs.shape[0]):
        out[sl] = (coeffs[None, :] / (zs[None, :] - energies[sl, None])).sum(axis=1)
    return out


# -- sum_{n,n'} c_n conj(c_n') (R(w_n') - R(z_n)) / (z_n - w_n'),  w = conj z

@njit
def _norm_quadratic_loop(zs, coeffs, r_z, r_zbar):
    acc = 0j
    for n in range(zs.shape[0]):
        row = 0j
        for q in range(zs.shape[0]):
            w = np.conj(zs[q])
            row += np.conj(coeffs[q]) * (r_zbar[q] - r_z[n]) / (zs[n] - w)
        acc += coeffs[n] * row
    return acc.real


def _norm_quadratic_numpy(zs, coeffs, r_z, r_zbar):
    acc = 0j
    w = np.conj(zs)
    cbar = np.conj(coeffs)
    for sl in _rows(zs.shape[0], zs.shape[0]):
        kern = (r_zbar[None, :] - r_z[sl, None]) / (zs[sl, None] - w[None, :])
        acc += coeffs[sl] @ (kern @ cbar)
    return float(acc.real)


# -- sum_i w_i num_i / ((d1_i + i eta)(d2_i + i eta)) ----------------------

@njit
def _eta_grid_sum_loop(weights, numer, d1, d2, eta):
    acc = 0j
    ie = 1j * eta
    for i in range(weights.shape[0]):
        acc += weights[i] * numer[i] / ((d1[i] + ie) * (d2[i] + ie))
    return acc


def _eta_grid_sum_numpy(weights, numer, d1, d2, eta):
    return complex(np.sum(weights * numer / ((d1 + 1j * eta) * (d2 + 1j * eta))))


def _c(x):
    return np.ascontiguousarray(x, dtype=np.complex128)


def _r(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def resolvent_sums(zs, energies, weights, use_numba=None):
    use = USE_NUMBA if use_numba is None else use_numba
    fn = _resolvent_sums_loop if use else _resolvent_sums_numpy
    return fn(_c(zs), _r(energies), _c(weights))


def contour_synthesis(zs, coeffs, energies, use_numba=None):
    use = USE_NUMBA if use_numba is None else use_numba
    fn = _contour_synthesis_loop if use else _contour_synthesis_numpy
    return fn(_c(zs), _c(coeffs), _r(energies))


def norm_quadratic(zs, coeffs, r_z, r_zbar, use_numba=None):
    use = USE_NUMBA if use_numba is None else use_numba
    fn = _norm_quadratic_loop if use else _norm_quadratic_numpy
    return float(fn(_c(zs), _c(coeffs), _c(r_z), _c(r_zbar)))


def eta_grid_sum(weights, numer, d1, d2, eta, use_numba=None):
    use = USE_NUMBA if use_numba is None else use_numba
    fn = _eta_grid_sum_loop if use else _eta_grid_sum_numpy
    return complex(fn(_r(weights), _c(numer), _r(d1), _r(d2), float(eta)))
