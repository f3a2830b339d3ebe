import math

import numpy as np
import pytest
from scipy import integrate

from gqd import pionless as P
from gqd.effective import default_operator
from gqd.errors import IndexOutOfOrder, PoleHit
from gqd.numerics import ComplexEnergy, find_root

FOUR_PI = 4.0 * math.pi


@pytest.fixture(scope="module")
def nlo():
    return default_operator(1.0, -8.0 * math.pi, 0.05, 0.02).params


def _big_m_oracle(params, z):
    """M(z) = z m^2/(2 pi^2) int F1(k) / (z m - k^2) dk with scipy's QUADPACK."""
    m = params.m
    f1 = params.form.f1

    def integrand(k, part):
        v = complex(f1(np.array([k]))[0]) / (z * m - k * k)
        return v.real if part == 0 else v.imag
    re = integrate.quad(integrand, 0, np.inf, args=(0,), epsabs=1e-14, epsrel=1e-12, limit=400)[0]
    im = integrate.quad(integrand, 0, np.inf, args=(1,), epsabs=1e-14, epsrel=1e-12, limit=400)[0]
    return z * m * m / (2.0 * math.pi ** 2) * complex(re, im)


def test_m0_values():
    assert abs(P.m0(-1.0, 1.0) - 1.0 / FOUR_PI) < 1e-16
    assert abs(P.m0(ComplexEnergy.on_shell(1.0, 1.0), 1.0) + 1j / FOUR_PI) < 1e-16
    assert P.m0(0.0, 1.0) == 0


def test_big_m_trivial_form_factor():
    prm = P.EftParams(1.0, 3.0)
    for z in (-1.0, 0.5 + 0.5j, ComplexEnergy(0.3, "above")):
        assert P.big_m(prm, z) == 0


@pytest.mark.parametrize("z", [-0.7, 0.4 + 0.9j, -2.0 - 0.3j])
def test_big_m_against_independent_quadrature(nlo, z):
    ref = _big_m_oracle(nlo, z)
    assert abs(P.big_m(nlo, z) - ref) < 1e-8 * max(1.0, abs(ref))


def test_big_m_on_cut_is_limit_of_off_axis(nlo):
    p = 0.6
    on = P.big_m(nlo, ComplexEnergy.on_shell(p, 1.0))
    etas = [0.02 / 2 ** i for i in range(4)]
    table = [P.big_m(nlo, p * p + 1j * e) for e in etas]
    for level in range(1, len(table)):
        fac = 2.0 ** level
        table = [(fac * table[i + 1] - table[i]) / (fac - 1.0) for i in range(len(table) - 1)]
    assert abs(on - table[0]) < 1e-7 * abs(on)


def test_term_decomposition_slope(nlo):
    lam2 = nlo.form.lam ** 2
    zs = -np.logspace(-4, -2, 7) * lam2
    rem = [abs(P.big_m(nlo, z) - P.m_n(nlo, z, 1)) for z in zs]
    slope = np.polyfit(np.log(-zs), np.log(rem), 1)[0]
    assert abs(slope - 2.0) < 0.1


def test_m_n_examples():
    only_j = P.EftParams(1.0, 1.0, P.FormFactor((1.0, 0.0)), (1.0,))
    assert abs(P.m_n(only_j, -1.0, 1) - 1.0) < 1e-15
    c2 = 0.3
    only_c = P.EftParams(1.0, 1.0, P.FormFactor((1.0, c2)), (0.0,))
    assert abs(P.m_n(only_c, -1.0, 1) + c2 / (2 * math.pi)) < 1e-15
    with pytest.raises(IndexOutOfOrder):
        P.m_n(only_c, -1.0, 2)


def test_lo_unitary_limit():
    assert abs(P.lo_t(-1.0, 1.0, math.inf) + FOUR_PI) < 1e-13


def test_lo_bound_state_root():
    a = 1.3
    C0 = FOUR_PI * a
    zb = find_root(lambda x: 1.0 / C0 - P.m0(x, 1.0).real, -10.0, -1e-6, xtol=1e-15)
    assert abs(zb + 1.0 / a ** 2) < 1e-12
    assert abs(P.bound_state_energy(1.0, C0) - zb) < 1e-12
    with pytest.raises(PoleHit):
        P.lo_t(-1.0 / a ** 2, 1.0, C0)


def test_lo_threshold_amplitude():
    assert abs(-P.lo_t(0.0, 1.0, FOUR_PI) + FOUR_PI) < 1e-13
    p, a = 0.7, 1.0
    amp = -P.lo_t(ComplexEnergy.on_shell(p, 1.0), 1.0, FOUR_PI * a)
    assert abs(amp - (-FOUR_PI / (1.0 / a + 1j * p))) < 1e-13


def test_t_full_reduces_to_lo():
    prm = P.EftParams(1.0, 5.0)
    for z in (-0.4, 1 + 2j, ComplexEnergy(0.8, "above")):
        assert abs(P.t_full(prm, z) - P.lo_t(z, 1.0, 5.0)) < 1e-15


def test_offshell_at_zero_momenta(nlo):
    z = 0.3 - 0.8j
    assert P.t_offshell(nlo, z, 0.0, 0.0) == P.t_full(nlo, z)


def test_gde_residual_examples(nlo):
    lo = P.lo_evaluator(1.0, FOUR_PI)
    assert P.gde_residual(lo, -1 + 1j, 0.2, 0.4) < 1e-8
    assert P.gde_residual(P.offshell_evaluator(nlo), 0.5 + 0.6j, 0.3, 0.9) < 1e-6
    faulty = lambda z, a, b: 1.01 * lo(z, a, b)  # noqa: E731
    assert P.gde_residual(faulty, -1 + 1j, 0.2, 0.4) > 1e-3


def test_gde_residual_rejects_cut():
    with pytest.raises(ValueError):
        P.gde_residual(P.lo_evaluator(1.0, FOUR_PI), ComplexEnergy(1.0, "above"), 0.1, 0.1)


def test_hermiticity_below_threshold(nlo):
    a = complex(P.t_offshell(nlo, -0.6, 0.4, 1.1))
    b = complex(P.t_offshell(nlo, -0.6, 1.1, 0.4))
    assert abs(a - np.conj(b)) < 1e-12 * abs(a)


def test_optical_theorem_full(nlo):
    for p in np.linspace(0.02, nlo.form.lam / 4, 7):
        amp = -complex(P.t_offshell(nlo, ComplexEnergy.on_shell(p, 1.0), p, p))
        assert abs(amp.imag - p / FOUR_PI * abs(amp) ** 2) < 1e-10 * abs(amp)


def test_rank_one(nlo):
    z = 0.2 + 0.5j
    t = lambda a, b: complex(P.t_offshell(nlo, z, a, b))  # noqa: E731
    assert abs(t(0.3, 1.0) * t(2.0, 0.5) - t(0.3, 0.5) * t(2.0, 1.0)) < 1e-12 * abs(t(0.3, 1.0) * t(2.0, 0.5))


def test_boundary_condition_consistency(nlo):
    # t + 1/(M0+M) + C0^-1/(M0+M)^2 = O(C0^-2 / (M0+M)^3) in the high-energy window
    lam2 = nlo.form.lam ** 2
    ratios = []
    for frac in (0.1, 0.3, 1.0):
        z = -frac * lam2
        mm = P.m0(z, 1.0) + P.big_m(nlo, z)
        lhs = P.t_full(nlo, z) + 1.0 / mm + 1.0 / (nlo.C0 * mm ** 2)
        ratios.append(abs(lhs) / abs(1.0 / (nlo.C0 ** 2 * mm ** 3)))
    assert max(ratios) < 2.0


def test_form_factor_validation():
    with pytest.raises(ValueError):
        P.FormFactor((2.0,))
    with pytest.raises(ValueError):
        P.FormFactor((1.0, 50.0), lam=1.0)
    with pytest.raises(ValueError):
        P.FormFactor((1.0, 0.1), lam=1.0, tail=lambda k: np.asarray(k) ** 2)
    with pytest.raises(ValueError):
        P.EftParams(1.0, 1.0, P.FormFactor((1.0, 0.1)), ())
