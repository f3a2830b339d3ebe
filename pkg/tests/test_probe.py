import math

import numpy as np
import pytest

from gqd import effective as E
from gqd import probe as Q
from gqd.errors import OffShellKinematics
from gqd.numerics import ComplexEnergy
from gqd.pionless import t_full

C0 = -8.0 * math.pi


@pytest.fixture(scope="module")
def op():
    return E.default_operator(1.0, C0, 0.05, 0.02)


@pytest.fixture(scope="module")
def kin():
    return Q.make_kinematics(1.0, [0, 0, 0], [0, 0, 0.5], [0.4, 0, 0], [math.sin(0.7), 0, math.cos(0.7)])


def test_kinematics_energy_balance():
    with pytest.raises(OffShellKinematics):
        Q.ProbeKinematics((0, 0, 0), (0.4, 0, 0), (0, 0, 0.5), (0, 0, 0.5), 1.0)
    k = Q.make_kinematics(1.0, [0.1, 0, 0], [0, 0.2, 0], [0, 0.3, 0], [1, 0, 0])
    assert abs(k.energy_in - k.energy_out) < 1e-12


def test_zero_potential(op, kin):
    pot = Q.PotentialSpec(lambda q: 0.0 * np.asarray(q), 1.0)
    parts = Q.amplitude_external(kin, pot, op)
    assert parts.a00_coeff == 0 and parts.a01 == parts.a10 == parts.a11 == 0
    z = ComplexEnergy(kin.energy_in, "above")
    me = Q.t_pot(op, pot, z, kin.P1, kin.p2, kin.P1, kin.p1)
    w = z.shifted(float(np.dot(kin.P1, kin.P1)) / 4.0)
    form = op.params.form
    t1 = np.conj(form(np.linalg.norm(kin.p2))) * form(np.linalg.norm(kin.p1)) * t_full(op.params, w)
    assert me.t1_coeff == t1
    assert me.v_coeff == 0 and me.regular == 0


def test_free_nucleons(kin):
    parts = Q.amplitude_external(kin, Q.gaussian_potential(), None)
    assert parts.a01 == parts.a10 == parts.a11 == 0
    assert parts.a00_coeff == -math.exp(-0.16)


def test_a11_against_bruteforce_oracle(op, kin):
    q = float(np.linalg.norm(kin.q))
    p1, p2 = float(np.linalg.norm(kin.p1)), float(np.linalg.norm(kin.p2))
    form = op.params.form
    oracle, _ = Q.loop_integral_oracle(form, 1.0, q, p1, p2)
    loop = Q.loop_integral_onshell(form, 1.0, q, p1, p2)
    assert abs(loop - oracle) < 1e-4 * abs(oracle)


def test_linear_in_strength(op, kin):
    z = ComplexEnergy(kin.energy_in, "above")
    h = 1e-3

    def regular(s):
        return Q.t_pot(op, Q.gaussian_potential(s), z, kin.P2, kin.p2, kin.P1, kin.p1).regular
    fd = (regular(h) - regular(-h)) / (2 * h)
    assert abs(fd - regular(1.0)) < 1e-8 * abs(regular(1.0))


def test_hermitian_below_threshold(op):
    z = -0.5
    P1, P2 = np.array([0.0, 0.0, 0.0]), np.array([0.3, 0.0, 0.0])
    p1, p2 = np.array([0.0, 0.2, 0.1]), np.array([0.1, 0.0, 0.4])
    pot = Q.gaussian_potential()
    fwd = Q.t_pot(op, pot, z, P2, p2, P1, p1).regular
    bwd = Q.t_pot(op, pot, z, P1, p1, P2, p2).regular
    assert abs(fwd - np.conj(bwd)) < 1e-10 * abs(fwd)


def test_decomposition_closure(op, kin):
    pot = Q.gaussian_potential()
    parts = Q.amplitude_external(kin, pot, op)
    me = Q.t_pot(op, pot, ComplexEnergy(kin.energy_in, "above"), kin.P2, kin.p2, kin.P1, kin.p1)
    assert abs(-me.regular - parts.total_regular) < 1e-8 * abs(parts.total_regular)
    assert me.v_coeff == -parts.a00_coeff


def test_time_reversal(op, kin):
    pot = Q.gaussian_potential()
    fwd = Q.amplitude_external(kin, pot, op, side="above")
    rev = Q.amplitude_external(kin.reversed(), pot, op, side="below")
    assert abs(fwd.a01 - np.conj(rev.a10)) < 1e-10 * abs(fwd.a01)
    assert abs(fwd.a11 - np.conj(rev.a11)) < 1e-10 * abs(fwd.a11)


def test_off_shell_sensitivity(op, kin):
    c2b = 0.08
    other = E.default_operator(1.0, C0, c2b, 0.02 + 2 * (c2b - 0.05) / C0)
    pot = Q.gaussian_potential()
    a = Q.amplitude_external(kin, pot, op).a11
    b = Q.amplitude_external(kin, pot, other).a11
    assert abs(a - b) > 1e-3 * abs(a)


def test_forward_configuration_rejected(op):
    kin = Q.make_kinematics(1.0, [0, 0, 0], [0, 0, 0.5], [0.0, 0, 0], [0, 0, 1])
    with pytest.raises(ValueError):
        Q.amplitude_external(kin, Q.gaussian_potential(), op)


def test_potential_validation():
    with pytest.raises(ValueError):
        Q.PotentialSpec(lambda q: np.ones_like(np.asarray(q, dtype=float)))
