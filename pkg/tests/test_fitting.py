import math

import numpy as np
import pytest

from gqd import fitting as F
from gqd import probe as Q
from gqd.effective import default_operator
from gqd.errors import RankDeficient, Unidentifiable
from gqd.expansion import EreParams, pcotdelta

C0, C2, J1 = -8.0 * math.pi, 0.05, 0.02


@pytest.fixture(scope="module")
def truth():
    return default_operator(1.0, C0, C2, J1).params


@pytest.fixture(scope="module")
def grid(truth):
    return np.linspace(0.02, 0.9 * truth.form.lam / 4, 12)


def test_noiseless_synthesis_is_exact():
    ere = EreParams(-2.0, (1.1,))
    p = np.linspace(0.05, 0.5, 8)
    data = F.synth_phase_shifts(ere, p)
    pcot = p / np.tan(data.delta)
    ref = np.array([pcotdelta(ere, q) for q in p])
    assert np.max(np.abs(pcot - ref)) < 1e-12
    assert np.all(data.sigma == 0)


def test_seed_reproducible():
    ere = EreParams(1.5, (0.4,))
    p = np.linspace(0.05, 0.5, 8)
    a = F.synth_phase_shifts(ere, p, 0.01, seed=42)
    b = F.synth_phase_shifts(ere, p, 0.01, seed=42)
    assert np.array_equal(a.delta, b.delta)


def test_noise_level():
    ere = EreParams(1.5, (0.4,))
    p = np.full(1000, 0.3)
    clean = F.synth_phase_shifts(ere, p).delta
    noisy = F.synth_phase_shifts(ere, p, 0.01, seed=7).delta
    rel = noisy / clean - 1.0
    assert abs(np.std(rel, ddof=1) / 0.01 - 1.0) < 0.2


def test_synthesis_validation(truth):
    with pytest.raises(ValueError):
        F.synth_phase_shifts(truth, [0.1, truth.form.lam / 3])
    with pytest.raises(ValueError):
        F.synth_phase_shifts(EreParams(1.0), [0.0, 0.1])


def test_fit_ere_lo_exact():
    data = F.synth_phase_shifts(EreParams(-3.7), np.linspace(0.05, 0.6, 6))
    fit = F.fit_ere(data, n_shapes=0)
    assert abs(fit.params.a + 3.7) < 1e-10 * 3.7


def test_fit_ere_nlo_exact():
    data = F.synth_phase_shifts(EreParams(2.4, (0.9,)), np.linspace(0.05, 0.6, 8))
    fit = F.fit_ere(data)
    assert abs(fit.params.a - 2.4) < 1e-8 * 2.4
    assert abs(fit.params.shapes[0] - 0.9) < 1e-8


def test_fit_ere_coverage():
    ere = EreParams(-2.0, (1.0,))
    p = np.linspace(0.05, 0.6, 15)
    hits = 0
    for seed in range(200):
        fit = F.fit_ere(F.synth_phase_shifts(ere, p, 0.01, seed=seed))
        hits += abs(fit.params.a - ere.a) <= 3 * math.sqrt(fit.covariance[0, 0])
    assert hits >= 198


def test_fit_ere_duplicates_rejected():
    data = F.synth_phase_shifts(EreParams(1.0, (0.5,)), np.full(6, 0.2))
    with pytest.raises(RankDeficient):
        F.fit_ere(data)


def test_on_shell_flat_direction(truth, grid):
    data = F.synth_phase_shifts(truth, grid)
    fit = F.fit_eft(data, truth)
    assert fit.condition_number > 1e6
    # along the flat direction C2 = C0 (2 c2 - C0 J1) stays fixed: dJ1/dc2 = 2/C0
    v = np.linalg.svd(fit.covariance)[0][:, 0]
    assert abs(v[0]) < 1e-6
    assert abs(v[2] / v[1] - 2 / C0) < 1e-4


def test_separation_requires_probe(truth, grid):
    with pytest.raises(Unidentifiable):
        F.fit_eft(F.synth_phase_shifts(truth, grid), truth, separate=True)


def test_duplicate_rows_rank_deficient(truth):
    data = F.synth_phase_shifts(truth, np.full(8, 0.1))
    with pytest.raises(RankDeficient):
        F.fit_eft(data, truth)


@pytest.mark.slow
def test_probe_data_recover_couplings(truth, grid):
    op = default_operator(1.0, C0, C2, J1)
    pot = Q.gaussian_potential()
    kins = [
        Q.make_kinematics(1.0, [0, 0, 0], [0, 0, 0.5], [0.4, 0, 0], [math.sin(0.7), 0, math.cos(0.7)]),
        Q.make_kinematics(1.0, [0, 0, 0], [0, 0, 0.3], [0.2, 0.2, 0], [0, 1, 0]),
        Q.make_kinematics(1.0, [0.1, 0, 0], [0.4, 0, 0], [0, 0.5, 0], [0, 0, 1]),
    ]
    probe = [F.ProbeDatum(k, pot, Q.amplitude_external(k, pot, op).total_regular) for k in kins]
    start = default_operator(1.0, 1.02 * C0, 0.9 * C2, 1.1 * J1).params
    fit = F.fit_eft(F.synth_phase_shifts(truth, grid), start, probe=probe)
    got = fit.params
    assert abs(got.C0 - C0) < 1e-4 * abs(C0)
    assert abs(complex(got.form.coeffs[1]).real - C2) < 1e-4 * C2
    assert abs(got.calJ[0] - J1) < 1e-4 * J1
