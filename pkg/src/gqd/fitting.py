"""Parameter estimation from synthetic phase shifts and external-probe amplitudes.

On-shell data at order N fix only the couplings C_0 ... C_2N, so the split
of C_2 into c_2 and J_1 shows up as a flat direction of the Jacobian.
Probe amplitudes depend on the off-shell form factor and lift it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .effective import default_operator
from .errors import NonConvergence, RankDeficient, SignMismatch, Unidentifiable
from .expansion import EreParams, c2n_recurrence, invert_series, pcotdelta
from .pionless import EftParams, FormFactor
from .probe import PotentialSpec, ProbeKinematics, amplitude_external

FOUR_PI = 4.0 * math.pi
RANK_TOL = 1e-8


@dataclass(frozen=True)
class PhaseShiftData:
    """Samples (p, delta, sigma); sigma is the absolute standard error of delta."""

    p: np.ndarray
    delta: np.ndarray
    sigma: np.ndarray
    m: float = 1.0

    def __post_init__(self):
        for name in ("p", "delta", "sigma"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.p.shape == self.delta.shape == self.sigma.shape):
            raise ValueError("p, delta and sigma must have equal length")

    def __len__(self):
        return self.p.size


@dataclass(frozen=True)
class ProbeDatum:
    kin: ProbeKinematics
    pot: PotentialSpec
    value: complex
    sigma: float = 0.0


def _pcot_to_delta(p, pcot):
    """delta in (0, pi) from p cot(delta)."""
    return np.arctan2(p, pcot)


def eft_pcotdelta(params: EftParams, p, order: Optional[int] = None) -> np.ndarray:
    """Order-N on-shell model: p cot(delta) = -(4pi/m) [1/S]_N with S = sum C_2n p^2n.

    [.]_N keeps powers up to p^2N, so only C_0 .. C_2N enter and c_2n, J_n
    appear through those combinations alone.
    """
    n = params.form.order if order is None else order
    C = c2n_recurrence(params.C0, params.form.coeffs, params.calJ, n)
    inv = invert_series([complex(c).real for c in C], n)
    x = np.asarray(p, dtype=float) ** 2
    poly = np.zeros_like(x)
    for coeff in reversed(inv):
        poly = poly * x + coeff
    return -FOUR_PI / params.m * poly


def synth_phase_shifts(source, p, noise: float = 0.0, seed: Optional[int] = None, m: float = 1.0) -> PhaseShiftData:
    """Noisy delta(p) with Gaussian multiplicative noise delta (1 + noise * eps).

    ``source`` is EreParams, or EftParams through its order-N on-shell
    model ``eft_pcotdelta``.  For EftParams the grid must lie inside (0, lam/4).
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("momenta must be positive")
    if isinstance(source, EreParams):
        pcot = np.array([pcotdelta(source, pi) for pi in p])
    elif isinstance(source, EftParams):
        if np.any(p >= source.form.lam / 4.0):
            raise ValueError("momenta must stay below lam/4")
        m = source.m
        pcot = eft_pcotdelta(source, p)
    else:
        raise TypeError("source must be EreParams or EftParams")
    delta = _pcot_to_delta(p, pcot)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(p.size)
    return PhaseShiftData(p, delta * (1.0 + noise * eps), noise * np.abs(delta), m)


@dataclass(frozen=True)
class EreFit:
    params: EreParams
    covariance: np.ndarray
    chi2: float
    dof: int


def _distinct_rows(x: np.ndarray) -> int:
    return np.unique(np.round(x, 14)).size


def fit_ere(data: PhaseShiftData, n_shapes: int = 1) -> EreFit:
    """Weighted linear least squares of p cot(delta) in powers of p^2.

    sigma_y = p sigma_delta / sin^2(delta); all-zero sigma means unit weights.
    The covariance is for (a, r_0, ...) and is propagated from the
    polynomial coefficients.
    """
    n_par = 1 + n_shapes
    p, d = data.p, data.delta
    if _distinct_rows(p) < n_par + 1:
        raise RankDeficient(f"need at least {n_par + 1} distinct momenta for {n_par} parameters")
    y = p / np.tan(d)
    sig_y = p * data.sigma / np.sin(d) ** 2
    weighted = bool(np.all(sig_y > 0))
    w = 1.0 / sig_y if weighted else np.ones_like(y)
    A = np.vander(p * p, n_par, increasing=True)
    Aw = A * w[:, None]
    u, s, vt = np.linalg.svd(Aw, full_matrices=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficient("design matrix is numerically rank deficient")
    coef = vt.T @ ((u.T @ (y * w)) / s)
    resid = (A @ coef - y) * w
    chi2 = float(resid @ resid)
    dof = y.size - n_par
    cov_c = (vt.T / s ** 2) @ vt
    if not weighted:
        cov_c = cov_c * (chi2 / dof if dof > 0 else 0.0)
    # a = -1/c0, r_n = 2 c_{n+1}
    jac = np.zeros((n_par, n_par))
    jac[0, 0] = 1.0 / coef[0] ** 2
    for i in range(1, n_par):
        jac[i, i] = 2.0
    cov = jac @ cov_c @ jac.T
    params = EreParams(-1.0 / coef[0], tuple(2.0 * coef[1:]))
    return EreFit(params, cov, chi2, dof)


@dataclass
class EftFit:
    params: EftParams
    covariance: np.ndarray
    singular_values: np.ndarray
    iterations: int
    cost: float
    names: tuple = field(default_factory=tuple)

    @property
    def condition_number(self) -> float:
        s = self.singular_values
        return float(s[0] / s[-1]) if s[-1] > 0 else math.inf


def _pack(params: EftParams) -> np.ndarray:
    form = params.form
    return np.array([params.C0] + [complex(c).real for c in form.coeffs[1:]] + list(params.calJ), dtype=float)


def _names(order: int) -> tuple:
    return ("C0",) + tuple(f"c{2 * n}" for n in range(1, order + 1)) + tuple(f"J{n}" for n in range(1, order + 1))


def _unpack(theta: np.ndarray, order: int, m: float, lam: float) -> EftParams:
    coeffs = (1.0,) + tuple(float(c) for c in theta[1:order + 1])
    calJ = tuple(float(j) for j in theta[order + 1:])
    return EftParams(m, float(theta[0]), FormFactor(coeffs, lam=lam), calJ)


def _probe_model(theta: np.ndarray, m: float, probe: Sequence[ProbeDatum]) -> np.ndarray:
    op = default_operator(m, float(theta[0]), float(theta[1]), float(theta[2]))
    vals = [amplitude_external(d.kin, d.pot, op).total_regular for d in probe]
    return np.array(vals, dtype=complex)


def _residual_fn(on_shell: PhaseShiftData, probe, order: int, lam: float):
    m = on_shell.m
    w_d = 1.0 / on_shell.sigma if np.all(on_shell.sigma > 0) else np.ones(len(on_shell))
    if probe:
        # without a quoted error a probe residual is taken relative to |value|
        scale = np.array([d.sigma if d.sigma > 0 else max(abs(d.value), 1e-300) for d in probe])
        obs = np.array([d.value for d in probe])

    def res(theta):
        prm = _unpack(theta, order, m, lam)
        pcot = eft_pcotdelta(prm, on_shell.p)
        r = [(_pcot_to_delta(on_shell.p, pcot) - on_shell.delta) * w_d]
        if probe:
            diff = (_probe_model(theta, m, probe) - obs) / scale
            r += [diff.real, diff.imag]
        return np.concatenate(r)
    return res


def _jacobian(res: Callable, theta: np.ndarray, r0: np.ndarray, steps: np.ndarray) -> np.ndarray:
    J = np.empty((r0.size, theta.size))
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = steps[j]
        J[:, j] = (res(theta + e) - res(theta - e)) / (2.0 * steps[j])
    return J


def fit_eft(on_shell: PhaseShiftData, initial: EftParams, probe: Optional[Sequence[ProbeDatum]] = None,
            order: Optional[int] = None, separate: Optional[bool] = None,
            max_iter: int = 200, step_tol: float = 1e-10) -> EftFit:
    """Damped Gauss-Newton fit of (C0, c_2..c_2N, J_1..J_N).

    The on-shell model is ``eft_pcotdelta`` at order N; probe data are
    total regular Born amplitudes with the default Gaussian tail (N = 1).
    ``separate`` asks for c_2 and J_1 individually and defaults to whether
    probe data are present.
    """
    order = initial.form.order if order is None else order
    if order < 1:
        raise ValueError("order must be at least 1")
    if separate is None:
        separate = bool(probe)
    if separate and not probe:
        raise Unidentifiable("on-shell data fix only C_0..C_2N; c_2n and J_n need probe data")
    if probe and order != 1:
        raise ValueError("probe fits are available at order 1 (default tail) only")
    n_par = 1 + 2 * order
    if _distinct_rows(on_shell.p) < order + 2:
        raise RankDeficient("too few distinct momenta for the identifiable couplings")
    lam = initial.form.lam
    res = _residual_fn(on_shell, probe, order, lam)
    theta = _pack(initial)[:n_par]
    typical = np.maximum(np.abs(theta), 1e-3 * np.max(np.abs(theta)))

    def safe_res(th):
        try:
            return res(th)
        except (SignMismatch, NonConvergence, ValueError):
            return None

    r = safe_res(theta)
    if r is None:
        raise ValueError("initial parameters are outside the model domain")
    cost = float(r @ r)
    damping = 1e-3
    it = 0
    for it in range(1, max_iter + 1):
        J = _jacobian(res, theta, r, 1e-6 * typical)
        Js = J * typical
        g = Js.T @ r
        H = Js.T @ Js
        diag = np.diag(H).copy()
        diag[diag == 0] = 1.0
        accepted = False
        while damping < 1e16:
            try:
                step_s = -np.linalg.solve(H + damping * np.diag(diag), g)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            trial = theta + step_s * typical
            r_new = safe_res(trial)
            if r_new is not None and float(r_new @ r_new) <= cost:
                accepted = True
                break
            damping *= 4.0
        if not accepted:
            break
        rel_step = float(np.max(np.abs(trial - theta) / typical))
        theta, r, cost = trial, r_new, float(r_new @ r_new)
        damping = max(damping / 3.0, 1e-12)
        if rel_step < step_tol or cost < 1e-30:
            break
    J = _jacobian(res, theta, r, 1e-6 * typical)
    Js = J * typical
    u, s, vt = np.linalg.svd(Js, full_matrices=False)
    expected_rank = n_par if probe else order + 1
    if np.sum(s > RANK_TOL * s[0]) < expected_rank:
        raise RankDeficient("data do not constrain the identifiable parameter combinations")
    with np.errstate(divide="ignore"):
        inv_s2 = np.where(s > 0, 1.0 / s ** 2, np.inf)
    cov_scaled = (vt.T * inv_s2) @ vt
    cov = cov_scaled * np.outer(typical, typical)
    return EftFit(_unpack(theta, order, on_shell.m, lam), cov, s, it, cost, _names(order))
