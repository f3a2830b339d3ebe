"""Pionless 1S0 two-nucleon T-matrix.

The leading-order solution is (C0^-1 - m sqrt(-zm)/4pi)^-1.  A general form
factor psi(k) = 1 + c2 k^2 + ... + tail(k) adds the loop function

    M(z) = z m^2 int d^3k/(2pi)^3 F1(k) / ((zm - k^2) k^2),   F1 = |psi|^2 - 1,

and the T-matrix becomes psi*(p2) psi(p1) / (C0^-1 - M0(z) - M(z)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import IndexOutOfOrder, PoleHit
from .numerics import (
    ComplexEnergy,
    as_energy,
    central_derivative,
    find_root,
    pv_pole_integral,
    radial_integral,
    sqrt_neg,
)

POLE_THRESHOLD = 1e-12
QUAD_TOL = 1e-12
NATURALNESS = 10.0


@dataclass(frozen=True)
class FormFactor:
    """psi(k) = sum_n c_{2n} k^{2n} + tail(k), with c_0 = 1.

    ``tail`` is a function of the momentum itself (not k/Lambda) and must
    vanish like k^{2(N+1)} at small k.
    """

    coeffs: tuple = (1.0,)
    lam: float = 1.0
    tail: Optional[Callable] = None
    kappa: float = NATURALNESS
    check_natural: bool = True

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if not coeffs or coeffs[0] != 1.0:
            raise ValueError("c_0 must equal 1")
        if self.lam <= 0:
            raise ValueError("Lambda must be positive")
        if self.check_natural:
            for n, c in enumerate(coeffs[1:], start=1):
                if abs(c) > self.kappa * self.lam ** (-2 * n):
                    raise ValueError(f"|c_{2 * n}| = {abs(c):.3g} violates the naturalness bound")
        if self.tail is not None:
            _check_tail_order(self.tail, self.order, self.lam)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def truncated(self, k):
        k2 = np.asarray(k, dtype=float) ** 2
        out = np.zeros_like(k2, dtype=complex)
        for c in reversed(self.coeffs):
            out = out * k2 + c
        return out

    def delta(self, k):
        """psi(k) - 1, evaluated without cancellation at small k."""
        k = np.asarray(k, dtype=float)
        k2 = k * k
        out = np.zeros_like(k2, dtype=complex)
        for c in reversed(self.coeffs[1:]):
            out = (out + c) * k2
        if self.tail is not None:
            out = out + self.tail(k)
        return out

    def __call__(self, k):
        return 1.0 + self.delta(k)

    def f1(self, k):
        """|psi|^2 - 1."""
        d = self.delta(k)
        return 2.0 * d.real + (d * np.conj(d)).real

    @property
    def trivial(self) -> bool:
        return self.tail is None and all(c == 0 for c in self.coeffs[1:])


def _check_tail_order(tail, order, lam):
    k = lam * np.logspace(-3.0, -1.5, 7)
    vals = np.abs(tail(k))
    if np.all(vals == 0.0):
        return
    # O(.) is an upper bound: the ratio may shrink toward k = 0 but not grow
    ratio = vals / (k / lam) ** (2 * (order + 1))
    if not np.all(np.isfinite(ratio)) or ratio[0] > 10.0 * ratio[-1]:
        raise ValueError(f"tail is not O((p/Lambda)^{2 * (order + 1)}) at small p")


def pair_products(coeffs: Sequence[complex], n: int) -> complex:
    """sum_{i=0}^{n} c*_{2i} c_{2(n-i)}, with coefficients beyond the list taken as 0."""
    total = 0j
    for i in range(n + 1):
        if i < len(coeffs) and n - i < len(coeffs):
            total += np.conj(coeffs[i]) * coeffs[n - i]
    return total


@dataclass(frozen=True)
class EftParams:
    m: float
    C0: float
    form: FormFactor = field(default_factory=FormFactor)
    calJ: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "calJ", tuple(float(j) for j in self.calJ))
        if self.m <= 0:
            raise ValueError("m must be positive")
        if self.C0 == 0:
            raise ValueError("C0 must be nonzero")
        if len(self.calJ) != self.form.order:
            raise ValueError(f"need {self.form.order} J constants, got {len(self.calJ)}")


def m0(z, m: float) -> complex:
    return m / (4.0 * math.pi) * sqrt_neg(z, m)


def lo_t(z, m: float, C0: float) -> complex:
    den = 1.0 / C0 - m0(z, m)
    if abs(den) * abs(C0) < POLE_THRESHOLD:
        raise PoleHit("leading-order denominator vanishes")
    return 1.0 / den


def bound_state_energy(m: float, C0: float) -> float:
    """Root of C0^-1 = m sqrt(-zm)/4pi below threshold (needs C0 > 0)."""
    if C0 <= 0:
        raise ValueError("a bound state needs a = m C0 / 4pi > 0")
    a = m * C0 / (4.0 * math.pi)
    guess = -1.0 / (m * a * a)

    def f(e):
        return 1.0 / C0 - m0(e, m).real
    return find_root(f, 4.0 * guess, 0.25 * guess)


def _loop_scale(params: EftParams) -> float:
    return params.form.lam


@lru_cache(maxsize=8192)
def _big_m(params: EftParams, zval: complex, side: str) -> complex:
    form, m = params.form, params.m
    if form.trivial:
        return 0j
    z = ComplexEnergy(zval, side)
    scale = _loop_scale(params)
    zm = z.value * m
    if z.on_cut:
        p = math.sqrt(zm.real)

        def f(k):
            return form.f1(k) / (k * k)
        return z.value.real * m * m * pv_pole_integral(f, p, side, tol=QUAD_TOL, scale=scale)
    pts = (abs(zm) ** 0.5,) if zm.real > 0 else ()

    def g(k):
        k2 = k * k
        return form.f1(k) / ((zm - k2) * k2)
    return zm * m * radial_integral(g, tol=QUAD_TOL, scale=scale, points=pts).value


def big_m(params: EftParams, z) -> complex:
    z = as_energy(z)
    return _big_m(params, z.value, z.cut_side)


def m_n(params: EftParams, z, n: int) -> complex:
    """-(zm)^n J_n + (m/4pi) sqrt(-zm) (zm)^n sum_i c*_{2i} c_{2(n-i)}."""
    if n < 1 or n > params.form.order:
        raise IndexOutOfOrder(f"M_{n} requested at order {params.form.order}")
    z = as_energy(z)
    zm_n = (z.value * params.m) ** n
    return -zm_n * params.calJ[n - 1] + m0(z, params.m) * zm_n * pair_products(params.form.coeffs, n)


def t_full(params: EftParams, z) -> complex:
    z = as_energy(z)
    den = 1.0 / params.C0 - m0(z, params.m) - big_m(params, z)
    if abs(den) * abs(params.C0) < POLE_THRESHOLD:
        raise PoleHit("T-matrix denominator vanishes")
    return 1.0 / den


def t_offshell(params: EftParams, z, p2, p1):
    form = params.form
    return np.conj(form(p2)) * form(p1) * t_full(params, z)


def on_shell_amplitude(params: EftParams, p: float) -> complex:
    """A(p) = -T(p, p; E_p + i0)."""
    return -complex(t_offshell(params, ComplexEnergy.on_shell(p, params.m), p, p))


def lo_evaluator(m: float, C0: float):
    return lambda z, p2, p1: lo_t(z, m, C0) * np.ones(np.broadcast(np.asarray(p2), np.asarray(p1)).shape)


def offshell_evaluator(params: EftParams):
    return lambda z, p2, p1: t_offshell(params, z, p2, p1)


def distance_to_cut(z: complex) -> float:
    return abs(z.imag) if z.real >= 0 else abs(z)


def gde_residual(T, z, p2: float, p1: float, h: Optional[float] = None, m: float = 1.0,
                 scale: float = 1.0) -> float:
    """Relative mismatch between dT/dz and -int T(p2,k) T(k,p1) / (z-E_k)^2.

    ``T(z, p2, p1)`` must broadcast over momentum arrays.  The derivative is
    a Richardson-extrapolated central difference along Re z.
    """
    zval = as_energy(z).value
    if as_energy(z).on_cut:
        raise ValueError("the residual is defined off the cut")
    d = distance_to_cut(zval)
    if h is None:
        # step-size study: 0.05 d loses six digits within ~0.3 of a bound-state pole
        h = 0.01 * d

    def scalar(w):
        return complex(np.asarray(T(w, p2, p1)))

    deriv = central_derivative(scalar, zval, h, levels=2)
    pts = (abs(zval * m) ** 0.5,) if zval.real > 0 else ()

    def g(k):
        return T(zval, p2, k) * T(zval, k, p1) / (zval - k * k / m) ** 2
    loop = radial_integral(g, tol=QUAD_TOL, scale=max(scale, abs(zval * m) ** 0.5), points=pts).value
    return abs(deriv + loop) / max(1.0, abs(deriv))
