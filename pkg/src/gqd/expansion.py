"""Effective range expansion, KSW resummation and coupling running.

Series manipulations work on plain coefficient lists and accept any number
type that supports field arithmetic, so ``fractions.Fraction`` inputs give
exact results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InsufficientOrder, PoleHit, ZeroAmplitude
from .numerics import central_derivative

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class EreParams:
    a: float
    shapes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if self.a == 0:
            raise ValueError("scattering length must be nonzero")

    @property
    def r0(self):
        return self.shapes[0] if self.shapes else 0.0


@dataclass(frozen=True)
class CouplingSet:
    C: tuple
    mu: float = 0.0
    m: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "C", tuple(self.C))
        if not self.C:
            raise ValueError("need at least C0")
        if self.mu < 0:
            raise ValueError("subtraction point must be non-negative")

    @property
    def loop_factor(self):
        return self.m / FOUR_PI


def pcotdelta(ere: EreParams, p: float) -> float:
    """-1/a + (1/2) sum_n r_n p^(2(n+1))."""
    p2 = p * p
    total = -1.0 / ere.a
    power = p2
    for r in ere.shapes:
        total += 0.5 * r * power
        power *= p2
    return total


def amplitude_from_ere(ere: EreParams, p: float, m: float) -> complex:
    return (FOUR_PI / m) / (pcotdelta(ere, p) - 1j * p)


def invert_series(s: Sequence, order: int) -> list:
    """Coefficients of 1/s(x) to x^order (s[0] != 0)."""
    if s[0] == 0:
        raise ZeroDivisionError("series has zero constant term")
    out = [1 / s[0] if isinstance(s[0], Fraction) else 1.0 / s[0]]
    for n in range(1, order + 1):
        acc = 0
        for k in range(1, n + 1):
            if k < len(s):
                acc += s[k] * out[n - k]
        out.append(-acc * out[0])
    return out


def couplings_from_ere(ere: EreParams, m: float, order: Optional[int] = None) -> CouplingSet:
    """C_0..C_2N at mu = 0 from sum C_{2n} p^{2n} = (4pi/m) / (1/a - (1/2) sum r_n p^{2(n+1)}).

    The default order is the number of supplied shape parameters.
    """
    n_max = len(ere.shapes) if order is None else order
    if n_max > len(ere.shapes):
        raise InsufficientOrder(f"order {n_max} needs {n_max} shape parameters, got {len(ere.shapes)}")
    denom = [1.0 / ere.a] + [-0.5 * r for r in ere.shapes[:n_max]]
    inv = invert_series(denom, n_max)
    return CouplingSet(tuple(FOUR_PI / m * c for c in inv), 0.0, m)


def _conj(x):
    return x.conjugate() if hasattr(x, "conjugate") else x


def c2n_recurrence(C0, coeffs: Sequence, calJ: Sequence, order: int) -> list:
    """C_2n = C0 (sum_i c*_2i c_2(n-i) - sum_j C_2(n-j) J_j) for n = 0..order.

    Past the form-factor order N the pair products and J constants count
    as zero, so asking for more terms continues the series of
    P_N(p^2) / (C0^-1 + sum_j J_j p^2j), with P_N the products of total
    order <= N.
    """
    n_form = len(coeffs) - 1

    def c(i):
        return coeffs[i] if i <= n_form else 0

    def J(j):
        return calJ[j - 1] if j - 1 < len(calJ) else 0

    out = []
    for n in range(order + 1):
        prod = sum(_conj(c(i)) * c(n - i) for i in range(n + 1)) if n <= n_form else 0
        loop = sum(out[n - j] * J(j) for j in range(1, n + 1))
        out.append(C0 * (prod - loop))
    return out


def c2n_from_formfactor(params, order: Optional[int] = None) -> CouplingSet:
    """Couplings at mu = 0 implied by (C0, c_2n, J_n) of an EftParams."""
    n = params.form.order if order is None else order
    vals = c2n_recurrence(params.C0, params.form.coeffs, params.calJ, n)
    return CouplingSet(tuple(float(np.real(v)) for v in vals), 0.0, params.m)


def shift_series(C: Sequence, k) -> list:
    """Series S' = S / (1 - k S), i.e. 1/S' = 1/S - k, term by term.

    With k = (m/4pi) * (mu_new - mu_old) this is the subtraction-point map.
    """
    denom = 1 - k * C[0]
    if denom == 0:
        raise PoleHit("1 - (m/4pi) mu C0 vanishes")
    out = []
    for n in range(len(C)):
        acc = C[n] + k * sum(out[i] * C[n - i] for i in range(n))
        out.append(acc / denom)
    return out


def shift_couplings(c: CouplingSet, mu_new: float) -> CouplingSet:
    if mu_new < 0:
        raise ValueError("subtraction point must be non-negative")
    if mu_new == c.mu:
        return c
    shifted = shift_series(c.C, c.loop_factor * (mu_new - c.mu))
    return CouplingSet(tuple(shifted), mu_new, c.m)


def ksw_amplitude(c: CouplingSet, p: float) -> complex:
    """-S(mu) / (1 + (m/4pi)(ip + mu) S(mu)),  S = sum C_2n(mu) p^2n."""
    p2 = p * p
    s = 0.0
    for coeff in reversed(c.C):
        s = s * p2 + coeff
    den = 1.0 + c.loop_factor * (1j * p + c.mu) * s
    if abs(den) < 1e-300:
        raise PoleHit("KSW denominator vanishes")
    return -s / den


def rg_residual(c: CouplingSet, n: int, mu: float, running: Optional[Callable] = None) -> float:
    """|mu dC_2n/dmu - (m mu/4pi) sum_k C_2k C_2(n-k)| relative to the right side.

    ``running(mu)`` returns the coupling list at mu; it defaults to the exact
    shift of ``c``.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if n >= len(c.C):
        raise InsufficientOrder(f"C_{2 * n} not carried")
    if running is None:
        def running(x):
            return shift_couplings(c, x).C
    lhs = mu * central_derivative(lambda x: running(x.real)[n], mu, 1e-5 * mu, levels=2).real
    cs = running(mu)
    rhs = c.loop_factor * mu * sum(cs[k] * cs[n - k] for k in range(n + 1))
    return abs(lhs - rhs) / abs(rhs)


def extract_pcotdelta(amplitude: Callable, p: float, m: float, check_unitarity: bool = True) -> float:
    """p cot(delta) = (4pi/m) Re[1/A(p)].

    The unitarity part (4pi/m) Im[1/A] must equal -p; a violation beyond
    1e-8 relative raises ValueError when ``check_unitarity`` is set.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    amp = complex(amplitude(p))
    if amp == 0:
        raise ZeroAmplitude(f"A({p}) = 0")
    inv = FOUR_PI / m / amp
    if check_unitarity and abs(inv.imag + p) > 1e-8 * max(1.0, abs(inv)):
        raise ValueError(f"amplitude violates unitarity at p = {p}: Im part {inv.imag} != {-p}")
    return inv.real


def fit_ere_from_amplitude(amplitude: Callable, m: float, n_shapes: int = 1, p_max: float = 0.05,
                           n_points: int = 24) -> EreParams:
    """Least-squares polynomial in p^2 through p cot(delta) on a small-p grid.

    Extra polynomial terms beyond ``n_shapes`` absorb the truncation error.
    """
    p = p_max * np.cos(np.linspace(0.5, n_points - 0.5, n_points) * np.pi / (2 * n_points))
    y = np.array([extract_pcotdelta(amplitude, pi, m) for pi in p])
    degree = n_shapes + 4
    x = (p / p_max) ** 2
    V = np.vander(x, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, y, rcond=None)
    coef = coef / (p_max ** 2) ** np.arange(degree + 1)
    a = -1.0 / coef[0]
    shapes = tuple(2.0 * coef[k] for k in range(1, n_shapes + 1))
    return EreParams(a, shapes)
