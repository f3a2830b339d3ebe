"""Cutoff-regularized contact interaction and its infinite-cutoff limit.

For the potential C0(Lambda) f(p2/Lambda) f(p1/Lambda) the LS equation is
solved in closed form.  Fixing T(z=0, p=0) = C_R defines C0(Lambda); as
Lambda grows the solution tends to the leading-order GQD T-matrix, which
itself is not an LS solution for any potential.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from .errors import PoleHit
from .numerics import ComplexEnergy, as_energy, radial_integral, sqrt_neg
from .pionless import lo_t

REGULATORS = ("sharp", "gaussian")


@dataclass(frozen=True)
class CutoffScheme:
    regulator: str
    lambda_cut: float
    c_r: float

    def __post_init__(self):
        if self.regulator not in REGULATORS:
            raise ValueError(f"regulator must be one of {REGULATORS}")
        if self.lambda_cut <= 0:
            raise ValueError("cutoff must be positive")
        if self.c_r == 0:
            raise ValueError("C_R must be nonzero")

    def f(self, p):
        x = np.asarray(p, dtype=float) / self.lambda_cut
        if self.regulator == "sharp":
            return np.where(x <= 1.0, 1.0, 0.0)
        return np.exp(-x * x)


def _regulator_moment(s: CutoffScheme) -> float:
    """int_0^inf |f(k/Lambda)|^2 dk."""
    if s.regulator == "sharp":
        return s.lambda_cut
    return math.sqrt(math.pi) * s.lambda_cut / (2.0 * math.sqrt(2.0))


def c0_of_lambda(s: CutoffScheme, m: float) -> float:
    """C0(Lambda)^-1 = C_R^-1 - int d^3k/(2pi)^3 |f|^2 m / k^2."""
    inv = 1.0 / s.c_r - m * _regulator_moment(s) / (2.0 * math.pi ** 2)
    return 1.0 / inv


def loop_integral(s: CutoffScheme, m: float, z) -> complex:
    """I(z) = int d^3k/(2pi)^3 |f(k/Lambda)|^2 / (z - E_k), closed form."""
    kappa = sqrt_neg(z, m)
    lam = s.lambda_cut
    pref = m / (2.0 * math.pi ** 2)
    if s.regulator == "sharp":
        z = as_energy(z)
        if kappa == 0:
            return -pref * lam
        if z.on_cut:
            # arctan(Lambda/kappa) sits on its own cut here; use the PV log form
            p = abs(kappa)
            re = -lam + 0.5 * p * math.log((lam + p) / abs(lam - p)) if p != lam else math.inf
            im = -0.5 * math.pi * p if p < lam else 0.0
            return pref * complex(re, im if z.cut_side == "above" else -im)
        return pref * (-lam + kappa * np.arctan(lam / kappa))
    alpha = 2.0 / lam ** 2
    return pref * (-0.5 * math.sqrt(math.pi / alpha) + 0.5 * math.pi * kappa * erfcx(kappa * math.sqrt(alpha)))


def t_cutoff(s: CutoffScheme, m: float, z, p2, p1):
    den = 1.0 / c0_of_lambda(s, m) - loop_integral(s, m, z)
    if abs(den) * abs(s.c_r) < 1e-12:
        raise PoleHit("cutoff T-matrix denominator vanishes")
    return s.f(p2) * s.f(p1) / den


def renormalized_lo(m: float, c_r: float, z) -> complex:
    """(C_R^-1 - (m^{3/2}/4pi) sqrt(-z))^-1, identical to the LO GQD T-matrix."""
    return lo_t(z, m, c_r)


def ls_residual(s: CutoffScheme, m: float, z, p2: float, p1: float) -> float:
    """|T - V - int V(p2,k) T(k,p1)/(z-E_k)| / |T| with the loop done by quadrature."""
    z = as_energy(z)
    if z.on_cut:
        raise ValueError("use an off-axis energy for the quadrature residual")
    c0 = c0_of_lambda(s, m)
    t = complex(t_cutoff(s, m, z, p2, p1))
    v = c0 * float(s.f(p2) * s.f(p1))
    zval = z.value

    def g(k):
        return c0 * s.f(p2) * s.f(k) * t_cutoff(s, m, z, k, p1) / (zval - k * k / m)
    pts = (s.lambda_cut,) if s.regulator == "sharp" else ()
    loop = radial_integral(g, tol=1e-13, scale=s.lambda_cut, points=pts).value
    return abs(t - v - loop) / abs(t)


def contact_ls_residual(m: float, c_r: float, z, k_max: float) -> float:
    """LS residual of the infinite-cutoff T with the bare contact C_R, loop cut at k_max.

    T - C_R - C_R int^{k_max} T/(z - E_k); the loop grows like k_max.
    """
    t = renormalized_lo(m, c_r, z)
    kappa = sqrt_neg(z, m)
    loop = m / (2.0 * math.pi ** 2) * (-k_max + kappa * np.arctan(k_max / kappa))
    return abs(t - c_r - c_r * loop * t)


def cutoff_scan(m: float, c_r: float, z, lambdas, regulator: str = "sharp"):
    """Relative deviations |t_cutoff - renormalized_lo| / |renormalized_lo| over cutoffs."""
    ref = renormalized_lo(m, c_r, z)
    out = []
    for lam in lambdas:
        t = complex(t_cutoff(CutoffScheme(regulator, lam, c_r), m, z, 0.0, 0.0))
        out.append(abs(t - ref) / abs(ref))
    return np.array(out)
