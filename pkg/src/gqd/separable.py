"""Exact GDE solutions for a rank-one separable interaction.

The form factor falls off as phi(p) ~ p**(-alpha).  For alpha > 1/2 the
solution tends to a constant coupling at large |z| (Hamiltonian dynamics);
for alpha < 1/2 it decays like (-z)**(alpha - 1/2) and no Hamiltonian
exists.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import MarginalExponent, PoleHit
from .numerics import ComplexEnergy, as_energy, neg_power, pv_pole_integral, radial_integral

POLE_THRESHOLD = 1e-12
QUAD_TOL = 1e-12


class Dynamics(enum.Enum):
    HAMILTONIAN = "Hamiltonian"
    NON_HAMILTONIAN = "NonHamiltonian"


def classify_dynamics(alpha: float) -> Dynamics:
    if alpha == 0.5:
        raise MarginalExponent("alpha = 1/2 is the marginal case")
    return Dynamics.HAMILTONIAN if alpha > 0.5 else Dynamics.NON_HAMILTONIAN


def power_law_form_factor(alpha: float, beta: float = 1.0) -> Callable:
    """(k^2 + beta^2)^(-alpha/2): unit tail coefficient, regular at k = 0."""
    def phi(k):
        return (np.asarray(k, dtype=float) ** 2 + beta * beta) ** (-0.5 * alpha)
    return phi


def pure_power_form_factor(alpha: float) -> Callable:
    def phi(k):
        return np.asarray(k, dtype=float) ** (-alpha)
    return phi


def yamaguchi_form_factor(beta: float = 1.0) -> Callable:
    def phi(k):
        return 1.0 / (np.asarray(k, dtype=float) ** 2 + beta * beta)
    return phi


def fitted_tail_exponent(phi: Callable, scale: float = 1.0) -> float:
    """-d log|phi| / d log k fitted over the top decade of a log grid."""
    k = scale * np.logspace(7.0, 8.0, 41)
    slope = np.polyfit(np.log(k), np.log(np.abs(phi(k))), 1)[0]
    return -float(slope)


@dataclass(frozen=True)
class SeparableModel:
    alpha: float
    m: float
    a_ref: float
    g_a: float
    phi: Callable
    scale: float = 1.0

    def __post_init__(self):
        classify_dynamics(self.alpha)
        if self.m <= 0:
            raise ValueError("m must be positive")
        if self.a_ref > 0:
            raise ValueError("reference energy a must lie in (-inf, 0]")
        if self.g_a == 0:
            raise ValueError("g_a must be nonzero")
        fitted = fitted_tail_exponent(self.phi, self.scale)
        if abs(fitted - self.alpha) > 0.02 * abs(self.alpha):
            raise ValueError(f"form factor tail exponent {fitted:.4f} does not match alpha = {self.alpha}")

    @property
    def dynamics(self) -> Dynamics:
        return classify_dynamics(self.alpha)


@dataclass(frozen=True)
class AsymptoticCoeffs:
    b1: float
    b2: Optional[float]
    lambda_coupling: Optional[float]
    m_tilde_a: float


def _phi2(model):
    return lambda k: np.abs(model.phi(k)) ** 2


def _breakpoints(model, z):
    pts = [model.scale]
    if z.value.real > 0:
        pts.append(math.sqrt(z.value.real * model.m))
    return tuple(pts)


def resolvent_integral(model: SeparableModel, f: Callable, z) -> complex:
    """int d^3k/(2pi)^3 f(k)/(z - E_k) with the cut prescription of z."""
    z = as_energy(z)
    if z.on_cut:
        p = math.sqrt(z.value.real * model.m)
        return model.m * pv_pole_integral(f, p, z.cut_side, tol=QUAD_TOL, scale=model.scale)
    zv = z.value
    return radial_integral(lambda k: f(k) / (zv - k * k / model.m), tol=QUAD_TOL,
                           scale=model.scale, points=_breakpoints(model, z)).value


@lru_cache(maxsize=4096)
def _denominator(model: SeparableModel, zval: complex, side: str) -> complex:
    z = ComplexEnergy(zval, side)
    a, m = model.a_ref, model.m
    phi2 = _phi2(model)
    if z.on_cut:
        # (z-a)/((z-E)(a-E)) = 1/(a-E) - 1/(z-E); both pieces share the pole-free weight
        dz = z.value.real - a

        def f(k):
            return phi2(k) * dz / (a - k * k / m)
        integral = resolvent_integral(model, f, z)
    else:
        dz = z.value - a

        def g(k):
            e = k * k / m
            return phi2(k) * dz / ((z.value - e) * (a - e))
        integral = radial_integral(g, tol=QUAD_TOL, scale=model.scale, points=_breakpoints(model, z)).value
    return 1.0 / model.g_a + integral


def denominator(model: SeparableModel, z) -> complex:
    z = as_energy(z)
    return _denominator(model, z.value, z.cut_side)


def general_solution(model: SeparableModel, z, p2, p1):
    """phi*(p2) phi(p1) / [g_a^-1 + (z-a) int |phi|^2/((z-E)(a-E))]."""
    d = denominator(model, z)
    if abs(d) < POLE_THRESHOLD:
        raise PoleHit(f"separable denominator {abs(d):.2e} at z = {as_energy(z).value}")
    return np.conj(model.phi(p2)) * model.phi(p1) / d


def _m_tilde(model: SeparableModel, z) -> complex:
    """int d^3k/(2pi)^3 (|phi|^2 - k^(-2 alpha)) / (z - E_k)."""
    alpha = model.alpha
    phi2 = _phi2(model)

    def f(k):
        return phi2(k) - np.asarray(k, dtype=float) ** (-2.0 * alpha)
    return resolvent_integral(model, f, z)


@lru_cache(maxsize=4096)
def _m_tilde_cached(model, zval, side):
    return _m_tilde(model, ComplexEnergy(zval, side))


def m_tilde(model: SeparableModel, z) -> complex:
    z = as_energy(z)
    return _m_tilde_cached(model, z.value, z.cut_side)


def b1_coefficient(alpha: float, m: float) -> float:
    return -4.0 * math.pi * math.cos(alpha * math.pi) * m ** (alpha - 1.5)


@lru_cache(maxsize=256)
def asymptotic_coeffs(model: SeparableModel) -> AsymptoticCoeffs:
    b1 = b1_coefficient(model.alpha, model.m)
    a = model.a_ref
    mt_a = m_tilde(model, ComplexEnergy(a, "off")).real
    b2 = lam = None
    if model.alpha < 0.5:
        b2 = b1 * abs(a) ** (0.5 - model.alpha) - b1 * b1 * (mt_a + 1.0 / model.g_a)
    else:
        phi2 = _phi2(model)
        inv = 1.0 / model.g_a + resolvent_integral(model, phi2, ComplexEnergy(a, "off")).real
        lam = 1.0 / inv
    return AsymptoticCoeffs(b1=b1, b2=b2, lambda_coupling=lam, m_tilde_a=mt_a)


def nonhamiltonian_t(model: SeparableModel, z, p2, p1):
    """b1^2 phi* phi / [-b2 + b1 (-z)^(1/2-alpha) - b1^2 M~(z)]."""
    if model.alpha >= 0.5:
        raise ValueError("the non-Hamiltonian form requires alpha < 1/2")
    co = asymptotic_coeffs(model)
    z = as_energy(z)
    b1 = co.b1
    den = -co.b2 + b1 * neg_power(z, 0.5 - model.alpha) - b1 * b1 * m_tilde(model, z)
    if abs(den) < POLE_THRESHOLD * b1 * b1:
        raise PoleHit("non-Hamiltonian denominator vanishes")
    return b1 * b1 * np.conj(model.phi(p2)) * model.phi(p1) / den


def evaluator(model: SeparableModel, form: str = "general"):
    """Off-shell evaluator T(z, p2, p1) for the residual and evolution code."""
    fn = general_solution if form == "general" else nonhamiltonian_t
    return lambda z, p2, p1: fn(model, z, p2, p1)
