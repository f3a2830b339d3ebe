"""Order-N effective interaction operators and the matching T-matrix family.

At order N only c_2 ... c_2N and the tail integrals J_1 ... J_N enter.  The
tail phi_N of the form factor is free apart from those integral
constraints, so every admissible tail gives the same low-energy physics to
O((Q/Lambda)^(2(N+1))).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NonConvergence, PoleHit, SignMismatch
from .numerics import as_energy, find_root, radial_integral
from .pionless import EftParams, FormFactor, big_m, m0, m_n, pair_products, t_offshell

QUAD_TOL = 1e-12
CONSTRAINT_TOL = 1e-6
UNSPECIFIED = "unspecified-within-class"


@dataclass(frozen=True)
class EffectiveOperator:
    params: EftParams
    tail_choice: object = None

    def __post_init__(self):
        form = self.params.form
        if self.tail_choice is None:
            choice = form.tail if (form.tail is not None or form.order == 0) else UNSPECIFIED
            object.__setattr__(self, "tail_choice", choice)
        if self.concrete and form.order > 0:
            for n in range(1, form.order + 1):
                res = phi_constraint_residual(self, n)
                if res >= CONSTRAINT_TOL:
                    raise ValueError(f"tail violates the J_{n} constraint (residual {res:.2e})")

    @property
    def concrete(self) -> bool:
        return not (isinstance(self.tail_choice, str) and self.tail_choice == UNSPECIFIED)

    @property
    def order(self) -> int:
        return self.params.form.order


def _require_concrete(op: EffectiveOperator):
    if not op.concrete:
        raise ValueError("a concrete tail is required for this operation")


def calM_n(op: EffectiveOperator, z) -> complex:
    """M0(z) + sum_{n=1}^{N} M_n(z)."""
    z = as_energy(z)
    total = m0(z, op.params.m)
    for n in range(1, op.order + 1):
        total += m_n(op.params, z, n)
    return total


def truncated_numerator(form: FormFactor, p2, p1):
    """sum_{i+j<=N} c*_2i c_2j p2^2i p1^2j."""
    n = form.order
    x2 = np.asarray(p2, dtype=float) ** 2
    x1 = np.asarray(p1, dtype=float) ** 2
    out = np.zeros(np.broadcast(x2, x1).shape, dtype=complex)
    for i in range(n + 1):
        for j in range(n + 1 - i):
            out = out + np.conj(form.coeffs[i]) * form.coeffs[j] * x2 ** i * x1 ** j
    return out


def beff(op: EffectiveOperator, z, p2, p1):
    """-(truncated psi*(p2))(truncated psi(p1)) (M_N^-1 + C0^-1 M_N^-2)."""
    _require_concrete(op)
    calm = calM_n(op, z)
    if abs(calm) < 1e-300:
        raise PoleHit("M_N(z) vanishes")
    form = op.params.form
    num = np.conj(form.truncated(p2)) * form.truncated(p1)
    return -num * (1.0 / calm + 1.0 / (op.params.C0 * calm * calm))


def _fn_numerator(form: FormFactor, n: int):
    """|psi|^2 - sum_{i<n} P_i k^{2i} without small-k cancellation in the n = 1 piece."""
    def f(k):
        k2 = np.asarray(k, dtype=float) ** 2
        out = form.f1(k)
        for i in range(1, n):
            out = out - pair_products(form.coeffs, i).real * k2 ** i
        return out
    return f


def tail_integral(form: FormFactor, m: float, n: int) -> float:
    """m int d^3k/(2pi)^3 F_n(k) / k^(2(n+1))."""
    num = _fn_numerator(form, n)
    res = radial_integral(lambda k: num(k) / k ** (2 * (n + 1)), tol=QUAD_TOL, scale=form.lam)
    return m * res.value.real


def phi_constraint_residual(op: EffectiveOperator, n: int) -> float:
    _require_concrete(op)
    if not 1 <= n <= op.order:
        raise ValueError(f"n must lie in [1, {op.order}]")
    target = op.params.calJ[n - 1]
    return abs(tail_integral(op.params.form, op.params.m, n) - target) / max(1.0, abs(target))


class DefaultTail:
    """phi_1(p) = c2 p^2 (exp(-p^2/L^2) - 1), i.e. psi = 1 + c2 p^2 exp(-p^2/L^2).

    ``lambda1`` solves the J_1 constraint exactly:
        J_1 = (m sqrt(pi) / 2pi^2) [Re c2 L + |c2|^2 L^3 / (8 sqrt 2)].
    ``linear_lambda1`` keeps only the linear term, 2 pi sqrt(pi) J_1 / (m Re c2).
    """

    def __init__(self, c2: complex, calJ1: float, m: float):
        c2 = complex(c2)
        s = c2.real
        if s == 0.0:
            raise SignMismatch("Re c2 = 0 leaves the tail scale undetermined")
        if calJ1 / s <= 0.0:
            raise SignMismatch("J_1 / Re c2 must be positive for a positive tail scale")
        self.c2 = c2
        self.linear_lambda1 = 2.0 * math.pi * math.sqrt(math.pi) * calJ1 / (m * s)
        self.lambda1 = _solve_lambda1(s, abs(c2) ** 2, calJ1, m)

    def __call__(self, k):
        k2 = np.asarray(k, dtype=float) ** 2
        return self.c2 * k2 * np.expm1(-k2 / self.lambda1 ** 2)


def _solve_lambda1(s: float, c2sq: float, calJ1: float, m: float) -> float:
    target = 2.0 * math.pi ** 2 * calJ1 / (m * math.sqrt(math.pi))
    b = c2sq / (8.0 * math.sqrt(2.0))

    def g(lam):
        return s * lam + b * lam ** 3 - target

    if b == 0.0:
        return target / s
    if s > 0:
        return find_root(g, 0.0, target / s)
    # s < 0 and target < 0: g(0) > 0 falls to a minimum at sqrt(-s/3b)
    lam_min = math.sqrt(-s / (3.0 * b))
    if g(lam_min) > 0:
        raise SignMismatch("no positive tail scale satisfies the J_1 constraint")
    return find_root(g, 0.0, lam_min)


def default_phi1(c2: complex, calJ1: float, m: float) -> DefaultTail:
    return DefaultTail(c2, calJ1, m)


def default_operator(m: float, C0: float, c2: complex, calJ1: float, lam: Optional[float] = None) -> EffectiveOperator:
    """N = 1 operator with the Gaussian default tail."""
    tail = default_phi1(c2, calJ1, m)
    form = FormFactor((1.0, c2), lam=lam if lam is not None else tail.lambda1, tail=tail)
    return EffectiveOperator(EftParams(m, C0, form, (calJ1,)))


def t_effective(op: EffectiveOperator, z, p2, p1, variant: str = "full"):
    """Order-N T-matrix.

    ``full``: psi*(p2) psi(p1) / [C0^-1 - M_N - M~_N] with the remainder
    M~_N = (M0 + M) - M_N from the loop quadrature; this solves the GDE
    exactly.  ``truncated``: the order-N numerator P_N(p2, p1) over
    C0^-1 - M_N(z), exactly unitary on-shell and quadrature-free.
    """
    z = as_energy(z)
    prm = op.params
    if variant == "full":
        _require_concrete(op)
        return t_offshell(prm, z, p2, p1)
    if variant == "truncated":
        den = 1.0 / prm.C0 - calM_n(op, z)
        if abs(den) * abs(prm.C0) < 1e-12:
            raise PoleHit("truncated denominator vanishes")
        return truncated_numerator(prm.form, p2, p1) / den
    raise ValueError(f"unknown variant {variant!r}")


def remainder_m(op: EffectiveOperator, z) -> complex:
    """M~_N(z) = M0(z) + M(z) - M_N(z)."""
    z = as_energy(z)
    return m0(z, op.params.m) + big_m(op.params, z) - calM_n(op, z)


def effective_amplitude(op: EffectiveOperator, p: float, variant: str = "full") -> complex:
    from .numerics import ComplexEnergy
    z = ComplexEnergy.on_shell(p, op.params.m)
    return -complex(t_effective(op, z, p, p, variant))


def evaluator(op: EffectiveOperator, variant: str = "full") -> Callable:
    return lambda z, p2, p1: t_effective(op, z, p2, p1, variant)
