"""Two nucleons in a weak external local potential (Born approximation).

The amplitude splits into four parts.  A00 is the forward-delta piece
-V(q) (2pi)^3 delta(p2 - p1 - q), carried as a coefficient only.  A01 and
A10 are single half-off-shell insertions of T^(1).  A11 is the loop

    A11 = -V(q) int d^3p/(2pi)^3 T(p2, p+q) T(p, p1)
                / ((E_p2 - E_{p+q} + i0)(E_p1 - E_p + i0)).

T^(1) here is the exact order-N GDE solution psi*(p2) psi(p1) t(z), so
the loop factorizes into psi*(p2) psi(p1) t2 t1 times a scalar integral.
That integral is reduced to (k, s = |p+q|) with the s-pole removed by
subtraction plus an analytic log, and the k-pole the same way.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .effective import EffectiveOperator
from .errors import OffShellKinematics
from .kernels import eta_grid_sum
from .numerics import ComplexEnergy, as_energy, gauss_legendre_panels, pv_log
from .pionless import t_full

GL_ORDER = 16
_TAIL_EDGES = np.concatenate([np.linspace(0.0, 0.9, 10), 1.0 - 0.1 * 0.5 ** np.arange(1, 40)])


@dataclass(frozen=True)
class PotentialSpec:
    v_of_q: Callable
    strength_scale: float = 1.0

    def __post_init__(self):
        q = np.concatenate([[0.0], np.logspace(-3, 3, 61)])
        v = np.asarray(self.v_of_q(q), dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("potential must be bounded")
        vmax = np.max(np.abs(v))
        if vmax > 0 and abs(v[-1]) > 1e-6 * vmax:
            raise ValueError("potential must vanish at large momentum transfer")

    def __call__(self, q):
        return self.strength_scale * self.v_of_q(q)


def gaussian_potential(strength: float = 1.0, width: float = 1.0) -> PotentialSpec:
    return PotentialSpec(lambda q: np.exp(-(np.asarray(q, dtype=float) / width) ** 2), strength)


@dataclass(frozen=True)
class ProbeKinematics:
    P1: tuple
    P2: tuple
    p1: tuple
    p2: tuple
    m: float

    def __post_init__(self):
        for name in ("P1", "P2", "p1", "p2"):
            vec = tuple(float(x) for x in getattr(self, name))
            if len(vec) != 3:
                raise ValueError(f"{name} must be a 3-vector")
            object.__setattr__(self, name, vec)
        if self.m <= 0:
            raise ValueError("m must be positive")
        e1, e2 = self.energy_in, self.energy_out
        if abs(e1 - e2) > 1e-10 * max(1.0, abs(e1)):
            raise OffShellKinematics(f"energies differ: {e1} vs {e2}")

    @property
    def energy_in(self) -> float:
        return _dot(self.P1, self.P1) / (4 * self.m) + _dot(self.p1, self.p1) / self.m

    @property
    def energy_out(self) -> float:
        return _dot(self.P2, self.P2) / (4 * self.m) + _dot(self.p2, self.p2) / self.m

    @property
    def q(self) -> np.ndarray:
        return np.subtract(self.P2, self.P1)

    def reversed(self) -> "ProbeKinematics":
        """Time-reversed kinematics: in and out swapped, momenta negated."""
        neg = lambda v: tuple(-x for x in v)  # noqa: E731
        return ProbeKinematics(neg(self.P2), neg(self.P1), neg(self.p2), neg(self.p1), self.m)


def _dot(a, b):
    return float(np.dot(a, b))


def make_kinematics(m: float, P1, p1, P2, p2_direction) -> ProbeKinematics:
    """Fix |p2| by energy balance, with p2 along ``p2_direction``."""
    e = _dot(P1, P1) / (4 * m) + _dot(p1, p1) / m
    rel = e - _dot(P2, P2) / (4 * m)
    if rel <= 0:
        raise OffShellKinematics("no on-shell relative momentum for this P2")
    d = np.asarray(p2_direction, dtype=float)
    d = d / np.linalg.norm(d)
    return ProbeKinematics(tuple(P1), tuple(P2), tuple(p1), tuple(math.sqrt(rel * m) * d), m)


@dataclass(frozen=True)
class AmplitudeParts:
    a00_coeff: float
    a01: complex
    a10: complex
    a11: complex

    @property
    def total_regular(self) -> complex:
        """a01 + a10 + a11; the delta part is carried separately."""
        return self.a01 + self.a10 + self.a11


def _half_shell(op: EffectiveOperator, p_out: float, p_in: float, p_shell: float, side: str) -> complex:
    """T(p_out, p_in; E_{p_shell} +/- i0) with the exact order-N solution."""
    prm = op.params
    t = t_full(prm, ComplexEnergy.on_shell(p_shell, prm.m, side))
    form = prm.form
    return complex(np.conj(form(p_out)) * form(p_in)) * t


# -------------------------------------------------------------------------
# the loop integral L = int d^3p/(2pi)^3 psi(|p+q|) psi*(p) / ((E_p2 - E_p')(E_p1 - E_p))
# -------------------------------------------------------------------------

def _graded_edges_around(points, lo, hi, levels=28, ratio=0.55):
    """Panel edges on [lo, hi] refined geometrically on both sides of each point."""
    edges = {lo, hi}
    for c in points:
        if not (lo < c < hi):
            continue
        edges.add(c)
        for side in (-1.0, 1.0):
            room = (c - lo) if side < 0 else (hi - c)
            for j in range(1, levels + 1):
                edges.add(c + side * room * ratio ** j)
    return np.array(sorted(edges))


def _inner_pv(form, k, q, p2, side, n_sub=4):
    """H(k) = int_{|k-q|}^{k+q} s psi(s) / (p2^2 - s^2 +/- i0) ds, vectorized over k."""
    lo = np.abs(k - q)
    hi = k + q
    x0, w0 = np.polynomial.legendre.leggauss(GL_ORDER)
    # n_sub equal panels mapped onto each [lo, hi]
    t_edges = np.linspace(0.0, 1.0, n_sub + 1)
    ta, tb = t_edges[:-1], t_edges[1:]
    tn = (0.5 * (ta + tb)[:, None] + 0.5 * (tb - ta)[:, None] * x0[None, :]).ravel()
    tw = (0.5 * (tb - ta)[:, None] * w0[None, :]).ravel()
    width = hi - lo
    s = lo[:, None] + width[:, None] * tn[None, :]
    psi_p2 = complex(form(np.array([p2]))[0])
    num = s * form(s) - p2 * psi_p2
    integrand = num / (p2 * p2 - s * s)
    smooth = (integrand * tw[None, :]).sum(axis=1) * width
    inside = (lo < p2) & (p2 < hi)
    sign = -1.0 if side == "above" else 1.0
    residue = np.where(inside, sign * 1j * math.pi * 0.5 * psi_p2, 0.0)
    return smooth + p2 * psi_p2 * pv_log(lo, hi, p2) + residue


def loop_integral_onshell(form, m: float, q: float, p1: float, p2: float, side: str = "above",
                          levels: int = 40) -> complex:
    """L for E_p1 +/- i0 and E_p2 +/- i0 (same side), by reduced quadrature."""
    if q <= 0 or p1 <= 0 or p2 <= 0:
        raise ValueError("q, p1, p2 must be positive")
    kinks = [p2 + q, abs(p2 - q)]
    scale = getattr(form, "lam", 1.0)
    kmax = p1 + p2 + q + 12.0 * scale
    edges = _graded_edges_around(kinks + [p1], 0.0, kmax, levels=levels)
    k, w = gauss_legendre_panels(edges, GL_ORDER)

    def F(kk):
        return kk * np.conj(form(kk)) * _inner_pv(form, kk, q, p2, side)

    f_p1 = complex(F(np.array([p1]))[0])
    head = np.sum(w * (F(k) - f_p1) / (p1 * p1 - k * k))
    # tail k = kmax / (1 - t): the subtracted constant has a closed form there
    t, tw = gauss_legendre_panels(_TAIL_EDGES, GL_ORDER)
    kt = kmax / (1.0 - t)
    jac = kmax / (1.0 - t) ** 2
    tail = np.sum(tw * jac * F(kt) / (p1 * p1 - kt * kt))
    tail += f_p1 * math.log((kmax + p1) / (kmax - p1)) / (2.0 * p1)
    sign = -1.0 if side == "above" else 1.0
    total = head + tail + sign * 1j * math.pi * f_p1 / (2.0 * p1)
    return m * m / (4.0 * math.pi ** 2 * q) * total


def loop_integral_offaxis(form, m: float, q: float, w1: complex, w2: complex, levels: int = 40) -> complex:
    """L with complex (or sub-threshold) relative energies w1, w2; no poles on the path."""
    k1 = math.sqrt(w1.real * m) if w1.real > 0 else 0.0
    k2 = math.sqrt(w2.real * m) if w2.real > 0 else 0.0
    scale = getattr(form, "lam", 1.0)
    kmax = k1 + k2 + q + 12.0 * scale
    pts = [c for c in (k1, k2 + q, abs(k2 - q)) if c > 0]
    k, w = gauss_legendre_panels(_graded_edges_around(pts, 0.0, kmax, levels=levels), GL_ORDER)
    t, tw = gauss_legendre_panels(_TAIL_EDGES, GL_ORDER)
    k = np.concatenate([k, kmax / (1.0 - t)])
    w = np.concatenate([w, tw * kmax / (1.0 - t) ** 2])
    # inner s-range split at the near-resonant s = k2, graded toward the split
    toward_end, tw_end = gauss_legendre_panels(
        np.concatenate([np.linspace(0.0, 0.5, 3), 1.0 - 0.5 * 0.55 ** np.arange(1, levels)]), GL_ORDER)
    lo = np.abs(k - q)
    hi = k + q
    c = np.clip(k2, lo, hi)
    inner = np.zeros(k.size, dtype=complex)
    for start, width in ((lo, c - lo), (hi, c - hi)):
        ss = start[:, None] + width[:, None] * toward_end[None, :]
        inner += (ss * form(ss) / (w2 * m - ss * ss) * tw_end[None, :]).sum(axis=1) * np.abs(width)
    total = np.sum(w * k * np.conj(form(k)) * inner / (w1 * m - k * k))
    return m * m / (4.0 * math.pi ** 2 * q) * total


def amplitude_external(kin: ProbeKinematics, pot: PotentialSpec, op: Optional[EffectiveOperator],
                       side: str = "above") -> AmplitudeParts:
    """Born amplitude parts; ``op=None`` means free nucleons (no NN interaction)."""
    q_vec = kin.q
    q = float(np.linalg.norm(q_vec))
    v = float(pot(q))
    p1 = float(np.linalg.norm(kin.p1))
    p2 = float(np.linalg.norm(kin.p2))
    if op is None or v == 0.0:
        return AmplitudeParts(-v, 0j, 0j, 0j)
    if np.allclose(kin.p1, kin.p2):
        raise ValueError("p1 = p2 is the forward configuration; the parts need p1 != p2")
    m = kin.m
    p_vec = np.subtract(kin.p2, q_vec)
    pp = float(np.linalg.norm(p_vec))
    pprime = float(np.linalg.norm(np.add(kin.p1, q_vec)))
    a01 = -v * _half_shell(op, pp, p1, p1, side) / ((p1 * p1 - pp * pp) / m)
    a10 = -v * _half_shell(op, p2, pprime, p2, side) / ((p2 * p2 - pprime * pprime) / m)
    prm = op.params
    form = prm.form
    t1 = t_full(prm, ComplexEnergy.on_shell(p1, m, side))
    t2 = t_full(prm, ComplexEnergy.on_shell(p2, m, side))
    loop = loop_integral_onshell(form, m, q, p1, p2, side)
    a11 = -v * complex(np.conj(form(p2)) * form(p1)) * t2 * t1 * loop
    return AmplitudeParts(-v, complex(a01), complex(a10), complex(a11))


@dataclass(frozen=True)
class PotMatrixElement:
    """<P2; p2| T_pot(z) |P1; p1> split by momentum structure.

    ``t1_coeff`` multiplies (2pi)^3 delta(P2 - P1); ``v_coeff`` multiplies
    (2pi)^3 delta(p2 - p1 - q); ``regular`` is the smooth V-linear part.
    """
    t1_coeff: complex
    v_coeff: complex
    regular: complex


def t_pot(op: EffectiveOperator, pot: PotentialSpec, z, P2, p2, P1, p1) -> PotMatrixElement:
    """T^(1) + (1 + T^(1) G0) V (1 + G0 T^(1)) between two-nucleon plane waves."""
    z = as_energy(z)
    prm = op.params
    m = prm.m
    form = prm.form
    P1, P2, p1, p2 = (np.asarray(x, dtype=float) for x in (P1, P2, p1, p2))
    q_vec = P2 - P1
    q = float(np.linalg.norm(q_vec))
    v = float(pot(q))
    e_p1 = _dot(P1, P1) / (4 * m)
    e_p2 = _dot(P2, P2) / (4 * m)
    w1 = z.shifted(e_p1)
    w2 = z.shifted(e_p2)
    n1, n2 = float(np.linalg.norm(p1)), float(np.linalg.norm(p2))
    t_w1 = t_full(prm, w1)
    t_w2 = t_full(prm, w2)
    t1_coeff = complex(np.conj(form(n2)) * form(n1)) * t_w1 if np.allclose(q_vec, 0) else 0j
    if v == 0.0:
        return PotMatrixElement(t1_coeff, 0j, 0j)
    pp = float(np.linalg.norm(p2 - q_vec))
    pprime = float(np.linalg.norm(p1 + q_vec))
    # T G0 V: <p2|T(w2)|p'> / (w2 - E_p')  V ;  V G0 T: V <p|T(w1)|p1> / (w1 - E_p)
    tgv = complex(np.conj(form(n2)) * form(pprime)) * t_w2 / (w2.value - pprime ** 2 / m) * v
    vgt = v * complex(np.conj(form(pp)) * form(n1)) * t_w1 / (w1.value - pp ** 2 / m)
    if w1.on_cut and w2.on_cut:
        if w1.cut_side != w2.cut_side:
            raise ValueError("both legs must carry the same prescription")
        loop = loop_integral_onshell(form, m, q, math.sqrt(w1.value.real * m), math.sqrt(w2.value.real * m),
                                     w1.cut_side)
        # the on-shell loop uses (E_p1 - E_p)(E_p2 - E_p'), i.e. (w1 - E_p)(w2 - E_p')
    else:
        loop = loop_integral_offaxis(form, m, q, w1.value, w2.value)
    tgvgt = complex(np.conj(form(n2)) * form(n1)) * t_w2 * v * t_w1 * loop
    return PotMatrixElement(t1_coeff, v, tgv + vgt + tgvgt)


# -------------------------------------------------------------------------
# brute-force oracle: finite eta on a (k, cos theta) grid, extrapolated
# -------------------------------------------------------------------------

def loop_integral_bruteforce(form, m: float, q: float, p1: float, p2: float, eta: float,
                             levels: int = 30, order: int = 8) -> complex:
    """L with +i eta in both denominators, direct (k, u = cos theta) quadrature."""
    scale = getattr(form, "lam", 1.0)
    kmax = p1 + p2 + q + 10.0 * scale
    k_edges = _graded_edges_around([p1, p2 + q, abs(p2 - q)], 0.0, kmax, levels, 0.6)
    k, wk = gauss_legendre_panels(k_edges, order)
    # pole-free remainder [kmax, inf) through k = kmax / (1 - t)
    t, wt = gauss_legendre_panels(np.concatenate([np.linspace(0.0, 0.9, 19), 1.0 - 0.1 * 0.6 ** np.arange(1, 60)]), order)
    k = np.concatenate([k, kmax / (1.0 - t)])
    wk = np.concatenate([wk, wt * kmax / (1.0 - t) ** 2])
    x0, w0 = np.polynomial.legendre.leggauss(order)
    offs = 2.0 * 0.6 ** np.arange(levels + 1)
    ustar = np.clip((p2 * p2 - k * k - q * q) / (2.0 * k * q), -1.0, 1.0)
    raw = np.concatenate([
        np.full((k.size, 1), -1.0), np.full((k.size, 1), 1.0),
        ustar[:, None] - offs[None, :], ustar[:, None] + offs[None, :], ustar[:, None],
    ], axis=1)
    u_edges = np.sort(np.clip(raw, -1.0, 1.0), axis=1)
    ua, ub = u_edges[:, :-1], u_edges[:, 1:]
    half = 0.5 * (ub - ua)
    mid = 0.5 * (ub + ua)
    u = mid[:, :, None] + half[:, :, None] * x0[None, None, :]
    wu = half[:, :, None] * w0[None, None, :]
    kk = np.broadcast_to(k[:, None, None], u.shape)
    s = np.sqrt(np.maximum(kk * kk + q * q + 2.0 * kk * q * u, 0.0))
    weights = (wk[:, None, None] * wu * kk * kk).ravel()
    numer = (np.conj(form(kk.ravel())) * form(s.ravel())).astype(complex)
    d2 = (p2 * p2 - s * s).ravel()
    d1 = (p1 * p1 - kk * kk).ravel()
    total = eta_grid_sum(weights, numer, d2, d1, eta)
    return m * m / (4.0 * math.pi ** 2) * total


def loop_integral_oracle(form, m, q, p1, p2, eta0=None, n_eta=4):
    """Polynomial (Richardson) extrapolation of the finite-eta loop to eta -> 0."""
    if eta0 is None:
        eta0 = 0.04 * min(p1, p2) ** 2
    etas = eta0 / 2.0 ** np.arange(n_eta)
    vals = np.array([loop_integral_bruteforce(form, m, q, p1, p2, e) for e in etas])
    table = list(vals)
    for level in range(1, n_eta):
        factor = 2.0 ** level
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0) for i in range(len(table) - 1)]
    return complex(table[0]), vals
