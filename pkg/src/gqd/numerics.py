"""Shared numerical kernels.

Working units are hbar = c = 1 throughout; momentum integrals are over
d^3k/(2pi)^3 and, for s-wave integrands, reduce to (1/2pi^2) int k^2 g(k) dk.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NonConvergence

HBARC_MEV_FM = 197.3269804
TWO_PI2 = 2.0 * math.pi ** 2

_SIDES = ("above", "below", "off")


@dataclass(frozen=True)
class ComplexEnergy:
    """A point in the cut energy plane.

    ``cut_side`` is ``"above"`` (x + i0), ``"below"`` (x - i0) or ``"off"``
    (a genuinely complex or sub-threshold value).  The iε prescription is
    carried by the tag; the stored value is then exactly real.
    """

    value: complex
    cut_side: str = "off"

    def __post_init__(self):
        if self.cut_side not in _SIDES:
            raise ValueError(f"cut_side must be one of {_SIDES}, got {self.cut_side!r}")
        object.__setattr__(self, "value", complex(self.value))
        if self.cut_side != "off" and self.value.imag != 0.0:
            raise ValueError("a cut-tagged energy must have zero imaginary part")
        if self.cut_side == "off" and self.value.imag == 0.0 and self.value.real > 0.0:
            # a bare point on the cut is read as the scattering side
            object.__setattr__(self, "cut_side", "above")

    @classmethod
    def on_shell(cls, p: float, m: float, side: str = "above") -> "ComplexEnergy":
        return cls(p * p / m, side)

    @property
    def on_cut(self) -> bool:
        return self.cut_side != "off" and self.value.real > 0.0

    def shifted(self, delta: float) -> "ComplexEnergy":
        """z - delta with the same side tag."""
        return ComplexEnergy(self.value - delta, self.cut_side)

    def __complex__(self):
        return self.value


def as_energy(z) -> ComplexEnergy:
    """Coerce a number to ComplexEnergy.

    A bare non-negative real number is read as the scattering side x + i0.
    """
    if isinstance(z, ComplexEnergy):
        return z
    z = complex(z)
    if z.imag == 0.0 and z.real > 0.0:
        return ComplexEnergy(z, "above")
    return ComplexEnergy(z, "off")


def neg_power(z, exponent: float) -> complex:
    """(-z)**exponent on the principal branch, cut along positive real z."""
    z = as_energy(z)
    x = z.value
    if z.cut_side != "off" and x.real > 0.0:
        mag = x.real ** exponent
        phase = -math.pi * exponent if z.cut_side == "above" else math.pi * exponent
        return mag * complex(math.cos(phase), math.sin(phase))
    if x.imag == 0.0:
        return complex((-x.real) ** exponent) if x.real <= 0.0 else complex((-x) ** exponent)
    return complex((-x) ** exponent)


def sqrt_neg(z, m: float) -> complex:
    """sqrt(-z m) on the principal branch; gives -ip at z = p^2/m + i0."""
    if m <= 0:
        raise ValueError("m must be positive")
    z = as_energy(z)
    x = z.value
    if z.cut_side != "off" and x.real > 0.0:
        root = math.sqrt(x.real * m)
        return complex(0.0, -root) if z.cut_side == "above" else complex(0.0, root)
    if x.imag == 0.0 and x.real <= 0.0:
        return complex(math.sqrt(-x.real * m), 0.0)
    return complex(np.sqrt(-x * m))


# --------------------------------------------------------------------------
# adaptive Gauss-Kronrod (7/15)
# --------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
# full 15-point abscissae on [-1, 1] and the matching weights
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G_MASK = np.zeros(15, dtype=bool)
_G_MASK[[1, 3, 5, 7, 9, 11, 13]] = True
G_WEIGHTS = np.concatenate([_WG[:-1], _WG[::-1]])


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if self.abs_error_estimate < 0 or self.evaluations < 1:
            raise ValueError("invalid quadrature result")


def _gk_batch(f, a, b):
    """Kronrod estimates and error bounds on each [a_i, b_i]."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * GK_NODES[None, :]
    fx = np.asarray(f(x.ravel())).reshape(x.shape)
    kron = half * (fx @ GK_WEIGHTS)
    gauss = half * (fx[:, _G_MASK] @ G_WEIGHTS)
    err = np.abs(kron - gauss)
    # QUADPACK-style sharpening of the raw difference
    err = np.where(err > 0, err * np.minimum(1.0, (200.0 * err / np.maximum(np.abs(kron), 1e-300)) ** 1.5), 0.0)
    err = np.maximum(err, 50.0 * np.finfo(float).eps * np.abs(kron))
    return kron, err


def adaptive_quad(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float],
    tol: float = 1e-10,
    rel_tol: float | None = None,
    budget: int = 1_000_000,
) -> QuadratureResult:
    """Globally adaptive GK15 over the panels defined by ``breakpoints``.

    ``f`` must accept and return 1-d arrays.  Converged when the summed error
    estimate is below ``tol * max(1, |value|)`` (or ``rel_tol * |value|`` when
    given).  Bisection order is deterministic.
    """
    edges = np.asarray(sorted(set(float(b) for b in breakpoints)), dtype=float)
    if edges.size < 2:
        return QuadratureResult(0.0, 0.0, 1)
    a, b = edges[:-1], edges[1:]
    vals, errs = _gk_batch(f, a, b)
    nev = 15 * a.size
    heap = [(-errs[i], i, a[i], b[i], vals[i]) for i in range(a.size)]
    heapq.heapify(heap)
    counter = a.size
    total = complex(np.sum(vals))
    total_err = float(np.sum(errs))

    def target(v):
        if rel_tol is not None:
            return max(rel_tol * abs(v), 1e-300)
        return tol * max(1.0, abs(v))

    while total_err > target(total) or not np.isfinite(total_err):
        if not np.isfinite(total_err):
            raise NonConvergence("integrand produced non-finite values")
        if nev >= budget:
            raise NonConvergence(
                f"adaptive quadrature hit {nev} evaluations; error {total_err:.3e} > {target(total):.3e}"
            )
        # split the worst panels together so each round is one vectorized call
        nsplit = max(1, min(len(heap) // 4 + 1, 64))
        worst = [heapq.heappop(heap) for _ in range(min(nsplit, len(heap)))]
        lo = np.array([w[2] for w in worst])
        hi = np.array([w[3] for w in worst])
        midp = 0.5 * (lo + hi)
        if np.any(midp <= lo) or np.any(midp >= hi):
            raise NonConvergence("panel width reached machine resolution")
        na = np.concatenate([lo, midp])
        nb = np.concatenate([midp, hi])
        nv, ne = _gk_batch(f, na, nb)
        nev += 15 * na.size
        for w in worst:
            total -= w[4]
            total_err += w[0]
        for i in range(na.size):
            heapq.heappush(heap, (-ne[i], counter, na[i], nb[i], nv[i]))
            counter += 1
        total += complex(np.sum(nv))
        total_err += float(np.sum(ne))
        if total_err < 0:  # float drift of the running sum
            total_err = float(sum(-h[0] for h in heap))
    # re-sum from the panels to avoid accumulated rounding in the running total
    total = complex(sum(h[4] for h in sorted(heap, key=lambda h: (h[2], h[3]))))
    return QuadratureResult(total, total_err, nev)


def _tail_map(g, k0):
    """Integrand on t in [0,1) for int_{k0}^inf g(k) dk with k = k0 + t/(1-t)."""
    def mapped(t):
        one_minus = 1.0 - t
        safe = np.where(one_minus > 0.0, one_minus, 1.0)
        k = k0 + t / safe
        return np.where(one_minus > 0.0, g(k) / (safe * safe), 0.0)
    return mapped


def half_line_quad(g, tol=1e-10, scale=1.0, points=(), rel_tol=None, budget=1_000_000):
    """int_0^inf g(k) dk with breakpoints on [0, k_max] and a mapped tail."""
    pts = [p for p in points if p > 0]
    kmax = 4.0 * max([scale] + pts)
    inner = [0.0, kmax] + [p for p in pts if p < kmax]
    head = adaptive_quad(g, inner, tol=tol, rel_tol=rel_tol, budget=budget)
    tail = adaptive_quad(_tail_map(g, kmax), [0.0, 1.0], tol=tol, rel_tol=rel_tol, budget=budget)
    return QuadratureResult(head.value + tail.value, head.abs_error_estimate + tail.abs_error_estimate,
                            head.evaluations + tail.evaluations)


def radial_integral(f, tol: float = 1e-10, scale: float = 1.0, points=(), budget: int = 1_000_000) -> QuadratureResult:
    """int d^3k/(2pi)^3 f(|k|) = (1/2pi^2) int_0^inf k^2 f(k) dk.

    ``scale`` sets the inner panel [0, 4*scale]; ``points`` are extra
    breakpoints (near-poles, kinks).
    """
    res = half_line_quad(lambda k: k * k * f(k), tol=tol * TWO_PI2, scale=scale, points=points, budget=budget)
    return QuadratureResult(res.value / TWO_PI2, res.abs_error_estimate / TWO_PI2, res.evaluations)


def pv_pole_integral(f, p: float, cut_side: str = "above", tol: float = 1e-10, scale: float = 1.0) -> complex:
    """int d^3k/(2pi)^3 f(k) / (p^2 - k^2 +/- i0).

    The pole is removed by subtracting p^2 f(p) from k^2 f(k); the
    subtracted constant has zero principal value on [0, inf).  ``f`` must
    decay at large k.
    """
    if p <= 0:
        raise ValueError("pole momentum must be positive")
    if cut_side not in ("above", "below"):
        raise ValueError("cut_side must be 'above' or 'below'")
    fp = complex(np.asarray(f(np.array([p])))[0])
    p2 = p * p

    def g(k):
        k2 = k * k
        d = p2 - k2
        safe = np.where(d == 0.0, 1.0, d)
        return np.where(d == 0.0, 0.0, (k2 * f(k) - p2 * fp) / safe)

    res = half_line_quad(g, tol=tol * TWO_PI2, scale=max(scale, p), points=(p,))
    sign = -1.0 if cut_side == "above" else 1.0
    return res.value / TWO_PI2 + sign * 1j * p * fp / (4.0 * math.pi)


def pv_log(lo, hi, p):
    """Principal value of int_lo^hi ds / (p^2 - s^2) for 0 <= lo < hi, p > 0."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)

    def prim(s):
        with np.errstate(divide="ignore"):
            return np.log((p + s) / np.abs(p - s))

    return (prim(hi) - prim(lo)) / (2.0 * p)


# --------------------------------------------------------------------------
# differentiation and roots
# --------------------------------------------------------------------------

def central_derivative(func, z: complex, h: float, levels: int = 2) -> complex:
    """Central difference of an analytic function along the real direction,
    Richardson-extrapolated over ``levels`` step halvings."""
    table = []
    step = h
    for _ in range(levels + 1):
        table.append((func(z + step) - func(z - step)) / (2.0 * step))
        step /= 2.0
    factor = 4.0
    while len(table) > 1:
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0) for i in range(len(table) - 1)]
        factor *= 4.0
    return table[0]


def find_root(func, lo: float, hi: float, xtol: float = 1e-14) -> float:
    """Bracketed real root (Brent)."""
    return brentq(func, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)


def gauss_legendre_panels(edges, order: int = 16):
    """Composite Gauss-Legendre nodes and weights over consecutive edges."""
    x0, w0 = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * w0[None, :]).ravel()
    return x, w


def graded_edges(a: float, b: float, focus: float, n: int, ratio: float = 0.5):
    """Edges on [a, b] refined geometrically toward ``focus`` (an endpoint
    or interior point), ``n`` levels per side."""
    out = {a, b}
    if a < focus < b:
        out.add(focus)
    for lo, hi, toward_hi in ((a, focus, True), (focus, b, False)):
        if hi <= lo:
            continue
        width = hi - lo
        for j in range(1, n + 1):
            d = width * ratio ** j
            out.add(hi - d if toward_hi else lo + d)
    return np.array(sorted(out))
