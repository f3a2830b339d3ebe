"""Green operator and contour-integral time evolution for rank-one T-matrices.

    U(t, 0) = (i/2pi) int dx exp(-izt) G(z),   z = x + i y0,   G = G0 + G0 T G0.

The free part gives exp(-i E_k t) psi(k) exactly.  For T = u(p2) u*(p1) tau(z)
the interacting part of <k|U(t)|psi> is u(k) sum_n c_n / (z_n - E_k) with
c_n = (i/2pi) w_n exp(-i z_n t) tau(z_n) O(z_n), O(z) = int u* psi / (z - E).
Norms are evaluated exactly in k through

    int |u|^2 / ((z - E)(w - E)) = (R(w) - R(z)) / (z - w),   R(z) = int |u|^2/(z - E),

where only differences of R enter, so R may carry any z-independent constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.signal import fftconvolve

from .errors import ContourTooNarrow, OnAxis
from .kernels import contour_synthesis, norm_quadratic, resolvent_sums
from .numerics import as_energy, gauss_legendre_panels
from .pionless import EftParams, big_m, lo_t, m0, t_full

TRUNCATION_LIMIT = 1e-4


@dataclass(frozen=True)
class SeparableT:
    """T(z; p2, p1) = u*(p2) u(p1) tau(z) with R(z) = int |u|^2/(z-E) up to a constant."""

    u: Callable
    tau: Callable
    resolvent: Callable
    m: float = 1.0

    def __call__(self, z, p2, p1):
        return np.conj(self.u(p2)) * self.u(p1) * self.tau(z)


def _ones(k):
    return np.ones_like(np.asarray(k, dtype=float), dtype=complex)


def lo_separable(m: float, C0: float) -> SeparableT:
    return SeparableT(_ones, lambda z: lo_t(z, m, C0), lambda z: m0(z, m), m)


def flipped_branch_separable(m: float, C0: float) -> SeparableT:
    """LO with the sign of the unitarity cut reversed: not a GDE solution."""
    def tau(z):
        return 1.0 / (1.0 / C0 + m0(z, m))
    return SeparableT(_ones, tau, lambda z: m0(z, m), m)


def pionless_separable(params: EftParams) -> SeparableT:
    form = params.form

    def resolvent(z):
        return m0(z, params.m) + big_m(params, z)
    return SeparableT(form, lambda z: t_full(params, z), resolvent, params.m)


def zero_separable(m: float = 1.0) -> SeparableT:
    return SeparableT(_ones, lambda z: 0j, lambda z: m0(z, m), m)


@dataclass(frozen=True)
class GreenElement:
    free_part_coeff: complex
    interacting_part: complex


def green_element(T, z, p2: float, p1: float) -> GreenElement:
    """G = G0 + G0 T G0; the free part multiplies (2pi)^3 delta(p2 - p1)."""
    z = as_energy(z)
    if z.value.imag == 0.0:
        raise OnAxis("the Green operator is evaluated off the real axis")
    m = getattr(T, "m", 1.0)
    zv = z.value
    e2, e1 = p2 * p2 / m, p1 * p1 / m
    free = 1.0 / (zv - e1) if p1 == p2 else 0j
    inter = complex(np.asarray(T(zv, p2, p1))) / ((zv - e2) * (zv - e1))
    return GreenElement(free, inter)


@dataclass(frozen=True)
class WavePacket:
    """Radial packet psi(k) on a composite Gauss-Legendre grid.

    ``weights`` already contain k^2 / (2 pi^2), so sum(w |psi|^2) is the
    norm int d^3k/(2pi)^3 |psi|^2.
    """

    amplitude: Callable
    grid: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    m: float = 1.0

    def __post_init__(self):
        norm = float(np.sum(self.weights * np.abs(self.values) ** 2))
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"packet norm {norm} differs from 1")

    @property
    def energies(self) -> np.ndarray:
        return self.grid ** 2 / self.m

    @property
    def norm(self) -> float:
        return float(np.sum(self.weights * np.abs(self.values) ** 2))


def gaussian_packet(k0: float, width: float, m: float = 1.0, energy_step: Optional[float] = None,
                    order: int = 8, n_sigma: float = 7.0) -> WavePacket:
    """psi(k) ~ exp(-(k - k0)^2 / (2 width^2)), normalized on a grid uniform in energy.

    ``energy_step`` bounds the panel width in E = k^2/m of the stored grid.
    Overlaps with the contour use their own grid matched to y0.
    """
    k_hi = k0 + n_sigma * width
    k_lo = max(0.0, k0 - n_sigma * width)
    e_hi, e_lo = k_hi ** 2 / m, k_lo ** 2 / m
    if energy_step is None:
        energy_step = (e_hi - e_lo) / 200.0
    n_pan = max(8, int(math.ceil((e_hi - e_lo) / energy_step)))
    e_edges = np.linspace(e_lo, e_hi, n_pan + 1)
    k_edges = np.sqrt(e_edges * m)
    k, w = gauss_legendre_panels(k_edges, order)
    w = w * k * k / (2.0 * math.pi ** 2)

    def shape(kk):
        return np.exp(-((np.asarray(kk, dtype=float) - k0) ** 2) / (2.0 * width ** 2)).astype(complex)

    raw = shape(k)
    scale = 1.0 / math.sqrt(float(np.sum(w * np.abs(raw) ** 2)))

    def amp(kk):
        return scale * shape(kk)
    return WavePacket(amp, k, w, scale * raw, m)


def packet_energy_width(psi: WavePacket) -> float:
    prob = psi.weights * np.abs(psi.values) ** 2
    e = psi.energies
    mean = np.sum(prob * e)
    return float(math.sqrt(max(np.sum(prob * (e - mean) ** 2), 0.0)))


@dataclass(frozen=True)
class ContourSpec:
    """Equispaced trapezoid nodes on Im z = y0, x in [-x_window, x_window].

    The step is ``step_ratio * y0`` (trapezoid error ~ exp(-2 pi y0 / h)),
    further limited to a quarter of pi/t for the oscillating factor.
    ``nodes`` = 0 lets the layout choose; a positive value is a lower bound.
    """

    y0: float
    x_window: float
    nodes: int = 0
    step_ratio: float = 0.25

    def __post_init__(self):
        if self.y0 <= 0:
            raise ValueError("contour height must be positive")
        if self.x_window <= 0:
            raise ValueError("window must be positive")

    def step(self, t: float) -> float:
        h = self.step_ratio * self.y0
        if t > 0:
            h = min(h, 0.25 * math.pi / t)
        n = int(math.ceil(2.0 * self.x_window / h))
        if self.nodes:
            n = max(n, self.nodes - 1)
        return 2.0 * self.x_window / n

    def layout(self, t: float):
        """Nodes z_n, trapezoid weights w_n and step h."""
        h = self.step(t)
        n = int(round(2.0 * self.x_window / h)) + 1
        xs = -self.x_window + h * np.arange(n)
        ws = np.full(n, h, dtype=complex)
        ws[0] = ws[-1] = 0.5 * h
        return xs + 1j * self.y0, ws, h


def default_contour(psi: WavePacket, t_max: float, window: Optional[float] = None) -> ContourSpec:
    """Height min(packet energy width, 4 / t_max); window well past the spectrum.

    The norm error from on-shell poles beyond the window falls like
    x_window^(-3/2), which sets the default window.
    """
    y0 = packet_energy_width(psi)
    if t_max > 0:
        y0 = min(y0, 4.0 / t_max)
    e_max = float(psi.energies.max())
    if window is None:
        window = max(1600.0, 30.0 * e_max)
    return ContourSpec(y0, window)


@dataclass
class EvolutionResult:
    amplitude: np.ndarray
    norm: float
    truncation_estimate: float
    nodes: int


def _overlap_grid(psi: WavePacket, y0: float, order: int = 8):
    """Nodes resolving 1/(z - E) at height y0 over the packet's energy range."""
    e = psi.energies
    e_lo, e_hi = float(e.min()), float(e.max())
    n_pan = max(8, int(math.ceil((e_hi - e_lo) / (0.5 * y0))))
    k_edges = np.sqrt(np.linspace(e_lo, e_hi, n_pan + 1) * psi.m)
    k, w = gauss_legendre_panels(k_edges, order)
    w = w * k * k / (2.0 * math.pi ** 2)
    return k, w, k * k / psi.m, psi.amplitude(k)


def _check_window(psi: WavePacket, contour: ContourSpec):
    if contour.x_window < float(psi.energies.max()) + 10.0 * contour.y0:
        raise ContourTooNarrow("window does not cover the packet spectrum plus 10 y0")


def _taus(T: SeparableT, zs) -> np.ndarray:
    return np.array([T.tau(complex(z)) for z in zs])


def _contour_data(T: SeparableT, psi: WavePacket, t: float, contour: ContourSpec):
    _check_window(psi, contour)
    zs, ws, h = contour.layout(t)
    k, w, ek, vals = _overlap_grid(psi, contour.y0)
    overlap = resolvent_sums(zs, ek, w * np.conj(T.u(k)) * vals)
    c = (1j / (2.0 * math.pi)) * ws * np.exp(-1j * zs * t) * _taus(T, zs) * overlap
    return zs, c, h


def _truncation(T, psi, c, zs, contour):
    """Larger of two estimates of what the finite window misses.

    The amplitude on psi.grid carried by the outer half of the window, and
    the probability int_{E > X} |u tau O|^2 of on-shell components whose
    poles sit beyond the window edge X.
    """
    e = psi.energies
    outer = np.abs(zs.real) > 0.5 * contour.x_window
    amp = contour_synthesis(zs[outer], c[outer], e) * T.u(psi.grid)
    est_amp = float(np.max(np.abs(amp)))
    X = contour.x_window
    s, ws = gauss_legendre_panels(np.linspace(0.0, 1.0, 5), 16)
    energies = X / (s * s)
    k = np.sqrt(energies * psi.m)
    kq, wq, ekq, vals = _overlap_grid(psi, contour.y0)
    o = resolvent_sums(energies.astype(complex), ekq, wq * np.conj(T.u(kq)) * vals)
    tau = _taus(T, energies)
    dens = np.abs(T.u(k) * tau * o) ** 2 * k * k / (2.0 * math.pi ** 2)
    # dk = (sqrt(m X) / s^2) ds
    est_norm = float(np.sum(ws * dens * math.sqrt(psi.m * X) / (s * s)))
    return max(est_amp, est_norm)


def evolve(T: SeparableT, psi: WavePacket, t: float, contour: Optional[ContourSpec] = None,
           return_details: bool = False):
    """<k|U(t,0)|psi> on psi.grid.

    The bound-state pole lies below the line, so its exp(-i z_B t)
    contribution is part of the contour sum.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        # closing the line upward encloses no singularity: U(0,0) = 1
        res = EvolutionResult(psi.values.copy(), psi.norm, 0.0, 0)
        return res if return_details else res.amplitude
    if contour is None:
        contour = default_contour(psi, t)
    e = psi.energies
    zs, c, h = _contour_data(T, psi, t, contour)
    trunc = _truncation(T, psi, c, zs, contour)
    if trunc > TRUNCATION_LIMIT:
        raise ContourTooNarrow(f"spectral truncation estimate {trunc:.2e} exceeds {TRUNCATION_LIMIT:g}")
    amp = np.exp(-1j * e * t) * psi.values + T.u(psi.grid) * contour_synthesis(zs, c, e)
    if not return_details:
        return amp
    norm = _evolved_norm(T, psi, t, zs, c, h, contour.y0)
    return EvolutionResult(amp, norm, trunc, zs.size)


def _toeplitz_quadratic(c, r_z, r_w, h, y0):
    """sum_{n,q} c_n conj(c_q) (R(w_q) - R(z_n)) / (z_n - w_q) on an equispaced line.

    z_n - w_q = (n - q) h + 2i y0 depends on n - q only, so both inner sums
    are convolutions done by FFT.
    """
    n = c.size
    d = np.arange(-(n - 1), n)
    kern = 1.0 / (d * h + 2j * y0)          # kern[j + n - 1] = D(j)
    cbar = np.conj(c)
    # A_q = sum_n c_n D(n - q): convolve c with D(-j)
    a = fftconvolve(c, kern[::-1])[n - 1:2 * n - 1]
    # B_n = sum_q conj(c_q) D(n - q)
    b = fftconvolve(cbar, kern)[n - 1:2 * n - 1]
    return float(np.real(np.sum(cbar * r_w * a) - np.sum(c * r_z * b)))


def _evolved_norm(T, psi, t, zs, c, h, y0, method: str = "fft"):
    k, w, ek, vals = _overlap_grid(psi, y0)
    q = resolvent_sums(zs, ek, w * np.exp(1j * ek * t) * np.conj(vals) * T.u(k))
    r_z = np.array([T.resolvent(complex(z)) for z in zs])
    r_w = np.array([T.resolvent(complex(np.conj(z))) for z in zs])
    cross = 2.0 * float(np.real(np.sum(c * q)))
    if method == "fft":
        quad = _toeplitz_quadratic(c, r_z, r_w, h, y0)
    else:
        quad = norm_quadratic(zs, c, r_z, r_w)
    return psi.norm + cross + quad


def unitarity_defect(T: SeparableT, psi: WavePacket, t: float, contour: Optional[ContourSpec] = None) -> float:
    """|norm(U(t) psi) - 1| with the norm taken exactly in k over all momenta."""
    res = evolve(T, psi, t, contour, return_details=True)
    return abs(res.norm - 1.0)


def survival_amplitude(T: SeparableT, psi: WavePacket, times, contour: ContourSpec) -> np.ndarray:
    """<psi|U(t,0)|psi> for many t on one contour (reused across times)."""
    times = np.asarray(times, dtype=float)
    _check_window(psi, contour)
    zs, ws, _ = contour.layout(float(times.max()))
    k, w, ek, vals = _overlap_grid(psi, contour.y0)
    u_k = T.u(k)
    overlap = resolvent_sums(zs, ek, w * np.conj(u_k) * vals)
    proj = resolvent_sums(zs, ek, w * np.conj(vals) * u_k)
    base = (1j / (2.0 * math.pi)) * ws * _taus(T, zs) * overlap * proj
    prob = w * np.abs(vals) ** 2
    out = np.exp(-1j * np.outer(times, ek)) @ prob
    step = max(1, (1 << 21) // zs.size)
    for i in range(0, times.size, step):
        out[i:i + step] += np.exp(-1j * np.outer(times[i:i + step], zs)) @ base
    out[times == 0.0] = psi.norm  # U(0,0) = 1, as in evolve
    return out


def dominant_frequency(times, signal, pad: int = 64) -> float:
    """Angular frequency omega of the strongest exp(-i omega t) component.

    Hann-windowed FFT with zero padding, refined by a parabola through the
    peak bin and its neighbours.
    """
    times = np.asarray(times, dtype=float)
    dt = times[1] - times[0]
    sig = np.asarray(signal) - np.mean(signal)
    sig = sig * np.hanning(sig.size)
    n = sig.size * pad
    power = np.abs(np.fft.fft(sig, n))
    omega = -2.0 * math.pi * np.fft.fftfreq(n, dt)
    i = int(np.argmax(power))
    if 0 < i < n - 1:
        a, b, c = np.log(power[i - 1]), np.log(power[i]), np.log(power[i + 1])
        shift = 0.5 * (a - c) / (a - 2 * b + c)
    else:
        shift = 0.0
    return float(omega[i] + shift * (omega[1] - omega[0]))


def tail_probability(T: SeparableT, psi: WavePacket, t: float, k_cut: float,
                     contour: Optional[ContourSpec] = None, order: int = 8) -> float:
    """Probability of |k| > k_cut in the evolved state: total norm minus the part below k_cut."""
    if t == 0.0:
        mask = psi.grid > k_cut
        return float(np.sum(psi.weights[mask] * np.abs(psi.values[mask]) ** 2))
    if contour is None:
        contour = default_contour(psi, t)
    zs, c, h = _contour_data(T, psi, t, contour)
    total = _evolved_norm(T, psi, t, zs, c, h, contour.y0)
    e_cut = k_cut ** 2 / psi.m
    n_pan = max(64, int(math.ceil(e_cut / (0.5 * contour.y0))))
    k, w = gauss_legendre_panels(np.sqrt(np.linspace(0.0, e_cut, n_pan + 1) * psi.m), order)
    w = w * k * k / (2.0 * math.pi ** 2)
    ek = k * k / psi.m
    inside = psi.amplitude(k) * np.exp(-1j * ek * t) + T.u(k) * contour_synthesis(zs, c, ek)
    return total - float(np.sum(w * np.abs(inside) ** 2))
