"""Continuous (unitarity-preserving) monitoring of the decay.

Coupling the decay products inside the band (-lam, lam) to the detector
shifts their energies to k - i*sigma/2.  The reduced, non-Hermitian dynamics
of the undecayed state is encoded in a complex self-energy built from two
logarithms; its imaginary part sets the spectral density whose Fourier
transform is the survival amplitude.  The no-click probability adds the
survived weight and the weight that decayed outside the detector's reach.

Branch handling is the delicate part: both logarithms use the principal
branch, and the first one (whose argument crosses the negative real axis) is
evaluated at E + i*eps with eps = 1e-8*gamma actually added.  Two limits pin
this choice down: sigma = 0 must reproduce the Lorentzian density
everywhere, and the density must stay nonnegative on the full grid.

Spectral tables are immutable once built and all evaluations are pure, so
sharing across threads is safe; the (k, t) double integral is evaluated in
vectorized batches.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import sici

from . import model, pulsed
from .model import DetectorParams, ProbabilityCurve, SystemParams, Tolerances
from .quadrature import (
    SpectralTable,
    fourier_integral,
    integrate_adaptive,
    integrate_semi_infinite,
    tail_transform,
)

__all__ = [
    "BandEdgeError",
    "InvariantViolation",
    "self_energy",
    "spectral_density",
    "build_spectral_table",
    "decay_amplitude",
    "undetected_prob",
    "detected_flux",
    "survival_prob",
    "noclick",
    "noclick_asymptote",
    "noclick_asymptote_wide",
    "noclick_large_bandwidth",
    "effective_width",
    "noclick_exp_approx",
]

TWO_PI = 2.0 * math.pi

# Actual (not symbolic) retarded offset, in units of gamma.
_EPS_RETARDED = 1e-8


class BandEdgeError(ValueError):
    """Evaluation requested at (or too close to) a band-edge singularity."""


class InvariantViolation(RuntimeError):
    """A computed quantity broke one of the model's structural guarantees."""


def _edge_distance_ok(e, lam: float, delta: float) -> np.ndarray:
    # Slack of a few ulp so values clamped to exactly lam +- delta pass.
    return np.abs(np.abs(e) - lam) >= delta * (1.0 - 1e-9)


def self_energy(
    energy,
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    tol: Tolerances | None = None,
    branch_sign: float = 1.0,
):
    """Complex self-energy of the monitored state at real energy.

    (g^2/2pi) * [log((lam+E)/(lam-E)) + log((E-lam+i*sigma/2)/(E+lam+i*sigma/2))]
    with g^2 = gamma.  The first log gets the retarded E -> E + i*eps
    prescription so that sigma = 0 collapses both terms to i*gamma/2 on the
    real axis.  Inputs within the singular window of the band edges +-lam are
    rejected.  ``branch_sign`` flips eps and exists only so the self-check
    can demonstrate what a mis-branched evaluation does; leave it at +1.
    """
    tol = tol or Tolerances()
    e = np.asarray(energy, dtype=float)
    scalar = e.ndim == 0
    e = np.atleast_1d(e)
    if not np.all(np.isfinite(e)):
        raise ValueError("energy must be real and finite")
    g2 = sys.gamma
    if not det.finite_band:
        out = np.full(e.shape, 0.5j * g2)
        return complex(out[0]) if scalar else out

    lam, sigma = det.lam, det.sigma
    delta = tol.sing_window(sys, det)
    if not np.all(_edge_distance_ok(e, lam, delta)):
        raise BandEdgeError(
            f"energy within {delta:g} of a band edge +-{lam:g}; "
            "the self-energy has a logarithmic point there"
        )
    eps = branch_sign * _EPS_RETARDED * g2
    pref = g2 / TWO_PI
    term1 = pref * np.log((lam + e + 1j * eps) / (lam - e - 1j * eps))
    term2 = pref * np.log((e - lam + 0.5j * sigma) / (e + lam + 0.5j * sigma))
    out = term1 + term2
    return complex(out[0]) if scalar else out


def spectral_density(
    energy,
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    tol: Tolerances | None = None,
    branch_sign: float = 1.0,
):
    """Energy distribution of the monitored state, -(1/pi) Im G(E).

    G(E) = 1/(E + self_energy(E) + i*eps), where the explicit +i*eps is kept
    only where Im(self_energy) vanishes; elsewhere the self-energy itself
    provides the damping.  Band-edge inputs are substituted by the one-sided
    value at a distance delta, so grid sweeps never hit the singular points.
    A density below -abs_tol signals a branch bug and raises.
    """
    tol = tol or Tolerances()
    e = np.asarray(energy, dtype=float)
    scalar = e.ndim == 0
    e = np.atleast_1d(e).copy()
    if det.finite_band:
        lam = det.lam
        delta = tol.sing_window(sys, det)
        near = ~_edge_distance_ok(e, lam, delta)
        if near.any():
            sign_e = np.where(e[near] >= 0.0, 1.0, -1.0)
            inward = np.abs(e[near]) < lam
            e[near] = sign_e * (lam + np.where(inward, -delta, delta))
    sig = self_energy(e, sys, det, tol, branch_sign)
    sig = np.atleast_1d(sig)
    g_eps = np.where(sig.imag > 0.0, 0.0, _EPS_RETARDED * sys.gamma)
    green = 1.0 / (e + sig + 1j * g_eps)
    dens = -green.imag / math.pi
    if dens.min() < -tol.abs_tol:
        raise InvariantViolation(
            f"negative spectral density {dens.min():.3e} "
            "(branch error in the self-energy)"
        )
    return float(dens[0]) if scalar else dens


def _default_e_max(sys: SystemParams, det: DetectorParams) -> float:
    base = max(40.0 * sys.gamma, 4.0 * det.sigma)
    # Enclose the band edges only while they carry non-negligible weight
    # (relative density ~ (gamma/lam)^2); far beyond every physical scale
    # they would just inflate the grid and the k integration range.
    if det.lam <= 2.5 * base:
        return max(base, 4.0 * det.lam)
    return base


def build_spectral_table(
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    tol: Tolerances | None = None,
    branch_sign: float = 1.0,
) -> SpectralTable:
    """Sample the spectral density on a uniform symmetric grid.

    The grid spans [-e_max, e_max] with e_max = max(40*gamma, 4*lam,
    4*sigma) by default, stretched minimally so that no node lands inside
    the singular window of +-lam.  The tail coefficient reproduces the
    actual tail mass (computed by mapped quadrature), and the total mass,
    with the band edges re-integrated adaptively, must equal 1 within
    rel_tol or the build fails.
    """
    tol = tol or Tolerances()
    if not det.finite_band:
        raise ValueError("spectral tables need a finite bandwidth; "
                         "the infinite-band limit uses closed forms")
    lam = det.lam
    e_max = tol.e_max if tol.e_max is not None else _default_e_max(sys, det)
    if lam < e_max <= 2.0 * lam:
        raise ValueError(
            f"e_max = {e_max:g} must either enclose the band (> 2*lam) "
            "or exclude it (<= lam)"
        )
    n = tol.n_grid
    delta = tol.sing_window(sys, det)
    edges_inside = lam < e_max

    if edges_inside:
        for attempt in range(32):
            h = 2.0 * e_max / (n - 1)
            # Node closest to +lam (grid is symmetric, -lam is equivalent).
            pos = (lam + e_max) / h
            if abs(pos - round(pos)) * h >= delta:
                break
            e_max *= 1.0 + 1e-4 * (attempt + 1)
        else:
            raise RuntimeError("could not place the grid clear of the band edges")

    energies = np.linspace(-e_max, e_max, n)
    dens = spectral_density(energies, sys, det, tol, branch_sign)

    def dens_fn(e):
        return spectral_density(e, sys, det, tol, branch_sign)

    extra_e = extra_m = None
    if edges_inside:
        deficit = _edge_trapezoid_deficit(energies, dens, dens_fn, lam)
        extra_e = np.array([-lam, lam])
        extra_m = np.array([deficit, deficit])

    tail_mass = 2.0 * integrate_semi_infinite(dens_fn, e_max, tol).require(
        "spectral tail mass"
    )
    table = SpectralTable(energies, dens, 0.5 * e_max * tail_mass, extra_e, extra_m)

    mass = table.mass
    if abs(mass - 1.0) > tol.rel_tol:
        raise InvariantViolation(
            f"spectral mass {mass!r} deviates from 1 by {abs(mass - 1.0):.3e} "
            f"(allowed {tol.rel_tol:g})"
        )

    _verify_k_symmetry(table, sys, det, tol)
    return table


def _edge_trapezoid_deficit(energies, dens, dens_fn, lam: float, cells: int = 8) -> float:
    """Spectral weight the trapezoid rule misses around the +lam band edge
    (the density has integrable logarithmic structure there): a bracket of
    cells is re-integrated adaptively and compared against its trapezoid.
    By symmetry the -lam edge misses the same amount; the caller attaches
    both as point masses at +-lam."""
    n = energies.size
    h = energies[1] - energies[0]
    j = int(np.searchsorted(energies, lam))
    i0 = max(j - cells, 1)
    i1 = min(j + cells, n - 2)
    refined = integrate_adaptive(dens_fn, energies[i0], energies[i1]).require(
        "band-edge refinement"
    )
    local = dens[i0 : i1 + 1]
    trap = h * (local.sum() - 0.5 * (local[0] + local[-1]))
    return float(refined - trap)


def _verify_k_symmetry(
    table: SpectralTable,
    sys: SystemParams,
    det: DetectorParams,
    tol: Tolerances,
) -> None:
    # sigma(k) is even, so |amplitude(k, t)| = |amplitude(-k, t)| must hold;
    # checked once per table at fixed pseudo-random probes before w_c
    # exploits it.
    rng = np.random.default_rng(987134)
    ks = rng.uniform(0.25, 0.9, 3) * det.lam
    ts = rng.uniform(0.2, 2.0, 3) / sys.gamma
    for k, t in zip(ks, ts):
        pair = _amp_batch(np.array([k, -k]), t, sys, det, table, tol, stride=1)
        gap = abs(abs(pair[0]) - abs(pair[1]))
        if gap > 1e-9 * max(1.0, abs(pair[0])):
            raise InvariantViolation(
                f"k -> -k symmetry violated at k={k:g}, t={t:g}: gap {gap:.3e}"
            )


def _resonance_width(sys: SystemParams, det: DetectorParams) -> float:
    """Im self_energy(0): the slowest spectral damping rate."""
    x = det.sigma / (2.0 * det.lam) if det.finite_band else 0.0
    return (sys.gamma / TWO_PI) * (math.pi - 2.0 * math.atan(x))


def _band_stride(table: SpectralTable, t: float, sys: SystemParams,
                 det: DetectorParams, tol: Tolerances) -> int:
    """Largest power-of-two subsampling of the energy grid that keeps the
    equispaced-sum aliasing images of the smooth spectral structure damped
    below ~1e-8 at time t.  The band edges' logarithmic structure aliases
    like spacing/(2*pi) regardless, so accuracy past ~1e-4 there needs
    tol.max_stride."""
    width = _resonance_width(sys, det)
    t_req = max(16.0, 1.25 * t) + 8.0 / width + 40.0
    h_req = TWO_PI / t_req
    n1 = table.n - 1
    cap = tol.max_stride if tol.max_stride is not None else n1
    stride = 1
    while (
        stride * 2 <= min(n1, cap)
        and n1 % (stride * 2) == 0
        and table.spacing * stride * 2 <= h_req
        and n1 // (stride * 2) >= 128
    ):
        stride *= 2
    return stride


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [0, 1], cached by (bucketed) order."""
    n = 1 << max(5, int(math.ceil(math.log2(n))))
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[n]


def _amp_batch(
    k: np.ndarray,
    t: float,
    sys: SystemParams,
    det: DetectorParams,
    table: SpectralTable,
    tol: Tolerances,
    stride: int = 1,
) -> np.ndarray:
    """Decay amplitudes under monitoring for a batch of energies at one time.

    sqrt(gamma/2pi) * integral dE d(E) (e^{-i w t} - e^{-i E t})/(w - E) with
    w = k - i*sigma/2 inside the band and w = k outside, evaluated on the
    (possibly strided) table grid.  Within |w - E| < delta the integrand
    switches to its two-term Taylor form; elsewhere the numerator is built
    from precomputed phase factors, never a per-element exponential.

    The density's analytic 1/E**2 tail enters through the time-domain form
    of the kernel, -i * integral_0^t e^{-iws} tail_transform(t-s) ds, which
    stays regular even where the energy-domain tail would cross w = E.
    """
    if t == 0.0:
        return np.zeros(k.shape, dtype=complex)
    lam, sigma = det.lam, det.sigma
    delta = tol.sing_window(sys, det)
    energies, weights = table.nodes_and_weights(stride)

    phase_pos = np.exp(1j * t * energies)          # e^{+iEt}
    weighted = weights * np.conj(phase_pos)        # w_i d_i e^{-iEt}
    omega = np.where(np.abs(k) < lam, k - 0.5j * sigma, k + 0.0j)
    s_fac = np.exp(-1j * t * omega)                # decays: Im(-i t w) <= 0

    # Tail-density correction, two regimes split at |w| = e_max/2.
    #
    # Small |w|: the kernel expands in powers of w/E on |E| > e_max, giving
    # an exact series with closed-form oscillatory coefficients.
    x_max = table.e_max
    c_tail = table.tail_coefficient
    series_n = 40
    i_tails = _exp_over_power_tails(x_max, t, series_n + 3)
    m_tails = np.array([
        i_tails[n - 1] + (-1) ** n * np.conj(i_tails[n - 1])
        for n in range(3, series_n + 4)
    ])
    j_idx = np.arange(series_n + 1)
    # odd-power series of integral dE / ((w - E) E^2) over |E| > e_max
    t1_coeffs = np.where(
        j_idx % 2 == 1, -2.0 / ((j_idx + 2.0) * x_max ** (j_idx + 2)), 0.0
    )
    # Larger |w| (out-of-band k near the grid edge): time-domain form of the
    # kernel; tail_transform(tau) falls off like 1/(e_max^2 tau), so only
    # the window tau <= ~60/e_max near s = t contributes, capping the phase
    # budget (e^{-iws} plus the transform's own e_max oscillation).
    k_abs_max = float(np.abs(k).max()) if k.size else 0.0
    u_lo = max(0.0, 1.0 - 60.0 / (x_max * t))
    span = 1.0 - u_lo
    phase = span * t * (k_abs_max + x_max)
    x01, w01 = _gauss_legendre_01(int(24 + phase / 1.5))
    s01 = u_lo + span * x01
    window_vals = (span * w01) * tail_transform(table, t * (1.0 - s01))

    h = energies[1] - energies[0]
    n_grid = energies.size - table.extra_energies.size
    out = np.empty(k.size, dtype=complex)
    rows = max(1, int(2_000_000 // energies.size))
    for i in range(0, k.size, rows):
        w_c = omega[i : i + rows]
        u = w_c[:, None] - energies[None, :]
        q = s_fac[i : i + rows, None] * phase_pos[None, :]
        q -= 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            q /= u                       # (e^{-iut} - 1)/u, u = w - E
        # The removable point u -> 0 can only occur for real w, at the grid
        # node nearest to it (plus possibly a point correction at +-lam);
        # patch those entries with the Taylor form instead of masking the
        # whole matrix.
        real_w = w_c.imag == 0.0
        if real_w.any():
            kr = w_c.real
            cols = np.clip(np.rint((kr - energies[0]) / h), 0, n_grid - 1).astype(int)
            for extra in range(n_grid, energies.size):
                close = np.abs(kr - energies[extra]) < np.abs(kr - energies[cols])
                cols[close] = extra
            uu = kr - energies[cols]
            fix = real_w & (np.abs(uu) < delta)
            if fix.any():
                r = np.nonzero(fix)[0]
                q[r, cols[r]] = (-1j * t) * (1.0 - 0.5j * t * uu[r])
        out[i : i + rows] = q @ weighted
        small = np.abs(w_c) <= 0.5 * x_max
        if small.any():
            powers = w_c[small, None] ** j_idx[None, :]
            out[i : i + rows][small] += c_tail * (
                s_fac[i : i + rows][small] * (powers @ t1_coeffs)
                + powers @ m_tails
            )
        if not small.all():
            big = ~small
            out[i : i + rows][big] += (-1j * t) * (
                np.exp((-1j * t) * w_c[big, None] * s01[None, :]) @ window_vals
            )
    return math.sqrt(sys.gamma / TWO_PI) * out


def decay_amplitude(
    k: float,
    t: float,
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    table: SpectralTable | None = None,
    tol: Tolerances | None = None,
) -> complex:
    """Amplitude for a decay product of energy k at time t under monitoring.

    Exactly 0 at t = 0.  For sigma = 0 it reproduces the free amplitude; for
    in-band k and sigma > 0 it dies out at long times (the detector
    eventually registers everything it can reach).
    """
    tol = tol or Tolerances()
    if t < 0.0:
        raise ValueError("time must be >= 0")
    if table is None:
        table = build_spectral_table(sys, det, tol)
    out = _amp_batch(np.atleast_1d(float(k)), t, sys, det, table, tol, stride=1)
    return complex(out[0])


def _phase_panels(t: float, span: float, tol: Tolerances) -> int:
    # Seed oscillatory k integrals with <= ~2 periods of e^{-ikt} per panel;
    # an unlucky whole-period panel makes the Kronrod error estimate blind.
    return int(min(max(4, math.ceil(t * span / 12.0)), tol.max_intervals // 2))


def _band_integral(
    t: float,
    sys: SystemParams,
    det: DetectorParams,
    table: SpectralTable,
    tol: Tolerances,
):
    stride = _band_stride(table, t, sys, det, tol)

    def dens_k(karr):
        return np.abs(_amp_batch(karr, t, sys, det, table, tol, stride)) ** 2

    # Even in k (verified at table build), so integrate half and double.
    band = integrate_adaptive(
        dens_k, 0.0, det.lam, tol, initial_panels=_phase_panels(t, det.lam, tol)
    )
    return dens_k, 2.0 * band.require("in-band decay weight")


_LAGUERRE_64 = None


def _exp_over_power_tails(x: float, t: float, n_max: int) -> list[complex]:
    """I_n = integral_x^inf e^{-ikt} / k**n dk for n = 1..n_max (t > 0).

    For small total phase t*x the upward recurrence from the Si/Ci closed
    form of I_1 is stable.  Beyond that it cancels catastrophically, and the
    integral is taken instead along the descending contour k = x - i*v/t
    where the oscillation turns into a pure decay, with a fixed
    Gauss-Laguerre rule (converged to ~1e-13 for every order used here)."""
    global _LAGUERRE_64
    phase = complex(math.cos(x * t), -math.sin(x * t))
    tx = t * x
    if tx <= 20.0:
        si, ci = sici(tx)
        tails = [-ci - 1j * (0.5 * math.pi - si)]
        for n in range(2, n_max + 1):
            tails.append((phase / x ** (n - 1) - 1j * t * tails[-1]) / (n - 1))
        return tails
    if _LAGUERRE_64 is None:
        _LAGUERRE_64 = np.polynomial.laguerre.laggauss(64)
    v, w = _LAGUERRE_64
    base = 1.0 / (tx - 1j * v)
    powers = base.copy()
    tails = []
    scale = 1.0
    for _ in range(n_max):
        tails.append(scale * (-1j) * phase * (w @ powers))
        powers = powers * base
        scale *= t
    return tails


def _w_tail_analytic(
    k_cut: float,
    t: float,
    gamma: float,
    energies: np.ndarray,
    weighted: np.ndarray,
    tail_mass: float,
    tail_amp: complex,
) -> float:
    """integral_{k_cut}^inf |amplitude|^2 dk from the grid's large-k expansion.

    For k beyond every tabulated energy the amplitude is
    sqrt(gamma/2pi) * (e^{-ikt} P(k) - Q(k,t)) with P, Q built from grid
    moments; the density's analytic 1/E**2 tail enters the leading moments
    (its mass and its transform at t).  The oscillatory pieces integrate in
    closed form via Si/Ci.  Valid for k_cut >= 2 * max|E|; the first
    neglected term enters at O(<|E|^3> / k_cut^4).
    """
    m0 = float(weighted.sum()) + tail_mass
    m2 = float(weighted @ (energies * energies))
    phase = np.exp(-1j * t * energies)
    a0 = complex(weighted @ phase) + tail_amp
    a1 = complex((weighted * energies) @ phase)
    a2 = complex((weighted * energies * energies) @ phase)

    # smooth part: (P^2 + |Q|^2), collected by power of 1/k
    smooth = {
        2: m0 * m0 + abs(a0) ** 2,
        3: 2.0 * (a0 * np.conj(a1)).real,
        4: 2.0 * m0 * m2 + abs(a1) ** 2 + 2.0 * (a0 * np.conj(a2)).real,
        5: 2.0 * (a1 * np.conj(a2)).real,
        6: m2 * m2 + abs(a2) ** 2,
    }
    # oscillatory part: -2 Re( e^{-ikt} P(k) conj(Q(k)) )
    osc = {
        2: m0 * np.conj(a0),
        3: m0 * np.conj(a1),
        4: m0 * np.conj(a2) + m2 * np.conj(a0),
        5: m2 * np.conj(a1),
        6: m2 * np.conj(a2),
    }
    tails = _exp_over_power_tails(k_cut, t, 6)
    total = 0.0
    for n, coeff in smooth.items():
        total += coeff * k_cut ** (1 - n) / (n - 1)
    for n, coeff in osc.items():
        total -= 2.0 * (coeff * tails[n - 1]).real
    return (gamma / TWO_PI) * total


def undetected_prob(
    t: float,
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    table: SpectralTable | None = None,
    tol: Tolerances | None = None,
) -> float:
    """Probability that the state decayed but the detector saw nothing.

    Integral of |decay_amplitude|^2 over all k, split at the band edges.
    The outer pieces run adaptively out to 2*e_max, beyond which the
    integrand follows the grid's large-k expansion and is integrated in
    closed form (a mapped quadrature cannot see the cancellation of the
    undamped e^{-ikt} oscillation riding on the 1/k^2 envelope).
    """
    tol = tol or Tolerances()
    if t < 0.0:
        raise ValueError("time must be >= 0")
    if not det.finite_band:
        return _large_band_noclick(np.atleast_1d(t), sys, det)[0] - math.exp(
            -sys.gamma * t
        )
    if t == 0.0:
        return 0.0
    if table is None:
        table = build_spectral_table(sys, det, tol)
    dens_k, band = _band_integral(t, sys, det, table, tol)
    lam = det.lam
    k_cut = max(2.0 * table.e_max, lam)
    outer = 0.0
    if k_cut > lam * (1.0 + 1e-12):
        outer = 2.0 * integrate_adaptive(
            dens_k, lam, k_cut, tol,
            initial_panels=_phase_panels(t, k_cut - lam, tol),
        ).require("out-of-band decay weight")
    stride = _band_stride(table, t, sys, det, tol)
    energies, weighted = table.nodes_and_weights(stride)
    tail_mass = 2.0 * table.tail_coefficient / table.e_max
    tail_amp = complex(tail_transform(table, np.atleast_1d(t))[0])
    outer += 2.0 * _w_tail_analytic(
        k_cut, t, sys.gamma, energies, weighted, tail_mass, tail_amp
    )
    return float(band + outer)


def detected_flux(
    t: float,
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    table: SpectralTable | None = None,
    tol: Tolerances | None = None,
) -> float:
    """Instantaneous detection rate sigma * integral over the band of
    |decay_amplitude|^2; equals -d/dt of the no-click probability."""
    tol = tol or Tolerances()
    if not det.finite_band:
        raise ValueError("detected_flux needs a finite bandwidth")
    if table is None:
        table = build_spectral_table(sys, det, tol)
    _, band = _band_integral(t, sys, det, table, tol)
    return det.sigma * band


def survival_prob(
    times,
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    tol: Tolerances | None = None,
    table: SpectralTable | None = None,
) -> ProbabilityCurve:
    """Survival probability |a(t)|^2 from the spectral density's transform."""
    tol = tol or Tolerances()
    times = np.asarray(times, dtype=float)
    if not det.finite_band:
        return ProbabilityCurve(times, np.exp(-sys.gamma * times), tol.curve_slack)
    if table is None:
        table = build_spectral_table(sys, det, tol)
    amp = fourier_integral(table, times, tol)
    return ProbabilityCurve(times, np.abs(amp) ** 2, tol.curve_slack)


def noclick(
    times,
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    tol: Tolerances | None = None,
    table: SpectralTable | None = None,
) -> ProbabilityCurve:
    """No-click probability: survived weight plus undetected decayed weight.

    Identically 1 for sigma = 0 (nothing couples to the detector, there is
    never a click); that limit is computed, not special-cased, and doubles
    as the unitarity check of the whole pipeline.
    """
    tol = tol or Tolerances()
    times = np.asarray(times, dtype=float)
    if not det.finite_band:
        return ProbabilityCurve(times, _large_band_noclick(times, sys, det),
                                tol.curve_slack)
    if table is None:
        table = build_spectral_table(sys, det, tol)
    p = survival_prob(times, sys, det, tol, table)
    w = np.array(
        [undetected_prob(t, sys, det, table, tol) for t in times]
    )
    return ProbabilityCurve(times, p.values + w, tol.curve_slack)


def noclick_asymptote(
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    tol: Tolerances | None = None,
) -> float:
    """Exact t -> inf no-click probability for sigma > 0.

    (gamma/pi) * integral_lam^inf dk |k + self_energy(k)|^{-2}: only the
    out-of-band weight survives indefinitely.  Only logarithmically
    dependent on sigma, in stark contrast with the pulsed asymptote's strong
    tau dependence.
    """
    tol = tol or Tolerances()
    if det.sigma <= 0.0:
        raise ValueError("the asymptote needs sigma > 0 (sigma = 0 never clicks)")
    if not det.finite_band:
        return 0.0
    lam = det.lam
    delta = tol.sing_window(sys, det)

    def integrand(k):
        kk = np.maximum(k, lam + delta)
        sig = self_energy(kk, sys, det, tol)
        return 1.0 / np.abs(kk + sig) ** 2

    value = integrate_semi_infinite(integrand, lam, tol).require(
        "no-click asymptote"
    )
    return (sys.gamma / math.pi) * value


def noclick_asymptote_wide(
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
) -> float:
    """Large-sigma approximation of the asymptote: 1 - click saturation."""
    return 1.0 - pulsed.click_prob_saturation(sys, det)


def _large_band_noclick(times: np.ndarray, sys: SystemParams,
                        det: DetectorParams) -> np.ndarray:
    g, s = sys.gamma, det.sigma
    eg = np.exp(-g * times)
    if abs(s - g) <= 1e-8 * g:
        return eg * (1.0 + g * times)
    return eg + g / (g - s) * (np.exp(-s * times) - eg)


def noclick_large_bandwidth(
    times,
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    tol: Tolerances | None = None,
) -> ProbabilityCurve:
    """Closed-form no-click curve in the wide-band regime lam >> gamma, sigma.

    e^{-gamma t} + gamma/(gamma - sigma) (e^{-sigma t} - e^{-gamma t}), with
    the analytic sigma -> gamma limit e^{-gamma t}(1 + gamma t).  The regime
    is not enforced; callers pick when the approximation applies.
    """
    tol = tol or Tolerances()
    times = np.asarray(times, dtype=float)
    return ProbabilityCurve(times, _large_band_noclick(times, sys, det),
                            tol.curve_slack)


def effective_width(
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
) -> float:
    """Measurement-renormalized decay rate of the no-click curve.

    gamma/pi times the principal argument of (-lam + i*sigma/2)/(lam +
    i*sigma/2); the ratio has unit modulus so the value is real, equals
    gamma exactly at sigma = 0, and falls to zero as sigma grows (Zeno
    freezing).
    """
    g = sys.gamma
    if not det.finite_band:
        return g
    arg = math.atan2(0.5 * det.sigma, -det.lam) - math.atan2(0.5 * det.sigma, det.lam)
    return g * (arg / math.pi)


def noclick_exp_approx(
    times,
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    tol: Tolerances | None = None,
) -> ProbabilityCurve:
    """Two-parameter approximation (1 - p_inf) e^{-width t} + p_inf.

    Uses the exact asymptote and the effective width; accurate at large
    sigma, where it makes the slow approach to the asymptote explicit.
    """
    tol = tol or Tolerances()
    times = np.asarray(times, dtype=float)
    p_inf = noclick_asymptote(sys, det, tol)
    width = effective_width(sys, det)
    values = (1.0 - p_inf) * np.exp(-width * times) + p_inf
    return ProbabilityCurve(times, values, tol.curve_slack)
