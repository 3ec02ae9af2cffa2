"""Adaptive Gauss-Kronrod integration, semi-infinite mappings, and Fourier
transforms of tabulated spectral densities.

Integrands are evaluated in bulk: every callback receives a 1-D numpy array
of abscissae and must return an array of the same length (real or complex).
Every result carries an error estimate and an explicit convergence flag; on
failure the flag is lowered instead of returning a fabricated value.  The
engine holds no shared mutable state, so independent integrals may run
concurrently as long as the callbacks themselves are thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import sici

from .model import Tolerances

__all__ = [
    "QuadratureError",
    "QuadResult",
    "SpectralTable",
    "integrate_adaptive",
    "integrate_semi_infinite",
    "fourier_integral",
    "tail_transform",
    "trapezoid_weights",
]


class QuadratureError(RuntimeError):
    """An integral did not converge to the requested tolerance."""


@dataclass(frozen=True)
class QuadResult:
    """Outcome of one integration: value, error estimate, status, cost."""

    value: complex | float
    err_estimate: float
    converged: bool
    evaluations: int

    def require(self, what: str = "integral"):
        """Return the value, raising QuadratureError if not converged."""
        if not self.converged:
            raise QuadratureError(
                f"{what} did not converge: estimate {self.value!r} "
                f"+- {self.err_estimate:.3e} after {self.evaluations} evaluations"
            )
        return self.value


# 15-point Kronrod extension of 7-point Gauss (standard abscissae/weights).
_XGK_POS = np.array(
    [
        0.9914553711208126,
        0.9491079123427585,
        0.8648644233597691,
        0.7415311855993944,
        0.5860872354676911,
        0.4058451513773972,
        0.20778495500789847,
        0.0,
    ]
)
_WGK_POS = np.array(
    [
        0.022935322010529224,
        0.06309209262997855,
        0.10479001032225018,
        0.14065325971552592,
        0.1690047266392679,
        0.1903505780647854,
        0.20443294007529889,
        0.20948214108472782,
    ]
)
_WG_POS = np.array(
    [
        0.12948496616886969,
        0.27970539148927666,
        0.3818300505051189,
        0.4179591836734694,
    ]
)

_XGK = np.concatenate([-_XGK_POS[:7], [0.0], _XGK_POS[6::-1]])
_WGK = np.concatenate([_WGK_POS[:7], [_WGK_POS[7]], _WGK_POS[6::-1]])
# Gauss nodes sit at the odd Kronrod positions.
_G_IDX = np.arange(1, 15, 2)
_WG = np.concatenate([_WG_POS[:3], [_WG_POS[3]], _WG_POS[2::-1]])


def _panels(f, lo: np.ndarray, hi: np.ndarray):
    """Kronrod/Gauss estimates for a batch of intervals.

    Returns (kronrod, err, n_evals) where err is the |K15 - G7| per panel.
    """
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * _XGK[None, :]
    y = np.asarray(f(x.ravel()))
    if y.shape != (x.size,):
        raise ValueError(
            f"integrand returned shape {y.shape}, expected ({x.size},)"
        )
    y = y.reshape(x.shape)
    k15 = (y * _WGK).sum(axis=1) * half
    g7 = (y[:, _G_IDX] * _WG).sum(axis=1) * half
    return k15, np.abs(k15 - g7), x.size


def integrate_adaptive(
    f,
    a: float,
    b: float,
    tol: Tolerances | None = None,
    initial_panels: int = 4,
) -> QuadResult:
    """Integrate f over the finite interval [a, b] adaptively.

    f maps a 1-D float array to a same-length real or complex array.  Panels
    whose local error exceeds their share of the global target are bisected,
    in batches, until either the summed error estimate meets
    max(abs_tol, rel_tol * |value|) or the panel budget (tol.max_intervals)
    is exhausted, in which case the result is flagged as not converged.
    """
    tol = tol or Tolerances()
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integration bounds must be finite")
    if not a < b:
        raise ValueError(f"need a < b, got a={a!r}, b={b!r}")

    n0 = max(1, min(initial_panels, tol.max_intervals))
    edges = np.linspace(a, b, n0 + 1)
    lo, hi = edges[:-1], edges[1:]
    vals, errs, evals = _panels(f, lo, hi)

    while True:
        total = vals.sum()
        err_total = float(errs.sum())
        target = max(tol.abs_tol, tol.rel_tol * abs(total))
        if err_total <= target:
            converged = True
            break
        if lo.size >= tol.max_intervals:
            converged = False
            break
        # Greedy global refinement: bisect the worst panels, in batches, so
        # conditionally convergent (oscillatory) tails are not over-refined.
        err_max = float(errs.max())
        bad = errs >= max(0.25 * err_max, err_total / (4.0 * lo.size))
        if not bad.any():
            bad = errs == err_max
        room = tol.max_intervals - lo.size
        if int(bad.sum()) > room:
            order = np.argsort(errs, kind="stable")[::-1]
            bad = np.zeros(lo.size, dtype=bool)
            bad[order[:room]] = True
        mid = 0.5 * (lo[bad] + hi[bad])
        new_lo = np.concatenate([lo[bad], mid])
        new_hi = np.concatenate([mid, hi[bad]])
        new_vals, new_errs, n_ev = _panels(f, new_lo, new_hi)
        evals += n_ev
        lo = np.concatenate([lo[~bad], new_lo])
        hi = np.concatenate([hi[~bad], new_hi])
        vals = np.concatenate([vals[~bad], new_vals])
        errs = np.concatenate([errs[~bad], new_errs])

    value = vals.sum()
    if not np.iscomplexobj(vals):
        value = float(value)
    else:
        value = complex(value)
    return QuadResult(value, float(errs.sum()), converged, int(evals))


def integrate_semi_infinite(
    f,
    a: float,
    tol: Tolerances | None = None,
) -> QuadResult:
    """Integrate f over [a, inf) for integrands decaying at least like 1/k**2.

    Maps k = a + u/(1-u) onto u in (0, 1) and reuses the adaptive engine; the
    Jacobian 1/(1-u)**2 is absorbed so the mapped integrand stays bounded.
    """
    if not math.isfinite(a):
        raise ValueError("lower bound must be finite")

    def mapped(u: np.ndarray) -> np.ndarray:
        w = 1.0 - u
        k = a + u / w
        ok = np.isfinite(k)
        fv = np.asarray(f(k[ok]))
        y = np.zeros(u.shape, dtype=fv.dtype)
        y[ok] = fv / (w[ok] * w[ok])
        return y

    return integrate_adaptive(mapped, 0.0, 1.0, tol)


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    """Composite trapezoid weights on a uniform grid of n points, spacing h."""
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class SpectralTable:
    """An energy distribution sampled on a uniform symmetric grid.

    energies
        Uniform, strictly increasing grid on [-e_max, e_max].
    densities
        Sampled density values (>= 0 up to rounding).
    tail_coefficient
        Amplitude C of the symmetric 1/E**2 model used for |E| > e_max.  It
        is chosen so that the analytic truncation correction 2*C/e_max
        reproduces the actual tail mass.
    extra_energies / extra_masses
        Optional point corrections: spectral weight the trapezoid rule
        misses around non-smooth points (band edges), lumped at their
        locations so every strided view of the grid sees them identically.
    """

    energies: np.ndarray
    densities: np.ndarray
    tail_coefficient: float
    extra_energies: np.ndarray = None  # type: ignore[assignment]
    extra_masses: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        e = np.asarray(self.energies, dtype=float)
        d = np.asarray(self.densities, dtype=float)
        xe = np.zeros(0) if self.extra_energies is None else np.asarray(
            self.extra_energies, dtype=float
        )
        xm = np.zeros(0) if self.extra_masses is None else np.asarray(
            self.extra_masses, dtype=float
        )
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "densities", d)
        object.__setattr__(self, "extra_energies", xe)
        object.__setattr__(self, "extra_masses", xm)
        if e.ndim != 1 or e.shape != d.shape or e.size < 2:
            raise ValueError("energies/densities must be matching 1-D arrays, n >= 2")
        steps = np.diff(e)
        h = steps[0]
        # linspace nodes are exact only to ~ulp(e_max); allow that much.
        if h <= 0.0 or not np.allclose(steps, h, rtol=0.0, atol=64.0 * np.finfo(float).eps * abs(e[-1])):
            raise ValueError("energy grid must be uniform and increasing")
        if not np.all(np.isfinite(d)):
            raise ValueError("densities must be finite")
        if d.min() < -1e-6:
            raise ValueError(f"densities are significantly negative: {d.min()!r}")
        if xe.shape != xm.shape or xe.ndim != 1:
            raise ValueError("extra_energies/extra_masses must be matching 1-D arrays")
        if not (np.all(np.isfinite(xe)) and np.all(np.isfinite(xm))):
            raise ValueError("point corrections must be finite")

    @property
    def n(self) -> int:
        return int(self.energies.size)

    @property
    def spacing(self) -> float:
        return float(self.energies[1] - self.energies[0])

    @property
    def e_max(self) -> float:
        return float(self.energies[-1])

    @property
    def mass(self) -> float:
        """Trapezoid mass of the grid plus point and tail corrections."""
        w = trapezoid_weights(self.n, self.spacing)
        return float(
            w @ self.densities
            + self.extra_masses.sum()
            + 2.0 * self.tail_coefficient / self.e_max
        )

    def scaled(self, c: float) -> "SpectralTable":
        return SpectralTable(
            self.energies,
            c * self.densities,
            c * self.tail_coefficient,
            self.extra_energies,
            c * self.extra_masses,
        )

    def nodes_and_weights(self, stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """Strided grid nodes with trapezoid-times-density weights, followed
        by the point corrections.  (n - 1) must be divisible by stride."""
        if stride < 1 or (self.n - 1) % stride != 0:
            raise ValueError(f"stride {stride} incompatible with n = {self.n}")
        e = self.energies[::stride]
        w = trapezoid_weights(e.size, self.spacing * stride) * self.densities[::stride]
        if self.extra_energies.size:
            e = np.concatenate([e, self.extra_energies])
            w = np.concatenate([w, self.extra_masses])
        return e, w


def tail_transform(table: SpectralTable, times: np.ndarray) -> np.ndarray:
    """Fourier contribution of the symmetric C/E**2 tail beyond the grid.

    integral over |E| > X of (C/E**2) e^{-iEt} dE
        = 2C * (cos(X t)/X - t*(pi/2 - Si(X t))),
    which reduces to the tail mass 2C/X at t = 0.
    """
    x = table.e_max
    c = table.tail_coefficient
    si = sici(x * times)[0]
    return 2.0 * c * (np.cos(x * times) / x - times * (0.5 * math.pi - si))


def fourier_integral(
    table: SpectralTable,
    times,
    tol: Tolerances | None = None,
) -> np.ndarray:
    """Amplitudes integral of d(E) e^{-iEt} dE for each requested time.

    Grid part by endpoint-corrected (trapezoid) equispaced summation, plus
    the analytic tail contribution.  Times must be ordered, nonnegative, and
    resolvable on the grid: t <= pi / spacing is enforced, beyond which the
    equispaced sum would alias.
    """
    del tol  # accuracy is set by the table itself; kept for interface symmetry
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty 1-D array")
    if np.any(t < 0.0):
        raise ValueError("times must be >= 0")
    if np.any(np.diff(t) < 0.0):
        raise ValueError("times must be ordered")
    t_lim = math.pi / table.spacing
    if t[-1] > t_lim:
        raise QuadratureError(
            f"t = {t[-1]:g} is beyond the grid's resolvable range "
            f"(pi/spacing = {t_lim:g}); use a finer energy grid"
        )

    energies, weighted = table.nodes_and_weights()
    out = np.empty(t.size, dtype=complex)
    # Chunk the (times x energies) phase matrix to bound the workspace.
    chunk = max(1, int(4_000_000 // max(table.n, 1)))
    for i in range(0, t.size, chunk):
        tc = t[i : i + chunk]
        phases = np.exp(-1j * tc[:, None] * energies[None, :])
        out[i : i + chunk] = phases @ weighted
    out += tail_transform(table, t)
    return out
