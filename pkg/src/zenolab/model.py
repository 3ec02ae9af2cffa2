"""Parameter types, unit conventions, and the closed-form free-decay amplitudes.

Everything downstream works in natural units: the decay width ``gamma`` sets
the energy scale (all presets use gamma = 1) and times are measured in
1/gamma.  All functions here are pure and deterministic, and the parameter
objects are frozen, so concurrent evaluation is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemParams",
    "DetectorParams",
    "Tolerances",
    "ProbabilityCurve",
    "survival_amplitude",
    "decay_amplitude",
    "survival_prob",
    "decay_density",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SystemParams:
    """Unstable state: decay width gamma = (coupling)**2 > 0, bare mass 0."""

    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError(f"gamma must be finite and > 0, got {self.gamma!r}")


@dataclass(frozen=True)
class DetectorParams:
    """Detector parameters.

    lam
        Half-bandwidth: decay products are seen only inside (-lam, lam).
        ``math.inf`` is an explicit, supported flag; the infinite-bandwidth
        limit is routed to closed forms rather than faked with a large
        number, because the limits lam -> inf and t -> 0 do not commute.
    sigma
        Efficiency (inverse response time) of the continuous detector.
    tau
        Interval between pulsed measurements; only the pulsed model reads it.
    """

    lam: float = 3.0
    sigma: float = 0.0
    tau: float | None = None

    def __post_init__(self) -> None:
        if math.isnan(self.lam) or self.lam <= 0.0:
            raise ValueError(f"lam must be > 0 (math.inf allowed), got {self.lam!r}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if self.tau is not None and not (math.isfinite(self.tau) and self.tau > 0.0):
            raise ValueError(f"tau must be finite and > 0 when set, got {self.tau!r}")

    @property
    def finite_band(self) -> bool:
        return math.isfinite(self.lam)

    def require_tau(self) -> float:
        if self.tau is None:
            raise ValueError("this operation needs the pulse interval tau")
        return self.tau


@dataclass(frozen=True)
class Tolerances:
    """Numerical targets shared by the integration and sampling machinery.

    rel_tol and abs_tol are the adaptive-quadrature targets; rel_tol doubles
    as the normalization tolerance for spectral tables.  sing_factor fixes
    the half-width delta = sing_factor * max(gamma, lam) inside which
    integrands with a removable singularity switch to their Taylor form.
    e_max / n_grid control spectral sampling; n_grid defaults to 2**16 + 1 so
    that power-of-two strided subgrids remain uniform and inclusive.
    curve_slack is how far outside [0, 1] a computed probability may wander
    before it is treated as a numerical failure.
    """

    rel_tol: float = 1e-6
    abs_tol: float = 1e-12
    sing_factor: float = 1e-6
    e_max: float | None = None
    n_grid: int = 65537
    max_intervals: int = 4096
    curve_slack: float = 1e-4
    max_stride: int | None = None

    def __post_init__(self) -> None:
        for name in ("rel_tol", "abs_tol", "sing_factor", "curve_slack"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if self.e_max is not None and not (math.isfinite(self.e_max) and self.e_max > 0.0):
            raise ValueError(f"e_max must be finite and > 0, got {self.e_max!r}")
        if self.n_grid < 2:
            raise ValueError(f"n_grid must be >= 2, got {self.n_grid!r}")
        if self.max_intervals < 1:
            raise ValueError(f"max_intervals must be >= 1, got {self.max_intervals!r}")
        if self.max_stride is not None and self.max_stride < 1:
            raise ValueError(f"max_stride must be >= 1, got {self.max_stride!r}")

    def sing_window(self, sys: SystemParams, det: DetectorParams) -> float:
        """Half-width of the removable-singularity Taylor window."""
        scale = max(sys.gamma, det.lam) if det.finite_band else sys.gamma
        return self.sing_factor * scale

    def scaled(self, factor: float) -> "Tolerances":
        """Same settings with rel_tol and abs_tol multiplied by ``factor``."""
        return Tolerances(
            rel_tol=self.rel_tol * factor,
            abs_tol=self.abs_tol * factor,
            sing_factor=self.sing_factor,
            e_max=self.e_max,
            n_grid=self.n_grid,
            max_intervals=self.max_intervals,
            curve_slack=self.curve_slack,
            max_stride=self.max_stride,
        )


@dataclass(frozen=True)
class ProbabilityCurve:
    """A probability sampled on a strictly increasing time grid.

    Values are stored raw (no clamping) so invariant checks see the actual
    numbers; ``clamped()`` gives the [0, 1] version for reporting.  ``slack``
    is the tolerated numerical excursion outside [0, 1].
    """

    times: np.ndarray
    values: np.ndarray
    slack: float = 1e-4

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or times.shape != values.shape:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if times.size == 0:
            raise ValueError("empty probability curve")
        if times[0] < 0.0:
            raise ValueError(f"times must be >= 0, got t[0] = {times[0]!r}")
        if times.size > 1 and not np.all(np.diff(times) > 0.0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("curve contains non-finite values")
        lo, hi = values.min(), values.max()
        if lo < -self.slack or hi > 1.0 + self.slack:
            raise ValueError(
                f"probability left [0, 1] by more than slack={self.slack:g}: "
                f"range [{lo!r}, {hi!r}]"
            )

    def __len__(self) -> int:
        return int(self.times.size)

    def clamped(self) -> np.ndarray:
        return np.clip(self.values, 0.0, 1.0)


def _check_times(t) -> None:
    if np.any(np.asarray(t) < 0.0):
        raise ValueError("time must be >= 0")


def survival_amplitude(t, sys: SystemParams = SystemParams()):
    """Amplitude exp(-gamma*t/2) for the undecayed state (real, in (0, 1])."""
    _check_times(t)
    out = np.exp(-0.5 * sys.gamma * np.asarray(t, dtype=float))
    return float(out) if out.ndim == 0 else out


def survival_prob(t, sys: SystemParams = SystemParams()):
    """Free survival probability exp(-gamma*t): the plain exponential law."""
    _check_times(t)
    out = np.exp(-sys.gamma * np.asarray(t, dtype=float))
    return float(out) if out.ndim == 0 else out


def decay_amplitude(k, t: float, sys: SystemParams = SystemParams()):
    """Free amplitude for a decay product of energy k at time t.

    sqrt(gamma/2pi) * (exp(-i*k*t) - exp(-gamma*t/2)) / (k + i*gamma/2);
    identically 0 at t = 0.
    """
    _check_times(t)
    k = np.asarray(k, dtype=float)
    if not np.all(np.isfinite(k)):
        raise ValueError("k must be real and finite")
    g = sys.gamma
    num = np.exp(-1j * k * t) - math.exp(-0.5 * g * t)
    out = math.sqrt(g / TWO_PI) * num / (k + 0.5j * g)
    return complex(out) if out.ndim == 0 else out


def decay_density(k, t: float, sys: SystemParams = SystemParams()):
    """|decay_amplitude|**2, written in a form stable at small t.

    (gamma/2pi) * ((1-a)**2 + 4*a*sin(k*t/2)**2) / (k**2 + gamma**2/4) with
    a = exp(-gamma*t/2).  Algebraically identical to the squared amplitude
    but free of the catastrophic cancellation that would otherwise swamp the
    quadratic short-time regime.
    """
    _check_times(t)
    k = np.asarray(k, dtype=float)
    g = sys.gamma
    a = math.exp(-0.5 * g * t)
    num = (1.0 - a) ** 2 + 4.0 * a * np.sin(0.5 * k * t) ** 2
    out = (g / TWO_PI) * num / (k * k + 0.25 * g * g)
    return float(out) if out.ndim == 0 else out
