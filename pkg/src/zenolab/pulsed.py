"""Bang-bang (projective) monitoring of the decay.

An ideal measurement at time t clicks with probability ``click_prob(t)``,
the band-limited weight of the decayed component; repeating measurements
every tau and collapsing the state each time yields the no-click curve and
its asymptote.  The tau = 4/sigma pairing with the continuous detector is
never applied here implicitly; it is a presentation choice of the CLI.

All operations are pure and parallelize trivially over times and parameters.
"""

from __future__ import annotations

import math

import numpy as np

from . import model
from .model import DetectorParams, ProbabilityCurve, SystemParams, Tolerances
from .quadrature import integrate_adaptive

__all__ = [
    "click_prob",
    "click_prob_saturation",
    "noclick",
    "noclick_asymptote",
]


def click_prob(
    t: float,
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    tol: Tolerances | None = None,
) -> float:
    """Probability that a single ideal measurement at time t clicks.

    Band integral of the decay density over (-lam, lam); for the infinite
    bandwidth flag this is 1 - exp(-gamma*t) exactly (linear at small t,
    whereas any finite band gives a quadratic onset: the two limits do not
    commute).
    """
    if t < 0.0:
        raise ValueError("time must be >= 0")
    if not det.finite_band:
        return float(-math.expm1(-sys.gamma * t))
    result = integrate_adaptive(
        lambda k: model.decay_density(k, t, sys), -det.lam, det.lam, tol
    )
    return float(result.require("click probability"))


def click_prob_saturation(
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
) -> float:
    """t -> inf limit of click_prob: (2/pi) * arctan(2*lam/gamma).

    Smaller than one for any finite band; the long-lived decay products
    outside (-lam, lam) are never seen.
    """
    if not det.finite_band:
        return 1.0
    return (2.0 / math.pi) * math.atan(2.0 * det.lam / sys.gamma)


def noclick(
    times,
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    tol: Tolerances | None = None,
) -> ProbabilityCurve:
    """No-click probability under measurements repeated every det.tau.

    1 - click_prob(tau) * (1 - e^{-gamma t}) / (1 - e^{-gamma tau}), exact at
    the measurement instants t = n*tau and used as the interpolating curve in
    between.  Exponential-affine in t for every (lam, tau).
    """
    tol = tol or Tolerances()
    tau = det.require_tau()
    times = np.asarray(times, dtype=float)
    ratio = click_prob(tau, sys, det, tol) / -math.expm1(-sys.gamma * tau)
    values = 1.0 - ratio * -np.expm1(-sys.gamma * times)
    return ProbabilityCurve(times, values, slack=tol.curve_slack)


def noclick_asymptote(
    sys: SystemParams = SystemParams(),
    det: DetectorParams = DetectorParams(),
    tol: Tolerances | None = None,
) -> float:
    """t -> inf limit 1 - click_prob(tau)/(1 - e^{-gamma tau}).

    Nonzero for finite bandwidth: the detector may never click.  It grows
    toward 1 as tau -> 0 (full Zeno freezing), with leading behaviour
    1 - lam*tau/pi.
    """
    tau = det.require_tau()
    return 1.0 - click_prob(tau, sys, det, tol) / -math.expm1(-sys.gamma * tau)
