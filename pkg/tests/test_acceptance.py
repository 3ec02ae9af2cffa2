"""Acceptance battery: one test per release criterion, each printing a
PASS/FAIL line with the measured deviation (run pytest with -s to see them).

Criterion 3 and the approximation clause of criterion 8 pin tolerances that
sit slightly below the physically attainable agreement at their stated
parameters; those tests assert the stated bounds anyway and therefore fail,
with the independently verified floor printed alongside.  Details live in
the project notes outside the package.
"""

import math
import time

import mpmath as mp
import numpy as np
import pytest

from zenolab import cli, continuous, pulsed
from zenolab.model import DetectorParams, SystemParams, Tolerances
from zenolab.quadrature import integrate_adaptive


def report(criterion, description, measured, allowed, ok):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {criterion:02d}] {description}: measured {measured:.3e} "
          f"(allowed {allowed:.1e}) {status}")
    return ok


def test_criterion_01_unitarity_sigma0(sys1, det_sigma0, tol, table_sigma0):
    start = time.perf_counter()
    times = np.linspace(0.0, 5.0, 50)
    p = continuous.survival_prob(times, sys1, det_sigma0, tol, table_sigma0)
    dev = max(
        abs(p.values[i] + continuous.undetected_prob(t, sys1, det_sigma0,
                                                     table_sigma0, tol) - 1.0)
        for i, t in enumerate(times)
    )
    elapsed = time.perf_counter() - start
    ok = report(1, "max |p + w - 1| at sigma=0 over 50 points", dev, 1e-4, dev <= 1e-4)
    ok_rt = report(1, "runtime (s)", elapsed, 60.0, elapsed <= 60.0)
    assert ok and ok_rt


def test_criterion_02_normalization(sys1, tol, table_sigma0, table_sigma3,
                                    table_sigma40):
    worst = max(abs(t.mass - 1.0)
                for t in (table_sigma3, table_sigma40, table_sigma0))
    ok = report(2, "max |spectral mass - 1| over three parameter sets",
                worst, 1e-5, worst <= 1e-5)
    det0 = DetectorParams(lam=3.0, sigma=0.0)
    dev = max(
        abs(continuous.spectral_density(e, sys1, det0, tol)
            - (1 / (2 * math.pi)) / (e * e + 0.25))
        for e in (0.0, 1.0, -1.0, 5.0, -5.0)
    )
    ok2 = report(2, "sigma=0 density vs Lorentzian at sample energies",
                 dev, 1e-6, dev <= 1e-6)
    assert ok and ok2


def test_criterion_03_exponential_limit(sys1, tol):
    det = DetectorParams(lam=1000.0, sigma=10.0)
    table = continuous.build_spectral_table(sys1, det, tol)
    times = np.linspace(0.0, 5.0, 11)
    nc = continuous.noclick(times, sys1, det, tol, table)
    ref = continuous.noclick_large_bandwidth(times, sys1, det, tol)
    surv = continuous.survival_prob(times, sys1, det, tol, table)
    dev_nc = np.abs(nc.values - ref.values).max()
    dev_p = np.abs(surv.values - np.exp(-times)).max()

    # independent 30-digit quadrature of the defining spectral integral at
    # t = 1 pins the physically attainable agreement
    mp.mp.dps = 30
    lam, sig = mp.mpf(1000), mp.mpf(10)

    def dens(e):
        s = (1 / (2 * mp.pi)) * (mp.log((lam + e) / (lam - e))
                                 + mp.log((e - lam + 0.5j * sig) / (e + lam + 0.5j * sig)))
        return -mp.im(1 / (e + s)) / mp.pi

    amp = 2 * mp.quad(lambda e: dens(e) * mp.cos(e), [0, 1, 5, 50, 500, 999.99])
    amp += 2 * mp.quad(lambda e: dens(e) * mp.cos(e), [1000.01, 2000, 20000])
    p1_truth = float(amp) ** 2
    p1_ours = continuous.survival_prob(np.array([1.0]), sys1, det, tol, table).values[0]
    floor = abs(p1_truth - math.exp(-1.0))
    print(f"[criterion 03] pipeline vs 30-digit oracle at t=1: "
          f"{abs(p1_ours - p1_truth):.2e}; physical |p(1) - e^-1| = {floor:.3e}")
    assert abs(p1_ours - p1_truth) < 5e-5  # the numerics are not the problem

    ok_nc = report(3, "max |noclick - wide-band closed form| on [0,5]",
                   dev_nc, 1e-3, dev_nc <= 1e-3)
    ok_p = report(3, "max |survival - exp(-t)| on [0,5]", dev_p, 1e-3, dev_p <= 1e-3)
    assert ok_nc and ok_p, (
        "stated tolerance sits below the physical O(sigma/(pi*lam)) gap "
        f"(independently verified floor {floor:.3e} at the pinned parameters)"
    )


def test_criterion_04_pulsed_zeno(sys1, tol):
    taus = (1.0, 0.1, 0.01, 0.001)
    vals = [
        pulsed.noclick_asymptote(sys1, DetectorParams(lam=3.0, sigma=0.0, tau=tau), tol)
        for tau in taus
    ]
    increasing = all(b > a for a, b in zip(vals, vals[1:]))
    ok1 = report(4, "asymptote strictly increasing as tau decreases",
                 min(np.diff(vals)), 0.0, increasing)
    ok2 = report(4, "asymptote at tau=1e-3", vals[-1], 0.999, vals[-1] > 0.999)
    expansion = 3.0 * taus[-1] / math.pi
    rel = abs((1.0 - vals[-1]) - expansion) / expansion
    ok3 = report(4, "relative gap to small-tau expansion 1 - lam*tau/pi",
                 rel, 0.01, rel <= 0.01)
    assert ok1 and ok2 and ok3


def test_criterion_05_quadratic_onset(sys1, tol):
    lam = 3.0
    t = 1e-3 / lam
    w = pulsed.click_prob(t, sys1, DetectorParams(lam=lam, sigma=0.0), tol)
    ratio = w / (lam * t * t / math.pi)
    ok = report(5, "w(t) / (gamma lam t^2 / pi) at t = 1e-3/lam",
                ratio, 1.05, 0.95 <= ratio <= 1.05)
    assert ok


def test_criterion_06_saturation(sys1, tol):
    worst = 0.0
    for lam in (0.5, 1.0, 3.0, 10.0):
        quad = integrate_adaptive(
            lambda k: (1 / (2 * math.pi)) / (k * k + 0.25), -lam, lam, tol
        ).require()
        closed = pulsed.click_prob_saturation(sys1, DetectorParams(lam=lam, sigma=0.0))
        worst = max(worst, abs(quad - closed))
    ok1 = report(6, "click saturation: quadrature vs (2/pi) atan(2 lam)",
                 worst, 1e-6, worst <= 1e-6)
    det = DetectorParams(lam=3.0, sigma=1000.0)
    exact = continuous.noclick_asymptote(sys1, det, tol)
    approx = continuous.noclick_asymptote_wide(sys1, det)
    gap = abs(exact - approx)
    ok2 = report(6, "large-sigma asymptote vs 1 - click saturation",
                 gap, 1e-2, gap <= 1e-2)
    assert ok1 and ok2


def test_criterion_07_schulman_failure(sys1, tol, det_sigma40, table_sigma40,
                                       sigma40_noclick):
    tau = 4.0 / 40.0
    det_p = DetectorParams(lam=3.0, sigma=40.0, tau=tau)
    short = np.linspace(0.0, 0.2, 6)
    nc_c = continuous.noclick(short, sys1, det_sigma40, tol, table_sigma40)
    nc_bb = pulsed.noclick(short, sys1, det_p, tol)
    d_short = np.abs(nc_c.values - nc_bb.values).max()
    ok1 = report(7, "sigma=40: short-time |difference| for t <= 0.2",
                 d_short, 2e-2, d_short < 0.02)

    times, nc_vals = sigma40_noclick
    d_long = abs(nc_vals[-1] - pulsed.noclick(np.array([10.0]), sys1, det_p,
                                              tol).values[0])
    ok2 = report(7, "sigma=40: |difference| at t = 10", d_long, 5e-2, d_long > 0.05)

    c_inf = continuous.noclick_asymptote(sys1, det_sigma40, tol)
    bb_inf = pulsed.noclick_asymptote(sys1, det_p, tol)
    ok3 = report(7, "asymptotes: continuous below pulsed (difference)",
                 bb_inf - c_inf, 0.0, c_inf < bb_inf)

    det_c3 = DetectorParams(lam=3.0, sigma=3.0)
    det_p3 = DetectorParams(lam=3.0, sigma=3.0, tau=4.0 / 3.0)
    table3 = continuous.build_spectral_table(sys1, det_c3, tol)
    short3 = np.linspace(0.0, 0.5, 6)
    d3 = np.abs(
        continuous.noclick(short3, sys1, det_c3, tol, table3).values
        - pulsed.noclick(short3, sys1, det_p3, tol).values
    ).max()
    ok4 = report(7, "sigma=3: no early agreement window (max |difference|)",
                 d3, 2e-2, d3 > 0.02)
    assert ok1 and ok2 and ok3 and ok4


def test_criterion_08_effective_width(sys1, tol, det_sigma40, sigma40_noclick):
    w0 = continuous.effective_width(sys1, DetectorParams(lam=3.0, sigma=0.0))
    ok1 = report(8, "width at sigma=0 equals gamma exactly", abs(w0 - 1.0), 0.0,
                 w0 == 1.0)
    widths = [
        continuous.effective_width(sys1, DetectorParams(lam=3.0, sigma=s))
        for s in (0.1, 1.0, 3.0, 10.0, 100.0)
    ]
    decreasing = all(b < a for a, b in zip(widths, widths[1:]))
    ok2 = report(8, "width strictly decreasing in sigma", max(np.diff(widths)),
                 0.0, decreasing)
    got = continuous.effective_width(sys1, DetectorParams(lam=3.0, sigma=3.0))
    want = (1.0 / math.pi) * (math.pi - 2.0 * math.atan(0.5))
    ok3 = report(8, "width identity at lam = sigma = 3", abs(got - want), 1e-10,
                 abs(got - want) <= 1e-10)

    times, nc_vals = sigma40_noclick
    approx = continuous.noclick_exp_approx(times, sys1, det_sigma40, tol)
    gap = np.abs(nc_vals - approx.values).max()
    ok4 = report(8, "two-parameter curve vs full no-click on [0,10]",
                 gap, 3e-2, gap <= 0.03)
    assert ok1 and ok2 and ok3 and ok4, (
        "the approximation clause pins 0.03 while the attainable uniform gap "
        f"at sigma=40 is {gap:.4f} (the curve approaches its asymptote more "
        "slowly than the two-parameter form)"
    )


def test_criterion_09_flux_identity(sys1, det_sigma3):
    tight = Tolerances(max_stride=4)
    table = continuous.build_spectral_table(sys1, det_sigma3, tight)

    def total(tt):
        p = continuous.survival_prob(np.array([tt]), sys1, det_sigma3, tight, table)
        return p.values[0] + continuous.undetected_prob(tt, sys1, det_sigma3,
                                                        table, tight)

    worst = 0.0
    dt = 0.01
    for t in (0.5, 1.0, 2.0):
        deriv = (total(t + dt) - total(t - dt)) / (2 * dt)
        flux = continuous.detected_flux(t, sys1, det_sigma3, table, tight)
        worst = max(worst, abs(deriv + flux) / flux)
    ok = report(9, "relative gap in d(p+w)/dt = -sigma * band integral",
                worst, 1e-3, worst <= 1e-3)
    assert ok


def test_criterion_10_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["fig3", "--points", "5"]
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    identical = a.read_bytes() == b.read_bytes()
    ok = report(10, "fig3 rerun byte-identity (0 = identical)",
                0.0 if identical else 1.0, 0.0, identical)
    assert ok
