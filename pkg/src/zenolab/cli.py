"""Experiment runner: presets for the standard comparison figures, free-form
sweeps, pulsed/continuous curves, and a structural self-check.  All output is
CSV with a self-describing header line, written atomically, and byte-stable
for identical configuration.

Exit codes: 0 success, 1 usage/config error, 2 numerical non-convergence or
invariant breakage mid-run, 3 self-check failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys as _sys
import tempfile

import numpy as np

from . import __version__, checks, continuous, pulsed
from .continuous import InvariantViolation
from .model import DetectorParams, SystemParams, Tolerances
from .quadrature import QuadratureError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICS = 2
EXIT_SELFCHECK = 3

PROB_GATE_FLOOR = 1e-9


class UsageError(Exception):
    """Bad flags, bad config file, or an empty/invalid parameter range."""


# ---------------------------------------------------------------------------
# configuration plumbing


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise UsageError(f"expected a number, got {text!r}") from exc


def _parse_lambda(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return _parse_float(text)


def _parse_tau(text: str):
    if text.strip().lower() == "schulman":
        return "schulman"
    return _parse_float(text)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise UsageError(f"expected an integer, got {text!r}") from exc


def _parse_float_list(text: str) -> tuple[float, ...]:
    items = [p for p in text.replace(",", " ").split() if p]
    if not items:
        raise UsageError("expected a comma-separated list of numbers")
    return tuple(_parse_lambda(p) for p in items)


_COERCERS = {
    "gamma": _parse_float,
    "lam": _parse_lambda,
    "sigma": _parse_float,
    "tau": _parse_tau,
    "t_max": _parse_float,
    "t_min": _parse_float,
    "points": _parse_int,
    "log_time": _parse_bool,
    "tol": _parse_float,
    "out": str,
    "precision": _parse_int,
    "lambdas": _parse_float_list,
    "taus": _parse_float_list,
    "sigmas": _parse_float_list,
    "lam_min": _parse_float,
    "lam_max": _parse_float,
    "axis": str,
    "start": _parse_float,
    "stop": _parse_float,
    "times": _parse_float_list,
}

_DEFAULTS: dict[str, dict] = {
    "fig1": dict(gamma=1.0, lambdas=(1.0, 3.0, 10.0, math.inf), t_min=1e-3,
                 t_max=10.0, points=200, log_time=True),
    "fig2": dict(gamma=1.0, lam_min=0.2, lam_max=50.0, points=120,
                 taus=(0.1, 0.5, 1.0)),
    "fig3": dict(gamma=1.0, lam=3.0, sigmas=(40.0, 3.0), t_max=10.0,
                 points=400, log_time=False, t_min=1e-3),
    "pulsed": dict(gamma=1.0, lam=3.0, sigma=40.0, tau="schulman", t_max=10.0,
                   points=200, log_time=False, t_min=1e-3),
    "continuous": dict(gamma=1.0, lam=3.0, sigma=3.0, t_max=10.0, points=200,
                       log_time=False, t_min=1e-3),
    "compare": dict(gamma=1.0, lam=3.0, sigma=40.0, tau="schulman", t_max=10.0,
                    points=200, log_time=False, t_min=1e-3),
    "sweep": dict(gamma=1.0, lam=3.0, sigma=3.0, tau=None, axis=None,
                  start=None, stop=None, points=21, times=()),
}
for _cfg in _DEFAULTS.values():
    _cfg.setdefault("tol", None)
    _cfg.setdefault("out", None)
    _cfg.setdefault("precision", 12)


def _read_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for ln, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key == "lambda":
            key = "lam"
        out[key] = value
    return out


def _resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Layer defaults < config file < explicit command-line flags."""
    cfg = dict(_DEFAULTS[command])
    if getattr(args, "config", None):
        for key, raw in _read_config_file(args.config).items():
            if key not in cfg:
                raise UsageError(f"unknown config key {key!r} for {command}")
            cfg[key] = _COERCERS[key](raw)
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if cfg["points"] < 2:
        raise UsageError("points must be >= 2")
    if cfg["precision"] < 2:
        raise UsageError("precision must be >= 2")
    return cfg


def _tolerances(cfg: dict) -> Tolerances:
    if cfg.get("tol") is None:
        return Tolerances()
    t = cfg["tol"]
    return Tolerances(rel_tol=t, abs_tol=max(1e-300, t * 1e-6))


def _resolve_tau(cfg: dict) -> float:
    tau = cfg.get("tau")
    if tau == "schulman":
        if not cfg.get("sigma"):
            raise UsageError("tau = schulman needs sigma > 0")
        return 4.0 / cfg["sigma"]
    if tau is None:
        raise UsageError("this command needs --tau (a number or 'schulman')")
    return float(tau)


def _fmt(value, precision: int = 12) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, float):
        return f"{value:.{precision}g}"
    if isinstance(value, tuple):
        return ",".join(_fmt(v, precision) for v in value)
    return str(value)


def _echo(cfg: dict) -> str:
    # the output path is not part of the experiment's identity
    return " ".join(f"{key}={_fmt(cfg[key])}" for key in sorted(cfg) if key != "out")


def _time_grid(cfg: dict, include_zero: bool = True) -> np.ndarray:
    n = cfg["points"]
    if cfg.get("log_time"):
        if cfg["t_min"] <= 0:
            raise UsageError("log-spaced time grids need t_min > 0")
        return np.geomspace(cfg["t_min"], cfg["t_max"], n)
    start = 0.0 if include_zero else cfg["t_min"]
    return np.linspace(start, cfg["t_max"], n)


# ---------------------------------------------------------------------------
# CSV output


def _write_csv(cfg: dict, command: str, names: list[str],
               columns: list[np.ndarray], prob_cols: set[str]) -> None:
    precision = cfg["precision"]
    slack = max(PROB_GATE_FLOOR, _tolerances(cfg).curve_slack)
    clamped = 0
    emitted = []
    for name, col in zip(names, columns):
        col = np.asarray(col, dtype=float)
        if name in prob_cols:
            lo, hi = col.min(), col.max()
            if lo < -slack or hi > 1.0 + slack:
                raise InvariantViolation(
                    f"column {name}: probability outside [0,1] beyond slack "
                    f"{slack:g} (range [{lo!r}, {hi!r}])"
                )
            outside = (col < 0.0) | (col > 1.0)
            clamped += int(outside.sum())
            col = np.clip(col, 0.0, 1.0)
        emitted.append(col)

    lines = [f"# zeno-lab v{__version__} {command} {_echo(cfg)}"]
    lines.append(",".join(names))
    for row in zip(*emitted):
        lines.append(",".join(f"{v:.{precision}g}" for v in row))
    lines.append(f"# clamped={clamped}")
    text = "\n".join(lines) + "\n"

    path = cfg.get("out")
    if path is None:
        _sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".zeno-lab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# commands


def _run_fig1(cfg: dict) -> None:
    sys = SystemParams(cfg["gamma"])
    tol = _tolerances(cfg)
    # the ratio column divides by t, so even the linear grid starts at t_min
    times = (np.geomspace(cfg["t_min"], cfg["t_max"], cfg["points"])
             if cfg["log_time"]
             else np.linspace(cfg["t_min"], cfg["t_max"], cfg["points"]))
    names = ["t"]
    cols = [times]
    prob = set()
    ratios = []
    weights = []
    for lam in cfg["lambdas"]:
        det = DetectorParams(lam=lam * cfg["gamma"], sigma=0.0)
        w = np.array([pulsed.click_prob(t, sys, det, tol) for t in times])
        tag = _fmt(float(lam), 6)
        ratios.append((f"w_over_t_lambda_{tag}", w / times))
        weights.append((f"w_lambda_{tag}", w))
    for name, col in ratios:
        names.append(name)
        cols.append(col)
    for name, col in weights:
        names.append(name)
        cols.append(col)
        prob.add(name)
    _write_csv(cfg, "fig1", names, cols, prob)


def _run_fig2(cfg: dict) -> None:
    sys = SystemParams(cfg["gamma"])
    tol = _tolerances(cfg)
    if not (0.0 < cfg["lam_min"] < cfg["lam_max"]):
        raise UsageError("need 0 < lam_min < lam_max")
    lams = np.geomspace(cfg["lam_min"], cfg["lam_max"], cfg["points"])
    names = ["lambda", "continuous_saturation"]
    cont_col = np.array([
        continuous.noclick_asymptote_wide(sys, DetectorParams(lam=lam))
        for lam in lams
    ])
    cols = [lams, cont_col]
    prob = {"continuous_saturation"}
    for tau in cfg["taus"]:
        col = np.array([
            pulsed.noclick_asymptote(sys, DetectorParams(lam=lam, sigma=0.0, tau=tau), tol)
            for lam in lams
        ])
        name = f"pulsed_saturation_tau_{_fmt(float(tau), 6)}"
        names.append(name)
        cols.append(col)
        prob.add(name)
    _write_csv(cfg, "fig2", names, cols, prob)


def _run_fig3(cfg: dict) -> None:
    sys = SystemParams(cfg["gamma"])
    tol = _tolerances(cfg)
    times = _time_grid(cfg)
    names = ["t"]
    cols = [times]
    prob = set()
    for sigma in cfg["sigmas"]:
        sig = sigma * cfg["gamma"]
        det_c = DetectorParams(lam=cfg["lam"] * cfg["gamma"], sigma=sig)
        det_p = DetectorParams(lam=det_c.lam, sigma=sig, tau=4.0 / sig)
        table = continuous.build_spectral_table(sys, det_c, tol)
        nc_c = continuous.noclick(times, sys, det_c, tol, table)
        nc_bb = pulsed.noclick(times, sys, det_p, tol)
        tag = _fmt(float(sigma), 6)
        for name, col in ((f"noclick_c_sigma_{tag}", nc_c.values),
                          (f"noclick_bb_sigma_{tag}", nc_bb.values)):
            names.append(name)
            cols.append(col)
            prob.add(name)
    names.append("exp_decay")
    cols.append(np.exp(-cfg["gamma"] * times))
    prob.add("exp_decay")
    _write_csv(cfg, "fig3", names, cols, prob)


def _run_pulsed(cfg: dict) -> None:
    sys = SystemParams(cfg["gamma"])
    tol = _tolerances(cfg)
    det = DetectorParams(lam=cfg["lam"], sigma=cfg["sigma"], tau=_resolve_tau(cfg))
    times = _time_grid(cfg)
    curve = pulsed.noclick(times, sys, det, tol)
    _write_csv(cfg, "pulsed", ["t", "noclick_bb"], [times, curve.values],
               {"noclick_bb"})


def _run_continuous(cfg: dict) -> None:
    sys = SystemParams(cfg["gamma"])
    tol = _tolerances(cfg)
    det = DetectorParams(lam=cfg["lam"], sigma=cfg["sigma"])
    times = _time_grid(cfg)
    if det.finite_band:
        table = continuous.build_spectral_table(sys, det, tol)
        p = continuous.survival_prob(times, sys, det, tol, table)
        w = np.array([continuous.undetected_prob(t, sys, det, table, tol)
                      for t in times])
    else:
        p = continuous.survival_prob(times, sys, det, tol)
        w = continuous.noclick(times, sys, det, tol).values - p.values
    names = ["t", "survival", "undetected", "noclick_c"]
    cols = [times, p.values, w, p.values + w]
    _write_csv(cfg, "continuous", names, cols, {"survival", "undetected", "noclick_c"})


def _run_compare(cfg: dict) -> None:
    sys = SystemParams(cfg["gamma"])
    tol = _tolerances(cfg)
    tau = _resolve_tau(cfg)
    det_c = DetectorParams(lam=cfg["lam"], sigma=cfg["sigma"])
    det_p = DetectorParams(lam=cfg["lam"], sigma=cfg["sigma"], tau=tau)
    times = _time_grid(cfg)
    nc_c = continuous.noclick(times, sys, det_c, tol)
    nc_bb = pulsed.noclick(times, sys, det_p, tol)
    names = ["t", "noclick_c", "noclick_bb", "difference", "exp_decay"]
    cols = [times, nc_c.values, nc_bb.values, nc_c.values - nc_bb.values,
            np.exp(-cfg["gamma"] * times)]
    _write_csv(cfg, "compare", names, cols, {"noclick_c", "noclick_bb", "exp_decay"})


def _run_sweep(cfg: dict) -> None:
    sys = SystemParams(cfg["gamma"])
    tol = _tolerances(cfg)
    axis = cfg.get("axis")
    if axis not in ("lambda", "sigma", "tau"):
        raise UsageError("sweep needs --axis lambda|sigma|tau")
    if cfg.get("start") is None or cfg.get("stop") is None:
        raise UsageError("sweep needs --start and --stop")
    if not (cfg["start"] < cfg["stop"]):
        raise UsageError("empty sweep range: need start < stop")
    values = np.linspace(cfg["start"], cfg["stop"], cfg["points"])

    def params(v: float) -> tuple[DetectorParams, float | None]:
        lam = v if axis == "lambda" else cfg["lam"]
        sigma = v if axis == "sigma" else cfg["sigma"]
        if axis == "tau":
            tau = v
        elif cfg.get("tau") == "schulman":
            tau = 4.0 / sigma if sigma > 0 else None
        else:
            tau = cfg.get("tau")
        return DetectorParams(lam=lam, sigma=sigma, tau=tau), tau

    names = [axis]
    cols: list[list[float]] = [list(values)]
    probes = [params(v) for v in values]
    have_tau = all(tau is not None for _, tau in probes)
    have_sigma = all(det.sigma > 0 for det, _ in probes)

    names.append("effective_width")
    cols.append([continuous.effective_width(sys, det) for det, _ in probes])
    names.append("click_saturation")
    cols.append([pulsed.click_prob_saturation(sys, det) for det, _ in probes])
    prob = {"click_saturation"}
    if have_sigma:
        names.append("noclick_c_inf")
        cols.append([continuous.noclick_asymptote(sys, det, tol) for det, _ in probes])
        prob.add("noclick_c_inf")
    if have_tau:
        names.append("noclick_bb_inf")
        cols.append([pulsed.noclick_asymptote(sys, det, tol) for det, _ in probes])
        prob.add("noclick_bb_inf")
    for t_probe in cfg["times"]:
        col_bb = [] if have_tau else None
        col_c = []
        for det, _ in probes:
            table = (continuous.build_spectral_table(sys, det, tol)
                     if det.finite_band else None)
            col_c.append(continuous.noclick(np.array([t_probe]), sys, det, tol,
                                            table).values[0])
            if col_bb is not None:
                col_bb.append(pulsed.noclick(np.array([t_probe]), sys, det,
                                             tol).values[0])
        tag = _fmt(float(t_probe), 6)
        names.append(f"noclick_c_t_{tag}")
        cols.append(col_c)
        prob.add(f"noclick_c_t_{tag}")
        if col_bb is not None:
            names.append(f"noclick_bb_t_{tag}")
            cols.append(col_bb)
            prob.add(f"noclick_bb_t_{tag}")
    _write_csv(cfg, "sweep", names, [np.asarray(c) for c in cols], prob)


def _run_selfcheck(args: argparse.Namespace) -> int:
    tol = Tolerances() if args.tol is None else Tolerances(
        rel_tol=args.tol, abs_tol=max(1e-300, args.tol * 1e-6)
    )
    results = checks.run_all(tol, flip_branch=args.debug_flip_branch)
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        failures += 0 if r.passed else 1
        ratio = f"{r.ratio:9.3g}" if math.isfinite(r.ratio) else "      n/a"
        note = f"  [{r.note}]" if r.note else ""
        print(f"{status}  {r.name:<{width}}  measured={r.measured:<12.4g} "
              f"allowed={r.allowed:<10.3g} ratio={ratio}{note}")
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_SELFCHECK


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zeno-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = _Parser(add_help=False)
    common.add_argument("--gamma", type=_parse_float, default=None)
    common.add_argument("--lambda", dest="lam", type=_parse_lambda, default=None,
                        help="half-bandwidth (number or 'inf')")
    common.add_argument("--sigma", type=_parse_float, default=None)
    common.add_argument("--tau", type=_parse_tau, default=None,
                        help="pulse interval (number or 'schulman' for 4/sigma)")
    common.add_argument("--t-max", dest="t_max", type=_parse_float, default=None)
    common.add_argument("--t-min", dest="t_min", type=_parse_float, default=None)
    common.add_argument("--points", type=_parse_int, default=None)
    common.add_argument("--log-time", dest="log_time", action="store_const",
                        const=True, default=None)
    common.add_argument("--tol", type=_parse_float, default=None)
    common.add_argument("--out", type=str, default=None)
    common.add_argument("--config", type=str, default=None)
    common.add_argument("--precision", type=_parse_int, default=None)

    sp = sub.add_parser("fig1", parents=[common],
                        help="click probability over time for several bandwidths")
    sp.add_argument("--lambdas", type=_parse_float_list, default=None)
    sp = sub.add_parser("fig2", parents=[common],
                        help="saturation no-click values vs bandwidth")
    sp.add_argument("--taus", type=_parse_float_list, default=None)
    sp.add_argument("--lam-min", dest="lam_min", type=_parse_float, default=None)
    sp.add_argument("--lam-max", dest="lam_max", type=_parse_float, default=None)
    sp = sub.add_parser("fig3", parents=[common],
                        help="pulsed vs continuous no-click curves, tau = 4/sigma")
    sp.add_argument("--sigmas", type=_parse_float_list, default=None)
    sub.add_parser("pulsed", parents=[common], help="pulsed no-click curve")
    sub.add_parser("continuous", parents=[common],
                   help="continuous survival/undetected/no-click curves")
    sub.add_parser("compare", parents=[common],
                   help="pulsed vs continuous at one parameter point")
    sp = sub.add_parser("sweep", parents=[common],
                        help="observables along a lambda/sigma/tau axis")
    sp.add_argument("--axis", type=str, default=None)
    sp.add_argument("--start", type=_parse_float, default=None)
    sp.add_argument("--stop", type=_parse_float, default=None)
    sp.add_argument("--times", type=_parse_float_list, default=None)
    sp = sub.add_parser("selfcheck", help="run the structural invariants")
    sp.add_argument("--tol", type=_parse_float, default=None)
    sp.add_argument("--debug-flip-branch", action="store_true",
                    help=argparse.SUPPRESS)
    return parser


_RUNNERS = {
    "fig1": _run_fig1,
    "fig2": _run_fig2,
    "fig3": _run_fig3,
    "pulsed": _run_pulsed,
    "continuous": _run_continuous,
    "compare": _run_compare,
    "sweep": _run_sweep,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "selfcheck":
            return _run_selfcheck(args)
        cfg = _resolve_config(args.command, args)
        _RUNNERS[args.command](cfg)
        return EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, InvariantViolation) as exc:
        print(f"numerical failure: {exc}", file=_sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    raise SystemExit(main())
