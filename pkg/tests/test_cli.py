import math
import os

import numpy as np
import pytest

from zenolab import cli


def run_cli(args):
    return cli.main(list(args))


def read_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("# zeno-lab v")
    assert lines[-1].startswith("# clamped=")
    header = lines[1].split(",")
    data = np.array([[float(x) for x in row.split(",")] for row in lines[2:-1]])
    return lines[0], header, {name: data[:, i] for i, name in enumerate(header)}


def test_fig1_columns(tmp_path):
    out = tmp_path / "fig1.csv"
    assert run_cli(["fig1", "--points", "40", "--out", str(out)]) == 0
    _, header, cols = read_csv(out)
    t = cols["t"]
    # infinite-bandwidth column is (1 - e^-t)/t up to the 12-digit CSV roundtrip
    np.testing.assert_allclose(
        cols["w_over_t_lambda_inf"], -np.expm1(-t) / t, rtol=1e-11
    )
    # finite bandwidths: ratio vanishes linearly at small t (quadratic onset)
    for lam in (1, 3, 10):
        ratio = cols[f"w_over_t_lambda_{lam}"]
        assert ratio[0] / ratio[4] == pytest.approx(t[0] / t[4], rel=0.05)
    # companion block saturates at (2/pi) atan(2 lam)
    for lam in (1, 3, 10):
        sat = (2 / math.pi) * math.atan(2.0 * lam)
        assert cols[f"w_lambda_{lam}"][-1] == pytest.approx(sat, abs=1e-3)


def test_fig2_columns(tmp_path):
    out = tmp_path / "fig2.csv"
    assert run_cli(["fig2", "--points", "30", "--lam-min", "3", "--lam-max", "50",
                    "--out", str(out)]) == 0
    _, header, cols = read_csv(out)
    cont = cols["continuous_saturation"]
    assert cont[0] == pytest.approx(1.0 - (2 / math.pi) * math.atan(6.0), abs=1e-9)
    for tau in ("0.1", "0.5", "1"):
        assert np.all(cols[f"pulsed_saturation_tau_{tau}"] >= cont - 1e-12)
    assert cols["pulsed_saturation_tau_1"][-1] < 0.02  # lam = 50, tau = 1


def test_fig3_zeno_slowdown(tmp_path):
    out = tmp_path / "fig3.csv"
    assert run_cli(["fig3", "--points", "6", "--out", str(out)]) == 0
    _, header, cols = read_csv(out)
    for name in ("noclick_c_sigma_40", "noclick_bb_sigma_40",
                 "noclick_c_sigma_3", "noclick_bb_sigma_3"):
        assert np.all(cols[name] >= cols["exp_decay"] - 1e-6)


def test_compare_disagrees_at_short_time_for_small_sigma(tmp_path):
    out = tmp_path / "cmp.csv"
    assert run_cli(["compare", "--sigma", "3", "--t-max", "0.5", "--points", "6",
                    "--out", str(out)]) == 0
    _, _, cols = read_csv(out)
    assert np.abs(cols["difference"]).max() > 0.02


def test_determinism_byte_identical(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    args = ["fig3", "--sigmas", "3", "--points", "6"]
    assert run_cli(args + ["--out", str(a)]) == 0
    assert run_cli(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_layering(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("gamma = 2.0\npoints = 7   # comment\ntau = 0.5\n")
    out = tmp_path / "out.csv"
    assert run_cli(["pulsed", "--config", str(cfg), "--gamma", "3",
                    "--out", str(out)]) == 0
    head, header, cols = read_csv(out)
    assert "gamma=3" in head       # flag overrides file
    assert "tau=0.5" in head       # file overrides default
    assert cols["t"].size == 7


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus = 1\n")
    assert run_cli(["pulsed", "--config", str(cfg)]) == 1


def test_sweep_effective_width_monotone(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run_cli(["sweep", "--axis", "sigma", "--start", "0.5", "--stop", "20",
                    "--points", "8", "--out", str(out)]) == 0
    _, _, cols = read_csv(out)
    assert np.all(np.diff(cols["effective_width"]) < 0.0)
    assert np.all(np.diff(cols["noclick_c_inf"]) < 0.0)


def test_sweep_tau_zeno(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run_cli(["sweep", "--axis", "tau", "--start", "0.05", "--stop", "1.0",
                    "--points", "6", "--out", str(out)]) == 0
    _, _, cols = read_csv(out)
    # shorter pulse interval -> larger never-click probability
    assert np.all(np.diff(cols["noclick_bb_inf"]) < 0.0)


def test_sweep_empty_range_no_file(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run_cli(["sweep", "--axis", "sigma", "--start", "5", "--stop", "1",
                    "--points", "4", "--out", str(out)]) == 1
    assert not out.exists()


def test_usage_errors():
    assert run_cli(["pulsed", "--tau", "bogus"]) == 1
    assert run_cli(["sweep"]) == 1
    assert run_cli(["fig1", "--points", "1"]) == 1


def test_numerical_failure_exit_code(capsys):
    # a time grid beyond what the spectral grid can resolve aborts with 2
    assert run_cli(["continuous", "--t-max", "1e6", "--points", "4"]) == 2
    assert "resolvable" in capsys.readouterr().err


def test_precision_flag(tmp_path):
    out = tmp_path / "p.csv"
    assert run_cli(["pulsed", "--tau", "0.3", "--points", "4", "--precision", "4",
                    "--out", str(out)]) == 0
    with open(out) as fh:
        rows = fh.read().splitlines()
    value = rows[3].split(",")[1]
    assert len(value.replace(".", "").replace("-", "").lstrip("0")) <= 4


def test_doubled_resolution_changes_nothing(tmp_path, tol):
    # shared grid points must produce the same reported values
    coarse = tmp_path / "c.csv"
    fine = tmp_path / "f.csv"
    base = ["continuous", "--sigma", "3", "--t-max", "2"]
    assert run_cli(base + ["--points", "5", "--out", str(coarse)]) == 0
    assert run_cli(base + ["--points", "9", "--out", str(fine)]) == 0
    _, _, cc = read_csv(coarse)
    _, _, cf = read_csv(fine)
    np.testing.assert_allclose(cc["t"], cf["t"][::2], atol=1e-12)
    np.testing.assert_allclose(cc["noclick_c"], cf["noclick_c"][::2],
                               atol=10 * tol.rel_tol)


def test_stdout_output(capsys):
    assert run_cli(["pulsed", "--tau", "0.3", "--points", "3"]) == 0
    captured = capsys.readouterr().out.splitlines()
    assert captured[0].startswith("# zeno-lab v")
    assert captured[1] == "t,noclick_bb"


def test_selfcheck_passes():
    assert run_cli(["selfcheck"]) == 0


def test_selfcheck_flip_branch_fails(capsys):
    assert run_cli(["selfcheck", "--debug-flip-branch"]) == 3
    out = capsys.readouterr().out
    assert "FAIL" in out
    assert "density_nonnegative" in out


def test_selfcheck_tighter_tolerance_reports_larger_ratio():
    from zenolab import checks
    from zenolab.model import Tolerances

    loose = {r.name: r for r in checks.run_all(Tolerances())}
    tight = {r.name: r for r in checks.run_all(Tolerances(rel_tol=1e-8, abs_tol=1e-14))}
    name = "spectral_normalization"
    assert tight[name].ratio > loose[name].ratio
