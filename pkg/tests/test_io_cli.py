import json
import math

import numpy as np
import pytest

from dsa_counts.cli import build_schedule, main
from dsa_counts.errors import ParseError
from dsa_counts.io import read_counts_csv, read_events_json, read_table_csv, write_counts_csv, write_events_json
from dsa_counts.likelihood import solve_tau
from dsa_counts.simulate import CountData, EventRecord

TIMING = ("wall_time", "ess_per_sec", "mean_ess_per_sec")


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k not in TIMING}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


# count CSV -------------------------------------------------------------------

def test_parse_two_zero_rows(tmp_path):
    f = tmp_path / "c.csv"
    f.write_text("interval_end,count\n1,0\n2,0\n")
    data = read_counts_csv(f)
    assert list(data.schedule) == [0.0, 1.0, 2.0]
    assert list(data.counts) == [0, 0]
    assert data.N is None


def test_counts_exceeding_n(tmp_path):
    f = tmp_path / "c.csv"
    f.write_text("# N=5\ninterval_end,count\n1,3\n2,4\n")
    with pytest.raises(ParseError):
        read_counts_csv(f)


@pytest.mark.parametrize("body,line", [
    ("interval_end,count\n1,2\n1,3\n", 3),
    ("interval_end,count\n1,2\n2,-1\n", 3),
    ("interval_end,count\n1,2\n2\n", 3),
    ("interval_end,count\n1,x\n", 2),
    ("interval_end,count\n1,2.5\n", 2),
])
def test_parse_errors_carry_line(tmp_path, body, line):
    f = tmp_path / "bad.csv"
    f.write_text(body)
    with pytest.raises(ParseError) as info:
        read_counts_csv(f)
    assert info.value.line == line


def test_unknown_n_metadata(tmp_path):
    f = tmp_path / "c.csv"
    f.write_text("# N=unknown\ninterval_end,count\n1,2\n")
    assert read_counts_csv(f).N is None


def test_counts_round_trip(tmp_path):
    data = CountData(np.array([0.0, 0.1, 0.30000000000000004, 1 / 3, 7.25]), [3, 0, 11, 2], N=100, M=4)
    write_counts_csv(data, tmp_path / "c.csv")
    assert read_counts_csv(tmp_path / "c.csv") == data


def test_events_round_trip(tmp_path):
    ev = EventRecord([0.1, 2 / 3, 1.5], [0.2, 4.0 - 2 / 3, 2.5], [False, True, True], [0.7], 10, 2, 4.0)
    write_events_json(ev, tmp_path / "e.json")
    assert read_events_json(tmp_path / "e.json") == ev


def test_schedule_builder():
    assert list(build_schedule({"step": 1.0}, 3.0)) == [0.0, 1.0, 2.0, 3.0]
    assert list(build_schedule({"step": 2.0}, 5.0)) == [0.0, 2.0, 4.0, 5.0]
    assert list(build_schedule([1, 2.5], 2.5)) == [0.0, 1.0, 2.5]


# commands --------------------------------------------------------------------

def _run(args):
    return main([str(a) for a in args])


def test_simulate_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert _run(["simulate", "--recipe", "dsa-benchmark", "--seed", 5, "--out", tmp_path / d, "--no-figures"]) == 0
    for name in ("counts.csv", "events.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_figure_written(tmp_path):
    assert _run(["simulate", "--recipe", "dsa-benchmark", "--out", tmp_path, "--N", 200]) == 0
    assert (tmp_path / "counts.png").stat().st_size > 0


def test_simulate_beta_zero(tmp_path):
    assert _run(["simulate", "--beta", 0, "--gamma", 1, "--rho", 0.05, "--out", tmp_path, "--no-figures"]) == 0
    assert read_counts_csv(tmp_path / "counts.csv").K == 0


def test_simulate_fit_round_trip(tmp_path):
    sim, out = tmp_path / "sim", tmp_path / "fit"
    assert _run(["simulate", "--recipe", "dsa-benchmark", "--seed", 1, "--out", sim, "--no-figures"]) == 0
    assert _run(["fit", "--data", sim / "counts.csv", "--out", out, "--seed", 3]) == 0
    summary = json.loads((out / "summary.json").read_text())
    for name, truth in (("beta", 2.0), ("gamma", 1.0), ("rho", 0.05)):
        p = summary["posterior"]["params"][name]
        assert abs(p["mean"] - truth) < 3 * p["sd"]
    header, draws = read_table_csv(out / "draws.csv")
    assert header == ["beta", "gamma", "rho", "log_post"]
    assert draws.shape[0] == 10000
    _, dens = read_table_csv(out / "density.csv")
    assert dens.shape == (500, 2)
    assert abs(np.trapezoid(dens[:, 1], dens[:, 0]) - 1.0) < 0.01
    for name in ("summary.txt", "density.png", "trace.png", "manifest.json"):
        assert (out / name).exists()


def test_fit_fixed_gamma_and_rerun_from_manifest(tmp_path):
    sim = tmp_path / "sim"
    _run(["simulate", "--recipe", "dsa-benchmark", "--seed", 2, "--out", sim, "--no-figures"])
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["fit", "--data", sim / "counts.csv", "--fix", "gamma=1.0", "--draws", 3000, "--no-figures"]
    assert _run(args + ["--out", a]) == 0
    header, _ = read_table_csv(a / "draws.csv")
    assert "gamma" not in header
    assert _run(["fit", "--config", a / "manifest.json", "--out", b]) == 0
    assert (a / "draws.csv").read_bytes() == (b / "draws.csv").read_bytes()
    sa = _strip_timing(json.loads((a / "summary.json").read_text()))
    sb = _strip_timing(json.loads((b / "summary.json").read_text()))
    assert sa == sb


def test_fit_unknown_n_message(tmp_path, capsys):
    f = tmp_path / "c.csv"
    f.write_text("interval_end,count\n1,3\n2,5\n")
    code = _run(["fit", "--data", f, "--out", tmp_path / "o"])
    assert code != 0
    err = capsys.readouterr().err
    assert "error[unsupported]" in err and "N" in err


def test_fit_estimate_n(tmp_path):
    sim = tmp_path / "sim"
    _run(["simulate", "--recipe", "dsa-benchmark", "--seed", 2, "--out", sim, "--no-figures"])
    lines = [l for l in (sim / "counts.csv").read_text().splitlines() if not l.startswith("# N")]
    f = tmp_path / "noN.csv"
    f.write_text("\n".join(lines) + "\n")
    assert _run(["fit", "--data", f, "--estimate-n", "--draws", 4000, "--out", tmp_path / "o", "--no-figures"]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["N_hat"] > 0


def test_fit_from_event_record(tmp_path):
    sim = tmp_path / "sim"
    _run(["simulate", "--recipe", "dsa-benchmark", "--seed", 2, "--out", sim, "--no-figures"])
    code = _run(["fit", "--data", sim / "events.json", "--likelihood", "complete", "--draws", 3000,
                 "--out", tmp_path / "o", "--no-figures"])
    assert code == 0


def test_replicate_smoke_and_determinism(tmp_path):
    args = ["replicate", "--recipe", "dsa-benchmark", "--replicates", 2, "--draws", 2000, "--seed", 9]
    assert _run(args + ["--out", tmp_path / "a"]) == 0
    assert _run(args + ["--out", tmp_path / "b", "--no-figures"]) == 0
    for name in ("coverage.json", "coverage.txt", "coverage.png", "manifest.json"):
        assert (tmp_path / "a" / name).exists()
    ca = _strip_timing(json.loads((tmp_path / "a" / "coverage.json").read_text()))
    cb = _strip_timing(json.loads((tmp_path / "b" / "coverage.json").read_text()))
    assert ca == cb
    assert ca["replicates"] == 2


def test_density_command(tmp_path):
    assert _run(["density", "--beta", 2, "--gamma", 1, "--rho", 0.05, "--T", 10, "--out", tmp_path]) == 0
    _, d = read_table_csv(tmp_path / "density.csv")
    assert abs(np.trapezoid(d[:, 1], d[:, 0]) - 1.0) < 0.01


def test_tau_command(capsys):
    assert main(["tau", "--R0", "2", "--rho", "0.05"]) == 0
    assert float(capsys.readouterr().out) == solve_tau(2.0, 0.05).tau


def test_error_exit_codes(tmp_path, capsys):
    assert main(["fit", "--data", str(tmp_path / "missing.csv")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("interval_end,count\n1,-3\n")
    assert main(["fit", "--data", str(bad), "--out", str(tmp_path / "o")]) == 3
    assert main(["simulate", "--recipe", "nope"]) == 2
    assert "error[config]" in capsys.readouterr().err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("recipe: dsa-benchmark\nscenario:\n  N: 300\n  truth: {beta: 1.5}\n")
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg), "--N", "400", "--out", str(out), "--no-figures"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    sc = manifest["config"]["scenario"]
    assert sc["N"] == 400
    assert sc["truth"] == {"beta": 1.5, "gamma": 1.0, "rho": 0.05}
    assert read_counts_csv(out / "counts.csv").N == 400
    assert not math.isnan(manifest["K"])
