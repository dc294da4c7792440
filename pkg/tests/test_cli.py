import csv
import json
import os
import subprocess
import sys
import warnings

import numpy as np
import pytest

from twosystem.cli import (
    EXIT_CONFIG,
    EXIT_DEVIATION,
    EXIT_INTEGRATION,
    EXIT_OK,
    EXIT_ORACLE,
    main,
    quartic_derived_rhs,
    quartic_explicit_rhs,
    quartic_mismatch,
)
from twosystem.config import ConfigError, format_config, load_config, parse_config
from twosystem.model import quartic

QUARTIC_CFG = """\
[model]
name = quartic
epsilon = 0.1

[initial]
x = 1 0
M = 1 0.3 0.5

[integrator]
t_end = 2
rtol = 1e-10
atol = 1e-12
"""


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_writes_csv_and_report(tmp_path, capsys):
    cfg = write(tmp_path, QUARTIC_CFG)
    csv_path, json_path = tmp_path / "q.csv", tmp_path / "q.json"
    code, out, _ = run(["simulate", cfg, "--trajectory", str(csv_path),
                        "--report", str(json_path)], capsys)
    assert code == EXIT_OK
    with open(csv_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "q", "p", "M11", "M12", "M22"]
    assert [float(v) for v in rows[1]] == [0.0, 1.0, 0.0, 1.0, 0.3, 0.5]
    assert float(rows[-1][0]) == 2.0
    rep = json.loads(json_path.read_text())
    assert rep["casimir_0"]["max_drift"] <= 1e-8
    assert "max_drift[energy]" in out


def test_simulate_default_outputs_keyed_by_hash(tmp_path, capsys):
    a = write(tmp_path, QUARTIC_CFG, "a.ini")
    b = write(tmp_path, QUARTIC_CFG.replace("t_end = 2", "t_end = 1"), "b.ini")
    assert run(["simulate", a], capsys)[0] == EXIT_OK
    assert run(["simulate", b], capsys)[0] == EXIT_OK
    csvs = sorted(p.name for p in tmp_path.glob("*.csv"))
    assert len(csvs) == 2
    assert csvs[0].startswith("a-") and csvs[1].startswith("b-")


def test_simulate_is_deterministic(tmp_path, capsys):
    cfg = write(tmp_path, QUARTIC_CFG)
    for name in ("1.csv", "2.csv"):
        run(["simulate", cfg, "--trajectory", str(tmp_path / name),
             "--report", str(tmp_path / "r.json")], capsys)
    assert (tmp_path / "1.csv").read_bytes() == (tmp_path / "2.csv").read_bytes()


def test_simulate_zero_duration(tmp_path, capsys):
    cfg = write(tmp_path, QUARTIC_CFG.replace("t_end = 2", "t_end = 0"))
    code, _, _ = run(["simulate", cfg, "--trajectory", str(tmp_path / "z.csv"),
                      "--report", str(tmp_path / "z.json")], capsys)
    assert code == EXIT_OK
    lines = (tmp_path / "z.csv").read_text().splitlines()
    assert len(lines) == 2


def test_asymmetric_m_rejected(tmp_path, capsys):
    cfg = write(tmp_path, QUARTIC_CFG.replace("M = 1 0.3 0.5", "M = 1 0.3; 0.2 0.5"))
    code, _, err = run(["simulate", cfg], capsys)
    assert code == EXIT_CONFIG
    assert "symmetric" in err


def test_missing_config(tmp_path, capsys):
    code, _, err = run(["simulate", str(tmp_path / "nope.ini")], capsys)
    assert code == EXIT_CONFIG
    assert "not found" in err


@pytest.mark.parametrize("bad", [
    "[model]\nname = cubic\n",
    "[model]\nname = quartic\n[initial]\nx = 1 0 0\n",
    "[model]\nname = quartic\n[initial]\nx = 1 zero\n",
    "[model]\nname = quartic\n[integrator]\nmethod = euler\n",
    "[model]\nname = quartic\n[integrator]\nwobble = 1\n",
    "[model]\nname = quartic\n[run]\nform = tensor\n",
    "not an ini file",
])
def test_malformed_config(tmp_path, capsys, bad):
    code, _, err = run(["simulate", write(tmp_path, bad)], capsys)
    assert code == EXIT_CONFIG
    assert err.startswith("error:")


def test_step_underflow_exit_code(tmp_path, capsys):
    # H = q^2 p gives q' = q^2, which blows up at t = 1 from q = 1
    (tmp_path / "blow.poly").write_text("1 2 1\n")
    text = """\
[model]
name = polynomial
file = blow.poly

[initial]
x = 1 1

[integrator]
t_end = 2

[run]
form = base
"""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        code, _, err = run(["simulate", write(tmp_path, text)], capsys)
    assert code == EXIT_INTEGRATION
    assert "integration failed" in err


def test_config_round_trip(tmp_path):
    (tmp_path / "h.poly").write_text("0.5 2 0 0 0\n0.5 0 0 2 0\n0.5 0 2 0 0\n0.5 0 0 0 2\n")
    text = """\
[model]
name = polynomial
file = h.poly
n = 2

[initial]
x = 1 0 0.5 0
ys = 1 0 0 0
zs = 0 1 0 0

[integrator]
method = rk4
step = 0.01
t_end = 3

[run]
form = multivector
compare = two
tolerance = 1e-9
samples = 11

[output]
trajectory = out.csv
"""
    cfg = parse_config(text, str(tmp_path))
    again = parse_config(format_config(cfg), str(tmp_path))
    assert again == cfg
    assert again.integrator.method == "rk4"
    np.testing.assert_array_equal(cfg.initial_moments(), np.diag([1.0, -1.0, 0.0, 0.0]))


def test_config_full_matrix_form(tmp_path):
    a = parse_config(QUARTIC_CFG)
    b = parse_config(QUARTIC_CFG.replace("M = 1 0.3 0.5", "M = 1 0.3; 0.3 0.5"))
    assert a == b
    assert parse_config(format_config(a)) == a


def test_config_rejects_m_and_vectors():
    with pytest.raises(ConfigError):
        parse_config(QUARTIC_CFG.replace("M = 1 0.3 0.5", "M = 1 0.3 0.5\nys = 1 0"))


def compare_cfg(tmp_path, form, other, M="1 0 -1", tol="1e-8", t_end="10"):
    text = QUARTIC_CFG.replace("M = 1 0.3 0.5", f"M = {M}").replace("t_end = 2", f"t_end = {t_end}")
    text += f"\n[run]\nform = {form}\ncompare = {other}\ntolerance = {tol}\nsamples = 21\n"
    return write(tmp_path, text)


def test_compare_two_bracket(tmp_path, capsys):
    code, out, _ = run(["compare", compare_cfg(tmp_path, "two", "bracket", "1 0.3 0.5",
                                               "1e-12", "2")], capsys)
    assert code == EXIT_OK, out
    assert "PASS" in out


def test_compare_two_multivector(tmp_path, capsys):
    code, out, _ = run(["compare", compare_cfg(tmp_path, "two", "multivector")], capsys)
    assert code == EXIT_OK, out


def test_compare_vector_two(tmp_path, capsys):
    code, out, _ = run(["compare", compare_cfg(tmp_path, "vector", "two", "0.16 -0.28 0.49")],
                       capsys)
    assert code == EXIT_OK, out


def test_compare_vector_needs_rank_one(tmp_path, capsys):
    code, _, err = run(["compare", compare_cfg(tmp_path, "vector", "two")], capsys)
    assert code == EXIT_CONFIG
    assert "signature" in err


def test_compare_incomparable(tmp_path, capsys):
    code, _, err = run(["compare", compare_cfg(tmp_path, "base", "two")], capsys)
    assert code == EXIT_CONFIG
    assert "cannot compare" in err


def test_compare_reports_failure(tmp_path, capsys):
    # an absurd tolerance cannot be met by two independent integrations
    code, out, _ = run(["compare", compare_cfg(tmp_path, "two", "multivector", tol="1e-30")],
                       capsys)
    assert code == EXIT_DEVIATION
    assert "FAIL" in out


def oracle_cfg(tmp_path, body, oracle, extra=""):
    text = body + f"\n[run]\noracle = {oracle}\n{extra}"
    return write(tmp_path, text)


HARMONIC_CFG = """\
[model]
name = harmonic

[initial]
x = 1 0
M = 4 0 1

[integrator]
t_end = 10
rtol = 1e-12
atol = 1e-14
"""


def test_oracle_quadratic(tmp_path, capsys):
    code, out, _ = run(["oracle", oracle_cfg(tmp_path, HARMONIC_CFG, "quadratic")], capsys)
    assert code == EXIT_OK, out


def test_oracle_quadratic_rejects_quartic(tmp_path, capsys):
    code, _, _ = run(["oracle", oracle_cfg(tmp_path, QUARTIC_CFG, "quadratic")], capsys)
    assert code == EXIT_ORACLE


def test_oracle_zero_phi(tmp_path, capsys):
    body = QUARTIC_CFG.replace("M = 1 0.3 0.5", "M = 0 0 0")
    code, out, _ = run(["oracle", oracle_cfg(tmp_path, body, "zero-phi")], capsys)
    assert code == EXIT_OK, out
    assert "Phi deviation from zero = 0.000e+00" in out


def test_oracle_stationary(tmp_path, capsys):
    body = QUARTIC_CFG.replace("x = 1 0", "x = 0 0")
    code, out, _ = run(["oracle", oracle_cfg(tmp_path, body, "stationary")], capsys)
    assert code == EXIT_OK, out


def test_oracle_stationary_precondition(tmp_path, capsys):
    code, _, err = run(["oracle", oracle_cfg(tmp_path, QUARTIC_CFG, "stationary")], capsys)
    assert code == EXIT_ORACLE
    assert "stationary" in err


def test_oracle_action_angle(tmp_path, capsys):
    extra = "action_coeffs = 0 0 0.5\naction_initial = 1 0 1 1 0\n"
    code, out, _ = run(["oracle", oracle_cfg(tmp_path, QUARTIC_CFG, "action-angle", extra)],
                       capsys)
    assert code == EXIT_OK, out
    assert "beta(t) looks linear" in out
    assert "[informational]" in out


def test_oracle_action_angle_needs_data(tmp_path, capsys):
    code, _, _ = run(["oracle", oracle_cfg(tmp_path, QUARTIC_CFG, "action-angle")], capsys)
    assert code == EXIT_ORACLE


def test_quartic_rhs_examples():
    np.testing.assert_allclose(quartic_explicit_rhs(0.1, [1, 0, 1, 0, 1]),
                               [0, -1.4, 0, -0.3, 0], atol=1e-15)
    np.testing.assert_allclose(quartic_derived_rhs(quartic(0.1), [1, 0, 1, 0, 1]),
                               [0, -1.4, 0, -0.3, 0], atol=1e-15)
    # eps = 0: linear moment subsystem
    s = np.array([0.3, -0.2, 1.5, 0.4, 0.7])
    np.testing.assert_allclose(quartic_explicit_rhs(0.0, s)[2:], [0.8, 0.7 - 1.5, -0.8])


def test_quartic_mismatch_random(rng):
    states = rng.normal(size=(200, 5)) * 2
    assert quartic_mismatch(0.1, states) <= 1e-12
    assert quartic_mismatch(-0.7, states) <= 1e-12


def test_example_quartic(tmp_path, capsys):
    code, out, _ = run(["example-quartic", "--t-end", "5", "--out-dir", str(tmp_path)], capsys)
    assert code == EXIT_OK
    assert (tmp_path / "quartic_trajectory.csv").exists()
    rep = json.loads((tmp_path / "quartic_report.json").read_text())
    assert rep["casimir_0"]["max_drift"] <= 1e-8
    assert "max relative mismatch" in out


def test_invariants_from_csv(tmp_path, capsys):
    cfg = write(tmp_path, QUARTIC_CFG)
    run(["simulate", cfg, "--trajectory", str(tmp_path / "q.csv"),
         "--report", str(tmp_path / "q.json")], capsys)
    code, _, _ = run(["invariants", cfg, str(tmp_path / "q.csv"),
                      "--report", str(tmp_path / "again.json")], capsys)
    assert code == EXIT_OK
    a = json.loads((tmp_path / "q.json").read_text())
    b = json.loads((tmp_path / "again.json").read_text())
    assert set(a) == set(b)
    # 17 significant digits survive the CSV round trip
    assert b["energy"]["values"] == pytest.approx(a["energy"]["values"], abs=1e-15)


def test_invariants_bad_csv(tmp_path, capsys):
    cfg = write(tmp_path, QUARTIC_CFG)
    (tmp_path / "bad.csv").write_text("t,q\n0,1\n")
    code, _, err = run(["invariants", cfg, str(tmp_path / "bad.csv")], capsys)
    assert code == EXIT_CONFIG


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "twosystem", "--help"],
                         capture_output=True, text=True, check=True)
    assert "example-quartic" in out.stdout
