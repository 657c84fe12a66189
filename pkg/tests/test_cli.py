import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from qherm import cli
from qherm.config import (
    ConfigError,
    ResultDocument,
    explicit_config,
    load,
    loads,
    parse_chain_config,
)
from qherm.eigensolver import match_multisets

CONFIGS = Path(__file__).parent / "configs"


def cfg(name):
    return load(CONFIGS / f"{name}.json")


def values(doc):
    return np.array([complex(re, im) for re, im in doc.spectrum])


def run_main(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# --- check / transform -----------------------------------------------------


@pytest.mark.parametrize("name", ["real_chain", "uniform3", "alternating", "two_site",
                                  "hermitian", "single_site", "cyclic_ok", "biased"])
def test_check_accepts_quasi_hermitian(name):
    doc = cli.cmd_check(cfg(name))
    assert doc.exit_code == cli.EXIT_OK
    assert doc.details["report"]["is_quasi_hermitian"]


def test_check_complex_diagonal():
    doc = cli.cmd_check(cfg("yuce2"))
    assert doc.exit_code == cli.EXIT_NOT_QH
    report = doc.details["report"]
    assert not report["diag_real"] and report["ratios_positive"]
    assert report["first_violation"]["rule"]
    # metric still exists; only off-diagonal entries can intertwine
    assert doc.residuals["intertwining_form"] == "offdiagonal"
    assert doc.residuals["intertwining"] <= 1e-13


def test_check_cyclic_condition_violated():
    doc = cli.cmd_check(cfg("cyclic_bad"))
    assert doc.exit_code == cli.EXIT_NOT_QH
    assert not doc.details["report"]["cyclic_ok"]


def test_check_negative_ratio():
    doc = cli.cmd_check(cfg("not_symmetrizable"))
    assert doc.exit_code == cli.EXIT_NOT_QH
    assert not doc.details["report"]["ratios_positive"]
    assert doc.metric is None


def test_transform_two_site():
    doc = cli.cmd_transform(cfg("two_site"))
    assert doc.exit_code == 0
    np.testing.assert_allclose(doc.metric["q"], [1, 2])
    sym = doc.details["symmetrized"]
    assert sym["upper"] == [[2.0, 0.0]] and sym["lower"] == [[2.0, 0.0]]
    assert doc.residuals["intertwining"] <= 1e-13


def test_transform_hermitian_identity_metric():
    doc = cli.cmd_transform(cfg("hermitian"))
    np.testing.assert_allclose(doc.metric["q"], 1.0)
    assert doc.residuals["intertwining"] == 0.0


def test_transform_q1_override_scales_metric():
    doc = cli.cmd_transform(cfg("two_site"), q1=3.0)
    np.testing.assert_allclose(doc.metric["q"], [3, 6])


def test_transform_not_symmetrizable():
    doc = cli.cmd_transform(cfg("not_symmetrizable"))
    assert doc.exit_code == cli.EXIT_NOT_QH
    assert doc.diagnostics


def test_transform_log_scaled_metric():
    doc = cli.cmd_transform(cfg("biased"))
    assert doc.exit_code == 0
    assert doc.metric["log_scaled"]
    assert "q" not in doc.metric and len(doc.metric["log_abs_q"]) == 90
    # ln Q_j = (j-1) * ln(1e10) / 2
    np.testing.assert_allclose(doc.metric["log_abs_q"][-1], 89 * math.log(1e5), rtol=1e-14)
    np.testing.assert_allclose(np.array(doc.details["symmetrized"]["upper"])[:, 0], 1e5, rtol=1e-14)


# --- spectrum ----------------------------------------------------------------


def test_spectrum_uniform3():
    doc = cli.cmd_spectrum(cfg("uniform3"))
    assert doc.exit_code == 0 and doc.all_real
    exact = [0.7 - math.sqrt(2), 0.7, 0.7 + math.sqrt(2)]
    np.testing.assert_allclose(values(doc).real, exact, atol=1e-12)
    assert doc.details["route"] == "symmetrize"
    assert doc.residuals["cross_method_deviation"] <= 1e-8


def test_spectrum_gain_loss_pair():
    doc = cli.cmd_spectrum(cfg("yuce2"))
    assert doc.exit_code == 0
    assert doc.details["route"] == "oracle"
    assert doc.all_real is False
    assert match_multisets(values(doc), [1j * math.sqrt(3), -1j * math.sqrt(3)]) <= 1e-10


def test_spectrum_single_site():
    doc = cli.cmd_spectrum(cfg("single_site"))
    np.testing.assert_allclose(values(doc), [2.5])


def test_spectrum_cyclic_uses_oracle():
    doc = cli.cmd_spectrum(cfg("cyclic_ok"))
    assert doc.details["route"] == "oracle"
    spec = parse_chain_config(cfg("cyclic_ok")).spec
    from qherm.lattice import build_chain
    dense = build_chain(spec).to_dense()
    assert match_multisets(values(doc), np.linalg.eigvals(dense)) <= 1e-9
    assert doc.all_real


def test_spectrum_symmetrize_rejects_non_qh():
    doc = cli.cmd_spectrum(cfg("yuce2"), method="symmetrize")
    assert doc.exit_code == cli.EXIT_NOT_QH
    assert doc.spectrum is None


def test_spectrum_symmetrize_rejects_cyclic():
    with pytest.raises(ConfigError):
        cli.cmd_spectrum(cfg("cyclic_ok"), method="symmetrize")


def test_spectrum_unknown_method():
    with pytest.raises(ConfigError):
        cli.cmd_spectrum(cfg("uniform3"), method="qr")


def test_spectrum_flags_coalescence():
    # gain/loss pair exactly at the coalescence point: double eigenvalue 0
    doc = cli.cmd_spectrum({"n": 2, "omega": {"yuce": {"gamma": 1, "v0": 1}}})
    assert any("coincide" in line for line in doc.diagnostics)


QH_CONFIGS = ["real_chain", "uniform3", "alternating", "two_site", "hermitian", "single_site", "biased"]


@pytest.mark.parametrize("name", QH_CONFIGS)
def test_symmetrize_and_oracle_routes_agree(name):
    a = cli.cmd_spectrum(cfg(name), method="symmetrize")
    b = cli.cmd_spectrum(cfg(name), method="oracle")
    assert a.exit_code == b.exit_code == 0
    assert match_multisets(values(a), values(b)) <= 1e-8
    assert cli.cmd_spectrum(cfg(name)).exit_code == 0


# --- sweep -----------------------------------------------------------------


def test_sweep_two_site_threshold():
    doc = cli.cmd_sweep(cfg("yuce2_sweep"))
    assert doc.exit_code == 0
    assert abs(doc.details["threshold"] - 1.0) <= 1e-6
    lo, hi = doc.details["bracket"]
    assert lo <= 1.0 <= hi or abs(hi - lo) < 1e-9


def test_sweep_eight_site_threshold():
    doc = cli.cmd_sweep(cfg("yuce8_sweep"))
    expected = 2 * math.cos(8 * math.pi / 18)
    assert abs(doc.details["threshold"] - expected) <= 1e-6
    assert doc.details["analytic_threshold"] == pytest.approx(expected, abs=1e-15)
    assert doc.details["deviation"] <= 1e-6


def test_sweep_range_override():
    doc = cli.cmd_sweep(cfg("yuce2_sweep"), v_range=[0.5, 1.5], steps=10)
    assert doc.details["steps"] == 10 and doc.details["range"] == [0.5, 1.5]
    assert abs(doc.details["threshold"] - 1.0) <= 1e-6


def test_sweep_without_transition():
    doc = cli.cmd_sweep(cfg("yuce2_sweep"), v_range=[0.0, 0.5], steps=5)
    assert doc.exit_code == cli.EXIT_BRACKET
    assert "threshold" not in doc.details


@pytest.mark.parametrize("kwargs", [{"parameter": "gamma"}, {"v_range": [1.0, 0.0]}, {"steps": 0}])
def test_sweep_bad_settings(kwargs):
    with pytest.raises(ConfigError):
        cli.cmd_sweep(cfg("yuce2_sweep"), **kwargs)


def test_sweep_needs_gain_loss_chain():
    with pytest.raises(ConfigError):
        cli.cmd_sweep({**cfg("uniform3"), "sweep": {"range": [0, 1]}})


# --- analytic ----------------------------------------------------------------


def test_analytic_two_site():
    doc = cli.cmd_analytic(cfg("analytic_2x2"))
    assert doc.exit_code == 0 and "formula" in doc.details
    # equal site energies: 0.25 -+ sqrt(alpha beta)
    np.testing.assert_allclose(values(doc), [-0.75, 1.25], atol=1e-15)
    assert doc.all_real


def test_analytic_uniform_table():
    doc = cli.cmd_analytic(cfg("analytic_uniform"))
    table = doc.details["table"]
    assert [row["k"] for row in table] == [1, 2, 3]
    np.testing.assert_allclose([row["E"] for row in table], [math.sqrt(2), 0, -math.sqrt(2)], atol=1e-15)
    np.testing.assert_allclose(table[0]["d"], [0.5, math.sqrt(0.5), 0.5], atol=1e-15)


def test_analytic_uniform_negative_hopping_vectors():
    conf = {"model": "uniform", "n": 4, "omega": 0.3, "alpha": -1.0, "beta": -2.0}
    doc = cli.cmd_analytic(conf)
    from qherm.lattice import ChainSpec, build_chain
    m = build_chain(ChainSpec(4, [-1.0] * 3, [-2.0] * 3, [0.3] * 4))
    for row in doc.details["table"]:
        c = np.array(row["c"])
        assert np.max(np.abs(m.matvec(c) - row["E"] * c)) <= 1e-10


def test_analytic_yuce():
    doc = cli.cmd_analytic(cfg("analytic_yuce"))
    assert doc.all_real
    assert doc.details["critical_v0"] == pytest.approx(2 * math.sqrt(2) * math.cos(4 * math.pi / 10))
    e2 = np.array(doc.details["energies_squared"])
    assert match_multisets(values(doc), np.concatenate([np.sqrt(e2), -np.sqrt(e2)])) <= 1e-14


def test_analytic_odd_yuce_rejected(capsys, caplog):
    code, out, _ = run_main(capsys, "analytic", "--config", str(CONFIGS / "analytic_yuce_odd.json"))
    assert code == cli.EXIT_PARSE and out == ""
    assert "even" in caplog.text


def test_analytic_unknown_model():
    with pytest.raises(ConfigError):
        cli.cmd_analytic({"model": "ring"})


# --- main, parsing, documents -------------------------------------------------


def test_malformed_json(capsys, caplog):
    code, _, _ = run_main(capsys, "check", "--config", str(CONFIGS / "malformed.json"))
    assert code == cli.EXIT_PARSE and "invalid JSON" in caplog.text


def test_missing_file(capsys, caplog, tmp_path):
    code, _, _ = run_main(capsys, "check", "--config", str(tmp_path / "absent.json"))
    assert code == cli.EXIT_PARSE and "cannot read" in caplog.text


@pytest.mark.parametrize("conf, fragment", [
    ({"n": 0, "omega": []}, "n:"),
    ({"n": 2, "alpha": [1], "beta": [1, 2], "omega": [0, 0]}, "beta"),
    ({"n": 2, "alpha": [1], "beta": [1], "omega": [0, 0], "extra": 1}, "unknown"),
    ({"n": 2, "alpha": [1], "beta": [1], "omega": [0, "x"]}, "omega[1]"),
    ({"n": 3, "alpha": [1, 1], "beta": [1, 1], "omega": [0, 0, 0], "cyclic": True}, "corner_up"),
    ({"n": 2, "alpha": [1], "beta": [1], "omega": [0, 0], "q1": 0}, "q1"),
])
def test_config_errors(conf, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("[", r"\[")):
        parse_chain_config(conf)


def test_generators_expand():
    conf = parse_chain_config({"n": 4, "alpha": {"constant": [1, 0.5]}, "beta": {"alternating": [2, 3]},
                               "omega": {"yuce": {"gamma": 2, "v0": 0.5}}})
    np.testing.assert_array_equal(conf.spec.alpha, [1 + 0.5j] * 3)
    np.testing.assert_array_equal(conf.spec.beta, [2, 3, 2])
    np.testing.assert_array_equal(conf.spec.omega, [-0.5j, 0.5j, -0.5j, 0.5j])
    assert conf.yuce == (2.0, 0.5)


def test_yuce_defaults_hoppings():
    conf = parse_chain_config(cfg("yuce2"))
    np.testing.assert_array_equal(conf.spec.alpha, [1])
    np.testing.assert_array_equal(conf.spec.beta, [conf.yuce[0]])


@pytest.mark.parametrize("name", ["real_chain", "alternating", "cyclic_ok", "yuce2", "single_site"])
def test_explicit_config_round_trip(name):
    conf = parse_chain_config(cfg(name))
    again = parse_chain_config(loads(json.dumps(explicit_config(conf))))
    assert again.spec == conf.spec and again.q1 == conf.q1


@pytest.mark.parametrize("command, name", [("check", "real_chain"), ("spectrum", "yuce2"),
                                           ("transform", "biased"), ("sweep", "yuce2_sweep")])
def test_document_round_trip(command, name):
    doc = getattr(cli, f"cmd_{command}")(cfg(name)).stamp()
    text = doc.to_text()
    back = ResultDocument.from_text(text)
    assert back.to_text() == text
    assert back.to_dict() == json.loads(text)


def test_document_non_finite_values():
    doc = ResultDocument("check", {}, residuals={"x": float("inf")})
    assert json.loads(doc.to_text())["residuals"]["x"] == "inf"


def test_not_a_document():
    with pytest.raises(ConfigError):
        ResultDocument.from_text("[1, 2]")


@pytest.mark.parametrize("command, name", [("spectrum", "real_chain"), ("transform", "two_site"),
                                           ("sweep", "yuce8_sweep")])
def test_runs_are_deterministic(command, name):
    one = getattr(cli, f"cmd_{command}")(cfg(name)).stamp().to_text(include_timestamp=False)
    two = getattr(cli, f"cmd_{command}")(cfg(name)).stamp().to_text(include_timestamp=False)
    assert one == two


def test_main_writes_out_file(capsys, tmp_path):
    target = tmp_path / "doc.json"
    code, out, _ = run_main(capsys, "spectrum", "--config", str(CONFIGS / "uniform3.json"),
                            "--out", str(target))
    assert code == 0 and out == ""
    doc = ResultDocument.from_text(target.read_text())
    assert doc.command == "spectrum" and doc.timestamp


def test_main_sweep_options(capsys):
    code, out, _ = run_main(capsys, "sweep", "--config", str(CONFIGS / "yuce2_sweep.json"),
                            "--range", "0.9", "1.1", "--steps", "4")
    assert code == 0
    assert abs(json.loads(out)["details"]["threshold"] - 1.0) <= 1e-6


def test_main_not_quasi_hermitian_exit(capsys, caplog):
    code, out, _ = run_main(capsys, "check", "--config", str(CONFIGS / "yuce2.json"))
    assert code == cli.EXIT_NOT_QH
    assert json.loads(out)["exit_code"] == cli.EXIT_NOT_QH
    assert "not quasi-Hermitian" in caplog.text


def test_module_entry_point():
    env = {**os.environ, "PYTHONPATH": str(Path(cli.__file__).parents[1])}
    proc = subprocess.run([sys.executable, "-m", "qherm", "spectrum", "--config",
                           str(CONFIGS / "two_site.json")], capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(proc.stdout)
    np.testing.assert_allclose([v[0] for v in doc["spectrum"]], [-2, 2], atol=1e-12)
