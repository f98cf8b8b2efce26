"""Command-line front end: documented examples, exit codes, precedence and determinism."""

import csv
import json

import numpy as np
import pytest

from qlmass import cli


def run(tmp_path, *argv):
    code = cli.main(list(argv) + ["--output-dir", str(tmp_path)])
    return code


def load(path):
    data = json.loads(path.read_text())
    data.pop("timestamp")
    return data


def test_mass_by_schwarzschild(tmp_path):
    assert run(tmp_path, "mass", "by", "--case", "schwarzschild_round", "--M", "1", "--r", "4", "--L", "16") == 0
    out = load(tmp_path / "mass_by_schwarzschild_round.json")
    assert out["value"] == pytest.approx(4 * (1 - np.sqrt(0.5)), abs=1e-7)
    assert out["value"] == pytest.approx(1.1715729, abs=1e-7)


def test_dirac_spectrum_pattern(tmp_path):
    assert run(tmp_path, "dirac", "spectrum", "--u", "0", "--L", "8") == 0
    rows = list(csv.reader((tmp_path / "dirac_spectrum.csv").open()))
    assert rows[0] == ["index", "lambda", "multiplicity_group"]
    lam = np.array([float(r[1]) for r in rows[1:]])
    for k in range(1, 5):
        for sign in (1, -1):
            sel = np.abs(lam - sign * k) <= 1e-10
            assert sel.sum() == 2 * k


def test_verify_identities(tmp_path):
    assert run(tmp_path, "verify", "identities", "--suite", "all", "--L", "16") == 0
    rep = load(tmp_path / "verify_all.json")
    assert rep["ok"]
    assert set(rep["checks"]) == set(cli_thresholds())
    for check in rep["checks"].values():
        assert check["residual"] <= check["threshold"]


def cli_thresholds():
    from qlmass.pipeline import IDENTITY_THRESHOLDS

    return IDENTITY_THRESHOLDS


def test_unknown_config_key_exit_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"case": "flat", "bogus": 1}))
    assert run(tmp_path, "mass", "by", "--config", str(cfg)) == 2


def test_schema_type_error_exit_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"L": "sixteen"}))
    assert run(tmp_path, "catalog", "list", "--config", str(cfg)) == 2


def test_unknown_case_exit_2(tmp_path):
    assert run(tmp_path, "mass", "by", "--case", "nowhere") == 2


def test_bad_parameter_exit_2(tmp_path):
    assert run(tmp_path, "mass", "by", "--case", "schwarzschild_round", "--r", "1.5") == 2
    assert run(tmp_path, "mass", "by", "--case", "flat", "--param", "zz=1") == 2


def test_jang_obstruction_exit_3(tmp_path):
    code = run(tmp_path, "jang", "--case", "flat_with_P", "--lam", "1.2", "--L", "8", "--n-r", "8")
    assert code == 3
    rep = load(tmp_path / "jang_flat_with_P.json")
    assert rep["error"] == "HorizonObstruction"
    assert rep["trapped_margin"] <= 0


def test_wang_yau_inadmissible_exit_4(tmp_path):
    code = run(tmp_path, "mass", "wy", "--case", "flat_with_P", "--lam", "1.2", "--L", "8", "--n-r", "8")
    assert code == 4
    rep = load(tmp_path / "mass_wy_flat_with_P.json")
    assert rep["admissibility"]["admissible"] is False
    assert rep["value"] is None


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"case": "schwarzschild_round", "params": {"r": 8.0}, "L": 8}))
    assert run(tmp_path, "mass", "by", "--case", "minkowski_round", "--r", "4", "--L", "12", "--config", str(cfg)) == 0
    out = load(tmp_path / "mass_by_schwarzschild_round.json")
    assert out["L"] == 8
    assert out["params"] == {"M": 1.0, "r": 8.0}
    assert out["value"] == pytest.approx(8 * (1 - np.sqrt(0.75)), abs=1e-9)


def test_flags_override_defaults(tmp_path):
    assert run(tmp_path, "dirac", "spectrum", "--L", "6") == 0
    assert load(tmp_path / "dirac_spectrum.json")["L"] == 6


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["catalog", "list"]) == 0
    entries = json.loads((tmp_path / "env" / "catalog.json").read_text())["entries"]
    assert {e["name"] for e in entries} >= {"schwarzschild_round", "flat"}


def test_deterministic_outputs(tmp_path):
    argv = ["mass", "all", "--case", "minkowski_boosted", "--v", "0.5", "--L", "12", "--n-r", "10"]
    assert run(tmp_path / "a", *argv) == 0
    assert run(tmp_path / "b", *argv) == 0
    for name in ("mass_all_minkowski_boosted.json",):
        assert load(tmp_path / "a" / name) == load(tmp_path / "b" / name)
    assert (tmp_path / "a" / "batch.csv").read_bytes() == (tmp_path / "b" / "batch.csv").read_bytes()


def test_tau_list_from_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"case": "minkowski_round", "L": 10, "n_r": 8,
                               "taus": [[[1, 0, 0.1]], [[2, 0, 0.1]]]}))
    assert run(tmp_path, "mass", "wy", "--config", str(cfg)) == 0
    affine = load(tmp_path / "mass_wy_minkowski_round_tau0.json")
    curved = load(tmp_path / "mass_wy_minkowski_round_tau1.json")
    assert affine["tau_coeffs"] == [[1, 0, 0.1]]
    assert abs(affine["value"]) <= 1e-6
    assert curved["value"] > 1e-6


def test_tau_flag_requires_wang_yau(tmp_path):
    assert run(tmp_path, "mass", "by", "--case", "minkowski_round", "--tau-coeff", "1", "0", "0.1") == 2


def test_embed_and_dumps(tmp_path):
    assert run(tmp_path, "embed", "--case", "minkowski_graph", "--with-tau", "--L", "12") == 0
    rep = load(tmp_path / "embed_minkowski_graph.json")
    assert rep["mean1"]["residual"] <= 1e-5
    header = (tmp_path / "embed_minkowski_graph" / "embedding_history.csv").read_text().splitlines()[0]
    assert header == "iter,defect_norm,step_size"


def test_dirac_solve_and_verify(tmp_path):
    assert run(tmp_path, "dirac", "solve", "--condition", "aps", "--spinor", "constant", "--L", "6") == 0
    rep = load(tmp_path / "dirac_solve_APS.json")
    assert rep["spin_inequalities"]["equality_case"]
    assert run(tmp_path, "dirac", "verify", "--L", "6", "--seed", "3") == 0


def test_catalog_dump(tmp_path):
    assert run(tmp_path, "catalog", "dump", "schwarzschild_round", "--L", "6") == 0
    assert (tmp_path / "catalog_schwarzschild_round" / "schwarzschild_round_sigma.csv").exists()


def test_plots_written(tmp_path):
    assert run(tmp_path, "mass", "by", "--case", "schwarzschild_round", "--L", "8", "--plots") == 0
    svg = tmp_path / "mass_by_schwarzschild_round_by_integrand.svg"
    assert svg.read_text().lstrip().startswith("<?xml")
