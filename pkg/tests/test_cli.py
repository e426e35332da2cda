import json

import numpy as np
import pytest

from bifurcata import export
from bifurcata.cli import main, morse_columns

BETA_STAR = 0.57549872769969634
LAM_STAR = 1.140187164891765


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_diagram_small(tmp_path):
    assert run(tmp_path, "diagram", "--kmax", "1", "--lambda-max", "3", "--grid", "30") == 0
    rows = export.read_csv(tmp_path / "diagram.csv")
    ids = {r["branch_id"] for r in rows}
    assert {"trivial", "odd_k1+", "odd_k1-", "bif_n1", "bif_k1+", "sec_k1+"} <= ids
    assert all(float(r["lambda"]) <= 3.0 for r in rows)
    meta = json.loads((tmp_path / "diagram.json").read_text())
    assert meta["config"]["grids"]["kmax"] == 1
    assert meta["secondary_points"][0]["lambda_star"] == pytest.approx(LAM_STAR, rel=1e-11)
    assert (tmp_path / "diagram.svg").read_text().startswith("<svg")


def test_diagram_below_first_point(tmp_path):
    assert run(tmp_path, "diagram", "--lambda-max", "0.5", "--no-svg", "--no-json") == 0
    rows = export.read_csv(tmp_path / "diagram.csv")
    assert {r["branch_id"] for r in rows} == {"trivial"}
    assert not (tmp_path / "diagram.svg").exists()


def test_diagram_reproducible(tmp_path):
    args = ("diagram", "--kmax", "1", "--lambda-max", "2", "--grid", "20")
    names = ("diagram.csv", "diagram.json", "diagram.svg")
    assert run(tmp_path, *args) == 0
    first = [(tmp_path / n).read_bytes() for n in names]
    assert run(tmp_path, *args) == 0
    assert [(tmp_path / n).read_bytes() for n in names] == first


def test_config_errors(tmp_path, capsys):
    assert run(tmp_path, "diagram", "--a", "-1") == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("[grids]\nscan_grid = 400\n")
    assert run(tmp_path, "diagram", "--config", str(bad)) == 2
    assert run(tmp_path, "morse", "--k", "0", "--beta", "0.3") == 2
    assert run(tmp_path, "morse") == 2
    assert run(tmp_path, "profile", "--beta", "0.9") == 2
    assert "configuration error" in capsys.readouterr().err


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("BIFURCATA_THREADS", "many")
    assert run(tmp_path, "bifpoints", "--k", "1") == 2
    monkeypatch.setenv("BIFURCATA_THREADS", "0")
    assert run(tmp_path, "bifpoints", "--k", "1") == 2


def test_bifpoints(tmp_path):
    assert run(tmp_path, "bifpoints", "--k", "1") == 0
    (row,) = export.read_csv(tmp_path / "bifpoints.csv")
    assert row["kind"] == "secondary" and row["unique"] == "true"
    assert float(row["lambda"]) == pytest.approx(LAM_STAR, rel=1e-11)
    assert float(row["beta_star"]) == pytest.approx(BETA_STAR, abs=1e-12)
    assert run(tmp_path, "bifpoints", "--kmax", "1", "--lambda-max", "12") == 0
    kinds = [(r["kind"], r["index"]) for r in export.read_csv(tmp_path / "bifpoints.csv")]
    assert kinds == [("primary", "1"), ("primary", "2"), ("secondary", "1")]


def test_branch(tmp_path):
    assert run(tmp_path, "branch", "--k", "1", "--parity", "even", "--sign", "-", "--grid", "20",
               "--lambda-max", "1e6") == 0
    rows = export.read_csv(tmp_path / "branch.csv")
    assert len(rows) == 20 and all(r["branch_id"] == "even_k1-" for r in rows)
    assert all(r["beta1"] == r["beta2"] and float(r["beta1"]) < 0 for r in rows)


def test_branch_secondary(tmp_path):
    assert run(tmp_path, "branch", "--parity", "secondary", "--lambda-max", "3") == 0
    rows = export.read_csv(tmp_path / "branch.csv")
    assert rows and all(r["branch_id"] == "sec_k1+" for r in rows)
    assert all(float(r["lambda"]) <= 3.0 for r in rows)
    assert any(abs(float(r["beta1"]) + float(r["beta2"])) > 1e-2 for r in rows)


def test_profile_even(tmp_path):
    assert run(tmp_path, "profile", "--parity", "even", "--beta", "0.4") == 0
    rows = export.read_csv(tmp_path / "profile.csv")
    assert len(rows) == 200
    for r in rows:
        assert r["u(-x)"] == r["u(x)"]
        assert float(r["u_x(-x)"]) == -float(r["u_x(x)"])
    meta = json.loads((tmp_path / "profile.json").read_text())
    assert meta["zero_count"] == 2 and max(map(abs, meta["matching_residual"])) < 1e-8


def test_profile_by_lambda(tmp_path):
    assert run(tmp_path, "profile", "--lam", "4") == 0
    meta = json.loads((tmp_path / "profile.json").read_text())
    assert meta["lam"] == 4.0 and meta["beta2"] == -meta["beta1"] > -meta["beta1"] - 1


def test_morse_straddles_secondary_point(tmp_path):
    args = ["morse", "--beta", "0.3", "0.5", "0.65", "--grid", "20"]
    assert run(tmp_path, *args) == 0
    rows = export.read_csv(tmp_path / "morse.csv")
    assert list(rows[0]) == list(morse_columns())
    assert [int(r["morse"]) for r in rows] == [1, 1, 0]
    assert all(r["verdicts_agree"] == "true" and r["degenerate"] == "false" for r in rows)
    mu0 = [float(r["mu0"]) for r in rows]
    assert mu0[1] > 0 > mu0[2]


def test_morse_by_lambda_on_secondary(tmp_path):
    assert run(tmp_path, "morse", "--parity", "secondary", "--lam", "2") == 0
    (row,) = export.read_csv(tmp_path / "morse.csv")
    assert float(row["lambda"]) == 2.0
    assert abs(float(row["beta1"]) + float(row["beta2"])) > 1e-2


def test_selftest(tmp_path, capsys):
    assert run(tmp_path, "selftest") == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4 and "FAIL" not in out
    assert run(tmp_path, "selftest", "--nonlinearity", "sine") == 0


def test_verify_rejects_non_odd(tmp_path, capsys):
    cfg = tmp_path / "f.toml"
    cfg.write_text('[problem]\nnonlinearity = "custom"\ncoefficients = [0, 1, 0.5, -1.5]\n')
    assert run(tmp_path, "verify", "--config", str(cfg)) == 1
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["passed"] is False
    checks = {c["key"]: c for c in report["checks"]}
    assert not checks["conditions"]["passed"] and not checks["setup"]["passed"]
    assert "conditions" in capsys.readouterr().err
    # selftest refuses the same f at kernel setup
    assert run(tmp_path, "selftest", "--config", str(cfg)) == 3


def test_custom_odd_matches_cubic(tmp_path):
    cfg = tmp_path / "f.toml"
    cfg.write_text('[problem]\nnonlinearity = "custom"\ncoefficients = [0, 1, 0, -1]\n')
    assert run(tmp_path, "bifpoints", "--k", "1", "--config", str(cfg)) == 0
    (row,) = export.read_csv(tmp_path / "bifpoints.csv")
    assert np.isclose(float(row["lambda"]), LAM_STAR, rtol=1e-9)
