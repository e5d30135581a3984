from __future__ import annotations

import json
import math
import subprocess
import sys

import numpy as np
import pytest
import yaml

from levy_extrema.cli import main
from levy_extrema.config import parse_config
from levy_extrema.errors import ConfigError

BM_DOC = {"model": {"mu": 0.0, "sigma": 1.0}, "kill": {"type": "exponential", "q": 1.0}}
KOU_DOC = {"model": {"sigma": 1.0, "jumps": {"type": "kou", "lam": 1.0, "p": 0.5, "eta_plus": 2.0,
                                             "eta_minus": 2.0}},
           "kill": {"q": 0.5}}
SECH_DOC = {"model": {"jumps": {"type": "sech", "alpha": 0.3}}, "kill": {"q": 1.0}}
DEGENERATE_DOC = {"model": {}, "kill": {"q": 1.0}}


def run(tmp_path, command, doc, *flags, name="run"):
    cfg = tmp_path / f"{name}.yaml"
    cfg.write_text(yaml.safe_dump(doc))
    out = tmp_path / name
    rc = main([command, "--config", str(cfg), "--out", str(out), *flags])
    return rc, out


def read_table(path):
    lines = path.read_text().splitlines()
    head = [line[2:] for line in lines if line.startswith("# ")]
    body = [line for line in lines if not line.startswith("#")]
    names = body[0].split(",")
    values = np.array([[float(v) for v in line.split(",")] for line in body[1:]])
    return head, {n: values[:, i] for i, n in enumerate(names)}


def test_factorize_degenerate(tmp_path):
    rc, out = run(tmp_path, "factorize", DEGENERATE_DOC)
    assert rc == 0
    head, t = read_table(out / "phi.csv")
    assert head[0] == "levy-extrema phi/1"
    assert list(t) == ["omega", "re_phi_plus", "im_phi_plus", "re_phi_minus",
                                   "im_phi_minus", "re_g", "im_g", "residual"]
    assert np.all(t["re_phi_plus"] == 1) and np.all(t["im_phi_plus"] == 0)
    assert np.all(t["residual"] <= 1e-12)


def test_factorize_bm_auto_is_carlemann(tmp_path):
    rc, out = run(tmp_path, "factorize", {**BM_DOC, "method": "auto"})
    assert rc == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["method"] == "carlemann" and rep["method_requested"] == "auto"
    assert rep["max_residual"] <= 1e-10
    assert rep["winding_number"] == 0
    assert rep["cross_check"]["sup_difference"] < 1e-4


def test_factorize_sech_kuznetsov(tmp_path):
    rc, out = run(tmp_path, "factorize", {**SECH_DOC, "method": "kuznetsov-product",
                                          "kuznetsov": {"n_terms": 10_000}})
    assert rc == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["method"] == "product-formula"
    assert rep["cross_check"]["sup_difference"] <= 1e-2


def test_invert_bm(tmp_path):
    rc, out = run(tmp_path, "invert", BM_DOC)
    assert rc == 0
    head, t = read_table(out / "dist_sup.csv")
    assert "side=nonnegative" in head
    i = np.argmin(np.abs(t["x"] - 1.0))
    assert t["x"][i] == 1.0
    assert abs(t["cdf"][i] - (1 - math.exp(-math.sqrt(2)))) < 1e-3
    assert (out / "distributions.svg").exists()
    _, inf = read_table(out / "dist_inf.csv")
    assert np.all(inf["x"] <= 0)


def test_invert_degenerate_atom(tmp_path):
    rc, out = run(tmp_path, "invert", DEGENERATE_DOC)
    assert rc == 0
    head, _ = read_table(out / "dist_sup.csv")
    atom = float(next(h for h in head if h.startswith("atom_at_zero=")).split("=")[1])
    assert atom == pytest.approx(1.0, abs=1e-12)


def test_invert_kou_monotone(tmp_path):
    doc = {**KOU_DOC, "inversion": {"x_max": 20.0, "n_x": 401, "plots": False}}
    rc, out = run(tmp_path, "invert", doc)
    assert rc == 0
    _, t = read_table(out / "dist_sup.csv")
    assert np.all(np.diff(t["cdf"]) >= 0)
    assert abs(t["cdf"][-1] - 1.0) < 1e-3
    assert not (out / "distributions.svg").exists()


def test_verify_bm(tmp_path):
    doc = {**BM_DOC, "mc": {"n_paths": 20_000, "seed": 42, "dt": 1e-3}}
    rc, out = run(tmp_path, "verify", doc)
    assert rc == 0
    v = json.loads((out / "report.json").read_text())["verify"]
    assert v["ks_sup"] < 0.02 and v["passed"]
    head, t = read_table(out / "verify.csv")
    assert head[0] == "levy-extrema verify/1"
    assert np.max(np.abs(t["omega"])) <= 5.0


def test_verify_degenerate_zero_deviation(tmp_path):
    doc = {**DEGENERATE_DOC, "mc": {"n_paths": 500, "seed": 1, "dt": 1e-2}}
    rc, out = run(tmp_path, "verify", doc)
    assert rc == 0
    v = json.loads((out / "report.json").read_text())["verify"]
    assert v["product_deviation"] == 0 and v["ordering_violations"] == 0
    _, t = read_table(out / "verify.csv")
    assert np.all(t["deviation"] == 0)


def test_exit_code_config_error(tmp_path, capsys):
    bad = {**KOU_DOC, "model": {"jumps": {"type": "kou", "lam": 1.0, "p": 0.5, "eta_plus": -2.0,
                                          "eta_minus": 2.0}}}
    rc, _ = run(tmp_path, "factorize", bad)
    assert rc == 2
    err = capsys.readouterr().err
    assert "ConfigError" in err and "model.jumps.eta_plus" in err
    assert "Traceback" not in err


def test_exit_code_model_error(tmp_path, capsys):
    rc, _ = run(tmp_path, "factorize", {**BM_DOC, "method": "kuznetsov-product"})
    assert rc == 2
    assert "ModelError" in capsys.readouterr().err


def test_verify_requires_mc_section(tmp_path):
    rc, _ = run(tmp_path, "verify", BM_DOC)
    assert rc == 2


def test_exit_code_numerical_failure(tmp_path, capsys):
    doc = {**BM_DOC, "inversion": {"x_max": 40.0}}
    rc, _ = run(tmp_path, "invert", doc)
    assert rc == 3
    assert "GridTooCoarse" in capsys.readouterr().err


def test_exit_code_verify_failure(tmp_path):
    doc = {**BM_DOC, "mc": {"n_paths": 2000, "seed": 3, "dt": 1e-2}, "tolerances": {"ks": 1e-6}}
    rc, out = run(tmp_path, "verify", doc)
    assert rc == 4
    v = json.loads((out / "report.json").read_text())["verify"]
    assert not v["checks"]["ks_sup"] and not v["passed"]


def test_flags_override_config(tmp_path):
    doc = {**BM_DOC, "grid": {"omega": 100.0, "n_points": 8192}}
    rc, out = run(tmp_path, "factorize", doc, "--omega", "200", "--n-points", "16384", "--method", "hilbert")
    assert rc == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["grid"] == {"omega": 200.0, "n_points": 16384}
    assert rep["method"] == "hilbert"


def test_outputs_byte_identical(tmp_path):
    doc = {**KOU_DOC, "mc": {"n_paths": 3000, "seed": 77, "dt": 1e-2, "block_size": 500,
                             "export_samples": True}}
    _, a = run(tmp_path, "verify", doc, "--workers", "1", name="a")
    _, b = run(tmp_path, "verify", doc, "--workers", "3", name="b")
    for f in ("phi.csv", "dist_sup.csv", "dist_inf.csv", "verify.csv", "samples.csv",
              "report.json", "distributions.svg"):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_console_script(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump(DEGENERATE_DOC))
    proc = subprocess.run([sys.executable, "-m", "levy_extrema.cli", "factorize", "--config", str(cfg),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    missing = subprocess.run([sys.executable, "-m", "levy_extrema.cli", "factorize", "--config",
                              str(tmp_path / "nope.yaml")], capture_output=True, text=True)
    assert missing.returncode == 2 and "ConfigError" in missing.stderr


@pytest.mark.parametrize("doc,field", [
    ({"model": {"sigma": -1.0}, "kill": {"q": 1.0}}, "model.sigma"),
    ({"model": {}, "kill": {"q": 0.0}}, "kill.q"),
    ({"model": {}, "kill": {"type": "geometric", "q": 1.5}}, "kill.q"),
    ({"model": {}, "kill": {}}, "kill.q"),
    ({"model": {"jumps": {"type": "sech", "alpha": 1.2}}, "kill": {"q": 1.0}}, "model.jumps.alpha"),
    ({"model": {"jumps": {"type": "levy"}}, "kill": {"q": 1.0}}, "model.jumps.type"),
    ({"model": {}, "kill": {"q": 1.0}, "grid": {"n_points": 1000}}, "grid"),
    ({"model": {}, "kill": {"q": 1.0}, "method": "magic"}, "method"),
    ({"model": {}, "kill": {"q": 1.0}, "mc": {"n_paths": 10}}, "mc.seed"),
    ({"model": {}, "kill": {"q": 1.0}, "colour": "red"}, "config.colour"),
])
def test_config_field_paths(doc, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    assert str(exc.value).startswith(field)
