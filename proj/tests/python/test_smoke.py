import json

import numpy as np
import pytest

import spdope

SMALL = {
    "grid": {"N": 16, "L": 16.0},
    "params": {"p": 2.2, "e": 0.3},
    "profile": {"type": "gaussian", "epsilon": 0.1, "alpha": 1.0},
    "minimize": {"mu": 96.0, "grad_tol": 1e-5, "restarts": 1},
}


def test_version():
    assert spdope.__version__.count(".") == 2


def test_config_roundtrip_and_errors():
    c = spdope.config(SMALL)
    assert c["grid"]["N"] == 16
    assert spdope.config(c) == c
    assert spdope.config_hash(c) == spdope.config_hash(SMALL)
    assert spdope.config(SMALL, params__e=0.5)["params"]["e"] == 0.5
    with pytest.raises(spdope.ConfigError, match="params.e"):
        spdope.config(SMALL, params__e=-1.0)
    with pytest.raises(spdope.ConfigError, match="grid.M"):
        spdope.config({"grid": {"M": 3}})
    toml = "[grid]\nN = 24\nL = 8.0\n"
    assert spdope.config(toml)["grid"]["L"] == 8.0


def test_minimize_and_energy():
    r = spdope.minimize(SMALL)
    assert r.converged
    assert r.c < 0 and r.omega > 0
    assert r.u.shape == (16, 16, 16)
    h3 = 1.0
    assert np.sum(np.abs(r.u) ** 2) * h3 == pytest.approx(96.0, rel=1e-12)
    b = spdope.energy(r.u, SMALL)
    assert b["E"] == pytest.approx(r.c, rel=1e-12)
    rho = spdope.sample_rho(SMALL)
    assert rho.shape == (16, 16, 16)
    assert rho[8, 8, 8] == pytest.approx(0.1)


def test_field_io(tmp_path):
    rng = np.random.default_rng(1)
    a = rng.standard_normal((8, 8, 8)) + 1j * rng.standard_normal((8, 8, 8))
    path = tmp_path / "a.field"
    spdope.write_field(path, a, 4.0)
    b, L = spdope.read_field(path)
    assert L == 4.0
    assert np.array_equal(a, b)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(spdope.FieldIoError):
        spdope.read_field(path)


def test_ball_geometry():
    g = spdope.ball_geometry([0, 0, 0], 1.0)
    assert abs(g["d_omega"] - 10.873) < 1e-3
    assert g["kappa2"] == 1.0


def test_cli_in_process(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("[grid]\nN = 16\nL = 16.0\n[params]\ne = 0.3\n[minimize]\nmu = 96\ngrad_tol = 1e-5\n")
    out = tmp_path / "out"
    assert spdope.run("profile-info", "--config", cfg, "--output", out, "--quiet") == 0
    assert json.loads((out / "profile.json").read_text())["profile"]["type"] == "zero"
    assert spdope.run("minimize", "--config", cfg, "--output", out, "--quiet", "--set", "params.p=9") == 2
    assert json.loads((out / "error.json").read_text())["key"] == "params.p"
