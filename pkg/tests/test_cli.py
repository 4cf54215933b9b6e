import json
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hilbertkin.cli import dispatch, main
from hilbertkin.config import ConfigError, RunConfig, emit_config, parse_config
from hilbertkin.output import read_snapshot


def test_defaults():
    cfg = parse_config("[scenario]\nname = heat\n")
    assert cfg.dx == pytest.approx(1 / 128)
    assert cfg.T == pytest.approx(0.1)
    assert cfg.eps == (0.2, 0.1, 0.05, 0.025)


def test_theta_sat_negative():
    with pytest.raises(ConfigError, match="theta_sat must be positive"):
        parse_config("[scenario]\nname = oncolytic\n[parameters]\ntheta_sat = -1\n")


def test_b3_rejected():
    with pytest.raises(ConfigError, match="species 3 admits no perturbation order"):
        parse_config("[scenario]\nname = ks_virus\n[scaling]\nb3 = 1\n")


@pytest.mark.parametrize("text,match", [
    ("[grid]\ncel = 4\n", "unknown key"),
    ("[gird]\ncells = 4\n", "unknown section"),
    ("[parameters]\nDD = 1\n", "unknown parameter"),
    ("[scenario]\nname = nope\n", "unknown scenario"),
    ("[grid]\ncells = 2\n", "at least 3"),
    ("[grid]\ndx = 0.3\n", "divide"),
    ("[time]\nT = -1\n", "positive"),
    ("[time]\nT = 0.1\noutputs = 0.2\n", "outputs"),
    ("[sweep]\neps = 0.1, -0.2\n", "positive"),
    ("[velocity]\nnodes = 8.5\n", "integer"),
    ("not ini", "malformed"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_dx_key():
    assert parse_config("[grid]\ndx = 0.015625\n").cells == 64


def test_roundtrip_full():
    text = """
[scenario]
name = oncolytic
model = hand
[parameters]
theta_sat = 0.3
xi1 = 0.123456789012345
[velocity]
nodes = 24
radius = 1.5
[scaling]
q = 2
b1 = 2
[grid]
dim = 2
cells = 40
length = 2.0
boundary = reflecting
[time]
T = 0.3
outputs = 0.1, 0.3
[sweep]
eps = 0.3, 0.15, 0.075
[output]
dir = results
"""
    cfg = parse_config(text)
    assert parse_config(emit_config(cfg)) == cfg


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["heat", "ks_virus", "forager"]),
       st.floats(0.01, 10.0, allow_nan=False), st.integers(3, 512),
       st.lists(st.floats(1e-4, 1.0), min_size=1, max_size=5),
       st.sampled_from(["periodic", "reflecting"]))
def test_roundtrip_property(name, T, cells, eps, bc):
    key = {"heat": "D", "ks_virus": "D1", "forager": "D"}[name]
    cfg = RunConfig(scenario=name, params=((key, T),), cells=cells, T=T, eps=tuple(eps), boundary=bc)
    assert parse_config(emit_config(cfg)) == cfg


@pytest.fixture
def cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_derive_oncolytic(cwd):
    (cwd / "c.ini").write_text("[scenario]\nname = oncolytic\n")
    assert main(["derive", "--config", "c.ini", "--out", "o"]) == 0
    text = (cwd / "o" / "derivation.txt").read_text()
    for i in range(1, 5):
        assert f"d_t u_{i} =" in text
    assert "chi_1,3 = 1.000000000000e-01 I" in text
    model = json.loads((cwd / "o" / "model.json").read_text())
    assert len(model["species"]) == 4 and model["species"][2]["diffusion"] is None


def test_validate_oncolytic(cwd):
    (cwd / "c.ini").write_text("[scenario]\nname = oncolytic\n")
    assert main(["validate", "--config", "c.ini", "--out", "o"]) == 0
    text = (cwd / "o" / "validation.txt").read_text()
    assert "FAIL" not in text
    for line in text.splitlines():
        if "residual=" in line:
            assert float(line.split("residual=")[1].split()[0]) <= 1e-10


def test_run_macro_artifacts_bit_identical(cwd):
    (cwd / "c.ini").write_text("[scenario]\nname = forager\n[grid]\ncells = 32\n[time]\nT = 0.05\noutputs = 0.02, 0.05\n")
    assert main(["run-macro", "--config", "c.ini", "--out", "a"]) == 0
    assert main(["run-macro", "--config", "c.ini", "--out", "b"]) == 0
    files = sorted(os.listdir(cwd / "a"))
    assert "macro_t0.020000.csv" in files and "macro_t0.050000.csv" in files
    for f in files:
        if f.endswith(".csv"):
            assert (cwd / "a" / f).read_bytes() == (cwd / "b" / f).read_bytes()
    header = (cwd / "a" / "macro_t0.050000.csv").read_text().splitlines()[0]
    assert header == "x,u_1,u_2,u_3"
    x, u = read_snapshot(cwd / "a" / "macro_t0.050000.csv")
    assert u.shape == (3, 32)
    row = (cwd / "a" / "macro_t0.050000.csv").read_text().splitlines()[1].split(",")
    assert all(len(v.split("e")[0].replace("-", "").replace(".", "")) == 12 for v in row)


def test_run_macro_from_model_file(cwd):
    (cwd / "c.ini").write_text("[scenario]\nname = invasion\n[grid]\ncells = 16\n[time]\nT = 0.02\n")
    assert main(["derive", "--config", "c.ini", "--out", "d"]) == 0
    (cwd / "m.ini").write_text("[scenario]\nname = invasion\nmodel = d/model.json\n[grid]\ncells = 16\n[time]\nT = 0.02\n")
    assert main(["run-macro", "--config", "m.ini", "--out", "m"]) == 0
    assert main(["run-macro", "--config", "c.ini", "--out", "c"]) == 0
    _, a = read_snapshot(cwd / "m" / "macro_t0.020000.csv")
    _, b = read_snapshot(cwd / "c" / "macro_t0.020000.csv")
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_run_kinetic_eps_flag(cwd):
    (cwd / "c.ini").write_text("[grid]\ncells = 32\n[time]\nT = 0.01\n")
    assert main(["run-kinetic", "--config", "c.ini", "--out", "k", "--eps", "0.1,0.05"]) == 0
    names = sorted(f for f in os.listdir(cwd / "k") if f.endswith(".csv"))
    assert len(names) == 2 and all(n.startswith("kinetic_eps") for n in names)


def test_sweep_heat(cwd, capsys):
    (cwd / "c.ini").write_text("[grid]\ncells = 64\n[time]\nT = 0.05\n")
    assert main(["sweep", "--config", "c.ini", "--out", "s", "--eps", "0.2,0.1,0.05"]) == 0
    assert (cwd / "s" / "sweep.csv").read_text().startswith("eps,species,err_l1,err_linf\n")
    assert "result: PASS" in capsys.readouterr().out


def test_exit_codes(cwd):
    (cwd / "bad.ini").write_text("[scenario]\nname = oncolytic\n[parameters]\ntheta_sat = -1\n")
    assert main(["derive", "--config", "bad.ini", "--out", "o"]) == 1
    assert main(["derive", "--config", "missing.ini"]) == 1
    (cwd / "neg.ini").write_text("[scenario]\nname = flux_limited\n[grid]\ncells = 16\n[time]\nT = 0.01\n")
    # kinetic 2D space is rejected as a configuration problem
    (cwd / "k2.ini").write_text("[grid]\ndim = 2\ncells = 8\n")
    assert main(["run-kinetic", "--config", "k2.ini", "--out", "o"]) == 1


def test_numerical_failure_exit_code(cwd, monkeypatch):
    from hilbertkin import presets
    real = presets.make_scenario

    def broken(*a, **k):
        sc = real(*a, **k)
        sc.initial = lambda x: -np.ones((sc.n,) + np.shape(x))
        return sc

    monkeypatch.setattr("hilbertkin.cli.make_scenario", broken)
    (cwd / "c.ini").write_text("[grid]\ncells = 8\n[time]\nT = 0.01\n")
    assert main(["run-macro", "--config", "c.ini", "--out", "o"]) == 2
    assert dispatch("run-kinetic", parse_config((cwd / "c.ini").read_text()), "o2") == 2
