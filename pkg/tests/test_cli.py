import numpy as np
import pytest

from optstop.cli import main
from optstop.paths import read_batch

GBM_CFG = """
model.kind = gbm
model.s0 = 36
model.r = 0.06
model.sigma = 0.2
model.maturity = 1
model.steps = 10
payoff.kind = put
payoff.strike = 40
approx.basis = monomials
approx.degree = 2
approx.scale = 40
approx.H = 40
run.n = 2000
run.eval_n = 2000
run.seed = 3
run.schedule = ls
oracle.steps = 500
"""

CHAIN_CFG = """
model.kind = chain
model.states = 0; 1; 2
model.transition = 0.5,0.5,0; 0.2,0.3,0.5; 0,0.5,0.5
model.initial = 1,0,0
model.steps = 3
payoff.kind = table
payoff.table = f.csv
approx.basis = indicator
approx.H = 10
study.id = demo
study.n = 200,400
study.seeds = 1,2
study.eval_n = 500
study.schedules = ls; tvr; constant:1
"""

BOUNDS_CFG = """
bounds.d = 2
bounds.w = 1
bounds.beta = 3
bounds.n = 100000
bounds.eps = 0.5
"""


def write(tmp_path, text, name="c.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.fixture
def chain_cfg(tmp_path):
    rows = ["t,state,value"] + [f"{t},{s},{(s + 1) * (t % 2 + 1) / 3}" for t in range(4) for s in range(3)]
    (tmp_path / "f.csv").write_text("\n".join(rows) + "\n")
    return write(tmp_path, CHAIN_CFG)


def test_simulate_fit_price(tmp_path, capsys):
    cfg = write(tmp_path, GBM_CFG)
    out = str(tmp_path / "out")
    assert main(["simulate", "--config", cfg, "--out", out]) == 0
    batch = read_batch(tmp_path / "out" / "paths.bin")
    assert (batch.n, batch.T, batch.seed) == (2000, 10, 3)
    assert main(["fit", "--config", cfg, "--out", out]) == 0
    assert (tmp_path / "out" / "fitted.txt").exists()
    assert main(["price", "--config", cfg, "--out", out]) == 0
    assert "price" in capsys.readouterr().out
    assert main(["price", "--config", cfg, "--out", out, "--seed", "3"]) == 1
    assert "random stream" in capsys.readouterr().err


def test_oracle_commands(tmp_path, chain_cfg, capsys):
    assert main(["oracle", "--config", write(tmp_path, GBM_CFG, "g.cfg"), "--out", str(tmp_path)]) == 0
    value = float(capsys.readouterr().out.split()[-1])
    assert 4.0 < value < 4.6
    assert main(["oracle", "--config", chain_cfg, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "oracle.csv").read_text().splitlines()
    assert lines[0] == "t,state,q,v,stop" and len(lines) == 13


def test_bounds_command(tmp_path, capsys):
    assert main(["bounds", "--config", write(tmp_path, BOUNDS_CFG), "--out", str(tmp_path)]) == 0
    assert "c_w" in capsys.readouterr().out
    assert (tmp_path / "bounds.csv").read_text().startswith("name,value\n")


def test_study_command(tmp_path, chain_cfg):
    out = tmp_path / "s"
    assert main(["study", "--config", chain_cfg, "--out", str(out), "--threads", "3"]) == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0].startswith("# generated")
    assert len(lines) == 2 + 3 * 2 * 2
    assert lines[1].split(",")[:3] == ["study_id", "model", "schedule"]


@pytest.mark.parametrize("edit, code", [
    (lambda t: t.replace("study.n = 200,400", "study.n ="), 1),
    (lambda t: t.replace("study.n = 200,400", "study.n = 400,200"), 1),
    (lambda t: t.replace("model.initial = 1,0,0", "model.initial = 1,1,0"), 1),
    (lambda t: t.replace("study.schedules = ls; tvr; constant:1", "study.schedules = custom:2,2,0"), 1),
    (lambda t: t.replace("payoff.table = f.csv", "payoff.table = missing.csv"), 2),
])
def test_exit_codes(tmp_path, chain_cfg, edit, code):
    cfg = write(tmp_path, edit(open(chain_cfg).read()), "bad.cfg")
    assert main(["study", "--config", cfg, "--out", str(tmp_path / "o")]) == code


def test_missing_config_is_validation_error(tmp_path):
    assert main(["bounds", "--config", str(tmp_path / "nope.cfg")]) == 1
