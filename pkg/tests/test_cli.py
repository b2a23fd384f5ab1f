from __future__ import annotations

import json

import numpy as np
import pytest

from mreelab.cli import main, run_command
from mreelab.config import Config
from mreelab.economy import EconomyError
from mreelab.generate import random_economy, two_state_edgeworth
from mreelab.specfile import (
    SpecSyntaxError,
    economy_from_dict,
    economy_to_dict,
    parse_economy,
    serialize,
)


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


@pytest.mark.parametrize("seed", range(10))
def test_round_trip_random(seed, tmp_path):
    E = random_economy(seed)
    assert parse_economy(write(tmp_path, "e.json", serialize(E))) == E


def test_round_trip_overrides_and_priors(tmp_path):
    E = two_state_edgeworth()
    doc = economy_to_dict(E)
    assert "overrides" in doc["agents"][0]["utility"]
    for ag in doc["agents"]:
        ag["prior"] = {"1": 0.25, "2": 0.75}
    E2 = economy_from_dict(json.loads(json.dumps(doc)))
    assert E2.priors.tolist() == [[0.25, 0.75]] * 2
    assert economy_from_dict(economy_to_dict(E2)) == E2


def test_minimal_spec(specs_dir):
    E = parse_economy(specs_dir / "minimal.json")
    assert (E.goods, E.n_states, E.n_agents) == (1, 1, 1)


def base_doc():
    return {
        "goods": 2,
        "states": [{"id": "a", "prob": 0.5}, {"id": "b", "prob": 0.5}],
        "agents": [{"id": 1, "weight": 1.0, "partition": [["a"], ["b"]],
                    "utility": {"family": "linear", "params": {"coef": [1, 2]}},
                    "endowment": {"a": [1, 1], "b": [1, 2]}}],
    }


@pytest.mark.parametrize("edit,path", [
    (lambda d: d["states"][1].update(prob=0.6), "states.prob"),
    (lambda d: d["agents"][0]["endowment"]["b"].__setitem__(0, -1), "agents[0].endowment.b[0]"),
    (lambda d: d["agents"][0].update(partition=[["a"]]), "agents[0].partition"),
    (lambda d: d["agents"][0].update(partition=[["a", "c"], ["b"]]), "agents[0].partition"),
    (lambda d: d["agents"][0]["utility"].update(family="quad"), "agents[0].utility.family"),
    (lambda d: d["agents"][0]["utility"]["params"].update(coef=[1]), "agents[0].utility.params.coef"),
    (lambda d: d["agents"][0]["endowment"].pop("b"), "agents[0].endowment"),
])
def test_semantic_errors_carry_paths(edit, path):
    doc = base_doc()
    economy_from_dict(doc)
    edit(doc)
    with pytest.raises(EconomyError) as err:
        economy_from_dict(doc)
    assert err.value.path == path


def test_syntax_error_line_and_column(tmp_path):
    with pytest.raises(SpecSyntaxError) as err:
        parse_economy(write(tmp_path, "bad.json", '{"goods": 2,\n  "states": [,]}'))
    assert (err.value.line, err.value.column) == (2, 14)


def test_validate_command(specs_dir, capsys):
    assert main(["validate", str(specs_dir / "minimal.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "pass"
    assert out["config"] == Config().to_dict()


def test_ree_command_reports_prices(specs_dir, capsys):
    assert main(["ree", str(specs_dir / "edgeworth.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    cert = out["result"]["certificate"]
    assert cert["verdict"] == "pass"
    assert np.allclose(cert["prices"][0], [5 / 9, 4 / 9], atol=1e-9)


def test_verify_round_trip_and_tamper(specs_dir, tmp_path, capsys):
    sol = tmp_path / "sol.json"
    spec = str(specs_dir / "two_state.json")
    assert main(["ree", spec, "--out", str(sol)]) == 0
    capsys.readouterr()
    assert main(["verify", spec, "--solution", str(sol)]) == 0
    capsys.readouterr()
    doc = json.loads(sol.read_text())
    assert doc["schema_version"] == 1
    doc["allocation"]["informed"]["bad"][0] += 0.1
    bad = write(tmp_path, "tampered.json", doc)
    assert main(["verify", spec, "--solution", bad]) == 1
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "fail"
    assert out["result"]["certificate"]["checks"]["clearing"] is False


def test_exit_codes(tmp_path, specs_dir, capsys):
    doc = base_doc()
    doc["states"][1]["prob"] = 0.6
    assert main(["solve", write(tmp_path, "p.json", doc)]) == 2
    assert main(["solve", write(tmp_path, "s.json", "{")]) == 2
    assert main(["verify", str(specs_dir / "edgeworth.json")]) == 2
    assert main(["solve", str(specs_dir / "edgeworth.json"), "--max-iter", "1"]) == 3
    with pytest.raises(SystemExit) as err:
        main(["frobnicate", "x.json"])
    assert err.value.code == 2


def test_aggregate_set_and_probe(specs_dir, capsys):
    spec = str(specs_dir / "edgeworth.json")
    assert main(["aggregate-set", spec, "--resolution", "0.1", "--price", "0.5,0.5"]) == 0
    out = json.loads(capsys.readouterr().out)["result"]
    assert out["n_points"] == len(out["points"]) > 0
    assert main(["probe-continuity", spec, "--resolution", "0.01", "--steps", "4",
                 "--format", "text"]) == 0
    text = capsys.readouterr().out
    assert "distances:" in text and "tol_clear" in text


def test_reports_are_deterministic(specs_dir):
    spec = str(specs_dir / "linear_mixed.json")
    a = run_command("ree", spec, Config())
    b = run_command("ree", spec, Config(parallel=True))
    assert json.dumps(a.numeric()["result"]) == json.dumps(b.numeric()["result"])
