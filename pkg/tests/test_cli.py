import json
from fractions import Fraction as F

import pytest

from anonet.cli import main, parse_graph_arg, parse_inputs
from anonet.graph import graph_to_json, star_bidirectional
from anonet.matrix import all_pass, dynamic_matrix, static_matrix
from anonet.scenarios import (EXIT_FAILED, EXIT_INVALID, EXIT_OK, Scenario, ScenarioError, bundled_names,
                              load_scenario, run_scenario)


@pytest.mark.parametrize("name", bundled_names())
def test_bundled_scenarios_pass(name):
    res = run_scenario(load_scenario(name))
    assert res.exit_code == EXIT_OK
    assert res.verdict in ("stabilized", "converged")


def test_star_average_scenario_value():
    res = run_scenario(load_scenario("star-average-od"))
    assert res.value == F(7, 3) and res.round <= 5


def test_pushsum_scenario_converges():
    res = run_scenario(load_scenario("ring-pushsum-exact"))
    assert res.verdict == "converged" and res.target == F(4, 5)


def scenario_file(tmp_path, **fields):
    base = {"name": "x", "model": "od", "graph": {"generator": "star-bidirectional", "n": 3},
            "inputs": [1, 2, 3], "algorithm": "static", "function": "max", "rounds": 6}
    base.update(fields)
    p = tmp_path / "s.json"
    p.write_text(json.dumps(base))
    return str(p)


def test_symmetric_on_directed_ring_is_invalid(tmp_path, capsys):
    p = scenario_file(tmp_path, model="sym", graph={"generator": "directed-ring", "n": 3})
    assert main(["run", p]) == EXIT_INVALID
    assert "bidirectional" in capsys.readouterr().err


def test_unknown_fields_rejected(tmp_path):
    p = scenario_file(tmp_path, colour="blue")
    with pytest.raises(ScenarioError):
        load_scenario(p)
    assert main(["run", p]) == EXIT_INVALID


@pytest.mark.parametrize("fields", [{"mode": "quantum"}, {"rounds": -1}, {"metric": "hamming"},
                                    {"inputs": [1, 2]}, {"function": None}])
def test_invalid_scenarios(tmp_path, fields):
    assert main(["run", scenario_file(tmp_path, **fields)]) == EXIT_INVALID


def test_wrong_expectation_fails(tmp_path):
    assert main(["run", scenario_file(tmp_path, expect="4")]) == EXIT_FAILED
    assert main(["run", scenario_file(tmp_path, expect="3")]) == EXIT_OK


def test_run_writes_reports(tmp_path):
    out = tmp_path / "out"
    assert main(["run", scenario_file(tmp_path), "--out", str(out)]) == EXIT_OK
    assert any(out.rglob("*"))


def test_scenario_dataclass_validation():
    with pytest.raises(ScenarioError):
        Scenario.from_json({"name": "x"})


def test_static_matrix_cells():
    table = static_matrix()
    assert all_pass(table)
    assert table["none"]["outdegree-aware"].claim == "frequency-based"
    assert table["leaders"]["outdegree-aware"].claim == "multiset-based"
    assert table["none"]["simple-broadcast"].claim == "set-based"


def test_dynamic_matrix_cells():
    table = dynamic_matrix()
    assert table["none"]["outdegree-aware"].status == "open in paper"
    assert table["bound"]["outdegree-aware"].status == "pass"
    assert table["none"]["simple-broadcast"].status == "pass"


def test_matrix_command(capsys):
    assert main(["matrix", "--family", "static", "--json"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["n"]["outdegree-aware"]["status"] == "pass"


def test_minbase_command(tmp_path, capsys):
    p = tmp_path / "star.json"
    p.write_text(json.dumps(graph_to_json(star_bidirectional(3))))
    assert main(["minbase", str(p), "--model", "od"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["base"]["n"] == 2
    assert sorted(data["z"]) == [1, 2]
    assert sorted(len(f) for f in data["fibres"]) == [1, 2]


def test_static_compute_command(capsys):
    rc = main(["static-compute", "--model", "od", "--function", "average",
               "--graph", "star-bidirectional:n=3", "--inputs", "5,1,1"])
    out = capsys.readouterr().out
    assert rc == EXIT_OK and '"target": "7/3"' in out


def test_static_compute_with_leader(capsys):
    rc = main(["static-compute", "--model", "od", "--function", "sum", "--help-mode", "leaders=1",
               "--graph", "bidirectional-ring:n=4", "--inputs", "1,1,2,3", "--leaders", "1"])
    assert rc == EXIT_OK


def test_pushsum_command(capsys):
    assert main(["pushsum", "--graph", "complete:n=3", "--inputs", "3,0,0", "--eps", "1/1000"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["target"] == "1" and data["mass_conserved"]


def test_pushsum_frequency_command(tmp_path):
    csv_path = tmp_path / "t.csv"
    rc = main(["pushsum", "--function", "frequency", "--help-mode", "bound=4",
               "--graph", "bidirectional-ring:n=4,self_loops=true", "--inputs", "a,a,b,b", "--csv", str(csv_path)])
    assert rc == EXIT_OK and csv_path.read_text().startswith("round")


def test_cli_rejects_bad_graph_spec():
    assert main(["static-compute", "--model", "od", "--function", "max", "--graph", "ring",
                 "--inputs", "1"]) == EXIT_INVALID
    assert main(["run", "no-such-scenario"]) == EXIT_INVALID


def test_argument_parsers():
    assert parse_inputs("1/2, a, 3:2") == [F(1, 2), "a", (F(3), F(2))]
    g = parse_graph_arg("bidirectional-ring:n=5,seed=3,self_loops=true")
    assert g.n == 5 and g.has_self_loops()
