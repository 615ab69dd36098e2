"""Command-line driver."""

import json

import pandas as pd
import pytest

from conftest import chain_graph
from graphipm.cli.main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, build_parser, main
from graphipm.cli.run import RESULT_COLUMNS
from graphipm.instances import bundled_fixture
from graphipm.serialize import write_graph


@pytest.fixture
def chain_file(tmp_path):
    return write_graph(chain_graph(6, cycle=True), tmp_path / "chain.json")


def run_json(capsys, argv):
    code = main(["--json", *argv])
    return code, json.loads(capsys.readouterr().out)


def test_parser_lists_every_command():
    parser = build_parser()
    text = parser.format_help()
    for name in ("run", "bench", "partition", "validate"):
        assert name in text


def test_missing_command_is_a_usage_error(capsys):
    assert main([]) == EXIT_USAGE


@pytest.mark.parametrize("argv", [
    ["run", "--generate", "gas", "--K", "0"],
    ["run", "--generate", "gas", "--horizon", "1"],
    ["run", "--generate", "gas", "--threads", "0"],
    ["run"],
])
def test_invalid_configuration(capsys, argv, tmp_path):
    code, payload = run_json(capsys, [*argv, "--out", str(tmp_path)])
    assert code == EXIT_USAGE
    assert payload["status"] == "error"
    assert payload["data"] is None
    assert "Invalid configuration" in payload["error"]


def test_bad_omega_is_rejected_by_the_parser(capsys):
    assert main(["run", "--generate", "gas", "--omega", "wide"]) == EXIT_USAGE


def test_run_writes_artifacts(capsys, chain_file, tmp_path):
    out = tmp_path / "out"
    code, payload = run_json(capsys, ["run", "--instance", str(chain_file), "--linear-solver", "ras",
                                      "--K", "3", "--threads", "1", "--out", str(out)])
    assert code == EXIT_OK
    assert payload["status"] == "success"
    result = payload["data"]["result"]
    assert result["status"] == "optimal" and result["K"] == 3
    for name in ("iterations.log", "solution.json", "partition.txt", "run.csv"):
        assert (out / name).exists()
    log_lines = (out / "iterations.log").read_text().splitlines()
    assert log_lines[0].startswith("iter")
    solution = json.loads((out / "solution.json").read_text())
    assert solution["kind"] == "solution" and len(solution["nodes"]) == 6
    assert "x[0,1]" in solution["nodes"][0]["primal"]
    frame = pd.read_csv(out / "run.csv")
    assert list(frame.columns) == RESULT_COLUMNS and len(frame) == 1


def test_repeated_runs_append_rows(capsys, chain_file, tmp_path):
    argv = ["run", "--instance", str(chain_file), "--threads", "1", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    assert main(argv) == EXIT_OK
    capsys.readouterr()
    assert len(pd.read_csv(tmp_path / "run.csv")) == 2
    assert not (tmp_path / "partition.txt").exists()


def test_solver_failure_exits_one(capsys, chain_file, tmp_path):
    code, payload = run_json(capsys, ["run", "--instance", str(chain_file), "--max-iter", "1",
                                      "--out", str(tmp_path)])
    assert code == EXIT_FAILURE
    assert payload["data"]["result"]["status"] == "max_iter"


def test_text_output(capsys, chain_file, tmp_path):
    assert main(["run", "--instance", str(chain_file), "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Status: optimal" in out


def test_partition(capsys, chain_file, tmp_path):
    code, payload = run_json(capsys, ["partition", "--instance", str(chain_file), "--K", "2",
                                      "--omega", "1", "--out", str(tmp_path)])
    assert code == EXIT_OK
    data = payload["data"]
    assert data["K"] == 2 and data["omegas"] == [1, 1]
    assert sorted(v for part in data["parts"] for v in part) == list(range(1, 7))
    assert (tmp_path / "partition.txt").read_text().startswith("# subdomains K=2")


def test_partition_too_many_parts(capsys, chain_file, tmp_path):
    code, payload = run_json(capsys, ["partition", "--instance", str(chain_file), "--K", "7",
                                      "--out", str(tmp_path)])
    assert code == EXIT_FAILURE
    assert payload["error"].startswith("TooManyParts")


def test_validate(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "gas", "version": 1, "junctions": []}))
    code, payload = run_json(capsys, ["validate", str(bundled_fixture("gas")), str(bad)])
    assert code == EXIT_FAILURE
    results = payload["data"]
    assert results[str(bundled_fixture("gas"))]["valid"]
    assert not results[str(bad)]["valid"]
    assert main(["validate", str(bundled_fixture("power"))]) == EXIT_OK


def test_bench_two_strategies(capsys, chain_file, tmp_path):
    code, payload = run_json(capsys, ["bench", "--instance", str(chain_file), "--horizons", "6",
                                      "--strategies", "direct", "ras:gmres", "--K", "2",
                                      "--threads", "1", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert payload["data"]["failures"] == 0
    frame = pd.read_csv(tmp_path / "bench.csv")
    assert len(frame) == 2 and (frame["status"] == "optimal").all()
    assert list(frame["linear_solver"]) == ["direct", "ras"]
    assert (tmp_path / "bench.svg").read_text().lstrip().startswith("<?xml")
    assert (tmp_path / "chain-T6-direct" / "iterations.log").exists()
    assert (tmp_path / "chain-T6-ras-gmres-K2" / "iterations.log").exists()


def test_bench_keeps_rows_of_a_failed_config(capsys, chain_file, tmp_path):
    (tmp_path / "chain-T6-direct").write_text("not a directory")
    code, payload = run_json(capsys, ["bench", "--instance", str(chain_file), "--horizons", "6",
                                      "--strategies", "direct", "ras:gmres", "--K", "2",
                                      "--threads", "1", "--out", str(tmp_path)])
    assert code == EXIT_FAILURE
    assert payload["data"]["failures"] == 1
    frame = pd.read_csv(tmp_path / "bench.csv")
    assert list(frame["status"]) == ["error: FileExistsError", "optimal"]
    assert (tmp_path / "chain-T6-ras-gmres-K2" / "solution.json").exists()
    assert (tmp_path / "bench.svg").exists()


def test_bench_single_config(capsys, chain_file, tmp_path):
    code, payload = run_json(capsys, ["bench", "--instance", str(chain_file), "--horizons", "6",
                                      "--strategies", "direct", "--threads", "1", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert payload["data"]["failures"] == 0
    frame = pd.read_csv(tmp_path / "bench.csv")
    assert len(frame) == 1 and frame.loc[0, "status"] == "optimal"
    assert (tmp_path / "bench.svg").read_text().lstrip().startswith("<?xml")
