import json

import pytest

import cli
from config import Config
from services.brooms import from_out_regular
from services.digraph import complete, cycle
from services.serialization import broom_digraph_to_json

SINK = '{"n": 3, "arcs": [[0, 2], [1, 2]]}'
CYCLE = '{"n": 3, "arcs": [[0, 1], [1, 2], [2, 0]]}'


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_recognize_inline(capsys):
    code, body = run(capsys, "recognize", "--tree", SINK)
    assert code == cli.EXIT_OK
    assert body["result"]["max_grounded"] is True


def test_tree_from_file(capsys, tmp_path):
    path = tmp_path / "tree.json"
    path.write_text(SINK)
    code, body = run(capsys, "recognize", "--tree", str(path))
    assert code == cli.EXIT_OK
    assert body["result"]["G"] == [2]


def test_rejected_broom_exits_one(capsys):
    code, body = run(capsys, "validate-broom", "--tree", '{"n": 4, "arcs": [[0, 1], [0, 2], [0, 3]]}',
                     "--root", "0", "-k", "1", "-d", "2")
    assert code == cli.EXIT_FAILED
    assert body["validators_passed"] is False


def test_invalid_input_exits_two(capsys):
    code, body = run(capsys, "trim", "--digraph", CYCLE, "-d", "2")
    assert code == cli.EXIT_INVALID
    assert body["success"] is False


def test_missing_file_exits_two(capsys, tmp_path):
    code, body = run(capsys, "recognize", "--tree", str(tmp_path / "absent.json"))
    assert code == cli.EXIT_INVALID


def test_pipeline_failure_exits_one(capsys):
    bundle = json.dumps(broom_digraph_to_json(from_out_regular(cycle(3), 1)))
    params = '{"p_keep": 1.0, "outdeg_floor": 0, "indeg_root_threshold": 2, "broom_target": 1}'
    code, body = run(capsys, "subsample", "--broom-digraph", bundle, "--params", params)
    assert code == cli.EXIT_FAILED
    assert body["error"]["step"] == "roots"


def test_sample_only(capsys):
    bundle = json.dumps(broom_digraph_to_json(from_out_regular(complete(4), 1)))
    params = '{"p_keep": 1.0, "outdeg_floor": 1, "indeg_root_threshold": 2, "broom_target": 1}'
    code, body = run(capsys, "subsample", "--broom-digraph", bundle, "--params", params, "--sample-only")
    assert code == cli.EXIT_OK
    assert body["result"]["arcs_kept"] == 12


def test_validate_broom_digraph(capsys):
    bundle = broom_digraph_to_json(from_out_regular(complete(3), 2))
    code, body = run(capsys, "validate-broom-digraph", "--digraph", json.dumps(bundle["digraph"]),
                     "--certificate", json.dumps(bundle["certificate"]))
    assert code == cli.EXIT_OK
    assert body["result"]["degree_lemma_violations"] == []


def test_gen_writes_output_file(capsys, tmp_path):
    out = tmp_path / "gen.json"
    code = cli.main(["-o", str(out), "gen", "broom", "--params", '{"k": 1, "d": 2, "ell": 1}'])
    assert code == cli.EXIT_OK
    assert capsys.readouterr().out == ""
    body = json.loads(out.read_text())
    assert body["result"]["output"]["ell"] == 1


def test_estimate_dk(capsys):
    code, body = run(capsys, "estimate-dk", "-k", "2", "-d", "0", "1", "-n", "5", "--trials", "1")
    assert code == cli.EXIT_OK
    assert body["result"]["verdict"]["lower_bound"] == 1


def test_run_grid(capsys, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"base": {"k": 1, "n": 3, "trials": 1}, "grid": {"d_values": [[0], [1, 2]]}}))
    code, body = run(capsys, "run-grid", str(grid))
    assert code == cli.EXIT_OK
    assert [p["description"] for p in body["result"]["points"]] == ["d_values-0", "d_values-1-2"]


def test_embed_brute(capsys):
    code, body = run(capsys, "embed", "--mode", "brute", "--tree", SINK,
                     "--digraph", '{"n": 3, "arcs": [[0, 1], [1, 0], [0, 2], [2, 0], [1, 2], [2, 1]]}')
    assert code == cli.EXIT_OK
    assert body["result"]["found"] is True


def test_config_is_repaired_before_running(capsys, monkeypatch):
    monkeypatch.setattr(Config, "BRUTE_EMBED_GUARD", 0)
    monkeypatch.setattr(Config, "LOG_LEVEL", Config.LOG_LEVEL)
    code = cli.main(["--log-level", "chatty", "recognize", "--tree", SINK])
    captured = capsys.readouterr()
    assert code == cli.EXIT_OK
    assert json.loads(captured.out)["result"]["max_grounded"] is True
    assert "Invalid BRUTE_EMBED_GUARD" in captured.err
    assert "Invalid LOG_LEVEL" in captured.err
    assert Config.BRUTE_EMBED_GUARD == 14
    assert Config.LOG_LEVEL == "INFO"


def test_unknown_subcommand_is_an_argparse_error():
    with pytest.raises(SystemExit) as err:
        cli.main(["teleport"])
    assert err.value.code == 2
