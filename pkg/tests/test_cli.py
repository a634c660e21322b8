import json

import pytest

from rankgradient import __version__
from rankgradient.cli import (
    EXIT_BUDGET,
    EXIT_INTERNAL,
    EXIT_IO,
    EXIT_OK,
    EXIT_PARSE,
    main,
)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_lowindex_f2(capsys):
    code, out, _ = run(capsys, "lowindex", "--preset", "f2", "--max", "4")
    assert code == EXIT_OK
    obj = json.loads(out)
    assert obj["version"] == __version__
    assert obj["config"]["command"] == "lowindex"
    assert obj["report"]["counts"] == {"1": 1, "2": 3, "3": 13, "4": 71}


def test_lowindex_csv(capsys):
    code, out, _ = run(capsys, "lowindex", "--preset", "f2", "--max", "3",
                       "--format", "csv")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0].startswith("# rankgradient")
    assert lines[2] == "index,count"
    assert lines[3:] == ["1,1", "2,3", "3,13"]


def test_chain_fig8(capsys):
    code, out, _ = run(capsys, "chain", "--preset", "fig8", "--depth", "4")
    assert code == EXIT_OK
    obj = json.loads(out)
    assert obj["report"]["chain"]["indices"] == [1, 1, 2, 3, 4]
    for lv in obj["report"]["levels"]:
        assert lv["rank_upper"] <= 3


def test_gradient_omits_chain_block(capsys):
    code, out, _ = run(capsys, "gradient", "--preset", "fig8", "--depth", "2")
    assert code == EXIT_OK
    # gradient leaves the provenance string; chain expands it to a block
    assert isinstance(json.loads(out)["report"]["chain"], str)


def test_chain_farber_inferred_from_sole_sub(capsys):
    code, out, _ = run(capsys, "chain", "--preset", "f2", "--depth", "2")
    assert code == EXIT_OK
    indices = json.loads(out)["report"]["chain"]["indices"]
    assert indices[0] == 1
    assert indices[1] == 16


def test_tower_text(capsys):
    code, out, _ = run(capsys, "tower", "--group", "s3", "--mu", "3/4",
                       "--depth", "1", "--format", "text")
    assert code == EXIT_OK
    assert "limits: d 11/9" in out


def test_graphing(capsys):
    code, out, _ = run(
        capsys, "graphing", "--preset", "fig8", "--depth", "3", "--level", "3",
    )
    assert code == EXIT_OK
    obj = json.loads(out)["report"]
    assert obj["index"] == 3
    assert obj["rank_bound"] >= 1


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", "--preset", "s3")
    assert code == EXIT_OK
    obj = json.loads(out)["report"]
    assert obj["generators"] == ["a", "b"]


def test_enumerate_with_cache(capsys, tmp_path):
    args = ("enumerate", "--preset", "f2", "--sub", "K",
            "--cache-dir", str(tmp_path))
    code, out, _ = run(capsys, *args)
    assert code == EXIT_OK
    first = json.loads(out)["report"]
    assert first["index"] == 16
    assert first["cache"] == {"hits": 0, "misses": 1, "enabled": True}
    code, out, _ = run(capsys, *args)
    assert json.loads(out)["report"]["cache"]["hits"] == 1


def test_exit_code_parse(capsys):
    code, _, err = run(capsys, "enumerate", "--preset", "f2", "--sub", "nope")
    assert code == EXIT_PARSE
    assert "nope" in err


def test_exit_code_io(capsys, tmp_path):
    code, _, err = run(capsys, "validate", "--input", str(tmp_path / "missing.txt"))
    assert code == EXIT_IO


def test_exit_code_budget(capsys):
    code, _, err = run(capsys, "tower", "--group", "z2z2", "--mu", "0",
                       "--depth", "1", "--scale", "1")
    assert code == EXIT_BUDGET
    assert "budget" in err


def test_missing_source_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["lowindex", "--max", "2"])
    assert exc.value.code == EXIT_PARSE


def test_csv_unavailable_for_validate(capsys):
    code, _, err = run(capsys, "validate", "--preset", "s3", "--format", "csv")
    assert code == EXIT_PARSE


def test_byte_identical_output(capsys):
    argv = ("chain", "--preset", "fig8", "--depth", "5", "--format", "csv")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_input_file_equivalent_to_preset(capsys, tmp_path):
    from importlib import resources

    text = resources.files("rankgradient.presets").joinpath("fig8.txt").read_text()
    path = tmp_path / "mine.txt"
    path.write_text(text)
    _, by_preset, _ = run(capsys, "gradient", "--preset", "fig8", "--depth", "2")
    _, by_file, _ = run(capsys, "gradient", "--input", str(path), "--depth", "2")
    assert (
        json.loads(by_preset)["report"] == json.loads(by_file)["report"]
    )
