import json

import pytest

from ergolab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_measure_box_json(capsys):
    code, out, _ = run_cli(capsys, "measure", "box", "--rect", "0,1/2,0,1/3", "--json")
    assert code == 0
    assert json.loads(out) == {"lower": "1/3", "upper": "1/3", "depth": 1}


def test_measure_ball_and_proj(capsys):
    code, out, _ = run_cli(capsys, "measure", "ball", "--system", "doubling", "--center", "0", "--radius", "1/4")
    assert code == 0 and "lower: 1/2" in out
    code, out, _ = run_cli(capsys, "measure", "proj", "--axis", "0", "--interval", "0,1/2", "--json")
    assert json.loads(out) == {"value": "1/3"}


def test_global_flags_before_or_after_subcommand(capsys, tmp_path):
    code, a, _ = run_cli(capsys, "--seed", "3", "hitting", "sweep", "--pairs", "2", "--k-min", "6", "--k-max", "7")
    code2, b, _ = run_cli(capsys, "hitting", "sweep", "--pairs", "2", "--k-min", "6", "--k-max", "7", "--seed", "3")
    assert code == code2 == 0 and a == b
    assert a.startswith("# hitting_quantiles\nk,pairs,found")


def test_correlate(capsys):
    code, out, _ = run_cli(capsys, "mixing", "correlate", "--a", "0", "--b", "2", "--n", "1", "--json")
    assert json.loads(out)["correlation"] == "1/9"
    code, _, err = run_cli(capsys, "mixing", "correlate", "--a", "5", "--b", "0")
    assert code == 2 and "--a" in err


def test_out_dir_and_run(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "spectrum", "levels", "--gen", "6", "--out", str(tmp_path / "lv"))
    assert code == 0 and (tmp_path / "lv" / "levels.csv").exists()
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"system": "s3", "experiment": "spectrum-levels", "params": {"generation": 6}}))
    code, _, _ = run_cli(capsys, "run", str(cfg), "--out", str(tmp_path / "r"))
    assert code == 0
    assert (tmp_path / "r" / "levels.csv").read_bytes() == (tmp_path / "lv" / "levels.csv").read_bytes()


def test_validate_and_errors(capsys, tmp_path):
    good = tmp_path / "g.json"
    good.write_text(json.dumps({"dim": 1, "bases": [3], "alphabet": [0, 2], "probs": ["1/2", "1/2"]}))
    code, out, _ = run_cli(capsys, "system", "validate", str(good))
    assert code == 0 and out.startswith("valid")
    bad = tmp_path / "b.json"
    bad.write_text(json.dumps({"dim": 1, "bases": [3], "alphabet": [0, 3], "probs": ["1/2", "1/2"]}))
    code, _, err = run_cli(capsys, "system", "validate", str(bad))
    assert code == 2 and "system.alphabet[1]" in err
    code, _, err = run_cli(capsys, "cover", "slope", "--radii-file", str(tmp_path / "nope.json"))
    assert code == 2


def test_content_and_envelope(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "content", "upper", "--boxes", "0,1", "--s", "1", "--json")
    assert json.loads(out)["upper"] == pytest.approx(1.0)
    grid = tmp_path / "g.csv"
    grid.write_text("x,g\n0,0\n1,5\n2,0\n")
    code, out, _ = run_cli(capsys, "spectrum", "envelope", str(grid))
    assert out == "x,g,ghat\n0,0,4\n1,5,5\n2,0,4\n"


def test_version(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert "ergolab" in capsys.readouterr().out
