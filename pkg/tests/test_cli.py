import json
import os

import pytest

from spindle_bounds.cli import build_parser, main, resolve_options


def test_curve(capsys):
    assert main(["curve", "--problem", "sign_flip", "--d", "4"]) == 0
    assert capsys.readouterr().out.splitlines() == ["0,1,T1", "1,0.75,T1", "2,0.5,T1", "3,0.25,T1", "4,0,T1"]


def test_curve_needs_a_bound():
    assert main(["curve", "--problem", "random_sign", "--d", "4"]) == 2
    assert main(["curve", "--problem", "random_sign", "--d", "4", "--bound", "gaussian"]) == 0


def test_curve_rejects_single_row(capsys):
    assert main(["curve", "--problem", "complement", "--d", "1"]) == 2
    assert capsys.readouterr().out == ""


def test_curve_from_config(tmpdir, capsys):
    path = os.path.join(tmpdir, "run.cfg")
    with open(path, "w") as fp:
        fp.write("d = 8\nproblem = complement\n")
    assert main(["curve", "--config", path]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8
    assert lines[0] == "0,0.25,T2"
    # flags win over the file
    assert main(["curve", "--config", path, "--d", "4"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 4


def test_generate(tmpdir, monkeypatch):
    monkeypatch.setenv("SPINDLE_SEED", "7")
    out = os.path.join(tmpdir, "problem")
    assert main(["generate", "--problem", "sign_flip", "--d", "8", "--out", out]) == 0
    with open(os.path.join(out, "meta.json")) as fp:
        meta = json.load(fp)
    assert meta["seed"] == 7
    assert meta["family"] == "sign_flip"


def test_train(tmpdir, capsys):
    out = os.path.join(tmpdir, "spindly.csv")
    assert main(["train", "--learner", "spindly", "--d", "8", "--k", "3", "--out", out]) == 0
    assert capsys.readouterr().out.startswith("k=3 average_loss=")
    with open(out) as fp:
        assert fp.readline().startswith("# learner=spindly")


def test_experiment(tmpdir):
    out = os.path.join(tmpdir, "exp.csv")
    argv = ["experiment", "--problem", "permuted", "--d", "4", "--seeds", "3", "--k", "0,2,3", "--out", out]
    assert main(argv) == 0
    with open(out) as fp:
        lines = fp.read().splitlines()
    assert lines[0] == "k,empirical_mean,stderr,bound,theorem"
    assert [line.split(",")[0] for line in lines[1:]] == ["0", "2", "3"]
    assert os.path.isfile(os.path.join(tmpdir, "exp.svg"))


def test_experiment_rejects_bad_k(tmpdir):
    assert main(["experiment", "--d", "4", "--k", "9", "--out", os.path.join(tmpdir, "x.csv")]) == 2


def test_verify(tmpdir, capsys):
    out = os.path.join(tmpdir, "verify.csv")
    assert main(["verify", "APPD", "remark-1", "--out", out]) == 0
    printed = capsys.readouterr().out
    assert "PASS" in printed
    assert "FAIL" not in printed
    with open(out) as fp:
        assert fp.readline() == "tag,check,passed,value,threshold\n"
    assert main(["verify", "T99"]) == 2


def test_figure2(tmpdir):
    out = str(tmpdir)
    code = main(["figure2", "--d", "8", "--seeds", "2", "--out", out])
    assert os.path.isfile(os.path.join(out, "figure2.svg"))
    with open(os.path.join(out, "figure2_checks.csv")) as fp:
        statuses = [line.split(",")[2] for line in fp.read().splitlines()[1:]]
    assert len(statuses) == 7
    # the exit code reflects the asserted checks only
    assert code == (1 if "false" in statuses else 0)


def test_resolve_options():
    args = build_parser().parse_args(["train", "--eta", "0.1", "--master-seed", "3"])
    opts = resolve_options(args)
    assert opts["d"] == 16
    assert opts["eta"] == 0.1
    assert opts["master_seed"] == 3
    assert opts["learner"] == "linear"
    assert opts["seeds"] == 100


def test_bad_choice():
    with pytest.raises(SystemExit):
        main(["train", "--learner", "perceptron"])


def test_experiment_on_duplicated_draws_the_iid_curve(tmpdir):
    out = os.path.join(tmpdir, "dup.csv")
    argv = ["experiment", "--problem", "duplicated", "--d", "4", "--q", "2", "--seeds", "2", "--out", out]
    assert main(argv) == 0
    with open(os.path.join(tmpdir, "dup.svg"), "rb") as fp:
        content = fp.read()
    assert b"bound APPB" in content
    assert b"iid APPB" in content
