import os

import pytest
import torch

from spindle_bounds import io
from spindle_bounds.bounds import BoundKind, bound_curve
from spindle_bounds.exceptions import DimensionError
from spindle_bounds.learners import InitKind, LearnerConfig, LearnerKind, default_config, train
from spindle_bounds.problems import Family, LabelRange, make_problem


@pytest.mark.parametrize(
    ("value", "text"),
    [
        (True, "true"),
        (3, "3"),
        (0.25, "0.25"),
        (1 / 3, "0.3333333333"),
        (1.0, "1"),
        ("T1", "T1"),
    ],
)
def test_format_number(value, text):
    assert io.format_number(value) == text


def test_rows(tmpdir):
    path = os.path.join(tmpdir, "sub", "rows.csv")
    io.save_rows(path, ("k", "value"), [(0, 1.0), (1, 0.5)])
    with open(path, newline="") as fp:
        assert fp.read() == "k,value\n0,1\n1,0.5\n"
    header, rows = io.load_rows(path)
    assert header == ["k", "value"]
    assert rows == [["0", "1"], ["1", "0.5"]]


def test_matrix_is_bit_exact(tmpdir):
    path = os.path.join(tmpdir, "M.csv")
    M = torch.randn(5, 3, dtype=torch.float64)
    io.save_matrix(path, M)
    assert torch.equal(io.load_matrix(path), M)
    io.save_matrix(path, torch.tensor([1.0, 2.0]))
    assert io.load_matrix(path).shape == (2, 1)
    with pytest.raises(DimensionError):
        io.save_matrix(path, torch.zeros(2, 2, 2))


@pytest.mark.parametrize("family", [Family.COMPLEMENT, Family.GAUSSIAN, Family.DOUBLED_HADAMARD])
def test_problem(tmpdir, family):
    p = make_problem(family, 8, seed=5)
    io.save_problem(str(tmpdir), p)
    assert sorted(os.listdir(tmpdir)) == ["X.csv", "Y.csv", "meta.json"]
    loaded = io.load_problem(str(tmpdir))
    assert torch.equal(loaded.X, p.X)
    assert torch.equal(loaded.Y, p.Y)
    assert loaded.family is family
    assert loaded.seed == p.seed
    assert loaded.target_index == p.target_index
    assert loaded.label_range is p.label_range


def test_linear_model_dump(tmpdir):
    p = make_problem(Family.SIGN_FLIP, 8, seed=1)
    cfg = LearnerConfig(eta=0.125, init=InitKind.GAUSSIAN)
    model = train(LearnerKind.LINEAR, p, 3, cfg, seed=2)
    path = os.path.join(tmpdir, "linear.csv")
    io.save_model(path, model, cfg)
    with open(path) as fp:
        first, second = fp.readline(), fp.readline()
    assert first.startswith("# learner=linear config=")
    assert second == "parameter,row,col,value\n"
    header, params = io.load_model_parameters(path)
    assert header["learner"] == "linear"
    assert header["config"]["eta"] == 0.125
    assert header["config"]["init"] == "gaussian"
    assert list(params) == ["w"]
    assert torch.equal(params["w"][:, 0], model.w)


def test_mlp_model_dump(tmpdir):
    p = make_problem(Family.SIGN_FLIP, 8, seed=1)
    cfg = default_config(LearnerKind.MLP, hidden_units=3)
    model = train(LearnerKind.MLP, p, 2, cfg, seed=2)
    path = os.path.join(tmpdir, "mlp.csv")
    io.save_model(path, model, cfg)
    header, params = io.load_model_parameters(path)
    assert header["learner"] == "mlp"
    assert torch.equal(params["W"], model.W.detach())
    assert torch.equal(params["z"][:, 0], model.z.detach())


def test_lookup_and_constant_parameters():
    p = make_problem(Family.PERMUTED, 8, seed=1)
    lookup = train(LearnerKind.LABEL_AVERAGE, p, 3)
    assert sorted(io.model_parameters(lookup)) == ["X_seen", "fallback", "y_seen"]
    constant = train(LearnerKind.CONSTANT, make_problem(Family.COMPLEMENT, 8, seed=1), 2)
    assert float(io.model_parameters(constant)["value"]) == 0.5


def test_curve(tmpdir):
    path = os.path.join(tmpdir, "curve.csv")
    io.save_curve(path, bound_curve(BoundKind.SIGN_FLIP, 4))
    with open(path) as fp:
        assert fp.read().splitlines() == ["k,value,theorem", "0,1,T1", "1,0.75,T1", "2,0.5,T1", "3,0.25,T1", "4,0,T1"]


def test_label_range_written(tmpdir):
    p = make_problem(Family.SHIFTED_DOUBLED, 4, seed=0)
    io.save_problem(str(tmpdir), p)
    assert io.load_problem(str(tmpdir)).label_range is LabelRange.ZERO_ONE
