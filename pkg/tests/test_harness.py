import os

import pytest
import torch

from spindle_bounds.bounds import BoundKind
from spindle_bounds.exceptions import ConfigurationError
from spindle_bounds.harness import (
    CSV_HEADER,
    SUITES,
    Check,
    ExperimentSpec,
    VerifyReport,
    _replayable,
    companion_curves,
    default_bound,
    figure2_reproduction,
    normalize_tag,
    problem_rows,
    run_experiment,
    verify,
)
from spindle_bounds.learners import LearnerConfig, LearnerKind, average_loss, default_config, train
from spindle_bounds.problems import Family, make_problem
from spindle_bounds.seeding import spawn_seeds
from spindle_bounds.strategy import LocalStrategy


def test_spec_defaults():
    spec = ExperimentSpec("complement", "constant", 8)
    assert spec.family is Family.COMPLEMENT
    assert spec.learner is LearnerKind.CONSTANT
    assert spec.k_values == list(range(8))
    assert spec.bound is BoundKind.COMPLEMENT
    assert ExperimentSpec(Family.DUPLICATED, LearnerKind.LINEAR, 4, q=2).n_rows == 16
    assert ExperimentSpec(Family.RANDOM_SIGN, LearnerKind.LINEAR, 4, n=6).bound is None


@pytest.mark.parametrize(
    "kwargs",
    [
        {"seeds": 0},
        {"k_values": [9]},
        {"k_values": [-1, 2]},
    ],
)
def test_spec_validation(kwargs):
    with pytest.raises(ConfigurationError):
        ExperimentSpec(Family.SIGN_FLIP, LearnerKind.LINEAR, 8, **kwargs)


def test_problem_rows_and_bounds():
    assert problem_rows(Family.COMPLEMENT, 16) == 15
    assert problem_rows(Family.GAUSSIAN, 16, n=40) == 40
    assert default_bound(Family.GAUSSIAN) is BoundKind.GAUSSIAN
    assert default_bound("shifted_doubled") is BoundKind.SHIFTED_DOUBLED
    assert default_bound(Family.RANDOM_SIGN) is None


def test_sign_flip_matches_curve(tmpdir):
    out = os.path.join(tmpdir, "sign_flip.csv")
    spec = ExperimentSpec(Family.SIGN_FLIP, LearnerKind.LINEAR, 8, seeds=5, cfg=LearnerConfig(eta=1 / 8), out=out)
    result = run_experiment(spec)
    expected = 1.0 - torch.arange(9, dtype=torch.float64) / 8
    assert torch.allclose(result.mean, expected, rtol=0, atol=1e-12)
    assert torch.equal(result.bound, expected)
    assert result.theorem == "T1"
    assert result.at(4)[0] == pytest.approx(0.5)
    with open(out) as fp:
        lines = fp.read().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1] == "0,1,0,1,T1"
    assert len(lines) == 10


def test_result_is_independent_of_workers():
    spec = ExperimentSpec(Family.PERMUTED, LearnerKind.SPINDLY, 8, seeds=4, master_seed=3)
    serial = run_experiment(spec, LocalStrategy(1))
    threaded = run_experiment(spec, LocalStrategy(3))
    assert torch.equal(serial.mean, threaded.mean)
    assert torch.equal(serial.stderr, threaded.stderr)
    other = run_experiment(ExperimentSpec(Family.PERMUTED, LearnerKind.SPINDLY, 8, seeds=4, master_seed=4))
    assert not torch.equal(serial.mean, other.mean)


def test_single_seed_has_zero_stderr():
    result = run_experiment(ExperimentSpec(Family.PERMUTED, LearnerKind.LINEAR, 8, seeds=1, k_values=[0, 3]))
    assert result.stderr.tolist() == [0.0, 0.0]
    assert result.k_values.tolist() == [0, 3]


def test_replay_only_when_rate_is_fixed():
    gaussian = make_problem(Family.GAUSSIAN, 8, seed=0)
    assert not _replayable(ExperimentSpec(Family.GAUSSIAN, LearnerKind.LINEAR, 8), gaussian)
    assert _replayable(ExperimentSpec(Family.GAUSSIAN, LearnerKind.LINEAR, 8, cfg=LearnerConfig(eta=0.01)), gaussian)
    assert _replayable(ExperimentSpec(Family.GAUSSIAN, LearnerKind.SPINDLY, 8), gaussian)
    assert not _replayable(
        ExperimentSpec(Family.GAUSSIAN, LearnerKind.LINEAR, 8, cfg=LearnerConfig(eta=0.01, epochs=2)), gaussian
    )
    assert not _replayable(ExperimentSpec(Family.GAUSSIAN, LearnerKind.LEAST_SQUARES, 8), gaussian)


def test_replay_agrees_with_fresh_training():
    result = run_experiment(ExperimentSpec(Family.SIGN_FLIP, LearnerKind.SPINDLY, 8, seeds=2, master_seed=1))
    cfg = default_config(LearnerKind.SPINDLY)
    per_seed = []
    for seed in spawn_seeds(1, 2):
        p = make_problem(Family.SIGN_FLIP, 8, seed)
        per_seed.append([average_loss(train(LearnerKind.SPINDLY, p, k, cfg, seed=seed), p) for k in range(9)])
    expected = torch.tensor(per_seed, dtype=torch.float64).mean(dim=0)
    assert torch.allclose(result.mean, expected, rtol=0, atol=1e-12)


def test_multi_target_average():
    result = run_experiment(ExperimentSpec(Family.DOUBLED_HADAMARD, LearnerKind.LINEAR, 4, seeds=2))
    expected = 1.0 - torch.arange(5, dtype=torch.float64) / 4
    assert torch.allclose(result.mean, expected, rtol=0, atol=1e-12)
    assert result.theorem == "T7"
    assert bool((result.mean >= result.bound).all())
    assert float(result.bound[-1]) == 0.0


def test_companion_curves():
    (iid,) = companion_curves(ExperimentSpec(Family.DUPLICATED, LearnerKind.LINEAR, 4, q=2))
    assert iid.kind is BoundKind.IID
    assert iid.k_max == 16
    assert companion_curves(ExperimentSpec(Family.SIGN_FLIP, LearnerKind.LINEAR, 4)) == []


def test_no_bound():
    result = run_experiment(ExperimentSpec(Family.RANDOM_SIGN, LearnerKind.LINEAR, 8, seeds=2, k_values=[0, 4]))
    assert not result.has_bound
    assert result.theorem == "none"
    assert result.rows()[0][:2] == (0, 1.0)


def test_figure2_small(tmpdir):
    figure = figure2_reproduction(d=8, seeds=2, out_dir=str(tmpdir))
    assert sorted(figure.results) == [
        ("permuted", "linear"),
        ("permuted", "spindly"),
        ("random_sign", "linear"),
        ("random_sign", "spindly"),
    ]
    assert len(figure.checks) == 7
    assert {c.tag for c in figure.checks} == {"FIG2"}
    assert os.path.isfile(figure.svg)
    assert os.path.isfile(os.path.join(tmpdir, "figure2_permuted_linear.csv"))
    # the linear neuron cannot go below the rank floor on Hadamard rows
    assert figure.checks[0].passed


@pytest.mark.parametrize(
    ("tag", "expected"),
    [
        ("t1", "T1"),
        ("Cor-§6", "COR6"),
        ("COR. 6", "COR6"),
        ("App. B", "APPB"),
        ("§4 counterexamples", "S4"),
        ("Remark 1", "REMARK1"),
    ],
)
def test_normalize_tag(tag, expected):
    assert normalize_tag(tag) == expected


def test_all_suites_registered():
    expected = set("T1 T2 T3 T4 T5 S5 T6 T7 COR6 T9 APPB APPD APPE APPH S4 APPC S2 REMARK1".split())
    assert set(SUITES) == expected


@pytest.mark.parametrize("tag", ["APPD", "REMARK1", "S4", "APPC", "S5", "COR6"])
def test_verify_exact_suites(tag):
    report = verify(tag)
    assert report.checks
    assert report.passed, report.failures
    assert {c.tag for c in report.checks} == {tag}


@pytest.mark.parametrize("tag", ["T1", "T2", "T3", "T4", "T5", "T6", "T7", "T9", "APPB", "APPE", "APPH", "S2"])
def test_verify_statistical_suites(tag):
    report = verify(tag)
    assert report.checks
    assert report.passed, report.failures
    assert {c.tag for c in report.checks} == {tag}
    if tag == "T1":
        # the one-hidden-layer net with a rotation-invariant init obeys the same floor
        assert "mlp_gaussian_init_above_1-k/d" in {c.check for c in report.checks}


def test_figure2_separation_at_d64():
    figure = figure2_reproduction(d=64)
    assert figure.passed, [c for c in figure.checks if c.asserted and not c.passed]
    # zero-init linear GD interpolates the seen rows and predicts 0 elsewhere
    linear = figure.results[("permuted", "linear")]
    assert linear.at(32)[0] == pytest.approx(0.5, abs=1e-12)


def test_verify_tags():
    once = verify(["appd"])
    twice = verify(["APPD", "app-d"])
    assert len(once.checks) == len(twice.checks)
    with pytest.raises(ConfigurationError, match="unknown verify tag"):
        verify("T99")


def test_verify_report(tmpdir):
    report = VerifyReport([Check("X", "a", True, 1.0, 0.5), Check("X", "b", False, 2.0, 1.0, asserted=False)])
    assert report.passed
    assert report.failures == []
    out = os.path.join(tmpdir, "checks.csv")
    report.to_csv(out)
    with open(out) as fp:
        assert fp.read().splitlines() == ["tag,check,passed,value,threshold", "X,a,true,1,0.5", "X,b,report,2,1"]
    failing = VerifyReport([Check("X", "c", False, 3.0, 1.0)])
    assert not failing.passed
    assert [c.check for c in failing.failures] == ["c"]
