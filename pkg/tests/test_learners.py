import pytest
import torch

from spindle_bounds.exceptions import ConfigurationError, DimensionError, DivergenceError
from spindle_bounds.hadamard import strip_first_row, sylvester
from spindle_bounds.learners import (
    InitKind,
    LearnerConfig,
    LearnerKind,
    autograd_input_gradient,
    average_loss,
    default_config,
    egu_update,
    finite_difference_gradient,
    least_squares,
    linear_update,
    mlp_input_gradient,
    seen_loss,
    spindly_update,
    train,
    train_constant,
    train_egu,
    train_label_average,
    train_linear_gd,
    train_mlp,
    train_sign_recovering,
    train_spindly,
    train_two_layer,
)
from spindle_bounds.problems import (
    Family,
    FeatureKind,
    FeatureMap,
    apply_feature_map,
    complement_problem,
    make_problem,
    permuted_problem,
    sign_flip_problem,
)
from tests.helpers import unit


@pytest.fixture()
def sign_flip():
    return sign_flip_problem(sylvester(4), seed=7)


@pytest.mark.parametrize("k", [0, 1, 5, 16])
def test_linear_zero_init_on_sign_flip(sign_flip, k):
    model = train_linear_gd(sign_flip, k, LearnerConfig(eta=1 / 16))
    unseen = model.predict(sign_flip.X[k:])
    assert unseen.numel() == 0 or float(unseen.abs().max()) <= 1e-12
    assert seen_loss(model, sign_flip, k) <= 1e-20
    assert average_loss(model, sign_flip) == pytest.approx(1 - k / 16, abs=1e-12)


def test_linear_default_rate_interpolates(sign_flip):
    # default rate 1 / max |x|^2 = 1 / d
    explicit = train_linear_gd(sign_flip, 6, LearnerConfig(eta=1 / 16))
    default = train_linear_gd(sign_flip, 6, LearnerConfig())
    assert torch.allclose(explicit.w, default.w, rtol=0, atol=1e-15)


def test_linear_default_rate_on_zero_rows(sign_flip):
    blank = apply_feature_map(sign_flip, FeatureMap(FeatureKind.CUSTOM, fn=torch.zeros_like))
    model = train_linear_gd(blank, 4, LearnerConfig())
    assert torch.equal(model.w, torch.zeros(16, dtype=torch.float64))
    assert average_loss(model, blank) == 1.0


def test_linear_update():
    w = torch.zeros(2, dtype=torch.float64)
    x = torch.tensor([1.0, 1.0], dtype=torch.float64)
    assert linear_update(w, x, torch.tensor(1.0, dtype=torch.float64), 0.5).tolist() == [0.5, 0.5]


def test_recorded_prefix_matches_training(sign_flip):
    cfg = LearnerConfig()
    recorded = train_linear_gd(sign_flip, 16, cfg, record=True)
    for k in (0, 3, 11, 16):
        assert torch.equal(recorded.prefix(k).w, train_linear_gd(sign_flip, k, cfg).w)
    with pytest.raises(ValueError, match="record"):
        train_linear_gd(sign_flip, 4, cfg).prefix(2)
    with pytest.raises(ConfigurationError):
        train_linear_gd(sign_flip, 4, LearnerConfig(epochs=2), record=True)


def test_online_to_batch_mixture(sign_flip):
    cfg = LearnerConfig(online_to_batch=True)
    model = train_linear_gd(sign_flip, 5, cfg)
    # hypotheses before each of the 5 updates
    assert model.hypotheses().shape == (5, 16)
    assert torch.equal(model.hypotheses()[0], torch.zeros(16, dtype=torch.float64))
    recorded = train_linear_gd(sign_flip, 16, LearnerConfig(), record=True)
    assert torch.equal(recorded.prefix(5, online_to_batch=True).hypotheses(), model.hypotheses())
    # nothing to mix before the first example
    assert train_linear_gd(sign_flip, 0, cfg).hypotheses().shape == (1, 16)


def test_gaussian_init_is_seeded(sign_flip):
    cfg = LearnerConfig(init=InitKind.GAUSSIAN)
    a = train_linear_gd(sign_flip, 0, cfg, seed=3)
    b = train_linear_gd(sign_flip, 0, cfg, seed=3)
    c = train_linear_gd(sign_flip, 0, cfg, seed=4)
    assert torch.equal(a.w, b.w)
    assert not torch.equal(a.w, c.w)


def test_e1_init_has_zero_loss(sign_flip):
    model = train_linear_gd(sign_flip, 0, LearnerConfig(init=InitKind.FIXED, w0=unit(16)))
    assert average_loss(model, sign_flip) == 0.0


def test_spindly(sign_flip):
    model = train_spindly(sign_flip, 16, default_config(LearnerKind.SPINDLY))
    assert torch.equal(model.weights, model.u**2)
    assert model.clip == (-1.0, 1.0)
    assert float(model.predict(sign_flip.X).abs().max()) <= 1.0
    # row 0 is s_0 times the all-ones row, so the first step scales every u_i alike
    first = train_spindly(sign_flip, 1, default_config(LearnerKind.SPINDLY))
    a = 1 / 16 * (1 + 15 / 32)
    assert torch.allclose(first.u, torch.full((16,), a, dtype=torch.float64), rtol=0, atol=1e-15)
    # row 1 sums to zero, so the prediction is 0 and u_i grows by 1 + h_i / 2 with h = H[1]
    second = train_spindly(sign_flip, 2, default_config(LearnerKind.SPINDLY))
    h1 = sylvester(4).float()[1]
    assert torch.allclose(second.u, a * (1 + h1 / 2), rtol=0, atol=1e-15)
    assert float(second.u[0]) > float(second.u[h1 < 0].max())


def test_spindly_update():
    u = torch.tensor([0.5, 1.0], dtype=torch.float64)
    x = torch.tensor([1.0, -1.0], dtype=torch.float64)
    y = torch.tensor(0.0, dtype=torch.float64)
    # y_hat = 0.25 - 1 = -0.75
    expected = u - 0.1 * (-0.75) * 2 * u * x
    assert torch.allclose(spindly_update(u, x, y, 0.1), expected)


def test_spindly_ignores_rotation(sign_flip):
    U = torch.linalg.qr(torch.randn(16, 16, dtype=torch.float64))[0]
    cfg = default_config(LearnerKind.SPINDLY)
    plain = train_spindly(sign_flip, 3, cfg)
    rotated = train_spindly(sign_flip, 3, cfg, init_rotation=U)
    assert torch.equal(plain.u, rotated.u)


def test_egu_update_zero_rate():
    w = torch.tensor([0.1, 0.2], dtype=torch.float64)
    x = torch.tensor([1.0, -1.0], dtype=torch.float64)
    assert torch.equal(egu_update(w, x, torch.tensor(1.0, dtype=torch.float64), 0.0), w)


def test_egu_stays_positive(sign_flip):
    model = train_egu(sign_flip, 16, default_config(LearnerKind.EGU))
    assert bool((model.w > 0).all())
    with pytest.raises(ConfigurationError, match="positive"):
        train_egu(sign_flip, 2, LearnerConfig(init=InitKind.FIXED, w0=torch.zeros(16)))


def test_egu_tracks_spindly_at_small_rates():
    p = sign_flip_problem(sylvester(3), seed=2)
    eta = 0.01
    spindly = train_spindly(p, 8, default_config(LearnerKind.SPINDLY, eta=eta))
    egu = train_egu(p, 8, default_config(LearnerKind.EGU, eta=4 * eta, scale=1 / 64))
    assert float((spindly.weights - egu.weights).abs().max()) < 1e-3


def test_two_layer_stays_in_closed_form():
    p = sign_flip_problem(sylvester(3), seed=1)
    cfg = LearnerConfig(init=InitKind.GAUSSIAN, hidden_units=4, epochs=20)
    model = train_two_layer(p, 3, cfg, seed=5, record=True)
    assert len(model.step_residuals) == 20
    assert max(model.step_residuals) < 1e-8
    assert torch.equal(model.weights, model.W1 @ model.w2)
    one_step = train_two_layer(p, 3, LearnerConfig(init=InitKind.GAUSSIAN, hidden_units=4, epochs=1), seed=5)
    assert seen_loss(model, p, 3) < seen_loss(one_step, p, 3)


def test_orthogonal_init_needs_width():
    p = sign_flip_problem(sylvester(3), seed=1)
    with pytest.raises(ConfigurationError, match="hidden_units"):
        train_two_layer(p, 2, LearnerConfig(init=InitKind.ORTHOGONAL, hidden_units=4))
    model = train_two_layer(p, 0, LearnerConfig(init=InitKind.ORTHOGONAL, hidden_units=8))
    assert torch.allclose(model.W10 @ model.W10.T, torch.eye(8, dtype=torch.float64), atol=1e-12)


def test_mlp_gradient_forms_agree():
    p = sign_flip_problem(sylvester(3), seed=3)
    model = train_mlp(p, 4, LearnerConfig(init=InitKind.GAUSSIAN, hidden_units=5, epochs=3), seed=1)
    X, y = p.train(4)
    analytic = mlp_input_gradient(model, X, y)
    assert torch.allclose(analytic, autograd_input_gradient(model, X, y), rtol=0, atol=1e-12)
    assert torch.allclose(analytic, finite_difference_gradient(model, X, y), rtol=0, atol=1e-7)


def test_mlp_training_reduces_seen_loss():
    p = sign_flip_problem(sylvester(3), seed=3)
    before = train_mlp(p, 4, LearnerConfig(init=InitKind.GAUSSIAN, epochs=1), seed=1)
    after = train_mlp(p, 4, LearnerConfig(init=InitKind.GAUSSIAN, epochs=200), seed=1)
    assert seen_loss(after, p, 4) < seen_loss(before, p, 4)


def test_least_squares_interpolates():
    p = make_problem(Family.GAUSSIAN, 8, seed=0)
    for k in range(9):
        assert seen_loss(least_squares(p, k), p, k) < 1e-20 + 1e-10
    assert average_loss(least_squares(p, 8), p) < 1e-20 + 1e-10


def test_constant_midpoint():
    p = complement_problem(strip_first_row(sylvester(3)), seed=0)
    model = train_constant(p, 3)
    assert model.predict(p.X).tolist() == [0.5] * 7
    assert average_loss(model, p) == 0.25


def test_label_average():
    p = permuted_problem(sylvester(3), column=1, seed=4)
    model = train_label_average(p, 3)
    assert torch.equal(model.predict(p.X[:3]), p.y[:3])
    expected = -float(p.y[:3].sum()) / 5
    assert model.predict(p.X[3:]).tolist() == [expected] * 5


def test_sign_recovering(sign_flip):
    for k in (1, 4, 15):
        model = train_sign_recovering(sign_flip, k, seed=k)
        assert float(model.row_losses(sign_flip.X[k:], sign_flip.y[k:]).max()) == 0.0
        assert abs(float(model.w0[0])) == 1.0


def test_divergence_is_reported():
    p = make_problem(Family.GAUSSIAN, 8, seed=0)
    with pytest.raises(DivergenceError, match="linear diverged"):
        train_linear_gd(p, 4, LearnerConfig(eta=1e6, epochs=10))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"eta": 0.0},
        {"eta": -1.0},
        {"eta": float("nan")},
        {"epochs": 0},
        {"clip": (1.0, -1.0)},
        {"hidden_units": 0},
        {"init": InitKind.FIXED},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        LearnerConfig(**kwargs)


def test_default_configs():
    assert default_config(LearnerKind.SPINDLY).init is InitKind.CONSTANT
    assert default_config(LearnerKind.MLP).init is InitKind.GAUSSIAN
    assert default_config(LearnerKind.SIGN_RECOVERING).init is InitKind.REFLECTIVE_SIGN
    assert default_config(LearnerKind.LINEAR, eta=0.5).eta == 0.5


def test_predict_width_mismatch(sign_flip):
    model = train(LearnerKind.LINEAR, sign_flip, 2)
    with pytest.raises(DimensionError):
        model.predict(torch.zeros(3, 8, dtype=torch.float64))
    assert model.predict(sign_flip.X[0]).dim() == 0
