"""Gradient-descent learners trained on a prefix of a :class:`~spindle_bounds.problems.Problem`.

Every ``train_*`` function shares the signature ``(p, k, cfg, seed, init_rotation=None, record=False)``:
it trains on the first ``k`` examples of ``p`` and returns a model with a ``predict`` method. The
``seed`` keys the random initialization, and ``init_rotation`` replaces a drawn input-layer init
``W0`` by ``U @ W0`` so rotated and unrotated runs can be paired. Online learners trained with
``record=True`` keep the weight after every step, so a single pass can be evaluated at every
prefix length through ``model.prefix(k)``.

Updates follow the half-square-loss gradient, ``delta = y_hat - y``; reported losses are the full
losses of :mod:`spindle_bounds.losses`.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple, Union

import torch
import torch.nn as nn
from torch import Tensor

from spindle_bounds import linalg, seeding
from spindle_bounds.exceptions import ConfigurationError, DimensionError, DivergenceError
from spindle_bounds.losses import LossKind, pointwise
from spindle_bounds.problems import Problem

log = logging.getLogger(__name__)

#: weights above this magnitude abort training
MAX_WEIGHT = 1e12


class LearnerKind(str, Enum):
    LINEAR = "linear"
    SPINDLY = "spindly"
    EGU = "egu"
    TWO_LAYER = "two_layer"
    MLP = "mlp"
    LEAST_SQUARES = "least_squares"
    CONSTANT = "constant"
    LABEL_AVERAGE = "label_average"
    SIGN_RECOVERING = "sign_recovering"

    @property
    def key(self) -> int:
        return 100 + list(LearnerKind).index(self)

    @property
    def online(self) -> bool:
        """Per-example learners whose single pass can be snapshotted at every step."""
        return self in (LearnerKind.LINEAR, LearnerKind.SPINDLY, LearnerKind.EGU)


class InitKind(str, Enum):
    ZERO = "zero"
    GAUSSIAN = "gaussian"
    FIXED = "fixed"
    REFLECTIVE_SIGN = "reflective_sign"
    CONSTANT = "constant"
    ORTHOGONAL = "orthogonal"


#: default learning rates of the multiplicative learners; the others derive theirs from the data
DEFAULT_RATES = {LearnerKind.SPINDLY: 0.25, LearnerKind.EGU: 1.0}


@dataclass
class LearnerConfig:
    """Hyperparameters shared by all learners.

    Args:
        eta: learning rate, ``None`` picks the learner's default
        epochs: passes over the prefix for online learners, full-batch steps for layered nets
        init: initialization of the input-layer weights
        sigma: standard deviation of the ``GAUSSIAN`` init, ``None`` means ``1 / sqrt(d)``
        w0: explicit weights for the ``FIXED`` init
        scale: entry value of the ``CONSTANT`` init, ``None`` means ``1 / d`` for spindly and
            ``1 / d**2`` otherwise
        clip: prediction interval used when scoring; multiplicative learners default to the
            problem's label interval
        hidden_units: width ``h`` of the layered nets
        online_to_batch: score the uniform mixture of the hypotheses visited during the pass
        output_sigma: standard deviation of the output-layer init of layered nets, ``None``
            means ``1 / sqrt(h)``
    """

    eta: Optional[float] = None
    epochs: int = 1
    init: InitKind = InitKind.ZERO
    sigma: Optional[float] = None
    w0: Optional[Tensor] = None
    scale: Optional[float] = None
    clip: Optional[Tuple[float, float]] = None
    hidden_units: int = 16
    online_to_batch: bool = False
    output_sigma: Optional[float] = None

    def __post_init__(self) -> None:
        self.init = InitKind(self.init)
        if self.eta is not None and not (math.isfinite(self.eta) and self.eta > 0):
            raise ConfigurationError(f"learning rate must be positive, got {self.eta}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.clip is not None:
            lo, hi = self.clip
            if not lo < hi:
                raise ConfigurationError(f"clip interval needs lo < hi, got {self.clip}")
            self.clip = (float(lo), float(hi))
        if self.hidden_units < 1:
            raise ConfigurationError(f"hidden_units must be >= 1, got {self.hidden_units}")
        if self.sigma is not None and self.sigma <= 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if self.output_sigma is not None and self.output_sigma < 0:
            raise ConfigurationError(f"output_sigma must be non-negative, got {self.output_sigma}")
        if self.init is InitKind.FIXED and self.w0 is None:
            raise ConfigurationError("the FIXED init needs `w0`")


def default_config(kind: LearnerKind, **overrides) -> LearnerConfig:
    """Config with the init each learner is normally run with."""
    kind = LearnerKind(kind)
    if kind in (LearnerKind.SPINDLY, LearnerKind.EGU):
        overrides.setdefault("init", InitKind.CONSTANT)
    elif kind in (LearnerKind.TWO_LAYER, LearnerKind.MLP):
        overrides.setdefault("init", InitKind.GAUSSIAN)
    elif kind is LearnerKind.SIGN_RECOVERING:
        overrides.setdefault("init", InitKind.REFLECTIVE_SIGN)
    return LearnerConfig(**overrides)


def _clip(values: Tensor, clip: Optional[Tuple[float, float]]) -> Tensor:
    return values if clip is None else values.clamp(*clip)


def _check_weights(name: str, step: int, *weights: Tensor) -> None:
    for w in weights:
        if w.numel() == 0:
            continue
        if not bool(torch.isfinite(w).all()) or float(w.abs().max()) > MAX_WEIGHT:
            raise DivergenceError(f"{name} diverged at step {step}: |w|_max exceeds {MAX_WEIGHT:g} or is not finite")


def _check_width(X: Tensor, d: int) -> Tensor:
    if X.dim() == 1:
        X = X.unsqueeze(0)
    if X.shape[-1] != d:
        raise DimensionError(f"model expects {d} features, got {X.shape[-1]}")
    return X.to(torch.float64)


class _Scored:
    """Per-row losses through ``predict``."""

    def predict(self, X: Tensor) -> Tensor:
        raise NotImplementedError

    def row_losses(self, X: Tensor, y: Tensor, loss: LossKind = LossKind.SQUARE) -> Tensor:
        return pointwise(loss, y, self.predict(X))


class _VectorHypothesis(_Scored):
    """Models predicting ``x . weights`` whose pass can be replayed and mixed."""

    _param_field = "w"
    clip: Optional[Tuple[float, float]]
    trajectory: Optional[Tensor]
    history: Optional[Tensor]

    @staticmethod
    def effective(params: Tensor) -> Tensor:
        return params

    @property
    def params(self) -> Tensor:
        return getattr(self, self._param_field)

    @property
    def weights(self) -> Tensor:
        return self.effective(self.params)

    @property
    def dim(self) -> int:
        return self.params.shape[-1]

    def hypotheses(self) -> Tensor:
        """Effective weights being mixed, one per row; the final weights when not mixing."""
        if self.history is None or self.history.shape[0] == 0:
            return self.weights.unsqueeze(0)
        return self.effective(self.history)

    def _predictions(self, X: Tensor) -> Tensor:
        return _clip(_check_width(X, self.dim) @ self.hypotheses().T, self.clip)

    def predict(self, X: Tensor) -> Tensor:
        squeeze = X.dim() == 1
        out = self._predictions(X).mean(dim=1)
        return out[0] if squeeze else out

    def row_losses(self, X: Tensor, y: Tensor, loss: LossKind = LossKind.SQUARE) -> Tensor:
        # a randomly drawn past hypothesis, scored in expectation
        return pointwise(loss, y.unsqueeze(1), self._predictions(X)).mean(dim=1)

    def prefix(self, k: int, online_to_batch: bool = False):
        """Model after the first ``k`` steps of a recorded single pass."""
        if self.trajectory is None:
            raise ValueError("model was trained without `record=True`")
        if not 0 <= k < self.trajectory.shape[0]:
            raise ValueError(f"prefix {k} outside the recorded pass of {self.trajectory.shape[0] - 1} steps")
        history = self.trajectory[:k] if online_to_batch else None
        return replace(self, **{self._param_field: self.trajectory[k].clone()}, trajectory=None, history=history)


@dataclass(eq=False)
class LinearModel(_VectorHypothesis):
    """Linear predictor ``x . w``."""

    w: Tensor
    kind: LearnerKind = LearnerKind.LINEAR
    clip: Optional[Tuple[float, float]] = None
    trajectory: Optional[Tensor] = field(default=None, repr=False)
    history: Optional[Tensor] = field(default=None, repr=False)


@dataclass(eq=False)
class SpindlyModel(_VectorHypothesis):
    """Each input reaches the output through two edges sharing ``u_i``: effective weight ``u_i**2``."""

    _param_field = "u"

    u: Tensor
    kind: LearnerKind = LearnerKind.SPINDLY
    clip: Optional[Tuple[float, float]] = None
    trajectory: Optional[Tensor] = field(default=None, repr=False)
    history: Optional[Tensor] = field(default=None, repr=False)

    @staticmethod
    def effective(params: Tensor) -> Tensor:
        return params * params


@dataclass(eq=False)
class TwoLayerModel(_Scored):
    """Fully connected linear net ``x W1 w2`` remembering its init and training prefix."""

    W1: Tensor
    w2: Tensor
    W10: Tensor
    w20: Tensor
    X_tr: Tensor
    clip: Optional[Tuple[float, float]] = None
    step_residuals: List[float] = field(default_factory=list, repr=False)
    kind: LearnerKind = LearnerKind.TWO_LAYER

    @property
    def dim(self) -> int:
        return self.W1.shape[0]

    @property
    def weights(self) -> Tensor:
        return self.W1 @ self.w2

    def predict(self, X: Tensor) -> Tensor:
        squeeze = X.dim() == 1
        out = _clip(_check_width(X, self.dim) @ self.weights, self.clip)
        return out[0] if squeeze else out

    def closed_form_residual(self) -> float:
        """Distance of ``(W1, w2)`` from the weight form reachable by GD from ``(W10, w20)``.

        ``W1 - W10`` must factor as ``X_tr^T C G`` with ``G = [X_tr W10; w20^T]``, and ``w2`` must lie
        in the span of ``w20`` and the columns of ``W10^T X_tr^T``.
        """
        M = self.W1 - self.W10
        P_x = linalg.projector(self.X_tr.T)
        G = torch.cat([self.X_tr @ self.W10, self.w20.unsqueeze(0)])
        P_g = linalg.projector(G.T)
        first = float(torch.linalg.matrix_norm(M - P_x @ M @ P_g))
        basis = linalg.orthonormal_basis(torch.cat([self.w20.unsqueeze(1), self.W10.T @ self.X_tr.T], dim=1))
        return max(first, linalg.span_residual(self.w2, basis))


class MlpModel(nn.Module, _Scored):
    """One hidden tanh layer, ``N(x) = tanh(x W) . z``, with a fully connected input layer."""

    kind = LearnerKind.MLP

    def __init__(self, W: Tensor, z: Tensor, clip: Optional[Tuple[float, float]] = None) -> None:
        super().__init__()
        self.W = nn.Parameter(W.detach().clone().to(torch.float64))
        self.z = nn.Parameter(z.detach().clone().to(torch.float64))
        self.clip = clip

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    def forward(self, X: Tensor) -> Tensor:
        return torch.tanh(X @ self.W) @ self.z

    def predict(self, X: Tensor) -> Tensor:
        squeeze = X.dim() == 1
        with torch.no_grad():
            out = _clip(self(_check_width(X, self.dim)), self.clip)
        return out[0] if squeeze else out


@dataclass(eq=False)
class ConstantModel(_Scored):
    """Predicts the same value everywhere."""

    value: float
    dim: int
    kind: LearnerKind = LearnerKind.CONSTANT

    def predict(self, X: Tensor) -> Tensor:
        squeeze = X.dim() == 1
        out = torch.full((_check_width(X, self.dim).shape[0],), self.value, dtype=torch.float64)
        return out[0] if squeeze else out


@dataclass(eq=False)
class LookupModel(_Scored):
    """Recalls the label of a seen instance and predicts ``fallback`` on everything else."""

    X_seen: Tensor
    y_seen: Tensor
    fallback: float
    kind: LearnerKind = LearnerKind.LABEL_AVERAGE

    @property
    def dim(self) -> int:
        return self.X_seen.shape[1]

    def predict(self, X: Tensor) -> Tensor:
        squeeze = X.dim() == 1
        X = _check_width(X, self.dim)
        out = torch.full((X.shape[0],), self.fallback, dtype=torch.float64)
        if self.X_seen.shape[0]:
            match = (X.unsqueeze(1) == self.X_seen.unsqueeze(0)).all(dim=-1)
            found = match.any(dim=1)
            out[found] = self.y_seen[match[found].to(torch.int64).argmax(dim=1)]
        return out[0] if squeeze else out


@dataclass(eq=False)
class ReflectiveModel(_Scored):
    """Bottom neuron ``x . w0`` followed by a fitted scalar ``v``."""

    w0: Tensor
    v: float
    kind: LearnerKind = LearnerKind.SIGN_RECOVERING

    @property
    def dim(self) -> int:
        return self.w0.shape[0]

    @property
    def weights(self) -> Tensor:
        return self.v * self.w0

    def predict(self, X: Tensor) -> Tensor:
        squeeze = X.dim() == 1
        out = self.v * (_check_width(X, self.dim) @ self.w0)
        return out[0] if squeeze else out


Model = Union[LinearModel, SpindlyModel, TwoLayerModel, MlpModel, ConstantModel, LookupModel, ReflectiveModel]


def _init_vector(
    kind: LearnerKind,
    cfg: LearnerConfig,
    d: int,
    seed: int,
    init_rotation: Optional[Tensor] = None,
) -> Tensor:
    rng = seeding.generator(seed, kind.key, seeding.Stream.INIT)
    if cfg.init is InitKind.ZERO:
        w = torch.zeros(d, dtype=torch.float64)
    elif cfg.init is InitKind.GAUSSIAN:
        w = seeding.gaussian(rng, d, sigma=cfg.sigma or 1.0 / math.sqrt(d))
    elif cfg.init is InitKind.FIXED:
        w = torch.as_tensor(cfg.w0, dtype=torch.float64).clone()
        if w.shape != (d,):
            raise DimensionError(f"fixed init has shape {tuple(w.shape)}, expected ({d},)")
    elif cfg.init is InitKind.REFLECTIVE_SIGN:
        w = torch.zeros(d, dtype=torch.float64)
        w[0] = seeding.signs(rng, 1)[0]
    elif cfg.init is InitKind.CONSTANT:
        scale = cfg.scale
        if scale is None:
            scale = 1.0 / d if kind is LearnerKind.SPINDLY else 1.0 / d**2
        w = torch.full((d,), float(scale), dtype=torch.float64)
    else:
        raise ConfigurationError(f"{cfg.init.value} init is only defined for layered nets")
    if init_rotation is not None and kind not in (LearnerKind.SPINDLY, LearnerKind.EGU):
        w = init_rotation.to(torch.float64) @ w
    return w


def _init_layers(
    kind: LearnerKind,
    cfg: LearnerConfig,
    d: int,
    seed: int,
    init_rotation: Optional[Tensor] = None,
) -> Tuple[Tensor, Tensor]:
    h = cfg.hidden_units
    rng = seeding.generator(seed, kind.key, seeding.Stream.INIT)
    if cfg.init is InitKind.ZERO:
        W = torch.zeros(d, h, dtype=torch.float64)
    elif cfg.init is InitKind.GAUSSIAN:
        W = seeding.gaussian(rng, d, h, sigma=cfg.sigma or 1.0 / math.sqrt(d))
    elif cfg.init is InitKind.ORTHOGONAL:
        if h < d:
            raise ConfigurationError(f"orthogonal init needs hidden_units >= d, got h={h} < d={d}")
        Q, R = torch.linalg.qr(seeding.gaussian(rng, h, h))
        W = (Q * torch.sign(torch.diagonal(R)))[:d]
    elif cfg.init is InitKind.FIXED:
        W = torch.as_tensor(cfg.w0, dtype=torch.float64).clone()
        if W.shape != (d, h):
            raise DimensionError(f"fixed init has shape {tuple(W.shape)}, expected ({d}, {h})")
    else:
        raise ConfigurationError(f"{cfg.init.value} init is not defined for layered nets")
    if init_rotation is not None:
        W = init_rotation.to(torch.float64) @ W
    sigma_out = cfg.output_sigma if cfg.output_sigma is not None else 1.0 / math.sqrt(h)
    out_rng = seeding.generator(seed, kind.key, seeding.Stream.OUTPUT_INIT)
    z = seeding.gaussian(out_rng, h, sigma=sigma_out) if sigma_out > 0 else torch.zeros(h, dtype=torch.float64)
    return W, z


def _resolve_clip(cfg: LearnerConfig, p: Problem, default_on: bool) -> Optional[Tuple[float, float]]:
    interval = p.label_range.interval
    if cfg.clip is None:
        return interval if default_on else None
    if interval is not None and not (cfg.clip[0] <= interval[0] and interval[1] <= cfg.clip[1]):
        raise ConfigurationError(f"clip {cfg.clip} cuts off labels in {interval}")
    return cfg.clip


def _check_record(cfg: LearnerConfig, record: bool) -> None:
    if record and cfg.epochs != 1:
        raise ConfigurationError("recording a pass needs epochs=1")


def _full_batch_rate(X_tr: Tensor, *init: Tensor) -> float:
    """Step size below the curvature of the half-square loss at the init."""
    if X_tr.shape[0] == 0:
        return 1.0
    s_max = float(torch.linalg.svdvals(X_tr)[0]) ** 2
    scale = 1.0 + sum(float(torch.linalg.matrix_norm(w.reshape(w.shape[0], -1), ord=2)) ** 2 for w in init)
    return 0.5 / (s_max * scale) if s_max > 0 else 1.0


def train_linear_gd(
    p: Problem,
    k: int,
    cfg: LearnerConfig,
    seed: int = 0,
    init_rotation: Optional[Tensor] = None,
    record: bool = False,
) -> LinearModel:
    """Per-example GD on a linear neuron, ``w <- w - eta (x . w - y) x``.

    The default rate is ``1 / max ||x||**2`` over the prefix, which is ``1 / d`` on ``{-1, +1}``
    rows and makes each update interpolate its example.
    """
    _check_record(cfg, record)
    X, y = p.train(k)
    w = _init_vector(LearnerKind.LINEAR, cfg, p.d, seed, init_rotation)
    eta = cfg.eta
    if eta is None:
        top = float((X * X).sum(dim=1).max()) if k else 0.0
        eta = 1.0 / top if top > 0 else 1.0
    keep = record or cfg.online_to_batch
    w, visited = _online_pass("linear", X, y, w, cfg.epochs, lambda w_, x, t: linear_update(w_, x, t, eta), keep)
    log.debug("linear GD: k=%d eta=%g |w|=%g", k, eta, float(torch.linalg.vector_norm(w)))
    return LinearModel(
        w,
        LearnerKind.LINEAR,
        clip=cfg.clip,
        trajectory=torch.stack(visited) if record else None,
        history=_mixture(visited) if cfg.online_to_batch and not record else None,
    )


def _online_pass(
    name: str,
    X: Tensor,
    y: Tensor,
    params: Tensor,
    epochs: int,
    step: Callable[[Tensor, Tensor, Tensor], Tensor],
    keep_all: bool,
) -> Tuple[Tensor, List[Tensor]]:
    """Run ``epochs`` passes of ``params <- step(params, x, y)`` keeping every visited state if asked."""
    visited = [params.clone()]
    k = X.shape[0]
    for epoch in range(epochs):
        for t in range(k):
            params = step(params, X[t], y[t])
            _check_weights(name, epoch * k + t, params)
            if keep_all:
                visited.append(params.clone())
    return params, visited


def _mixture(visited: List[Tensor]) -> Optional[Tensor]:
    """Hypotheses in force before each update, or ``None`` if nothing was trained."""
    return torch.stack(visited[:-1]) if len(visited) > 1 else None


def linear_update(w: Tensor, x: Tensor, y: Tensor, eta: float) -> Tensor:
    return w - eta * (x @ w - y) * x


def spindly_update(u: Tensor, x: Tensor, y: Tensor, eta: float) -> Tensor:
    """One GD step on the spindly net: ``u_i <- u_i - eta delta 2 u_i x_i``."""
    delta = x @ (u * u) - y
    return u - eta * delta * 2.0 * u * x


def egu_update(w: Tensor, x: Tensor, y: Tensor, eta: float) -> Tensor:
    """One unnormalized exponentiated gradient step: ``w_i <- w_i exp(-eta delta x_i)``."""
    delta = x @ w - y
    return w * torch.exp(-eta * delta * x)


def train_spindly(
    p: Problem,
    k: int,
    cfg: LearnerConfig,
    seed: int = 0,
    init_rotation: Optional[Tensor] = None,
    record: bool = False,
) -> SpindlyModel:
    """Online GD on the spindly net; predictions are clipped to the label interval when scored.

    The gradient always uses the unclipped prediction. ``init_rotation`` is ignored: the
    coordinate-wise parameterization has no rotated counterpart.
    """
    _check_record(cfg, record)
    clip = _resolve_clip(cfg, p, default_on=True)
    X, y = p.train(k)
    u = _init_vector(LearnerKind.SPINDLY, cfg, p.d, seed)
    eta = cfg.eta if cfg.eta is not None else DEFAULT_RATES[LearnerKind.SPINDLY]
    keep = record or cfg.online_to_batch
    u, visited = _online_pass("spindly", X, y, u, cfg.epochs, lambda u_, x, t: spindly_update(u_, x, t, eta), keep)
    log.debug("spindly: k=%d eta=%g sum(u^2)=%g", k, eta, float((u * u).sum()))
    return SpindlyModel(
        u,
        clip=clip,
        trajectory=torch.stack(visited) if record else None,
        history=_mixture(visited) if cfg.online_to_batch and not record else None,
    )


def train_egu(
    p: Problem,
    k: int,
    cfg: LearnerConfig,
    seed: int = 0,
    init_rotation: Optional[Tensor] = None,
    record: bool = False,
) -> LinearModel:
    """Online EGU; the init must be strictly positive and the weights stay so."""
    _check_record(cfg, record)
    clip = _resolve_clip(cfg, p, default_on=True)
    X, y = p.train(k)
    w = _init_vector(LearnerKind.EGU, cfg, p.d, seed)
    if not bool((w > 0).all()):
        raise ConfigurationError("EGU needs a strictly positive init")
    eta = cfg.eta if cfg.eta is not None else DEFAULT_RATES[LearnerKind.EGU]
    keep = record or cfg.online_to_batch
    w, visited = _online_pass("egu", X, y, w, cfg.epochs, lambda w_, x, t: egu_update(w_, x, t, eta), keep)
    return LinearModel(
        w,
        LearnerKind.EGU,
        clip=clip,
        trajectory=torch.stack(visited) if record else None,
        history=_mixture(visited) if cfg.online_to_batch and not record else None,
    )


def train_two_layer(
    p: Problem,
    k: int,
    cfg: LearnerConfig,
    seed: int = 0,
    init_rotation: Optional[Tensor] = None,
    record: bool = False,
) -> TwoLayerModel:
    """Full-batch GD on ``x W1 w2`` for ``cfg.epochs`` steps.

    Both layers are updated from the same residual ``delta = X_tr W1 w2 - y_tr``. With
    ``record=True`` the distance from the reachable weight form is stored after every step.
    """
    X, y = p.train(k)
    W1, w2 = _init_layers(LearnerKind.TWO_LAYER, cfg, p.d, seed, init_rotation)
    model = TwoLayerModel(W1.clone(), w2.clone(), W1, w2, X, clip=cfg.clip)
    if k == 0:
        return model
    eta = cfg.eta if cfg.eta is not None else _full_batch_rate(X, W1, w2)
    for step in range(cfg.epochs):
        delta = X @ (model.W1 @ model.w2) - y
        g = X.T @ delta
        grad_W1 = torch.outer(g, model.w2)
        grad_w2 = model.W1.T @ g
        model.W1 = model.W1 - eta * grad_W1
        model.w2 = model.w2 - eta * grad_w2
        _check_weights("two-layer", step, model.W1, model.w2)
        if record:
            model.step_residuals.append(model.closed_form_residual())
    return model


def train_mlp(
    p: Problem,
    k: int,
    cfg: LearnerConfig,
    seed: int = 0,
    init_rotation: Optional[Tensor] = None,
    record: bool = False,
) -> MlpModel:
    """Full-batch SGD on the tanh net, ``cfg.epochs`` steps of the summed half-square loss."""
    X, y = p.train(k)
    W, z = _init_layers(LearnerKind.MLP, cfg, p.d, seed, init_rotation)
    model = MlpModel(W, z, clip=cfg.clip)
    if k == 0:
        return model
    eta = cfg.eta if cfg.eta is not None else _full_batch_rate(X, W, z)
    optimizer = torch.optim.SGD(model.parameters(), lr=eta)
    for step in range(cfg.epochs):
        optimizer.zero_grad()
        loss = 0.5 * ((model(X) - y) ** 2).sum()
        loss.backward()
        optimizer.step()
        _check_weights("mlp", step, model.W.detach(), model.z.detach())
    return model


def least_squares(
    p: Problem,
    k: int,
    cfg: Optional[LearnerConfig] = None,
    seed: int = 0,
    init_rotation: Optional[Tensor] = None,
    record: bool = False,
) -> LinearModel:
    """Minimum-norm interpolant ``w = X_tr^+ y_tr``."""
    X, y = p.train(k)
    w = linalg.pinv(X) @ y if k else torch.zeros(p.d, dtype=torch.float64)
    return LinearModel(w, LearnerKind.LEAST_SQUARES, clip=cfg.clip if cfg else None)


def train_constant(
    p: Problem,
    k: int,
    cfg: Optional[LearnerConfig] = None,
    seed: int = 0,
    init_rotation: Optional[Tensor] = None,
    record: bool = False,
) -> ConstantModel:
    """The midpoint of the label range, the best guess for a label of unknown sign."""
    p.train(k)
    return ConstantModel(p.label_range.midpoint, p.d)


def train_label_average(
    p: Problem,
    k: int,
    cfg: Optional[LearnerConfig] = None,
    seed: int = 0,
    init_rotation: Optional[Tensor] = None,
    record: bool = False,
) -> LookupModel:
    """Recall seen labels; predict the mean of the labels left over on everything else.

    On balanced label vectors the unseen labels sum to ``n * midpoint`` minus the seen ones.
    """
    X, y = p.train(k)
    remaining = p.n - k
    fallback = (p.n * p.label_range.midpoint - float(y.sum())) / remaining if remaining else p.label_range.midpoint
    return LookupModel(X.clone(), y.clone(), fallback)


def train_sign_recovering(
    p: Problem,
    k: int,
    cfg: Optional[LearnerConfig] = None,
    seed: int = 0,
    init_rotation: Optional[Tensor] = None,
    record: bool = False,
) -> ReflectiveModel:
    """Bottom neuron drawn as ``s e_1`` with a random sign, upper scalar fitted by least squares."""
    cfg = cfg or default_config(LearnerKind.SIGN_RECOVERING)
    X, y = p.train(k)
    w0 = _init_vector(LearnerKind.SIGN_RECOVERING, cfg, p.d, seed, init_rotation)
    a = X @ w0
    norm = float(a @ a)
    v = float(a @ y) / norm if norm > 0 else 0.0
    return ReflectiveModel(w0, v)


TRAINERS: Dict[LearnerKind, Callable[..., Model]] = {
    LearnerKind.LINEAR: train_linear_gd,
    LearnerKind.SPINDLY: train_spindly,
    LearnerKind.EGU: train_egu,
    LearnerKind.TWO_LAYER: train_two_layer,
    LearnerKind.MLP: train_mlp,
    LearnerKind.LEAST_SQUARES: least_squares,
    LearnerKind.CONSTANT: train_constant,
    LearnerKind.LABEL_AVERAGE: train_label_average,
    LearnerKind.SIGN_RECOVERING: train_sign_recovering,
}


def train(
    kind: LearnerKind,
    p: Problem,
    k: int,
    cfg: Optional[LearnerConfig] = None,
    seed: int = 0,
    init_rotation: Optional[Tensor] = None,
    record: bool = False,
) -> Model:
    kind = LearnerKind(kind)
    cfg = cfg if cfg is not None else default_config(kind)
    return TRAINERS[kind](p, k, cfg, seed, init_rotation=init_rotation, record=record)


def predict(model: Model, x: Tensor) -> Tensor:
    return model.predict(x.to(torch.float64))


def average_loss(model: Model, p: Problem, loss: LossKind = LossKind.SQUARE) -> float:
    """Mean loss over all ``n`` rows of ``p``, seen and unseen."""
    return float(model.row_losses(p.X, p.y, LossKind(loss)).mean())


def seen_loss(model: Model, p: Problem, k: int, loss: LossKind = LossKind.SQUARE) -> float:
    """Mean loss over the training prefix; zero for ``k = 0``."""
    if k == 0:
        return 0.0
    X, y = p.train(k)
    return float(model.row_losses(X, y, LossKind(loss)).mean())


def _half_square_loss(model: MlpModel, X: Tensor, y: Tensor) -> Tensor:
    return 0.5 * ((model(X) - y) ** 2).sum()


def mlp_input_gradient(model: MlpModel, X: Tensor, y: Tensor) -> Tensor:
    """Input-layer gradient in the form ``sum_t x_t delta_t^T``.

    ``delta_t = (N(x_t) - y_t) z * (1 - tanh(x_t W)**2)`` is the back-propagated error at the hidden
    layer.
    """
    with torch.no_grad():
        hidden = torch.tanh(X @ model.W)
        residual = hidden @ model.z - y
        delta = residual.unsqueeze(1) * model.z.unsqueeze(0) * (1.0 - hidden**2)
        return X.T @ delta


def autograd_input_gradient(model: MlpModel, X: Tensor, y: Tensor) -> Tensor:
    model.zero_grad()
    _half_square_loss(model, X, y).backward()
    grad = model.W.grad.detach().clone()
    model.zero_grad()
    return grad


def finite_difference_gradient(model: MlpModel, X: Tensor, y: Tensor, eps: float = 1e-5) -> Tensor:
    """Central differences of the half-square loss in every input-layer weight."""
    grad = torch.zeros_like(model.W, dtype=torch.float64)
    with torch.no_grad():
        for i in range(model.W.shape[0]):
            for j in range(model.W.shape[1]):
                original = float(model.W[i, j])
                model.W[i, j] = original + eps
                plus = float(_half_square_loss(model, X, y))
                model.W[i, j] = original - eps
                minus = float(_half_square_loss(model, X, y))
                model.W[i, j] = original
                grad[i, j] = (plus - minus) / (2 * eps)
    return grad
