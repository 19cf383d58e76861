"""Closed-form lower-bound curves, spectral certificates and the sampling identities behind them.

Curves are indexed by ``k``, the number of training examples seen, and give a floor on the loss
averaged over all rows of the problem.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence

import torch
from torch import Tensor

from spindle_bounds import linalg, seeding
from spindle_bounds.exceptions import DimensionError
from spindle_bounds.hadamard import hadamard_of_dim


class BoundKind(str, Enum):
    SIGN_FLIP = "sign_flip"
    COMPLEMENT = "complement"
    PERMUTE = "permute"
    GAUSSIAN = "gaussian"
    SAWTOOTH = "sawtooth"
    IID = "iid"
    SVD_TAIL = "svd_tail"
    SVD_TAIL_INIT = "svd_tail_init"
    SHIFTED_DOUBLED = "shifted_doubled"
    TWO_LAYER_RANK = "two_layer_rank"

    @property
    def tag(self) -> str:
        return _TAGS[self]


_TAGS = {
    BoundKind.SIGN_FLIP: "T1",
    BoundKind.COMPLEMENT: "T2",
    BoundKind.PERMUTE: "T3",
    BoundKind.GAUSSIAN: "T4",
    BoundKind.SAWTOOTH: "APPB",
    BoundKind.IID: "APPB",
    BoundKind.SVD_TAIL: "T6",
    BoundKind.SVD_TAIL_INIT: "T7",
    BoundKind.SHIFTED_DOUBLED: "COR6",
    BoundKind.TWO_LAYER_RANK: "T9",
}


def _check_k(k: int, k_max: int) -> None:
    if not 0 <= k <= k_max:
        raise ValueError(f"k={k} outside [0, {k_max}]")


def _check_stripped_dim(d: int) -> None:
    # these curves divide by the d - 1 rows left once the constant row is dropped
    if d < 2:
        raise DimensionError(f"curve needs d >= 2, got d={d}")


def curve_sign_flip(d: int, k: int) -> float:
    """``1 - k/d``.

    >>> curve_sign_flip(16, 8)
    0.5
    """
    _check_k(k, d)
    return 1.0 - k / d


def curve_complement(d: int, k: int) -> float:
    """``(1 - k/(d-1)) / 4`` for 0/1 labels.

    >>> curve_complement(16, 0)
    0.25
    """
    _check_stripped_dim(d)
    _check_k(k, d - 1)
    return 0.25 * (1.0 - k / (d - 1))


def curve_permute(d: int, k: int) -> float:
    _check_stripped_dim(d)
    _check_k(k, d - 1)
    return 1.0 - k / (d - 1)


def curve_gaussian(d: int, k: int) -> float:
    """``(1 - k/d)**2``.

    >>> curve_gaussian(16, 8)
    0.25
    """
    _check_k(k, d)
    return (1.0 - k / d) ** 2


def curve_sawtooth(d: int, q: int, k: int) -> float:
    """Floor on the duplicated problem: only whole ``2q`` blocks reveal a new row.

    >>> curve_sawtooth(8, 2, 5)
    0.75
    """
    if q < 1:
        raise ValueError(f"duplication factor must be >= 1, got {q}")
    _check_k(k, 2 * q * d)
    return 1.0 - (2 * q * math.ceil(k / (2 * q))) / (2 * q * d)


def curve_iid(d: int, k: int) -> float:
    """Chance that a given row is missed by ``k`` uniform draws, ``(1 - 1/d)**k``."""
    if k < 0:
        raise ValueError(f"k={k} must be non-negative")
    return (1.0 - 1.0 / d) ** k


def curve_shifted_doubled(d: int, k: int) -> float:
    """``1/4 - (k+1)/(4d)``: the shifted ``[H, -H]`` floor normalized per matrix entry."""
    _check_k(k, d - 1)
    return 0.25 - (k + 1) / (4 * d)


def curve_two_layer_rank(d: int, k: int) -> float:
    """``max(0, 1 - (2k+1)/d)`` from the rank budget ``2k + 1`` of two-layer linear nets."""
    if k < 0:
        raise ValueError(f"k={k} must be non-negative")
    return max(0.0, 1.0 - (2 * k + 1) / d)


@dataclass(frozen=True, eq=False)
class BoundCurve:
    """Bound value for every ``k = 0 .. len(values) - 1``."""

    kind: BoundKind
    values: Tensor
    d: int
    q: Optional[int] = None

    @property
    def tag(self) -> str:
        return self.kind.tag

    @property
    def k_max(self) -> int:
        return self.values.shape[0] - 1

    def __getitem__(self, k: int) -> float:
        return float(self.values[k])

    def is_non_increasing(self) -> bool:
        return bool((self.values[1:] <= self.values[:-1]).all())


def bound_curve(kind: BoundKind, d: int, q: int = 1, Y: Optional[Tensor] = None) -> BoundCurve:
    """Tabulate a bound over its whole range of ``k``.

    The spectral kinds take their matrix from ``Y`` and default to ``[H, -H]`` (shifted for
    ``SHIFTED_DOUBLED``).
    """
    kind = BoundKind(kind)
    if kind is BoundKind.SIGN_FLIP:
        values = [curve_sign_flip(d, k) for k in range(d + 1)]
    elif kind is BoundKind.COMPLEMENT:
        values = [curve_complement(d, k) for k in range(d)]
    elif kind is BoundKind.PERMUTE:
        values = [curve_permute(d, k) for k in range(d)]
    elif kind is BoundKind.GAUSSIAN:
        values = [curve_gaussian(d, k) for k in range(d + 1)]
    elif kind is BoundKind.SAWTOOTH:
        values = [curve_sawtooth(d, q, k) for k in range(2 * q * d + 1)]
    elif kind is BoundKind.IID:
        values = [curve_iid(d, k) for k in range(2 * q * d + 1)]
    elif kind is BoundKind.TWO_LAYER_RANK:
        values = [curve_two_layer_rank(d, k) for k in range(d + 1)]
    elif kind is BoundKind.SHIFTED_DOUBLED and Y is None:
        values = [curve_shifted_doubled(d, k) for k in range(d)]
    else:
        if Y is None:
            H = hadamard_of_dim(d).float()
            Y = torch.cat([H, -H], dim=1)
        if kind is BoundKind.SVD_TAIL:
            values = svd_tail_values(Y).tolist()
        else:
            # one rank spent on the init
            normalize = "frobenius" if kind is BoundKind.SVD_TAIL_INIT else "entries"
            values = svd_tail_values(Y, normalize)[1:].tolist()
    q_field = q if kind in (BoundKind.SAWTOOTH, BoundKind.IID) else None
    return BoundCurve(kind, torch.tensor(values, dtype=torch.float64), d, q_field)


class Spectrum(NamedTuple):
    squared_singular_values: Tensor
    frobenius_sq: float


def spectrum(Y: Tensor) -> Spectrum:
    if Y.numel() == 0:
        raise ValueError("spectrum of an empty matrix")
    Y = Y.to(torch.float64)
    return Spectrum(torch.linalg.svdvals(Y) ** 2, float((Y * Y).sum()))


def svd_tail_values(Y: Tensor, normalize: str = "frobenius") -> Tensor:
    """Tail ``sum_{i >= j} s_i**2`` divided by the normalizer, for every ``j = 0 .. min(Y.shape)``.

    Entries at or beyond the numerical rank are exactly zero.
    """
    s2 = spectrum(Y)
    if normalize == "frobenius":
        scale = s2.frobenius_sq
    elif normalize == "entries":
        scale = float(Y.numel())
    else:
        raise ValueError(f"unknown normalization {normalize!r}, use 'frobenius' or 'entries'")
    rank = linalg.numerical_rank(Y.to(torch.float64))
    values = s2.squared_singular_values.clone()
    values[rank:] = 0.0
    tails = torch.cat([values.flip(0).cumsum(0).flip(0), torch.zeros(1, dtype=torch.float64)])
    tails[rank:] = 0.0
    return tails / scale if scale > 0 else torch.zeros_like(tails)


def _tail(Y: Tensor, start: int, normalize: str) -> float:
    tails = svd_tail_values(Y, normalize)
    if start < 0 or start >= tails.shape[0]:
        raise ValueError(f"rank budget {start} outside [0, {tails.shape[0] - 1}]")
    return float(tails[start])


def svd_tail_bound(Y: Tensor, k: int, normalize: str = "frobenius") -> float:
    """Share of ``||Y||_F**2`` beyond the top ``k`` singular values.

    Any learner whose weight matrix across the targets of ``Y`` has rank ``<= k`` pays at least this
    much average square loss. ``normalize="entries"`` divides by the number of entries instead.

    >>> svd_tail_bound(torch.eye(4), 1)
    0.75
    """
    return _tail(Y, k, normalize)


def svd_tail_bound_with_init(Y: Tensor, k: int, normalize: str = "frobenius") -> float:
    """Tail beyond the top ``k + 1`` values: the extra rank spent on an arbitrary init."""
    if k < 0:
        raise ValueError(f"k={k} must be non-negative")
    return _tail(Y, min(k + 1, min(Y.shape)), normalize)


def shifted_doubled_spectrum(d: int) -> Spectrum:
    """Squared singular values of ``([H, -H] + 1) / 2``: ``d**2/2 + d/2`` once, then ``d/2``.

    >>> shifted_doubled_spectrum(4).squared_singular_values.tolist()
    [10.0, 2.0, 2.0, 2.0]
    """
    hadamard_of_dim(d)
    values = torch.full((d,), d / 2, dtype=torch.float64)
    values[0] = d * d / 2 + d / 2
    return Spectrum(values, float(d * d))


class Hypergeometric(NamedTuple):
    total_unseen_loss: float
    mean_q: float
    var_q: float


def hypergeometric_unseen_loss(d: int, k: int) -> Hypergeometric:
    """Expected unseen loss of the label-average predictor on a balanced permuted label vector.

    ``q`` counts the ``+1`` labels among the ``d - k`` unseen rows, a hypergeometric draw.

    >>> round(hypergeometric_unseen_loss(16, 4).total_unseen_loss, 4)
    11.7333
    """
    if d % 2:
        raise ValueError(f"balanced labels need an even d, got {d}")
    _check_k(k, d)
    mean_q = (d - k) / 2
    var_q = (d - k) * k / (4 * (d - 1))
    total = d - k * d / (d - 1) if k < d else 0.0
    return Hypergeometric(total, mean_q, var_q)


class HypergeometricSample(NamedTuple):
    q: Tensor
    unseen_loss: Tensor


def simulate_hypergeometric(d: int, k: int, trials: int, seed: int = 0) -> HypergeometricSample:
    """Permute a balanced ``{-1, +1}`` vector ``trials`` times and score the label-average predictor."""
    if d % 2:
        raise ValueError(f"balanced labels need an even d, got {d}")
    _check_k(k, d)
    base = torch.cat([torch.ones(d // 2), -torch.ones(d // 2)]).to(torch.float64)
    rng = seeding.generator(seed, 0, seeding.Stream.SAMPLING)
    qs, losses = [], []
    for _ in range(trials):
        y = base[seeding.permutation(rng, d)]
        unseen = y[k:]
        qs.append(float((unseen > 0).sum()))
        if unseen.numel():
            prediction = -float(y[:k].sum()) / unseen.numel()
            losses.append(float(((unseen - prediction) ** 2).sum()))
        else:
            losses.append(0.0)
    return HypergeometricSample(torch.tensor(qs, dtype=torch.float64), torch.tensor(losses, dtype=torch.float64))


def simulate_coupon(d: int, k_values: Sequence[int], trials: int, seed: int = 0) -> Tensor:
    """Fraction of ``d`` rows never hit by ``k`` i.i.d. uniform draws, shape ``(trials, len(k_values))``."""
    rng = seeding.generator(seed, 1, seeding.Stream.SAMPLING)
    k_max = max(k_values) if len(k_values) else 0
    out = torch.zeros(trials, len(k_values), dtype=torch.float64)
    for trial in range(trials):
        draws = torch.from_numpy(rng.integers(0, d, size=k_max))
        for j, k in enumerate(k_values):
            out[trial, j] = 1.0 - torch.unique(draws[:k]).numel() / d
    return out


def two_layer_span_basis(W10: Tensor, w20: Tensor, X_tr: Tensor) -> Tensor:
    """Orthonormal basis of ``span[W10 w20, W10 W10^T X_tr^T, X_tr^T]``, rank at most ``2k + 1``."""
    W10 = W10.to(torch.float64)
    X_tr = X_tr.to(torch.float64)
    generators = torch.cat([(W10 @ w20).unsqueeze(1), W10 @ W10.T @ X_tr.T, X_tr.T], dim=1)
    return linalg.orthonormal_basis(generators)


@dataclass(frozen=True, eq=False)
class OptimalitySweep:
    tails: Tensor
    closed_form: Tensor
    gradient_descent: Tensor

    @property
    def minimizer(self) -> float:
        return float(self.tails[int(torch.argmin(self.closed_form))])


def zero_init_optimality_sweep(d: int, k: int, tails: Sequence[float]) -> OptimalitySweep:
    """Average loss on the rotated problem ``(sqrt(d) I, s)`` as a function of the unseen init.

    The init puts ``t`` on every unseen coordinate. Over both signs of an unseen label the row
    costs ``((sqrt(d) t - 1)**2 + (sqrt(d) t + 1)**2) / 2``, minimized at ``t = 0``. The closed
    form is checked against an actual GD run scored on both label signs.
    """
    from spindle_bounds.learners import InitKind, LearnerConfig, average_loss, train_linear_gd
    from spindle_bounds.problems import Family, LabelRange, Problem

    _check_k(k, d)
    root = math.sqrt(d)
    X = root * torch.eye(d, dtype=torch.float64)
    closed, gd = [], []
    for t in tails:
        closed.append((d - k) * (0.5 * ((root * t - 1) ** 2 + (root * t + 1) ** 2)) / d)
        w0 = torch.zeros(d, dtype=torch.float64)
        w0[k:] = t
        cfg = LearnerConfig(eta=1.0 / d, init=InitKind.FIXED, w0=w0)
        runs = []
        for sign in (1.0, -1.0):
            y = torch.ones(d, dtype=torch.float64)
            y[k:] = sign
            p = Problem(X, y.unsqueeze(1), 0, Family.SIGN_FLIP, 0, LabelRange.PLUS_MINUS_ONE)
            runs.append(average_loss(train_linear_gd(p, k, cfg), p))
        gd.append(sum(runs) / 2)
    as_tensor = lambda v: torch.tensor(v, dtype=torch.float64)  # noqa: E731
    return OptimalitySweep(as_tensor(list(tails)), as_tensor(closed), as_tensor(gd))


@dataclass(frozen=True, eq=False)
class ConcentrationReport:
    """Tail spectra of random ``{-1, +1}`` matrices.

    ``tail_fraction[i]`` is ``sum_{j > k} s_j**2 / d**2`` for trial ``i``; ``exceed_fraction[j]``
    is the share of trials whose tail reaches ``1 - (c_hat + t_j / sqrt(d))**2 k / d``.
    """

    d: int
    k: int
    tail_fraction: Tensor
    top_singular: Tensor
    frobenius_sq: Tensor
    spectral_sum: Tensor
    deterministic_holds: Tensor
    t_grid: Tensor
    exceed_fraction: Tensor

    @property
    def c_hat(self) -> float:
        return float(self.top_singular.mean()) / math.sqrt(self.d)


def spectrum_concentration_experiment(
    d: int,
    k: int,
    trials: int,
    seed: int = 0,
    t_grid: Sequence[float] = (0.0, 0.5, 1.0, 2.0),
) -> ConcentrationReport:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    _check_k(k, d)
    rng = seeding.generator(seed, 2, seeding.Stream.SAMPLING)
    tails, tops, frob, sums, holds = [], [], [], [], []
    for _ in range(trials):
        M = seeding.signs(rng, d * d).reshape(d, d)
        s2 = torch.linalg.svdvals(M) ** 2
        exact = M.to(torch.int64)
        fro = float((exact * exact).sum())
        tail = float(s2[k:].sum())
        tails.append(tail / (d * d))
        tops.append(math.sqrt(float(s2[0])))
        frob.append(fro)
        sums.append(float(s2.sum()))
        holds.append(tail >= d * d - k * float(s2[0]) - 1e-8 * d * d)
    tail_fraction = torch.tensor(tails, dtype=torch.float64)
    top = torch.tensor(tops, dtype=torch.float64)
    c_hat = float(top.mean()) / math.sqrt(d)
    grid = torch.tensor(list(t_grid), dtype=torch.float64)
    thresholds = 1.0 - (c_hat + grid / math.sqrt(d)) ** 2 * k / d
    exceed = (tail_fraction.unsqueeze(0) >= thresholds.unsqueeze(1)).to(torch.float64).mean(dim=1)
    return ConcentrationReport(
        d,
        k,
        tail_fraction,
        top,
        torch.tensor(frob, dtype=torch.float64),
        torch.tensor(sums, dtype=torch.float64),
        torch.tensor(holds),
        grid,
        exceed,
    )


def stderr(samples: Tensor) -> float:
    """Standard error of the mean, zero for fewer than two samples."""
    n = samples.numel()
    if n < 2:
        return 0.0
    return float(samples.std()) / math.sqrt(n)
