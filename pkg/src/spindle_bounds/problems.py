"""Randomized hard-problem families.

A :class:`Problem` pairs an ``(n, d)`` instance matrix with an ``(n, m)`` target matrix. The
training set after ``k`` examples is always the first ``k`` rows, and predictions are scored
against the column ``target_index`` of the targets.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Tuple

import torch
from torch import Tensor

from spindle_bounds import seeding
from spindle_bounds.exceptions import ConfigurationError, DimensionError
from spindle_bounds.hadamard import (
    HadamardMatrix,
    StrippedHadamard,
    all_bit_patterns,
    hadamard_of_dim,
    psi_expand,
    strip_first_row,
    sylvester,
)

#: allowed deviation of ``||w_star||`` from one
UNIT_TOLERANCE = 1e-12


class Family(str, Enum):
    SIGN_FLIP = "sign_flip"
    COMPLEMENT = "complement"
    PERMUTED = "permuted"
    GAUSSIAN = "gaussian"
    RANDOM_SIGN = "random_sign"
    DUPLICATED = "duplicated"
    DOUBLED_HADAMARD = "doubled_hadamard"
    SHIFTED_DOUBLED = "shifted_doubled"
    BIT_PATTERNS = "bit_patterns"

    @property
    def key(self) -> int:
        return list(Family).index(self) + 1


class LabelRange(str, Enum):
    PLUS_MINUS_ONE = "plus_minus_one"
    ZERO_ONE = "zero_one"
    REAL = "real"

    @property
    def midpoint(self) -> float:
        """Prediction minimizing the worst-case square loss on a label of unknown sign."""
        return 0.5 if self is LabelRange.ZERO_ONE else 0.0

    @property
    def interval(self) -> Optional[Tuple[float, float]]:
        if self is LabelRange.PLUS_MINUS_ONE:
            return (-1.0, 1.0)
        if self is LabelRange.ZERO_ONE:
            return (0.0, 1.0)
        return None


@dataclass(frozen=True, eq=False)
class Problem:
    X: Tensor
    Y: Tensor
    target_index: int = 0
    family: Family = Family.SIGN_FLIP
    seed: int = 0
    label_range: LabelRange = LabelRange.PLUS_MINUS_ONE

    def __post_init__(self) -> None:
        if self.X.dim() != 2 or self.Y.dim() != 2:
            raise DimensionError(f"X and Y must be matrices, got {tuple(self.X.shape)} and {tuple(self.Y.shape)}")
        if self.X.shape[0] != self.Y.shape[0]:
            raise DimensionError(f"X has {self.X.shape[0]} rows but Y has {self.Y.shape[0]}")
        if not 0 <= self.target_index < self.Y.shape[1]:
            raise DimensionError(f"target index {self.target_index} outside [0, {self.Y.shape[1]})")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def m(self) -> int:
        return self.Y.shape[1]

    @property
    def y(self) -> Tensor:
        return self.Y[:, self.target_index]

    def train(self, k: int) -> Tuple[Tensor, Tensor]:
        """The first ``k`` examples."""
        if not 0 <= k <= self.n:
            raise ValueError(f"prefix length k={k} outside [0, {self.n}]")
        return self.X[:k], self.y[:k]

    def with_target(self, target_index: int) -> "Problem":
        return replace(self, target_index=target_index)


class FeatureKind(str, Enum):
    IDENTITY = "identity"
    CONSTANT_E1 = "constant_e1"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Row-wise map ``R^d -> R^m``.

    ``CONSTANT_E1`` sends every Hadamard row to ``e_1`` while staying odd, ``phi(-x) = -phi(x)``:
    the first coordinate of the row (``+1`` on every unflipped Sylvester row) carries the sign.
    """

    kind: FeatureKind = FeatureKind.IDENTITY
    output_dim: Optional[int] = None
    fn: Optional[Callable[[Tensor], Tensor]] = field(default=None, compare=False)

    def __call__(self, X: Tensor) -> Tensor:
        if self.kind is FeatureKind.IDENTITY:
            return X.clone()
        if self.kind is FeatureKind.CONSTANT_E1:
            out = torch.zeros(X.shape[0], self.output_dim or X.shape[1], dtype=torch.float64)
            out[:, 0] = X[:, 0]
            return out
        if self.fn is None:
            raise ConfigurationError("a CUSTOM feature map needs `fn`")
        return torch.stack([self.fn(x) for x in X]).to(torch.float64)


def psi_feature_map() -> FeatureMap:
    """Custom map expanding ``log d`` bit patterns into Hadamard rows."""
    return FeatureMap(FeatureKind.CUSTOM, fn=psi_expand)


def sign_flip_problem(h: HadamardMatrix, seed: int) -> Problem:
    """``(diag(s) H, s)`` for a uniform sign pattern ``s``; ``e_1`` has zero loss for every ``s``."""
    s = seeding.signs(seeding.generator(seed, Family.SIGN_FLIP.key, seeding.Stream.SIGNS), h.dim)
    return Problem(s.unsqueeze(1) * h.float(), s.unsqueeze(1), 0, Family.SIGN_FLIP, seed, LabelRange.PLUS_MINUS_ONE)


def complement_problem(ht: StrippedHadamard, seed: int) -> Problem:
    """``(1/2 (diag(s) H~ + 1), 1/2 (s + 1))``: each 0/1 row complemented together with its label."""
    s = seeding.signs(seeding.generator(seed, Family.COMPLEMENT.key, seeding.Stream.SIGNS), ht.entries.shape[0])
    X = 0.5 * (s.unsqueeze(1) * ht.float() + 1.0)
    Y = 0.5 * (s + 1.0).unsqueeze(1)
    return Problem(X, Y, 0, Family.COMPLEMENT, seed, LabelRange.ZERO_ONE)


def permuted_problem(h: HadamardMatrix, column: int, seed: int) -> Problem:
    """``(P H, P h)`` with ``h`` the Hadamard column ``column`` and ``P`` a uniform permutation.

    Columns are 0-based here, so the valid range is ``1 <= column < d`` (the constant first
    column is excluded).
    """
    if not 1 <= column < h.dim:
        raise ConfigurationError(f"permuted problem needs a non-constant column in [1, {h.dim}), got {column}")
    perm = seeding.permutation(seeding.generator(seed, Family.PERMUTED.key, seeding.Stream.PERMUTATION), h.dim)
    X = h.float()[perm]
    return Problem(X, X.clone(), column, Family.PERMUTED, seed, LabelRange.PLUS_MINUS_ONE)


def gaussian_problem(d: int, n: int, w_star: Tensor, seed: int) -> Problem:
    """I.i.d. standard normal instances labelled noise-free by the unit vector ``w_star``."""
    w_star = w_star.to(torch.float64)
    if w_star.shape != (d,):
        raise DimensionError(f"w_star must have shape ({d},), got {tuple(w_star.shape)}")
    if abs(float(torch.linalg.vector_norm(w_star)) - 1.0) > UNIT_TOLERANCE:
        raise ConfigurationError("w_star must be a unit vector")
    X = seeding.gaussian(seeding.generator(seed, Family.GAUSSIAN.key, seeding.Stream.GAUSSIAN), n, d)
    return Problem(X, (X @ w_star).unsqueeze(1), 0, Family.GAUSSIAN, seed, LabelRange.REAL)


def random_sign_problem(d: int, n: int, column: int, seed: int) -> Problem:
    """Random ``{-1, +1}`` instances whose label is the feature ``column``."""
    if not 0 <= column < d:
        raise ConfigurationError(f"column {column} outside [0, {d})")
    rng = seeding.generator(seed, Family.RANDOM_SIGN.key, seeding.Stream.SIGNS)
    X = seeding.signs(rng, n * d).reshape(n, d)
    return Problem(X, X.clone(), column, Family.RANDOM_SIGN, seed, LabelRange.PLUS_MINUS_ONE)


def duplicated_problem(h: HadamardMatrix, q: int, swap_seed: Optional[int] = None) -> Problem:
    """``q`` copies of each Hadamard row followed by ``q`` copies of its negation.

    The label is the first column, i.e. alternating blocks of ``(+1)^q`` and ``(-1)^q``. With a
    ``swap_seed`` each block pair is independently put in the order minus-first with
    probability one half.
    """
    if q < 1:
        raise ConfigurationError(f"duplication factor must be >= 1, got {q}")
    swaps = torch.zeros(h.dim, dtype=torch.bool)
    if swap_seed is not None:
        rng = seeding.generator(swap_seed, Family.DUPLICATED.key, seeding.Stream.SWAPS)
        swaps = seeding.signs(rng, h.dim) < 0
    rows = []
    for i, row in enumerate(h.float()):
        first, second = (-row, row) if swaps[i] else (row, -row)
        rows.extend([first] * q + [second] * q)
    X = torch.stack(rows)
    seed = 0 if swap_seed is None else swap_seed
    return Problem(X, X[:, :1].clone(), 0, Family.DUPLICATED, seed, LabelRange.PLUS_MINUS_ONE)


def doubled_targets(h: HadamardMatrix, shifted: bool = False) -> Problem:
    """Hadamard instances with all ``2d`` targets ``[H, -H]``, or ``([H, -H] + 1) / 2`` when shifted."""
    H = h.float()
    Y = torch.cat([H, -H], dim=1)
    if shifted:
        return Problem(H.clone(), (Y + 1.0) / 2, 0, Family.SHIFTED_DOUBLED, 0, LabelRange.ZERO_ONE)
    return Problem(H.clone(), Y, 0, Family.DOUBLED_HADAMARD, 0, LabelRange.PLUS_MINUS_ONE)


def bit_pattern_problem(order: int) -> Problem:
    """All ``log d``-bit patterns as instances with the Hadamard rows as targets."""
    X = all_bit_patterns(order).to(torch.float64)
    return Problem(X, sylvester(order).float(), 0, Family.BIT_PATTERNS, 0, LabelRange.PLUS_MINUS_ONE)


def apply_feature_map(p: Problem, f: FeatureMap) -> Problem:
    return replace(p, X=f(p.X))


def make_problem(
    family: Family,
    d: int,
    seed: int,
    column: int = 1,
    q: int = 1,
    n: Optional[int] = None,
    w_star: Optional[Tensor] = None,
) -> Problem:
    """Build any family from flat parameters, as the harness and the CLI do."""
    family = Family(family)
    if family is Family.GAUSSIAN:
        if w_star is None:
            w_star = torch.zeros(d, dtype=torch.float64)
            w_star[0] = 1.0
        return gaussian_problem(d, n or d, w_star, seed)
    if family is Family.RANDOM_SIGN:
        return random_sign_problem(d, n or d, column, seed)
    if family is Family.BIT_PATTERNS:
        return bit_pattern_problem(hadamard_of_dim(d).order).with_target(column)
    h = hadamard_of_dim(d)
    if family is Family.SIGN_FLIP:
        return sign_flip_problem(h, seed)
    if family is Family.COMPLEMENT:
        return complement_problem(strip_first_row(h), seed)
    if family is Family.PERMUTED:
        return permuted_problem(h, column, seed)
    if family is Family.DUPLICATED:
        return duplicated_problem(h, q, swap_seed=seed)
    return doubled_targets(h, shifted=family is Family.SHIFTED_DOUBLED).with_target(column)
