"""Orthogonal matrices and the executable rotation-invariance check.

A learner is rotation invariant when training on ``(X U^T, y)`` and predicting on ``U x`` gives the
same prediction as training on ``(X, y)`` and predicting on ``x``, for every orthogonal ``U``.
"""
import math
from dataclasses import dataclass, replace
from typing import Optional

import torch
from torch import Tensor

from spindle_bounds import seeding
from spindle_bounds.exceptions import DimensionError
from spindle_bounds.hadamard import HadamardMatrix
from spindle_bounds.learners import LearnerConfig, LearnerKind, train
from spindle_bounds.problems import Problem

#: entrywise tolerance on ``U^T U = I``
ORTHOGONAL_ATOL = 1e-10


def is_orthogonal(U: Tensor, atol: float = ORTHOGONAL_ATOL) -> bool:
    if U.dim() != 2 or U.shape[0] != U.shape[1]:
        return False
    U = U.to(torch.float64)
    return bool(torch.allclose(U.T @ U, torch.eye(U.shape[0], dtype=torch.float64), rtol=0.0, atol=atol))


@dataclass(frozen=True, eq=False)
class OrthogonalMatrix:
    entries: Tensor

    def __post_init__(self) -> None:
        if self.entries.dim() != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise DimensionError(f"orthogonal matrix must be square, got {tuple(self.entries.shape)}")
        if not is_orthogonal(self.entries):
            raise ValueError("U^T U deviates from the identity")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def T(self) -> "OrthogonalMatrix":
        return OrthogonalMatrix(self.entries.T.contiguous())


def random_orthogonal(d: int, seed: int) -> OrthogonalMatrix:
    """Haar-distributed ``U``: QR of a Gaussian matrix with the signs of ``diag(R)`` moved into ``Q``."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    G = seeding.gaussian(seeding.generator(seed, 0, seeding.Stream.ROTATION), d, d)
    Q, R = torch.linalg.qr(G)
    return OrthogonalMatrix(Q * torch.sign(torch.diagonal(R)))


def hadamard_rotation(s: Tensor, h: HadamardMatrix) -> OrthogonalMatrix:
    """``diag(s) H / sqrt(d)``; it maps ``diag(s) H`` to ``sqrt(d) I`` and ``e_1`` to ``s / sqrt(d)``."""
    if s.shape != (h.dim,):
        raise DimensionError(f"sign pattern has shape {tuple(s.shape)}, expected ({h.dim},)")
    return OrthogonalMatrix(s.to(torch.float64).unsqueeze(1) * h.float() / math.sqrt(h.dim))


def complement_rotation(s_tilde: Tensor, h: HadamardMatrix) -> OrthogonalMatrix:
    """``diag([1; s~]) H / sqrt(d)``.

    It sends every complemented problem ``(diag(s~) H~ + 1) / 2`` to the same matrix
    ``sqrt(d) / 2 [1, I]``, while the target weight becomes ``[1; s~] / sqrt(d)``.
    """
    if s_tilde.shape != (h.dim - 1,):
        raise DimensionError(f"sign pattern has shape {tuple(s_tilde.shape)}, expected ({h.dim - 1},)")
    signs = torch.cat([torch.ones(1, dtype=torch.float64), s_tilde.to(torch.float64)])
    return hadamard_rotation(signs, h)


def rotate_problem(p: Problem, U: OrthogonalMatrix) -> Problem:
    """Rotate every instance, ``X <- X U^T``; labels are unchanged."""
    if U.dim != p.d:
        raise DimensionError(f"rotation of dimension {U.dim} applied to {p.d} features")
    return replace(p, X=p.X @ U.entries.T)


def invariance_test(
    kind: LearnerKind,
    cfg: Optional[LearnerConfig],
    p: Problem,
    U: OrthogonalMatrix,
    k: int,
    paired_seed: int = 0,
) -> float:
    """Largest prediction gap between the plain and the rotated run over all rows of ``p``.

    Both runs draw the same init from ``paired_seed``; the rotated run starts from ``U W0``.
    """
    plain = train(kind, p, k, cfg, seed=paired_seed)
    rotated_problem = rotate_problem(p, U)
    rotated = train(kind, rotated_problem, k, cfg, seed=paired_seed, init_rotation=U.entries)
    gap = plain.predict(p.X) - rotated.predict(rotated_problem.X)
    return float(gap.abs().max())
