"""Pointwise losses and the constant each one contributes to the label-symmetric lower bounds."""
from enum import Enum
from typing import NamedTuple, Tuple

import torch
from scipy.optimize import minimize_scalar
from torch import Tensor

#: grid resolution of the coarse search in :func:`loss_property_constant`
GRID_POINTS = 4001


class LossKind(str, Enum):
    SQUARE = "square"
    ABSOLUTE = "absolute"
    HINGE = "hinge"
    LOGISTIC = "logistic"


class LossConstant(NamedTuple):
    value: float
    argmin: float


def pointwise(kind: LossKind, y: Tensor, y_hat: Tensor) -> Tensor:
    """Loss ``L(y, y_hat)`` elementwise.

    Hinge and logistic losses act on the margin ``y * y_hat`` and expect ``{-1, +1}`` labels.
    """
    kind = LossKind(kind)
    if kind is LossKind.SQUARE:
        return (y - y_hat) ** 2
    if kind is LossKind.ABSOLUTE:
        return (y - y_hat).abs()
    if kind is LossKind.HINGE:
        return torch.clamp(1.0 - y * y_hat, min=0.0)
    return torch.nn.functional.softplus(-y * y_hat)


def _symmetric_risk(kind: LossKind, labels: Tuple[float, float], y_hat: Tensor) -> Tensor:
    lo, hi = labels
    if kind in (LossKind.HINGE, LossKind.LOGISTIC) and labels != (-1.0, 1.0):
        # margin losses see 0/1 labels through the affine map to {-1, +1}
        scale = 2.0 / (hi - lo)
        y_hat = scale * (y_hat - (lo + hi) / 2)
        lo, hi = -1.0, 1.0
    low = pointwise(kind, torch.full_like(y_hat, lo), y_hat)
    high = pointwise(kind, torch.full_like(y_hat, hi), y_hat)
    return 0.5 * (low + high)


def loss_property_constant(kind: LossKind, labels: Tuple[float, float] = (-1.0, 1.0)) -> LossConstant:
    """Minimum over predictions of the average loss on the two possible labels.

    This is the constant ``c`` (``c'`` for 0/1 labels) that scales the unseen-example loss in the
    label-symmetric lower bounds. A grid over ``[lo - 1, hi + 1]`` locates the basin, then a
    bounded scalar minimization refines it.

    >>> round(loss_property_constant(LossKind.SQUARE, (0.0, 1.0)).value, 12)
    0.25
    """
    kind = LossKind(kind)
    labels = (float(labels[0]), float(labels[1]))
    lo, hi = labels
    grid = torch.linspace(lo - 1.0, hi + 1.0, GRID_POINTS, dtype=torch.float64)
    risk = _symmetric_risk(kind, labels, grid)
    best = int(torch.argmin(risk))
    step = float(grid[1] - grid[0])
    left, right = float(grid[best]) - step, float(grid[best]) + step
    res = minimize_scalar(
        lambda t: float(_symmetric_risk(kind, labels, torch.tensor([t], dtype=torch.float64))),
        bounds=(left, right),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if res.fun <= float(risk[best]):
        return LossConstant(float(res.fun), float(res.x))
    return LossConstant(float(risk[best]), float(grid[best]))
