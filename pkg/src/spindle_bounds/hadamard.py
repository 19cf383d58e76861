"""Sylvester Hadamard matrices and the bit-pattern expansion that produces their rows.

Entries are built and checked in ``torch.int64`` so orthogonality holds exactly; callers convert
to ``float64`` with :meth:`HadamardMatrix.float` when they need the dense real matrix.
"""
from dataclasses import dataclass

import torch
from torch import Tensor

from spindle_bounds.exceptions import CapacityError, DimensionError

#: largest supported order, i.e. ``d <= 4096``
MAX_ORDER = 12

_H2 = torch.tensor([[1, 1], [1, -1]], dtype=torch.int64)


@dataclass(frozen=True, eq=False)
class HadamardMatrix:
    """Square ``{-1, +1}`` matrix with orthogonal rows, first row and column all ``+1``."""

    entries: Tensor

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def order(self) -> int:
        return self.dim.bit_length() - 1

    def float(self) -> Tensor:
        return self.entries.to(torch.float64)

    def column(self, i: int) -> Tensor:
        return self.entries[:, i].to(torch.float64)


@dataclass(frozen=True, eq=False)
class StrippedHadamard:
    """Hadamard matrix with the all-ones first row removed, shape ``(d - 1, d)``."""

    entries: Tensor

    @property
    def dim(self) -> int:
        return self.entries.shape[1]

    def float(self) -> Tensor:
        return self.entries.to(torch.float64)


def sylvester(q: int, max_order: int = MAX_ORDER) -> HadamardMatrix:
    """Build the Sylvester Hadamard matrix of dimension ``2**q``.

    Args:
        q: order of the construction, ``H_{q+1} = [[H_q, H_q], [H_q, -H_q]]``
        max_order: memory cap on ``q``

    Raises:
        ValueError: if ``q`` is negative
        CapacityError: if ``q`` exceeds ``max_order``

    >>> sylvester(1).entries.tolist()
    [[1, 1], [1, -1]]
    """
    if q < 0:
        raise ValueError(f"Sylvester order must be non-negative, got {q}")
    if q > max_order:
        raise CapacityError(f"Sylvester order {q} (d={2 ** q}) exceeds the memory cap of order {max_order}")
    entries = torch.ones((1, 1), dtype=torch.int64)
    for _ in range(q):
        entries = torch.kron(_H2, entries)
    return HadamardMatrix(entries)


def hadamard_of_dim(d: int, max_order: int = MAX_ORDER) -> HadamardMatrix:
    """Sylvester matrix for a dimension given directly, which must be a power of two."""
    if d < 1 or d & (d - 1):
        raise ValueError(f"Hadamard dimension must be a power of two, got {d}")
    return sylvester(d.bit_length() - 1, max_order=max_order)


def is_hadamard(entries: Tensor) -> bool:
    """Exact check of ``H H^T = d I`` plus the all-ones first row and column."""
    if entries.dim() != 2 or entries.shape[0] != entries.shape[1]:
        return False
    d = entries.shape[0]
    exact = entries.to(torch.int64)
    if not bool(((exact == 1) | (exact == -1)).all()):
        return False
    if not bool((exact[0] == 1).all() and (exact[:, 0] == 1).all()):
        return False
    gram = exact @ exact.T
    return torch.equal(gram, d * torch.eye(d, dtype=torch.int64))


def strip_first_row(h: HadamardMatrix) -> StrippedHadamard:
    return StrippedHadamard(h.entries[1:].clone())


def all_bit_patterns(order: int) -> Tensor:
    """Every ``{-1, +1}`` pattern of length ``order``, one per row.

    Row ``j`` has bit ``i`` equal to ``-1`` exactly when binary digit ``i`` of ``j`` is set, so the
    first row is all ``+1`` and the second flips only the first bit.
    """
    j = torch.arange(2**order, dtype=torch.int64).unsqueeze(1)
    digits = (j >> torch.arange(order, dtype=torch.int64)) & 1
    return 1 - 2 * digits


def psi_expand(b: Tensor) -> Tensor:
    """Expand a bit pattern into all ``2**len(b)`` subset products.

    Coordinate ``c`` holds the product of ``b_i`` over the binary digits ``i`` set in ``c``
    (order ``1, b1, b2, b1 b2, b3, ...``), so expanding every pattern of
    :func:`all_bit_patterns` reproduces the rows of :func:`sylvester` in order.

    >>> psi_expand(torch.tensor([-1, 1])).tolist()
    [1, -1, 1, -1]
    """
    if b.dim() != 1:
        raise DimensionError(f"bit pattern must be a vector, got shape {tuple(b.shape)}")
    out = torch.ones(1, dtype=b.dtype)
    for bit in b:
        out = torch.cat([out, out * bit])
    return out


def kernel_dot(b: Tensor, b2: Tensor) -> Tensor:
    """Dot product of the two ψ expansions in ``O(log d)``: ``prod_i (1 + b_i b2_i)``."""
    if b.shape != b2.shape:
        raise DimensionError(f"bit patterns differ in length: {tuple(b.shape)} vs {tuple(b2.shape)}")
    return torch.prod(1 + b * b2)
