"""SVD helpers shared by the learners and the spectral bounds."""
import torch
from torch import Tensor

#: singular values below ``RANK_RTOL * s_max`` count as zero
RANK_RTOL = 1e-10


def numerical_rank(A: Tensor, rtol: float = RANK_RTOL) -> int:
    if A.numel() == 0:
        return 0
    s = torch.linalg.svdvals(A)
    if float(s[0]) == 0.0:
        return 0
    return int((s > rtol * s[0]).sum())


def pinv(A: Tensor, rtol: float = RANK_RTOL) -> Tensor:
    """Moore-Penrose pseudo-inverse through an explicit SVD with a relative cutoff."""
    if A.numel() == 0:
        return torch.zeros(A.shape[1], A.shape[0], dtype=A.dtype)
    U, s, Vh = torch.linalg.svd(A, full_matrices=False)
    keep = s > rtol * s[0] if float(s[0]) > 0 else torch.zeros_like(s, dtype=torch.bool)
    inv = torch.where(keep, 1.0 / torch.where(keep, s, torch.ones_like(s)), torch.zeros_like(s))
    return Vh.T @ torch.diag(inv) @ U.T


def orthonormal_basis(A: Tensor, rtol: float = RANK_RTOL) -> Tensor:
    """Orthonormal basis of the column space of ``A``, shape ``(rows, rank)``."""
    if A.numel() == 0:
        return torch.zeros(A.shape[0], 0, dtype=torch.float64)
    U, s, _ = torch.linalg.svd(A.to(torch.float64), full_matrices=False)
    if float(s[0]) == 0.0:
        return U[:, :0]
    return U[:, : int((s > rtol * s[0]).sum())]


def projector(A: Tensor, rtol: float = RANK_RTOL) -> Tensor:
    """Orthogonal projector onto the column space of ``A``."""
    Q = orthonormal_basis(A, rtol)
    return Q @ Q.T


def span_residual(v: Tensor, basis: Tensor) -> float:
    """Norm of the part of ``v`` outside the span of the orthonormal columns of ``basis``."""
    v = v.reshape(-1).to(torch.float64)
    return float(torch.linalg.vector_norm(v - basis @ (basis.T @ v)))
