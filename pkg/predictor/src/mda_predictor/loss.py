"""Four-component training loss.

L = L_pred + lambda1 * L_recon + lambda2 * L_orth + lambda3 * L_rel, where
L_pred is per-mode MSE, L_recon is MSE of the summed-mode signal, L_orth is
the squared Frobenius distance of the predicted-window Gram from identity,
and L_rel is a relative error whose denominator is floored at tau. With
lambda2 = 0 the orthogonality term is still computed for logging but kept
out of the optimized total entirely.
"""
from dataclasses import dataclass

import torch

from .errors import InvalidInputError, ShapeError

_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class LossComponents:
    total: torch.Tensor
    pred: torch.Tensor
    recon: torch.Tensor
    orth: torch.Tensor
    rel: torch.Tensor

    def detached(self) -> dict:
        return {name: float(getattr(self, name).detach())
                for name in ("total", "pred", "recon", "orth", "rel")}


def predicted_gram(pred_modes: torch.Tensor) -> torch.Tensor:
    """Normalized Gram of each batch item's predicted mode windows.

    Entries are cosine similarities, so the diagonal is 1 for any non-silent
    mode and the identity target makes L_orth scale-free. Norms are floored
    to keep the division differentiable on silent modes.
    """
    if pred_modes.dim() != 3:
        raise ShapeError(f"expected (batch, modes, horizon), got shape "
                         f"{tuple(pred_modes.shape)}")
    raw = pred_modes @ pred_modes.transpose(1, 2)
    norms = torch.sqrt(torch.clamp(raw.diagonal(dim1=1, dim2=2), min=_NORM_FLOOR))
    return raw / (norms[:, :, None] * norms[:, None, :])


def total_loss(pred_modes, true_modes, pred_signal, true_signal, gram,
               weights=(0.1, 0.01, 0.05), tau: float = 0.01) -> LossComponents:
    """Combine the four components; returns every component alongside the
    weighted total."""
    if tau <= 0:
        raise InvalidInputError("tau must be positive")
    if pred_modes.shape != true_modes.shape:
        raise ShapeError(f"mode shapes differ: {tuple(pred_modes.shape)} vs "
                         f"{tuple(true_modes.shape)}")
    if pred_signal.shape != true_signal.shape:
        raise ShapeError(f"signal shapes differ: {tuple(pred_signal.shape)} vs "
                         f"{tuple(true_signal.shape)}")
    lambda1, lambda2, lambda3 = (float(v) for v in weights)
    pred = torch.mean((pred_modes - true_modes) ** 2)
    recon = torch.mean((pred_signal - true_signal) ** 2)
    identity = torch.eye(gram.shape[-1], dtype=gram.dtype)
    orth = torch.mean(torch.sum((gram - identity) ** 2, dim=(-2, -1)))
    rel = torch.mean(torch.abs(pred_modes - true_modes)
                     / torch.clamp(torch.abs(true_modes), min=tau))
    total = pred + lambda1 * recon + lambda3 * rel
    if lambda2 != 0.0:
        total = total + lambda2 * orth
    else:
        orth = orth.detach()
    return LossComponents(total=total, pred=pred, recon=recon, orth=orth, rel=rel)
