from typing import Tuple

import torch
import torch.nn.functional as F

from eplidar.errors import ShapeMismatch


def softmax_cross_entropy(logits: torch.Tensor, label: int) -> Tuple[torch.Tensor, torch.Tensor]:
    """Loss and analytic gradient (softmax - one_hot) for a single logit vector."""
    if logits.dim() != 1 or logits.shape[0] < 2:
        raise ShapeMismatch(f"Expected a 1-D logit vector with k >= 2, got shape {tuple(logits.shape)}")
    if not 0 <= label < logits.shape[0]:
        raise ShapeMismatch(f"label {label} out of range for {logits.shape[0]} classes")
    log_p = F.log_softmax(logits, dim=0)
    grad = log_p.exp().detach().clone()
    grad[label] -= 1.0
    return -log_p[label], grad


def cross_entropy(logits: torch.Tensor, labels: torch.Tensor, reduction: str = "mean") -> torch.Tensor:
    """Batched stable softmax cross-entropy; logits (B, k), labels (B,)."""
    if logits.dim() != 2 or labels.shape != logits.shape[:1]:
        raise ShapeMismatch(f"logits {tuple(logits.shape)} and labels {tuple(labels.shape)} do not align")
    return F.cross_entropy(logits, labels.long(), reduction=reduction)


def smooth_l1(pred: torch.Tensor, target: torch.Tensor, beta: float = 1.0, reduction: str = "sum") -> torch.Tensor:
    if pred.shape != target.shape:
        raise ShapeMismatch(f"smooth_l1 shapes differ: {tuple(pred.shape)} vs {tuple(target.shape)}")
    return F.smooth_l1_loss(pred, target, beta=beta, reduction=reduction)
