"""Dense / shared-MLP / max-pool / dropout primitives in float64."""

from typing import Optional, Sequence, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from eplidar.errors import ShapeMismatch

DTYPE = torch.float64


def _check_in(layer: nn.Linear, x: torch.Tensor) -> None:
    if x.dim() == 0 or x.shape[-1] != layer.in_features:
        raise ShapeMismatch(
            f"Dense layer expects inner dim {layer.in_features}, got input shape {tuple(x.shape)}"
        )


def dense_layer(in_dim: int, out_dim: int, generator: Optional[torch.Generator] = None) -> nn.Linear:
    """nn.Linear in float64 with Kaiming-uniform init drawn from ``generator``."""
    layer = nn.Linear(in_dim, out_dim, dtype=DTYPE)
    bound = 1.0 / in_dim ** 0.5
    with torch.no_grad():
        layer.weight.uniform_(-bound, bound, generator=generator)
        layer.bias.uniform_(-bound, bound, generator=generator)
    return layer


def dense_forward(layer: nn.Linear, x: torch.Tensor) -> torch.Tensor:
    _check_in(layer, x)
    return F.linear(x, layer.weight, layer.bias)


def dense_backward(layer: nn.Linear, x: torch.Tensor, grad_out: torch.Tensor
                   ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Analytic gradients (dW, db, dx) of y = x Wᵀ + b for a (batch, in) input."""
    _check_in(layer, x)
    x2 = x.reshape(-1, layer.in_features)
    g2 = grad_out.reshape(-1, layer.out_features)
    if g2.shape[0] != x2.shape[0]:
        raise ShapeMismatch(f"grad_out shape {tuple(grad_out.shape)} does not match input {tuple(x.shape)}")
    grad_w = g2.T @ x2
    grad_b = g2.sum(dim=0)
    grad_x = (g2 @ layer.weight).reshape(x.shape)
    return grad_w, grad_b, grad_x


class SharedMLP(nn.Module):
    """The same dense stack applied to every point (last axis = features)."""

    def __init__(self, widths: Sequence[int], final_relu: bool = True,
                 generator: Optional[torch.Generator] = None):
        super().__init__()
        if len(widths) < 2:
            raise ValueError(f"SharedMLP needs at least input and output widths, got {list(widths)}")
        self.widths = tuple(int(w) for w in widths)
        self.final_relu = final_relu
        self.layers = nn.ModuleList(
            dense_layer(a, b, generator) for a, b in zip(self.widths[:-1], self.widths[1:])
        )

    @property
    def out_dim(self) -> int:
        return self.widths[-1]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return shared_mlp(self.layers, x, self.final_relu)


def shared_mlp(layers: Sequence[nn.Linear], x: torch.Tensor, final_relu: bool = False) -> torch.Tensor:
    last = len(layers) - 1
    for i, layer in enumerate(layers):
        x = dense_forward(layer, x)
        if i < last or final_relu:
            x = F.relu(x)
    return x


def max_pool_points(features: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Column-wise max over the point axis (-2) and the winning row per column.

    Gradient flows to exactly one row per column, the lowest index among ties.
    """
    if features.dim() < 2 or features.shape[-2] == 0:
        raise ShapeMismatch(f"max_pool_points needs at least one point, got shape {tuple(features.shape)}")
    idx = torch.argmax(features, dim=-2, keepdim=True)
    return features.gather(-2, idx).squeeze(-2), idx.squeeze(-2)


def dropout(features: torch.Tensor, rate: float, generator: Optional[torch.Generator], training: bool) -> torch.Tensor:
    """Inverted dropout driven by an explicit generator; identity at inference."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return features
    keep = torch.rand(features.shape, generator=generator, dtype=features.dtype) >= rate
    return features * keep / (1.0 - rate)


class SeededDropout(nn.Module):
    """Dropout layer whose mode and mask stream can be overridden per call."""

    def __init__(self, rate: float, generator: Optional[torch.Generator] = None):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.generator = generator

    def forward(self, x: torch.Tensor, training: Optional[bool] = None,
                generator: Optional[torch.Generator] = None) -> torch.Tensor:
        gen = self.generator if generator is None else generator
        return dropout(x, self.rate, gen, self.training if training is None else training)
