from typing import Callable, Dict, Sequence

import torch
from torch.func import functional_call


def numerical_gradient(fn: Callable[[], torch.Tensor], x: torch.Tensor, eps: float = 1e-6) -> torch.Tensor:
    """Central differences of scalar ``fn()`` with respect to ``x`` (perturbed in place)."""
    grad = torch.zeros_like(x)
    flat, gflat = x.data.view(-1), grad.view(-1)
    with torch.no_grad():
        for i in range(flat.numel()):
            orig = flat[i].item()
            flat[i] = orig + eps
            plus = float(fn())
            flat[i] = orig - eps
            minus = float(fn())
            flat[i] = orig
            gflat[i] = (plus - minus) / (2.0 * eps)
    return grad


def max_relative_error(analytic: torch.Tensor, numeric: torch.Tensor, floor: float = 1e-3) -> float:
    """max |a - n| / max(|a|, |n|, floor); the floor keeps near-zero entries from dominating."""
    denom = torch.maximum(torch.maximum(analytic.abs(), numeric.abs()), torch.tensor(floor, dtype=analytic.dtype))
    return float(((analytic - numeric).abs() / denom).max()) if analytic.numel() else 0.0


def finite_difference_check(fn: Callable[..., torch.Tensor], inputs: Sequence[torch.Tensor],
                            eps: float = 1e-6) -> float:
    """Worst relative error between autograd and central differences over all ``inputs``."""
    leaves = [x.detach().clone().requires_grad_(True) for x in inputs]
    out = fn(*leaves)
    analytic = torch.autograd.grad(out, leaves, allow_unused=True)
    worst = 0.0
    for leaf, g in zip(leaves, analytic):
        g = torch.zeros_like(leaf) if g is None else g
        numeric = numerical_gradient(lambda: fn(*leaves), leaf, eps)
        worst = max(worst, max_relative_error(g, numeric))
    return worst


def module_gradient_check(module: torch.nn.Module, loss_fn: Callable[[torch.nn.Module], torch.Tensor],
                          eps: float = 1e-6) -> float:
    """Check d loss / d parameter for every parameter of ``module``.

    ``loss_fn(call)`` receives a callable with the module's forward signature.
    """
    names = [n for n, _ in module.named_parameters()]
    base: Dict[str, torch.Tensor] = {n: p.detach().clone() for n, p in module.named_parameters()}

    def loss_of(*values):
        params = dict(zip(names, values))
        return loss_fn(lambda *a, **k: functional_call(module, params, a, k))

    return finite_difference_check(loss_of, [base[n] for n in names], eps)
