from .layers import (
    DTYPE,
    SeededDropout,
    SharedMLP,
    dense_backward,
    dense_forward,
    dense_layer,
    dropout,
    max_pool_points,
    shared_mlp,
)
from .losses import cross_entropy, smooth_l1, softmax_cross_entropy
from .optim import OneCycleConfig, OptimizerState, adam_step, make_optimizer, onecycle_lr, scheduled_step
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import finite_difference_check, module_gradient_check, numerical_gradient

__all__ = [
    "DTYPE",
    "SeededDropout",
    "SharedMLP",
    "dense_backward",
    "dense_forward",
    "dense_layer",
    "dropout",
    "max_pool_points",
    "shared_mlp",
    "cross_entropy",
    "smooth_l1",
    "softmax_cross_entropy",
    "OneCycleConfig",
    "OptimizerState",
    "adam_step",
    "make_optimizer",
    "onecycle_lr",
    "scheduled_step",
    "load_checkpoint",
    "save_checkpoint",
    "finite_difference_check",
    "module_gradient_check",
    "numerical_gradient",
]
