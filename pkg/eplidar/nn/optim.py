"""Adam with a OneCycle learning-rate schedule."""

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import torch

from eplidar.errors import ShapeMismatch, StepOutOfRange


@dataclass(frozen=True)
class OneCycleConfig:
    total_steps: int
    max_lr: float = 0.01
    momentum: float = 0.9  # Adam beta1
    beta2: float = 0.999
    eps: float = 1e-8
    warmup_fraction: float = 0.3
    final_lr_fraction: float = 1e-4
    div_factor: float = 25.0

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be >= 1, got {self.total_steps}")
        if not 0.0 <= self.warmup_fraction <= 1.0:
            raise ValueError(f"warmup_fraction must be in [0, 1], got {self.warmup_fraction}")
        if self.max_lr <= 0 or self.div_factor < 1 or not 0 < self.final_lr_fraction <= 1:
            raise ValueError("max_lr > 0, div_factor >= 1 and final_lr_fraction in (0, 1] are required")

    @property
    def warmup_steps(self) -> int:
        return int(round(self.warmup_fraction * self.total_steps))

    @property
    def initial_lr(self) -> float:
        return self.max_lr / self.div_factor


def onecycle_lr(step: int, config: OneCycleConfig) -> float:
    if not 0 <= step <= config.total_steps:
        raise StepOutOfRange(f"step {step} outside [0, {config.total_steps}]")
    warm = config.warmup_steps
    if warm > 0 and step <= warm:
        # written so that step == warm returns max_lr exactly
        down = 0.5 * (1.0 + math.cos(math.pi * step / warm))
        return config.max_lr - (config.max_lr - config.initial_lr) * down
    final = config.max_lr * config.final_lr_fraction
    span = config.total_steps - warm
    progress = (step - warm) / span if span > 0 else 1.0
    return final + (config.max_lr - final) * 0.5 * (1.0 + math.cos(math.pi * progress))


@dataclass
class OptimizerState:
    """torch Adam plus the schedule position; ``step`` counts completed updates."""

    optimizer: torch.optim.Adam
    config: OneCycleConfig
    step: int = 0

    @property
    def params(self) -> List[torch.Tensor]:
        return [p for group in self.optimizer.param_groups for p in group["params"]]

    def moments(self, param: torch.Tensor):
        state = self.optimizer.state.get(param, {})
        return state.get("exp_avg"), state.get("exp_avg_sq")

    @property
    def lr(self) -> float:
        return self.optimizer.param_groups[0]["lr"]


def make_optimizer(params: Iterable[torch.Tensor], config: OneCycleConfig) -> OptimizerState:
    opt = torch.optim.Adam(
        list(params), lr=onecycle_lr(0, config), betas=(config.momentum, config.beta2), eps=config.eps
    )
    return OptimizerState(optimizer=opt, config=config)


def scheduled_step(state: OptimizerState) -> float:
    """Apply one Adam update with the scheduled lr to gradients already in ``.grad``."""
    lr = onecycle_lr(state.step, state.config)
    for group in state.optimizer.param_groups:
        group["lr"] = lr
    state.optimizer.step()
    state.step += 1
    return lr


def adam_step(params: Sequence[torch.Tensor], grads: Sequence[torch.Tensor], state: OptimizerState
              ) -> List[torch.Tensor]:
    if len(params) != len(grads):
        raise ShapeMismatch(f"{len(params)} parameters but {len(grads)} gradients")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ShapeMismatch(f"gradient shape {tuple(g.shape)} does not match parameter {tuple(p.shape)}")
        p.grad = g.detach().clone().to(p.dtype)
    scheduled_step(state)
    return list(params)
