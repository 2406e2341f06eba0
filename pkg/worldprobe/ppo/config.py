# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
from pydantic import BaseModel, root_validator, validator

__all__ = ["PPOConfig"]


class PPOConfig(BaseModel):
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    epochs_per_batch: int = 4
    minibatch_size: int = 1024
    rollout_length: int = 128
    n_workers: int = 16
    lr: float = 2.5e-4
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    bptt_chunk: int = 32
    max_grad_norm: float = 0.5
    max_env_steps: int = 5_000_000
    convergence_threshold: float = 0.8
    convergence_window: int = 100
    adv_eps: float = 1e-8

    class Config:
        extra = "forbid"

    @validator("gamma", "gae_lambda")
    def _unit_interval(cls, v):
        if not 0.0 <= v <= 1.0:
            raise ValueError("must be within [0, 1]")
        return v

    @validator("clip_eps")
    def _clip(cls, v):
        if not 0.0 < v < 1.0:
            raise ValueError("must be within (0, 1)")
        return v

    @validator("epochs_per_batch", "minibatch_size", "rollout_length",
               "n_workers", "bptt_chunk", "max_env_steps", "convergence_window")
    def _positive(cls, v):
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @validator("lr", "max_grad_norm")
    def _positive_real(cls, v):
        if v <= 0.0:
            raise ValueError("must be positive")
        return v

    @root_validator(skip_on_failure=True)
    def _chunks_tile_rollout(cls, values):
        if values["rollout_length"] % values["bptt_chunk"]:
            raise ValueError("rollout_length must be a multiple of bptt_chunk")
        return values

    @property
    def batch_size(self) -> int:
        return self.rollout_length * self.n_workers
