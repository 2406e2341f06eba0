# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
from typing import Optional

from pydantic import BaseModel, root_validator, validator

__all__ = ["ProbeConfig", "DEFAULT_LR"]

DEFAULT_LR = {
    "linear": 1e-3,
    "mlp3": 1e-4,
}


class ProbeConfig(BaseModel):
    """
    Probe architecture and optimization settings.

    ``lr`` defaults by architecture when omitted.
    """

    arch: str = "linear"
    hidden_dim: int = 256
    lr: Optional[float] = None
    epochs: int = 50
    batch_size: int = 1024
    seed: int = 0
    n_classes: int = 15

    class Config:
        extra = "forbid"

    @root_validator(skip_on_failure=True)
    def _default_lr(cls, values):
        if values.get("lr") is None:
            values["lr"] = DEFAULT_LR.get(values["arch"], 1e-3)
        return values

    @validator("hidden_dim", "epochs", "batch_size", "n_classes")
    def _positive(cls, v):
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @validator("lr")
    def _positive_lr(cls, v):
        if v is not None and v <= 0.0:
            raise ValueError("must be positive")
        return v
