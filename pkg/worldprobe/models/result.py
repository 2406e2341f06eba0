# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, validator

__all__ = ["LossReport", "ProbeReport", "REPORT_COLUMNS", "reports_to_rows"]

REPORT_COLUMNS = ["tap", "arch", "acc_x", "acc_y", "acc_mean", "chance", "n_test"]


class LossReport(BaseModel):
    policy_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float
    approx_kl: float = 0.0
    grad_norm: float = 0.0
    n_minibatches: int = 0


class ProbeReport(BaseModel):
    """Position accuracy of one probe on a held-out set."""

    tap: str
    arch: str
    acc_x: float
    acc_y: float
    acc_mean: float
    chance: float
    n_test: int
    margin: int = 0
    control: str = "none"
    config: Optional[Dict[str, Any]]

    @validator("acc_x", "acc_y", "acc_mean", "chance")
    def _fraction(cls, v):
        if not 0.0 <= v <= 1.0:
            raise ValueError("must be a fraction within [0, 1]")
        return v

    def row(self) -> Dict[str, Any]:
        return {key: getattr(self, key) for key in REPORT_COLUMNS}

    @property
    def above_chance(self) -> float:
        return self.acc_mean / self.chance


def reports_to_rows(reports: List[ProbeReport]) -> List[Dict[str, Any]]:
    return [report.row() for report in reports]
