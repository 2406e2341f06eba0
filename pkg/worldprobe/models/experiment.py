# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic import BaseModel, root_validator, validator

from worldprobe.agent.config import AgentConfig
from worldprobe.env.config import MapKind, RoomConfig
from worldprobe.ppo.config import PPOConfig
from worldprobe.probe.config import ProbeConfig
from worldprobe.probe.dataset import margin_for_crop

__all__ = ["Seeds", "CollectConfig", "ProbeSpec", "ExperimentConfig"]


class Seeds(BaseModel):
    train: int = 0
    collect: int = 1
    probe: int = 2

    class Config:
        extra = "forbid"


class CollectConfig(BaseModel):
    """Activation collection and the train/test split."""

    n_samples: int = 230_000
    n_train: int = 200_000
    n_test: int = 30_000
    n_envs: int = 16
    n_proc: int = 1
    margin: Optional[int] = None
    shrink: bool = True

    class Config:
        extra = "forbid"

    @validator("n_samples", "n_train", "n_test", "n_envs", "n_proc")
    def _positive(cls, v):
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @validator("margin")
    def _margin(cls, v):
        if v is not None and v not in (0, 1, 2):
            raise ValueError("margin must be 0, 1 or 2")
        return v


class ProbeSpec(ProbeConfig):
    """A probe configuration bound to the tap it reads."""

    tap: str

    def probe_config(self, seed: Optional[int] = None) -> ProbeConfig:
        fields = self.dict(exclude={"tap"})
        if seed is not None:
            fields["seed"] = seed
        return ProbeConfig(**fields)

    @property
    def label(self) -> str:
        return f"{self.tap}/{self.arch}"


class ExperimentConfig(BaseModel):
    """
    Everything one experiment run needs, loaded from a YAML file.

    The boundary margin follows the crop size unless set explicitly:
    crop 9 gives 0, crop 5 gives 2 and crop 3 gives 1.
    """

    name: str = "experiment"
    room: RoomConfig = RoomConfig()
    agent: AgentConfig = AgentConfig()
    ppo: PPOConfig = PPOConfig()
    collect: CollectConfig = CollectConfig()
    probes: List[ProbeSpec] = []
    seeds: Seeds = Seeds()
    output_dir: Path = Path("runs")

    class Config:
        extra = "forbid"

    @root_validator(skip_on_failure=True)
    def _consistent(cls, values):
        room, agent = values["room"], values["agent"]

        if room.crop_size != agent.crop_size:
            raise ValueError(
                f"room.crop_size ({room.crop_size}) and agent.crop_size"
                f" ({agent.crop_size}) must agree")

        if room.n_actions != agent.n_actions:
            raise ValueError(
                f"room.action_set gives {room.n_actions} actions,"
                f" agent.n_actions is {agent.n_actions}")

        if agent.use_full_map and not room.full_map:
            raise ValueError("agent.use_full_map needs room.full_map")

        collect = values["collect"]
        implied = margin_for_crop(room.crop_size)
        if collect.margin is None:
            values["collect"] = collect.copy(update={"margin": implied})
        elif collect.margin != implied:
            raise ValueError(
                f"collect.margin {collect.margin} contradicts crop {room.crop_size}"
                f" (implies margin {implied})")

        taps = agent.tap_names
        for probe_spec in values["probes"]:
            if probe_spec.tap not in taps:
                raise ValueError(f"probe tap {probe_spec.tap!r} is not one of {taps}")

        return values

    @property
    def margin(self) -> int:
        return self.collect.margin

    @property
    def taps(self) -> List[str]:
        return list(dict.fromkeys(probe_spec.tap for probe_spec in self.probes))

    @classmethod
    def from_yaml(cls, yaml_string: str) -> "ExperimentConfig":
        """Load experiment config from yaml string."""

        return cls(**(yaml.safe_load(yaml_string) or {}))

    @classmethod
    def from_yaml_file(cls, yaml_file) -> "ExperimentConfig":
        with open(yaml_file) as f:
            return cls.from_yaml(f.read())

    def to_yaml(self) -> str:
        return yaml.safe_dump(json.loads(self.json()), sort_keys=False)

    def with_overrides(self, seed: Optional[int] = None,
                       map_kind: Optional[str] = None,
                       crop: Optional[int] = None,
                       output_dir: Optional[Path] = None,
                       deterministic: bool = False) -> "ExperimentConfig":
        """
        Copy with command line overrides applied and re-validated.

        A new map kind resets the per-kind monster, trap and lighting
        defaults; a new crop size resizes both the room and the agent
        and re-derives the margin.
        """

        fields = json.loads(self.json())

        if seed is not None:
            fields["seeds"] = dict(train=seed, collect=seed, probe=seed)

        if map_kind is not None:
            room = fields["room"]
            for key in ("n_monsters", "n_traps", "lit"):
                room.pop(key, None)
            room["kind"] = MapKind(map_kind).value

        if crop is not None:
            fields["room"]["crop_size"] = crop
            fields["agent"]["crop_size"] = crop
            fields["collect"]["margin"] = None

        if output_dir is not None:
            fields["output_dir"] = str(output_dir)

        if deterministic:
            fields["collect"]["n_proc"] = 1

        return type(self)(**fields)

    def fingerprint(self) -> str:
        """Stable digest of the config, used as provenance id."""

        dumped = json.dumps(json.loads(self.json()), sort_keys=True)
        return hashlib.sha1(dumped.encode()).hexdigest()

    def provenance(self, stage: str) -> Dict[str, Any]:
        return dict(stage=stage, experiment=self.name, config=json.loads(self.json()),
                    config_hash=self.fingerprint(), seeds=self.seeds.dict())
