# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import hashlib
from typing import Any, Dict, Optional

import numpy as np

from worldprobe.agent import AgentConfig, AgentNet
from worldprobe.storages.storage import BlobStorage

__all__ = ["Checkpoint", "CheckpointStorage"]


class Checkpoint:
    """Agent parameters with the config and metadata that produced them."""

    def __init__(self, agent_config: AgentConfig, parameters: Dict[str, np.ndarray],
                 metadata: Optional[Dict[str, Any]] = None,
                 provenance: Optional[Dict[str, Any]] = None):
        self.agent_config = agent_config
        self.parameters = parameters
        self.metadata = dict(metadata or {})
        self.provenance = dict(provenance or {})

    @classmethod
    def from_net(cls, net: AgentNet, **kwargs) -> "Checkpoint":
        return cls(net.config, net.state_dict(), **kwargs)

    def build(self) -> AgentNet:
        net = AgentNet(self.agent_config)
        net.load_state_dict(self.parameters)
        return net

    @property
    def id(self) -> str:
        digest = hashlib.sha1()
        for name, value in self.parameters.items():
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(value, dtype="<f4").tobytes())
        return digest.hexdigest()[:16]


class CheckpointStorage(BlobStorage):
    """Agent checkpoints (magic ``APCK``)."""

    magic = b"APCK"
    __version__ = 1

    def dumps(self, checkpoint: Checkpoint) -> bytes:
        header = dict(agent=checkpoint.agent_config.dict(),
                      metadata=checkpoint.metadata,
                      provenance=checkpoint.provenance)
        return self.pack(header, checkpoint.parameters)

    def loads(self, data: bytes, name: str = "checkpoint") -> Checkpoint:
        header, parameters = self.unpack(data, name)
        return Checkpoint(AgentConfig(**header["agent"]), parameters,
                          header.get("metadata"), header.get("provenance"))
