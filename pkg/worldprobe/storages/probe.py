# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
from typing import Any, Dict, Optional

from worldprobe.models.result import ProbeReport
from worldprobe.probe import Probe, ProbeConfig, build_probe
from worldprobe.storages.storage import BlobStorage

__all__ = ["SavedProbe", "ProbeStorage"]


class SavedProbe:
    """
    A trained probe with what is needed to re-evaluate it.

    ``split`` records the seed and counts of the train/test split and
    ``report`` the evaluation made right after training.
    """

    def __init__(self, probe: Probe, tap: str, margin: int,
                 split: Dict[str, Any], report: Optional[ProbeReport] = None,
                 provenance: Optional[Dict[str, Any]] = None):
        self.probe = probe
        self.tap = tap
        self.margin = margin
        self.split = dict(split)
        self.report = report
        self.provenance = dict(provenance or {})


class ProbeStorage(BlobStorage):
    """Trained probes (magic ``APPB``)."""

    magic = b"APPB"
    __version__ = 1

    def dumps(self, saved: SavedProbe) -> bytes:
        header = dict(
            probe=saved.probe.config.dict(),
            input_dim=saved.probe.input_dim,
            history=list(saved.probe.history),
            tap=saved.tap,
            margin=saved.margin,
            split=saved.split,
            report=saved.report.dict() if saved.report else None,
            provenance=saved.provenance,
        )
        return self.pack(header, saved.probe.state_dict())

    def loads(self, data: bytes, name: str = "probe") -> SavedProbe:
        header, parameters = self.unpack(data, name)

        probe = build_probe(header["input_dim"], ProbeConfig(**header["probe"]))
        probe.load_state_dict(parameters)
        probe.history = list(header.get("history", []))

        report = header.get("report")
        return SavedProbe(probe, header["tap"], header["margin"], header["split"],
                          ProbeReport(**report) if report else None,
                          header.get("provenance"))
