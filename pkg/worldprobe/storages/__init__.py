# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Binary artifact formats."""

from .storage import (
    ArtifactStorage,
    BlobStorage,
    Reader,
    read_sidecar,
    sidecar_path,
    write_sidecar,
)
from .checkpoint import Checkpoint, CheckpointStorage
from .dataset import DatasetStorage, DatasetWriter, record_dtype
from .probe import ProbeStorage, SavedProbe
