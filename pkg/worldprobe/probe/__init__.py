# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Activation datasets and position probes."""

from .config import DEFAULT_LR, ProbeConfig
from .dataset import (
    ROOM_SIZE,
    ActivationDataset,
    MemorySink,
    RecordSink,
    chance_level,
    filter_boundary,
    margin_for_crop,
    split_dataset,
)
from .architectures import LinearProbe, MLP3Probe, Probe, get_arch, register
from .training import build_probe, evaluate_probe, train_probe
from .collect import ShardCollector, collect_activations
from .controls import (
    Control,
    apply_control,
    noise_like,
    onehot_positions,
    shuffled_labels,
)
