# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Minimal numeric substrate: tensors, layers, losses, Adam."""

from .functional import (
    LSTMParams,
    categorical,
    conv2d,
    cross_entropy,
    embedding,
    entropy,
    get_activation,
    linear,
    log_softmax,
    lstm_step,
    sample_categorical,
    softmax,
    softmax_array,
)
from .gradcheck import check_gradients, numeric_gradient
from .module import Module
from .optim import Adam, AdamState, adam_update, clip_grad_norm
from .tensor import (
    Tensor,
    concat,
    get_default_dtype,
    minimum,
    precision,
    set_default_dtype,
    stack,
)
