# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import logging
from typing import Optional

import numpy as np

from worldprobe.exceptions import (
    DimensionMismatchError,
    EmptyDatasetError,
    NonFiniteError,
    TrainingDivergedError,
)
from worldprobe.models.result import ProbeReport
from worldprobe.nn import Adam, cross_entropy
from worldprobe.probe.architectures import Probe, get_arch
from worldprobe.probe.config import ProbeConfig
from worldprobe.probe.dataset import ActivationDataset, chance_level
from worldprobe.utils.logging import progress

__all__ = ["build_probe", "train_probe", "evaluate_probe"]

log = logging.getLogger(__name__)


def build_probe(input_dim: int, config: ProbeConfig) -> Probe:
    return get_arch(config.arch)(input_dim, config)


def train_probe(train_set: ActivationDataset, config: ProbeConfig,
                progress_bar: bool = False) -> Probe:
    """
    Fit a probe with Adam on the summed cross-entropy of both heads.

    The mean training loss of every epoch is kept in ``probe.history``.

    :param train_set: records to fit.
    :param config: architecture and optimization settings.
    :param progress_bar: show progress bar or not.
    :return: the trained probe.
    """

    if not len(train_set):
        raise EmptyDatasetError("Can not train a probe on an empty dataset.")

    probe = build_probe(train_set.dim, config)
    optimizer = Adam(probe.parameters(), lr=config.lr)
    rng = np.random.default_rng(config.seed)

    xs = train_set.xs.astype(np.int64)
    ys = train_set.ys.astype(np.int64)

    with progress(progress_bar) as bar:
        task = bar.add_task(f"Probe {train_set.tap}/{config.arch}", total=config.epochs)

        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(len(train_set))
            total, batches = 0.0, 0

            for start in range(0, len(order), config.batch_size):
                index = order[start:start + config.batch_size]

                try:
                    x_scores, y_scores = probe.heads(train_set.activations[index])
                    loss = (cross_entropy(x_scores, xs[index]) +
                            cross_entropy(y_scores, ys[index]))

                    optimizer.zero_grad()
                    loss.backward()
                    optimizer.step()
                except NonFiniteError as e:
                    raise TrainingDivergedError(
                        f"Probe {config.arch} on {train_set.tap!r} diverged"
                        f" in epoch {epoch}: {e}") from e

                total += loss.item()
                batches += 1

            probe.history.append(total / batches)
            log.debug(f"Probe {train_set.tap}/{config.arch} epoch {epoch}"
                      f" loss {probe.history[-1]:.4f}")
            bar.update(task, advance=1)

    return probe


def evaluate_probe(probe: Probe, test_set: ActivationDataset,
                   control: str = "none") -> ProbeReport:
    """
    Per-axis accuracy of the argmax predictions on ``test_set``.

    :raises EmptyDatasetError: if the test set has no records.
    """

    if not len(test_set):
        raise EmptyDatasetError("Can not evaluate a probe on an empty dataset.")

    if test_set.dim != probe.input_dim:
        raise DimensionMismatchError(
            f"Probe expects activations of size {probe.input_dim},"
            f" dataset {test_set.tap!r} has {test_set.dim}.")

    pred_x, pred_y = probe.predict(test_set.activations)
    acc_x = float(np.mean(pred_x == test_set.xs))
    acc_y = float(np.mean(pred_y == test_set.ys))

    report = ProbeReport(
        tap=test_set.tap,
        arch=probe.config.arch,
        acc_x=acc_x,
        acc_y=acc_y,
        acc_mean=(acc_x + acc_y) / 2.0,
        chance=chance_level(test_set.margin),
        n_test=len(test_set),
        margin=test_set.margin,
        control=control,
        config=probe.config.dict(),
    )

    log.info(f"Probe {report.tap}/{report.arch}: x {acc_x:.3f} y {acc_y:.3f}"
             f" mean {report.acc_mean:.3f} (chance {report.chance:.3f})")
    return report
