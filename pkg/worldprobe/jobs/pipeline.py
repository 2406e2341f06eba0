# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from worldprobe.exceptions import DimensionMismatchError, MissingArtifactError
from worldprobe.models import (
    REPORT_COLUMNS,
    ExperimentConfig,
    ProbeReport,
    ProbeSpec,
    reports_to_rows,
)
from worldprobe.ppo import TrainResult, train
from worldprobe.probe import (
    ActivationDataset,
    Control,
    apply_control,
    collect_activations,
    evaluate_probe,
    filter_boundary,
    split_dataset,
    train_probe,
)
from worldprobe.storages import (
    Checkpoint,
    CheckpointStorage,
    DatasetStorage,
    ProbeStorage,
    SavedProbe,
    write_sidecar,
)

__all__ = ["ExperimentJob", "write_report", "read_report", "ordering_summary"]

log = logging.getLogger(__name__)


def write_report(reports: List[ProbeReport], path: Path,
                 provenance: Optional[Dict[str, Any]] = None) -> Path:
    """Write the report table and its provenance sidecar."""

    frame = pd.DataFrame(reports_to_rows(reports), columns=REPORT_COLUMNS)
    frame.to_csv(path, index=False)
    write_sidecar(path, dict(provenance or {}, rows=len(reports),
                             controls=sorted({r.control for r in reports})))
    log.info(f"Wrote report with {len(reports)} rows to {path}")
    return path


def read_report(path: Path) -> pd.DataFrame:
    if not Path(path).is_file():
        raise MissingArtifactError(f"Report {path} does not exist.")
    return pd.read_csv(path)


def ordering_summary(reports: List[ProbeReport]) -> Dict[str, bool]:
    """
    Qualitative orderings between probes of one experiment.

    ``cell>=hidden/<arch>`` compares LSTM cell and hidden state taps per
    architecture, ``mlp3>=linear/<tap>`` compares architectures per tap.
    """

    by_key = {(r.tap, r.arch): r.acc_mean for r in reports if r.control == "none"}
    summary = {}

    for arch in ("linear", "mlp3"):
        cell, hidden = by_key.get(("lstm_cell", arch)), by_key.get(("lstm_hidden", arch))
        if cell is not None and hidden is not None:
            summary[f"cell>=hidden/{arch}"] = cell >= hidden

    for tap in sorted({tap for tap, _ in by_key}):
        mlp, lin = by_key.get((tap, "mlp3")), by_key.get((tap, "linear"))
        if mlp is not None and lin is not None:
            summary[f"mlp3>=linear/{tap}"] = mlp >= lin

    return summary


class ExperimentJob:
    """
    Facade of the pipeline.

    Runs train, collect, probe and eval stages for one
    :class:`ExperimentConfig` and keeps all artifacts in ``output_dir``.
    """

    def __init__(self, config: ExperimentConfig, progress_bar: bool = True):
        self.config = config
        self.progress_bar = progress_bar
        self.output_dir = Path(config.output_dir)

        self.checkpoints = CheckpointStorage()
        self.datasets = DatasetStorage()
        self.probes = ProbeStorage()

    # artifact layout

    def checkpoint_path(self, best: bool = False) -> Path:
        return self.output_dir / ("checkpoint_best.apck" if best else "checkpoint_final.apck")

    @property
    def metrics_path(self) -> Path:
        return self.output_dir / "metrics.csv"

    def dataset_path(self, tap: str) -> Path:
        return self.output_dir / f"activations_{tap}.apds"

    def probe_path(self, probe_spec: ProbeSpec, control: str = "none") -> Path:
        suffix = "" if control == "none" else f"_{control}"
        return self.output_dir / f"probe_{probe_spec.tap}_{probe_spec.arch}{suffix}.appb"

    def report_path(self, control: str = "none", evaluated: bool = False) -> Path:
        stem = "eval_report" if evaluated else "report"
        suffix = "" if control == "none" else f"_{control}"
        return self.output_dir / f"{stem}{suffix}.csv"

    # stages

    def train(self) -> TrainResult:
        config = self.config
        result = train(config.room, config.agent, config.ppo, config.seeds.train,
                       progress_bar=self.progress_bar)

        metadata = dict(env_steps=result.env_steps, mean_return=result.mean_return,
                        best_return=result.best_return, converged=result.converged)
        provenance = config.provenance("train")

        self.checkpoints.save(Checkpoint(config.agent, result.final_state,
                                         metadata, provenance),
                              self.checkpoint_path())
        self.checkpoints.save(Checkpoint(config.agent, result.best_state,
                                         metadata, provenance),
                              self.checkpoint_path(best=True))

        self.metrics_path.parent.mkdir(parents=True, exist_ok=True)
        result.metrics.to_csv(self.metrics_path, index=False)
        write_sidecar(self.metrics_path, dict(provenance, **metadata))
        log.info(f"Wrote {len(result.metrics)} metric rows to {self.metrics_path}")

        return result

    def load_checkpoint(self, best: bool = False) -> Checkpoint:
        return self.checkpoints.load(self.checkpoint_path(best))

    def collect(self, checkpoint: Optional[Checkpoint] = None) -> Dict[str, ActivationDataset]:
        """
        Stream activation records of every configured tap to disk.

        :return: the written datasets, memory-mapped.
        """

        config = self.config
        checkpoint = checkpoint or self.load_checkpoint()
        dims = config.agent.probe_tap_dims()
        n = config.collect.n_samples

        sinks = {tap: self.datasets.writer(self.dataset_path(tap), tap, n, dims[tap])
                 for tap in config.taps}
        collect_activations(
            checkpoint.build(),
            config.room,
            config.taps,
            n=n,
            seed=config.seeds.collect,
            n_envs=config.collect.n_envs,
            n_proc=config.collect.n_proc,
            progress_bar=self.progress_bar,
            metadata=dict(checkpoint_id=checkpoint.id,
                          provenance=config.provenance("collect")),
            sinks=sinks,
        )

        return {tap: self.load_dataset(tap) for tap in config.taps}

    def load_dataset(self, tap: str) -> ActivationDataset:
        dataset = self.datasets.load(self.dataset_path(tap), mmap=True)
        expected = self.config.agent.probe_tap_dims()[tap]

        if dataset.dim != expected:
            raise DimensionMismatchError(
                f"Dataset {self.dataset_path(tap)} has activation_dim {dataset.dim},"
                f" tap {tap!r} of the configured agent has {expected}.")

        return dataset

    def _prepare(self, dataset: ActivationDataset, margin: int, control: str,
                 split: Dict) -> Tuple[ActivationDataset, ActivationDataset]:
        filtered = filter_boundary(dataset, margin)
        filtered = apply_control(filtered, control, split["seed"])
        return split_dataset(filtered, split["n_train"], split["n_test"],
                             split["seed"], split["shrink"])

    def probe(self, control: str = "none") -> List[ProbeReport]:
        config = self.config
        control = Control(control).value
        split = dict(seed=config.seeds.probe, n_train=config.collect.n_train,
                     n_test=config.collect.n_test, shrink=config.collect.shrink)

        reports = []
        for probe_spec in config.probes:
            dataset = self.load_dataset(probe_spec.tap)
            train_set, test_set = self._prepare(dataset, config.margin, control, split)

            log.info(f"Training probe {probe_spec.label} on {len(train_set)} records"
                     f" ({len(test_set)} held out)")

            probe = train_probe(train_set, probe_spec.probe_config(seed=config.seeds.probe),
                                progress_bar=self.progress_bar)
            report = evaluate_probe(probe, test_set, control)

            self.probes.save(SavedProbe(probe, probe_spec.tap, config.margin, split, report,
                                        config.provenance("probe")),
                             self.probe_path(probe_spec, control))
            reports.append(report)

        write_report(reports, self.report_path(control), config.provenance("probe"))
        return reports

    def evaluate(self, control: str = "none") -> List[ProbeReport]:
        """
        Re-evaluate saved probes on their saved datasets.

        The split is rebuilt from the seed and counts stored with each probe.
        The result is written to ``eval_report*.csv`` and compared with the
        report of the probe stage when that one exists.
        """

        control = Control(control).value
        reports = []

        for probe_spec in self.config.probes:
            saved = self.probes.load(self.probe_path(probe_spec, control))
            dataset = self.load_dataset(saved.tap)
            _, test_set = self._prepare(dataset, saved.margin, control, saved.split)

            report = evaluate_probe(saved.probe, test_set, control)
            if saved.report is not None and saved.report.row() != report.row():
                log.warning(f"Probe {probe_spec.label} no longer reproduces its saved report")
            reports.append(report)

        path = write_report(reports, self.report_path(control, evaluated=True),
                            self.config.provenance("eval"))

        original = self.report_path(control)
        if original.is_file():
            if read_report(path).equals(read_report(original)):
                log.info(f"{path.name} reproduces {original.name}")
            else:
                log.warning(f"{path.name} differs from {original.name}")

        return reports

    def run_all(self) -> List[ProbeReport]:
        """Train, collect, probe and evaluate in one go."""

        result = self.train()
        if not result.converged:
            log.warning("Agent did not converge, probing the final checkpoint anyway")

        self.collect()
        reports = self.probe()
        self.evaluate()

        for key, holds in ordering_summary(reports).items():
            log.info(f"Ordering {key}: {'holds' if holds else 'violated'}")

        return reports
