from unittest.mock import patch

import numpy as np
import pytest

from worldprobe.agent import agent_forward, build_agent, initial_state
from worldprobe.env import RoomConfig, reset
from worldprobe.exceptions import CorruptArtifactError, FormatVersionError, MissingArtifactError
from worldprobe.probe import (
    ActivationDataset,
    ProbeConfig,
    collect_activations,
    evaluate_probe,
    onehot_positions,
    train_probe,
)
from worldprobe.storages import (
    Checkpoint,
    CheckpointStorage,
    DatasetStorage,
    ProbeStorage,
    SavedProbe,
    record_dtype,
)


def _dataset(n=50, dim=7, tap="lstm_cell"):
    rng = np.random.default_rng(0)
    return ActivationDataset(tap, rng.normal(size=(n, dim)), rng.integers(0, 15, n),
                             rng.integers(0, 15, n), metadata={"seed": 3, "map": "random"})


def test_checkpoint_round_trip(tmp_path, agent_config):
    net = build_agent(agent_config, 0)
    checkpoint = Checkpoint.from_net(net, metadata={"kind": "final"},
                                     provenance={"seed": 0})
    storage = CheckpointStorage()

    path = storage.save(checkpoint, tmp_path / "agent.apck")
    loaded = storage.load(path)

    assert storage.dumps(loaded) == path.read_bytes()
    assert loaded.id == checkpoint.id
    assert loaded.agent_config == agent_config
    assert loaded.metadata == {"kind": "final"}

    _, obs = reset(RoomConfig(), 0)
    restored = loaded.build()
    assert np.array_equal(agent_forward(net, obs, initial_state(net)).logits.data,
                          agent_forward(restored, obs, initial_state(restored)).logits.data)


def test_checkpoint_version_check(tmp_path, agent_config):
    storage = CheckpointStorage()
    path = storage.save(Checkpoint.from_net(build_agent(agent_config, 0)),
                        tmp_path / "agent.apck")

    with patch.object(CheckpointStorage, "__version__", 2):
        with pytest.raises(FormatVersionError, match="found 1"):
            CheckpointStorage().load(path)


def test_bad_magic(tmp_path):
    path = DatasetStorage().save(_dataset(), tmp_path / "data.apds")

    with pytest.raises(CorruptArtifactError, match="APCK"):
        CheckpointStorage().load(path)


def test_dataset_round_trip(tmp_path):
    dataset = _dataset()
    storage = DatasetStorage()

    path = storage.save(dataset, tmp_path / "activations_lstm_cell.apds")
    loaded = storage.load(path)

    assert loaded == dataset
    assert loaded.metadata == {"seed": 3, "map": "random"}
    assert storage.sidecar(path).is_file()


def test_dataset_file_size(tmp_path):
    dataset = _dataset(n=120, dim=512)
    path = DatasetStorage().save(dataset, tmp_path / "d.apds")

    assert path.stat().st_size == DatasetStorage.file_size("lstm_cell", 120, 512)
    assert record_dtype(512).itemsize == 2050
    assert DatasetStorage.file_size("lstm_cell", 230_000, 512) == \
        4 + 2 + 2 + 9 + 4 + 4 + 1 + 230_000 * 2050


def test_truncated_dataset(tmp_path):
    path = DatasetStorage().save(_dataset(), tmp_path / "d.apds")
    path.write_bytes(path.read_bytes()[:-3])

    with pytest.raises(CorruptArtifactError):
        DatasetStorage().load(path)


def test_trailing_bytes(tmp_path, agent_config):
    path = CheckpointStorage().save(Checkpoint.from_net(build_agent(agent_config, 0)),
                                    tmp_path / "a.apck")
    path.write_bytes(path.read_bytes() + b"\x00")

    with pytest.raises(CorruptArtifactError):
        CheckpointStorage().load(path)


def test_missing_artifact(tmp_path):
    with pytest.raises(MissingArtifactError):
        DatasetStorage().load(tmp_path / "nothing.apds")


def test_probe_round_trip(tmp_path):
    dataset = onehot_positions(300, seed=1)
    probe = train_probe(dataset, ProbeConfig(epochs=2, batch_size=64))
    report = evaluate_probe(probe, dataset)
    storage = ProbeStorage()

    path = storage.save(SavedProbe(probe, "onehot", 0, {"seed": 2, "n_train": 300},
                                   report), tmp_path / "p.appb")
    loaded = storage.load(path)

    assert loaded.report == report
    assert loaded.split == {"seed": 2, "n_train": 300}
    assert loaded.probe.history == probe.history
    assert evaluate_probe(loaded.probe, dataset) == report


def test_writer_streams_records_in_any_order(tmp_path):
    dataset = _dataset(n=30, dim=5)
    storage = DatasetStorage()
    path = tmp_path / "activations_lstm_cell.apds"

    writer = storage.writer(path, dataset.tap, len(dataset), dataset.dim)
    for start in (20, 0, 10):
        stop = start + 10
        writer.write(start, dataset.activations[start:stop], dataset.xs[start:stop],
                     dataset.ys[start:stop])
    assert not path.exists()

    assert writer.finish({"seed": 3}) == path
    assert path.read_bytes() == storage.dumps(dataset)

    mapped = storage.load(path, mmap=True)
    assert mapped == dataset
    assert mapped.metadata == {"seed": 3}


def test_incomplete_writer(tmp_path):
    writer = DatasetStorage().writer(tmp_path / "d.apds", "conv1", 10, 2)
    writer.write(0, np.zeros((5, 2)), np.zeros(5), np.zeros(5))

    with pytest.raises(CorruptArtifactError):
        writer.write(8, np.zeros((5, 2)), np.zeros(5), np.zeros(5))
    with pytest.raises(CorruptArtifactError, match="5 of 10"):
        writer.finish({})


def test_mapped_load_checks_file_size(tmp_path):
    path = DatasetStorage().save(_dataset(), tmp_path / "d.apds")
    path.write_bytes(path.read_bytes()[:-3])

    with pytest.raises(CorruptArtifactError):
        DatasetStorage().load(path, mmap=True)
    with pytest.raises(MissingArtifactError):
        DatasetStorage().load(tmp_path / "nothing.apds", mmap=True)


def test_collect_into_dataset_files(tmp_path, agent_config):
    net = build_agent(agent_config, 0)
    storage = DatasetStorage()
    dim = agent_config.probe_tap_dims()["lstm_cell"]
    options = dict(n=60, seed=1, n_envs=4, progress_bar=False)

    sinks = {"lstm_cell": storage.writer(tmp_path / "c.apds", "lstm_cell", 60, dim)}
    paths = collect_activations(net, RoomConfig(), ["lstm_cell"], sinks=sinks,
                                block_steps=2, **options)
    in_memory = collect_activations(net, RoomConfig(), ["lstm_cell"], **options)

    loaded = storage.load(paths["lstm_cell"], mmap=True)
    assert loaded == in_memory["lstm_cell"]
    assert loaded.metadata["seed"] == 1
