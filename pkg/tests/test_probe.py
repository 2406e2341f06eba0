import numpy as np
import pytest
from pydantic import ValidationError

from tests.conftest import tiny_agent
from worldprobe.agent import AgentConfig, build_agent
from worldprobe.env import MapKind, RoomConfig
from worldprobe.exceptions import (
    ConfigError,
    DimensionMismatchError,
    EmptyDatasetError,
    IndexOutOfRangeError,
    InsufficientRecordsError,
    UnknownArchitectureError,
    UnknownTapError,
)
from worldprobe.probe import (
    ActivationDataset,
    LinearProbe,
    MemorySink,
    MLP3Probe,
    ProbeConfig,
    apply_control,
    build_probe,
    chance_level,
    collect_activations,
    evaluate_probe,
    filter_boundary,
    get_arch,
    margin_for_crop,
    noise_like,
    onehot_positions,
    shuffled_labels,
    split_dataset,
    train_probe,
)

FAST = dict(arch="linear", lr=0.05, epochs=30, batch_size=128)


def _positions_dataset(n, seed=0, dim=4):
    rng = np.random.default_rng(seed)
    return ActivationDataset("linear1", rng.normal(size=(n, dim)),
                             rng.integers(0, 15, size=n), rng.integers(0, 15, size=n))


def test_chance_levels():
    assert round(100 * chance_level(0), 1) == 6.7
    assert round(100 * chance_level(2), 1) == 9.1
    assert round(100 * chance_level(1), 1) == 7.7
    with pytest.raises(ConfigError):
        chance_level(3)


def test_margin_for_crop():
    assert [margin_for_crop(k) for k in (9, 5, 3)] == [0, 2, 1]
    with pytest.raises(ConfigError):
        margin_for_crop(7)


def test_filter_boundary():
    dataset = _positions_dataset(5000)

    assert len(filter_boundary(dataset, 0)) == len(dataset)

    for margin in (1, 2):
        filtered = filter_boundary(dataset, margin)
        assert filtered.margin == margin
        for coords in (filtered.xs, filtered.ys):
            assert coords.min() >= margin and coords.max() <= 14 - margin
        inside = ((dataset.xs >= margin) & (dataset.xs <= 14 - margin) &
                  (dataset.ys >= margin) & (dataset.ys <= 14 - margin))
        assert len(filtered) == inside.sum()


def test_filter_boundary_drops_everything():
    dataset = ActivationDataset("conv1", np.zeros((3, 2)), [0, 14, 1], [5, 5, 0])
    with pytest.raises(EmptyDatasetError):
        filter_boundary(dataset, 2)
    with pytest.raises(ConfigError):
        filter_boundary(dataset, 3)


def test_dataset_validation():
    with pytest.raises(DimensionMismatchError):
        ActivationDataset("conv1", np.zeros((3, 2)), [0, 1], [0, 1, 2])
    with pytest.raises(IndexOutOfRangeError):
        ActivationDataset("conv1", np.zeros((1, 2)), [15], [0])
    with pytest.raises(IndexOutOfRangeError):
        ActivationDataset("conv1", np.zeros((1, 2)), [1], [1], margin=2)


def test_full_split():
    dataset = ActivationDataset("lstm_cell", np.zeros((230_000, 1)),
                                np.zeros(230_000), np.zeros(230_000))
    train, test = split_dataset(dataset, seed=0)

    assert (len(train), len(test)) == (200_000, 30_000)
    assert not np.intersect1d(train.ids, test.ids).size


def test_split_shrinks_proportionally():
    dataset = _positions_dataset(100_000, dim=1)
    train, test = split_dataset(dataset, 200_000, 30_000, seed=1)

    assert (len(train), len(test)) == (86_956, 13_043)
    assert not np.intersect1d(train.ids, test.ids).size

    with pytest.raises(InsufficientRecordsError):
        split_dataset(dataset, 200_000, 30_000, shrink=False)


def test_split_is_seeded():
    dataset = _positions_dataset(1000)
    first = split_dataset(dataset, 700, 300, seed=5)
    second = split_dataset(dataset, 700, 300, seed=5)
    other = split_dataset(dataset, 700, 300, seed=6)

    assert np.array_equal(first[0].ids, second[0].ids)
    assert np.array_equal(first[1].ids, second[1].ids)
    assert not np.array_equal(first[0].ids, other[0].ids)


def test_probe_decodes_onehot_positions():
    train, test = split_dataset(onehot_positions(4000, seed=0), 3000, 1000, seed=0)
    probe = train_probe(train, ProbeConfig(**FAST))
    report = evaluate_probe(probe, test)

    assert report.acc_x >= 0.99 and report.acc_y >= 0.99
    assert report.acc_mean == pytest.approx((report.acc_x + report.acc_y) / 2)
    assert probe.history[-1] <= probe.history[0]


def test_mlp_probe_decodes_onehot_positions():
    train, test = split_dataset(onehot_positions(4000, seed=1), 3000, 1000, seed=0)
    probe = train_probe(train, ProbeConfig(arch="mlp3", hidden_dim=64, lr=0.01,
                                           epochs=20, batch_size=128))
    assert isinstance(probe, MLP3Probe)
    assert evaluate_probe(probe, test).acc_mean >= 0.99


@pytest.mark.parametrize("control", [noise_like, shuffled_labels])
def test_controls_stay_at_chance(control):
    dataset = control(onehot_positions(12_000, seed=2), seed=3)
    train, test = split_dataset(dataset, 10_000, 2000, seed=0)

    report = evaluate_probe(train_probe(train, ProbeConfig(**FAST)), test)

    assert abs(report.acc_mean - chance_level(0)) < 0.03


def test_apply_control():
    dataset = onehot_positions(100)
    assert apply_control(dataset, "none") is dataset
    shuffled = apply_control(dataset, "shuffled", seed=1)
    assert np.array_equal(shuffled.activations, dataset.activations)
    assert sorted(shuffled.xs) == sorted(dataset.xs)
    assert apply_control(dataset, "noise").dim == dataset.dim
    with pytest.raises(ValueError):
        apply_control(dataset, "zeros")


def test_oracle_probe_is_exact():
    dataset = onehot_positions(500, seed=4)
    probe = LinearProbe(30, ProbeConfig())
    probe["out.weight"].data[...] = 10.0 * np.eye(30)
    probe["out.bias"].data[...] = 0.0

    report = evaluate_probe(probe, dataset)
    assert report.acc_x == report.acc_y == 1.0


def test_constant_probe_scores_label_frequency():
    dataset = _positions_dataset(3000, seed=5)
    probe = LinearProbe(dataset.dim, ProbeConfig())
    probe["out.weight"].data[...] = 0.0
    probe["out.bias"].data[...] = 0.0

    report = evaluate_probe(probe, dataset)
    assert report.acc_x == pytest.approx(np.mean(dataset.xs == 0))
    assert report.acc_y == pytest.approx(np.mean(dataset.ys == 0))


def test_constant_shift_keeps_predictions():
    dataset = _positions_dataset(500, seed=6)
    probe = train_probe(dataset, ProbeConfig(epochs=2, batch_size=100))
    before = evaluate_probe(probe, dataset)

    probe["out.bias"].data[:15] += 3.0
    assert evaluate_probe(probe, dataset) == before


def test_probe_training_is_deterministic():
    dataset = _positions_dataset(800, seed=7)
    config = ProbeConfig(arch="mlp3", hidden_dim=16, epochs=3, batch_size=64)

    first, second = train_probe(dataset, config), train_probe(dataset, config)

    assert first.history == second.history
    assert evaluate_probe(first, dataset) == evaluate_probe(second, dataset)


def test_probe_errors():
    dataset = _positions_dataset(10)
    empty = dataset.subset(np.array([], dtype=np.int64))

    with pytest.raises(EmptyDatasetError):
        evaluate_probe(build_probe(4, ProbeConfig()), empty)
    with pytest.raises(EmptyDatasetError):
        train_probe(empty, ProbeConfig())
    with pytest.raises(DimensionMismatchError):
        evaluate_probe(build_probe(5, ProbeConfig()), dataset)
    with pytest.raises(UnknownArchitectureError):
        build_probe(4, ProbeConfig(arch="transformer"))


def test_probe_config_defaults():
    assert ProbeConfig().lr == 1e-3
    assert ProbeConfig(arch="mlp3").lr == 1e-4
    assert ProbeConfig(arch="linear", lr=5e-5).lr == 5e-5
    assert get_arch("MLP3") is MLP3Probe
    with pytest.raises(ValidationError):
        ProbeConfig(epochs=0)


def test_collect_activations_is_deterministic(agent_config):
    net = build_agent(agent_config, 0)
    room = RoomConfig()

    first = collect_activations(net, room, ["linear1", "lstm_cell"], n=100, seed=3,
                                n_envs=4, progress_bar=False)
    second = collect_activations(net, room, ["linear1", "lstm_cell"], n=100, seed=3,
                                 n_envs=4, progress_bar=False)

    assert first["linear1"] == second["linear1"]
    assert first["lstm_cell"] == second["lstm_cell"]
    assert first["lstm_cell"].activations.shape == (100, 12)
    assert np.array_equal(first["linear1"].xs, first["lstm_cell"].xs)
    assert first["linear1"].metadata["map"] == "random"


def test_collect_with_several_processes(agent_config):
    net = build_agent(agent_config, 0)
    datasets = collect_activations(net, RoomConfig(), ["lstm_hidden"], n=90, seed=1,
                                   n_envs=4, n_proc=2, progress_bar=False)
    again = collect_activations(net, RoomConfig(), ["lstm_hidden"], n=90, seed=1,
                                n_envs=4, n_proc=2, progress_bar=False)

    assert len(datasets["lstm_hidden"]) == 90
    assert datasets["lstm_hidden"] == again["lstm_hidden"]


def test_collect_experiment2_cell_width():
    net = build_agent(AgentConfig.experiment2(), 0)
    datasets = collect_activations(net, RoomConfig(), ["lstm_cell"], n=32,
                                   n_envs=16, progress_bar=False)
    assert datasets["lstm_cell"].dim == 512


def test_collect_unknown_tap(agent_config):
    net = build_agent(agent_config, 0)
    with pytest.raises(UnknownTapError, match="lstm_hidden"):
        collect_activations(net, RoomConfig(), ["conv9"], n=10, progress_bar=False)
    with pytest.raises(ConfigError):
        collect_activations(net, RoomConfig(crop_size=3), ["linear1"], n=10,
                            progress_bar=False)


def test_raw_observation_beats_chance():
    net = build_agent(tiny_agent(lstm=False, crop_size=9), 0)
    room = RoomConfig(kind=MapKind.RANDOM, crop_size=9)

    dataset = collect_activations(net, room, ["observation"], n=6000, seed=0,
                                  n_envs=16, progress_bar=False)["observation"]
    assert dataset.dim == 9 * 9 * 11

    train, test = split_dataset(dataset, 5000, 1000, seed=0)
    report = evaluate_probe(train_probe(train, ProbeConfig(lr=0.01, epochs=20,
                                                           batch_size=128)), test)

    assert report.acc_mean > chance_level(0) + 0.05


def test_random_map_positions_cover_the_interior(agent_config):
    net = build_agent(agent_config, 0)
    dataset = collect_activations(net, RoomConfig(kind=MapKind.RANDOM), ["linear1"],
                                  n=5000, seed=0, n_envs=100,
                                  progress_bar=False)["linear1"]

    counts = dataset.coverage()
    assert counts.sum() == 5000
    assert (counts[1:14, 1:14] > 0).all()


def test_collect_block_size_does_not_change_records(agent_config):
    net = build_agent(agent_config, 0)
    options = dict(n=101, seed=2, n_envs=4, progress_bar=False)

    whole = collect_activations(net, RoomConfig(), ["lstm_cell"], block_steps=1000, **options)
    steps = collect_activations(net, RoomConfig(), ["lstm_cell"], block_steps=1, **options)

    assert whole["lstm_cell"] == steps["lstm_cell"]


def test_collect_block_size_with_several_processes(agent_config):
    net = build_agent(agent_config, 0)
    options = dict(n=90, seed=1, n_envs=4, n_proc=2, progress_bar=False)

    whole = collect_activations(net, RoomConfig(), ["lstm_hidden"], **options)
    steps = collect_activations(net, RoomConfig(), ["lstm_hidden"], block_steps=3, **options)

    assert whole["lstm_hidden"] == steps["lstm_hidden"]


def test_collect_requires_a_sink_per_tap(agent_config):
    net = build_agent(agent_config, 0)
    sinks = {"lstm_cell": MemorySink("lstm_cell", 10, 12)}

    with pytest.raises(ConfigError, match="linear1"):
        collect_activations(net, RoomConfig(), ["lstm_cell", "linear1"], n=10,
                            progress_bar=False, sinks=sinks)


def test_filter_without_margin_keeps_arrays():
    dataset = _positions_dataset(100)
    assert filter_boundary(dataset, 0).activations is dataset.activations
