# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""Recording activation taps of a frozen agent while it plays."""
import logging
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import multiprocess as mp
import numpy as np

from worldprobe.agent import (
    AgentConfig,
    AgentNet,
    LSTMState,
    check_compatible,
    initial_state,
    one_hot_observation,
)
from worldprobe.env import RoomConfig, RoomVector
from worldprobe.exceptions import ConfigError, UnknownTapError
from worldprobe.nn import Tensor, sample_categorical
from worldprobe.probe.dataset import MemorySink, RecordSink
from worldprobe.utils.logging import progress

__all__ = ["collect_activations", "ShardSpec", "ShardCollector", "Block"]

log = logging.getLogger(__name__)


class ShardSpec(NamedTuple):
    agent_config: Dict[str, Any]
    parameters: Dict[str, np.ndarray]
    room_config: Dict[str, Any]
    taps: List[str]
    n_records: int
    n_envs: int
    env_seed: int
    action_seed: int
    start: int = 0


class Block(NamedTuple):
    start: int
    taps: Dict[str, np.ndarray]
    positions: np.ndarray


class ShardCollector:
    """
    Resumable recording of one shard.

    The agent plays sampled actions; the activation recorded at step ``t``
    is paired with the position observed at step ``t``. Records are
    handed out in blocks by :meth:`advance`, so a shard never holds more
    than one block in memory.
    """

    def __init__(self, shard: ShardSpec):
        self.shard = shard
        self.net = AgentNet(AgentConfig(**shard.agent_config))
        self.net.load_state_dict(shard.parameters)

        self.envs = RoomVector(RoomConfig(**shard.room_config), shard.n_envs,
                               shard.env_seed)
        self.envs.reset()
        self.rng = np.random.default_rng(shard.action_seed)
        self.state = initial_state(self.net, shard.n_envs)
        self.filled = 0

    @property
    def done(self) -> bool:
        return self.filled >= self.shard.n_records

    def advance(self, max_steps: int) -> Block:
        """Play at most ``max_steps`` steps and return the records they produced."""

        shard, net = self.shard, self.net
        start = self.filled
        blocks: Dict[str, List[np.ndarray]] = {tap: [] for tap in shard.taps}
        positions = []

        for _ in range(max_steps):
            if self.done:
                break

            crops, maps = self.envs.batch()
            out = net.forward(crops, maps, self.state, record_taps=True)
            take = min(shard.n_envs, shard.n_records - self.filled)

            sources = dict(out.taps)
            if "observation" in blocks:
                sources["observation"] = one_hot_observation(crops, net.config.vocab_size)

            for tap, parts in blocks.items():
                parts.append(np.asarray(sources[tap][:take], dtype=np.float32))
            positions.append(self.envs.positions()[:take].astype(np.uint8))
            self.filled += take

            actions, _ = sample_categorical(out.logits.data, self.rng)
            result = self.envs.step(actions)

            if self.state is not None:
                keep = (~result.dones).astype(out.state.h.dtype)[:, None]
                self.state = LSTMState(Tensor(out.state.h.data * keep),
                                       Tensor(out.state.c.data * keep))

        return Block(shard.start + start,
                     {tap: np.concatenate(parts) for tap, parts in blocks.items()},
                     np.concatenate(positions))


def _advance(args: Tuple[ShardCollector, int]) -> Tuple[ShardCollector, Block]:
    collector, max_steps = args
    return collector, collector.advance(max_steps)


def _shard_sizes(n: int, n_shards: int) -> List[int]:
    base, rest = divmod(n, n_shards)
    return [base + (i < rest) for i in range(n_shards)]


def _write(sinks: Dict[str, RecordSink], block: Block) -> int:
    xs, ys = block.positions[:, 0], block.positions[:, 1]
    for tap, sink in sinks.items():
        sink.write(block.start, block.taps[tap], xs, ys)
    return len(xs)


def collect_activations(net: AgentNet, room_config: RoomConfig, taps: Sequence[str],
                        n: int = 230_000, seed: int = 0, n_envs: int = 16,
                        n_proc: int = 1, progress_bar: bool = True,
                        metadata: Optional[Dict[str, Any]] = None,
                        sinks: Optional[Dict[str, RecordSink]] = None,
                        block_steps: int = 64) -> Dict[str, Any]:
    """
    Run the agent with sampled actions and record ``n`` records per tap.

    Work is split into ``n_proc`` shards with disjoint seed streams; shard
    results are laid out in shard order. Records reach the sinks in blocks
    of at most ``block_steps * n_envs`` records per shard, the result does
    not depend on the block size.

    :param net: trained agent.
    :param room_config: room the agent was trained on.
    :param taps: tap names to record, see :meth:`AgentConfig.probe_tap_dims`.
    :param n: records per tap.
    :param seed: root of all episode and action seeds.
    :param n_envs: parallel rooms per shard.
    :param n_proc: max number of processes.
    :param progress_bar: show progress bar or not.
    :param metadata: extra provenance stored on every dataset.
    :param sinks: destination per tap, in-memory datasets by default.
    :param block_steps: env steps per shard between two writes.
    :return: what every sink returns when finished, keyed by tap.
    """

    valid = net.config.tap_names
    unknown = [tap for tap in taps if tap not in valid]
    if unknown:
        raise UnknownTapError(
            f"Unknown taps {unknown}, this agent provides {valid}.")

    check_compatible(net, room_config)

    dims = net.config.probe_tap_dims()
    if sinks is None:
        sinks = {tap: MemorySink(tap, n, dims[tap]) for tap in taps}
    missing = [tap for tap in taps if tap not in sinks]
    if missing:
        raise ConfigError(f"No record sink for taps {missing}.")

    n_proc = max(1, min(n_proc, n))
    sequences = np.random.SeedSequence(seed).spawn(n_proc)
    collectors, offset = [], 0

    for size, sequence in zip(_shard_sizes(n, n_proc), sequences):
        env_seed, action_seed = (int(s) for s in sequence.generate_state(2) % (2**31 - 1))
        collectors.append(ShardCollector(ShardSpec(
            net.config.dict(), net.state_dict(), room_config.dict(), list(taps),
            size, n_envs, env_seed, action_seed, offset)))
        log.debug(f"Shard of {size} records at {offset}, env seed {env_seed}")
        offset += size

    with progress(progress_bar) as bar:
        task = bar.add_task("Collecting", total=n)

        if n_proc == 1:
            collector = collectors[0]
            while not collector.done:
                bar.update(task, advance=_write(sinks, collector.advance(block_steps)))
        else:
            # noinspection PyUnresolvedReferences
            with mp.Pool(n_proc) as pool:
                while collectors:
                    results = pool.map(_advance, [(c, block_steps) for c in collectors])
                    collectors = [c for c, _ in results if not c.done]
                    for _, block in results:
                        bar.update(task, advance=_write(sinks, block))

    provenance = dict(
        map=room_config.kind.value,
        crop_size=room_config.crop_size,
        seed=seed,
        n_envs=n_envs,
        n_proc=n_proc,
        **(metadata or {}),
    )

    log.info(f"Collected {n} records for taps {list(taps)}")
    return {tap: sinks[tap].finish(provenance) for tap in taps}
