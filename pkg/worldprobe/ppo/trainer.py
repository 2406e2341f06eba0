# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import logging
import math
from collections import deque
from typing import Dict, NamedTuple, Optional

import numpy as np
import pandas as pd

from worldprobe.agent import AgentConfig, AgentNet, build_agent, check_compatible
from worldprobe.env import RoomConfig, RoomVector
from worldprobe.nn import Adam
from worldprobe.ppo.config import PPOConfig
from worldprobe.ppo.returns import compute_gae
from worldprobe.ppo.rollout import RolloutCollector
from worldprobe.ppo.update import ppo_update
from worldprobe.utils.logging import progress

__all__ = ["TrainResult", "train", "METRIC_COLUMNS"]

log = logging.getLogger(__name__)

METRIC_COLUMNS = ["iter", "env_steps", "mean_return", "mean_ep_len",
                  "policy_loss", "value_loss", "entropy", "clip_frac"]


class TrainResult(NamedTuple):
    net: AgentNet
    final_state: Dict[str, np.ndarray]
    best_state: Dict[str, np.ndarray]
    best_return: float
    metrics: pd.DataFrame
    converged: bool
    env_steps: int

    @property
    def mean_return(self) -> float:
        if self.metrics.empty:
            return float("nan")
        return float(self.metrics["mean_return"].iloc[-1])


def train(room_config: RoomConfig, agent_config: AgentConfig,
          ppo_config: PPOConfig, seed: int, progress_bar: bool = True,
          max_iterations: Optional[int] = None) -> TrainResult:
    """
    Train an agent with PPO until it converges or the step budget runs out.

    Convergence means the mean return of the last ``convergence_window``
    finished episodes reaches ``convergence_threshold``.

    :param room_config: room every worker plays.
    :param agent_config: network shape.
    :param ppo_config: optimization settings.
    :param seed: seeds the network, the workers and the sampler.
    :param progress_bar: show progress bar or not.
    :param max_iterations: optional cap below the step budget.
    :return: final and best parameters with one metrics row per iteration.
    """

    net = build_agent(agent_config, seed)
    check_compatible(net, room_config)

    rollout_seq, update_seq = np.random.SeedSequence(seed).spawn(2)
    envs = RoomVector(room_config, ppo_config.n_workers, base_seed=seed)
    collector = RolloutCollector(envs, net, np.random.default_rng(rollout_seq),
                                 ppo_config.bptt_chunk)
    update_rng = np.random.default_rng(update_seq)
    optimizer = Adam(net.parameters(), lr=ppo_config.lr)

    n_iterations = math.ceil(ppo_config.max_env_steps / ppo_config.batch_size)
    if max_iterations is not None:
        n_iterations = min(n_iterations, max_iterations)

    window = deque(maxlen=ppo_config.convergence_window)
    lengths = deque(maxlen=ppo_config.convergence_window)
    rows = []
    env_steps = 0
    best_return, best_state = -math.inf, net.state_dict()
    converged = False

    log.info(f"Training {room_config.kind.value} map agent for up to"
             f" {n_iterations} iterations ({net.num_parameters} parameters)")

    with progress(progress_bar) as bar:
        task = bar.add_task("Training", total=n_iterations)

        for iteration in range(1, n_iterations + 1):
            batch = collector.collect(ppo_config.rollout_length)
            batch.advantages, batch.value_targets = compute_gae(
                batch.rewards, batch.values, batch.dones, batch.bootstrap_values,
                ppo_config.gamma, ppo_config.gae_lambda)

            report = ppo_update(net, batch, ppo_config, optimizer, update_rng)
            env_steps += batch.n_transitions

            window.extend(e.episode_return for e in batch.episodes)
            lengths.extend(e.length for e in batch.episodes)
            mean_return = float(np.mean(window)) if window else float("nan")
            mean_length = float(np.mean(lengths)) if lengths else float("nan")

            rows.append(dict(iter=iteration, env_steps=env_steps,
                             mean_return=mean_return, mean_ep_len=mean_length,
                             policy_loss=report.policy_loss,
                             value_loss=report.value_loss, entropy=report.entropy,
                             clip_frac=report.clip_fraction))

            log.info(f"iter {iteration} steps {env_steps} return {mean_return:.3f}"
                     f" len {mean_length:.1f} pi {report.policy_loss:.4f}"
                     f" v {report.value_loss:.4f} ent {report.entropy:.3f}")

            if window and mean_return > best_return:
                best_return, best_state = mean_return, net.state_dict()

            bar.update(task, advance=1)

            full_window = len(window) == ppo_config.convergence_window
            log.debug(f"Convergence check: window {len(window)}, mean {mean_return:.3f}")
            if full_window and mean_return >= ppo_config.convergence_threshold:
                converged = True
                log.info(f"Converged after {env_steps} env steps")
                break

    if not converged:
        log.warning(f"Budget exhausted without convergence after {env_steps} env steps")

    return TrainResult(net, net.state_dict(), best_state, best_return,
                       pd.DataFrame(rows, columns=METRIC_COLUMNS), converged,
                       env_steps)
