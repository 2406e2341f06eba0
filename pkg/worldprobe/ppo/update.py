# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import logging
from typing import Iterator, List, Tuple

import numpy as np

from worldprobe.agent import AgentNet, LSTMState
from worldprobe.exceptions import NonFiniteError, TrainingDivergedError
from worldprobe.models.result import LossReport
from worldprobe.nn import Adam, Tensor, clip_grad_norm, stack
from worldprobe.ppo.config import PPOConfig
from worldprobe.ppo.losses import LossTerms, ppo_loss
from worldprobe.ppo.returns import normalize_advantages
from worldprobe.ppo.rollout import TrajectoryBatch

__all__ = ["ppo_update", "minibatches"]

log = logging.getLogger(__name__)


def minibatches(n_units: int, per_batch: int,
                rng: np.random.Generator) -> Iterator[np.ndarray]:
    order = rng.permutation(n_units)
    for start in range(0, n_units, per_batch):
        yield order[start:start + per_batch]


def _flat_loss(net: AgentNet, batch: TrajectoryBatch, advantages: np.ndarray,
               index: np.ndarray, config: PPOConfig) -> LossTerms:
    t, n = np.unravel_index(index, batch.actions.shape)
    maps = batch.maps[t, n] if batch.maps is not None else None
    out = net.forward(batch.crops[t, n], maps, record_taps=False)

    return ppo_loss(out.logits, out.value, batch.actions[t, n],
                    batch.log_probs[t, n], advantages[t, n],
                    batch.value_targets[t, n], config.clip_eps,
                    config.value_coef, config.entropy_coef)


def _recurrent_loss(net: AgentNet, batch: TrajectoryBatch, advantages: np.ndarray,
                    index: np.ndarray, config: PPOConfig) -> LossTerms:
    length = batch.bptt_chunk
    chunk, n = np.unravel_index(index, batch.h0.shape[:2])

    # time-major (length, S) gather of every sequence
    t = chunk[None, :] * length + np.arange(length)[:, None]
    n = np.broadcast_to(n[None, :], t.shape)
    steps, seqs = t.shape

    def gather(array):
        return array[t, n].reshape((steps * seqs,) + array.shape[2:])

    maps = gather(batch.maps) if batch.maps is not None else None
    features = net.encode(gather(batch.crops), maps, record_taps=False).features
    features = features.reshape(steps, seqs, -1)

    state = LSTMState(Tensor(batch.h0[chunk, n[0]]), Tensor(batch.c0[chunk, n[0]]))
    outputs: List[Tensor] = []

    for step in range(steps):
        keep = (~batch.starts[t[step], n[step]]).astype(state.h.dtype)[:, None]
        state = LSTMState(state.h * keep, state.c * keep)
        state = net.recur(features[step], state)
        outputs.append(state.h)

    hidden = stack(outputs, axis=0).reshape(steps * seqs, -1)
    logits, values = net.heads(hidden)

    return ppo_loss(logits, values, gather(batch.actions), gather(batch.log_probs),
                    gather(advantages), gather(batch.value_targets),
                    config.clip_eps, config.value_coef, config.entropy_coef)


def ppo_update(net: AgentNet, batch: TrajectoryBatch, config: PPOConfig,
               optimizer: Adam, rng: np.random.Generator) -> LossReport:
    """
    Several epochs of clipped-surrogate updates over one rollout.

    Recurrent agents are replayed in contiguous chunks of ``bptt_chunk``
    steps starting from the stored LSTM states.

    :raises TrainingDivergedError: if any loss or gradient is not finite.
    """

    if batch.advantages is None or batch.value_targets is None:
        raise ValueError("Batch has no advantages, run compute_gae first.")

    advantages = normalize_advantages(batch.advantages, config.adv_eps)

    if batch.recurrent:
        n_units = batch.h0.shape[0] * batch.h0.shape[1]
        per_batch = max(1, config.minibatch_size // batch.bptt_chunk)
        loss_fn = _recurrent_loss
    else:
        n_units = batch.n_transitions
        per_batch = config.minibatch_size
        loss_fn = _flat_loss

    sums = np.zeros(6)
    count = 0

    for epoch in range(config.epochs_per_batch):
        for number, index in enumerate(minibatches(n_units, per_batch, rng)):
            try:
                terms = loss_fn(net, batch, advantages, index, config)
                if not np.isfinite(terms.total.item()):
                    raise NonFiniteError("PPO loss is not finite.")

                optimizer.zero_grad()
                terms.total.backward()
                grad_norm = clip_grad_norm(net.parameters(), config.max_grad_norm)
                optimizer.step()
            except NonFiniteError as e:
                raise TrainingDivergedError(
                    f"PPO update diverged at epoch {epoch}, minibatch {number}"
                    f" (optimizer step {optimizer.state.t}): {e}") from e

            sums += (terms.policy_loss, terms.value_loss, terms.entropy,
                     terms.clip_fraction, terms.approx_kl, grad_norm)
            count += 1

    means = sums / max(count, 1)
    report = LossReport(policy_loss=means[0], value_loss=means[1], entropy=means[2],
                        clip_fraction=means[3], approx_kl=means[4],
                        grad_norm=means[5], n_minibatches=count)

    log.debug(f"PPO update: {report}")
    return report
