import numpy as np
import pytest

from worldprobe.exceptions import NonFiniteError, ShapeMismatchError
from worldprobe.ppo import compute_gae, discounted_return, normalize_advantages, returns_to_go


def _brute_force(rewards, values, dones, bootstrap, gamma, lam):
    n = len(rewards)
    following = np.append(values[1:], bootstrap)
    deltas = rewards + gamma * following * (1 - dones) - values

    advantages = np.zeros(n)
    for t in range(n):
        weight = 1.0
        for k in range(t, n):
            advantages[t] += weight * deltas[k]
            if dones[k]:
                break
            weight *= gamma * lam
    return advantages


def test_matches_brute_force():
    rng = np.random.default_rng(0)

    for _ in range(1000):
        n = int(rng.integers(1, 21))
        rewards = rng.normal(size=n)
        values = rng.normal(size=n)
        dones = rng.random(n) < 0.2
        bootstrap = float(rng.normal())
        gamma, lam = rng.uniform(0.5, 1.0), rng.uniform(0.0, 1.0)

        advantages, targets = compute_gae(rewards, values, dones, bootstrap, gamma, lam)
        expected = _brute_force(rewards, values, dones, bootstrap, gamma, lam)

        assert np.abs(advantages - expected).max() < 1e-12
        assert np.allclose(targets, advantages + values)


def test_zero_lambda_gives_td_errors():
    rewards = np.array([1.0, 0.0, 2.0])
    values = np.array([0.5, 0.25, 1.0])
    dones = np.array([False, False, False])

    advantages, _ = compute_gae(rewards, values, dones, 3.0, gamma=0.9, lam=0.0)

    expected = rewards + 0.9 * np.array([0.25, 1.0, 3.0]) - values
    assert np.allclose(advantages, expected, atol=1e-12)


def test_single_terminal_step():
    advantages, targets = compute_gae([1.0], [0.0], [True], 100.0, gamma=0.99, lam=0.95)
    assert advantages[0] == 1.0
    assert targets[0] == 1.0


def test_full_lambda_is_monte_carlo():
    rng = np.random.default_rng(1)
    rewards = rng.normal(size=12)
    values = rng.normal(size=12)
    dones = np.zeros(12, dtype=bool)
    dones[-1] = True

    advantages, _ = compute_gae(rewards, values, dones, 0.0, gamma=0.97, lam=1.0)

    assert np.abs(advantages - (returns_to_go(rewards, 0.97) - values)).max() < 1e-10


def test_episode_boundary_isolates_advantages():
    rng = np.random.default_rng(2)
    rewards = rng.normal(size=10)
    values = rng.normal(size=10)
    dones = np.zeros(10, dtype=bool)
    dones[4] = True

    before, _ = compute_gae(rewards, values, dones, 0.5, 0.99, 0.95)

    rewards[5:] += 100.0
    values[5:] -= 3.0
    after, _ = compute_gae(rewards, values, dones, -7.0, 0.99, 0.95)

    assert np.array_equal(before[:5], after[:5])


def test_batched_workers_are_independent():
    rng = np.random.default_rng(3)
    rewards = rng.normal(size=(8, 3))
    values = rng.normal(size=(8, 3))
    dones = rng.random((8, 3)) < 0.3
    bootstrap = rng.normal(size=3)

    advantages, _ = compute_gae(rewards, values, dones, bootstrap, 0.99, 0.95)

    for n in range(3):
        single, _ = compute_gae(rewards[:, n], values[:, n], dones[:, n],
                                bootstrap[n], 0.99, 0.95)
        assert np.allclose(advantages[:, n], single, atol=1e-12)


def test_length_mismatch():
    with pytest.raises(ShapeMismatchError):
        compute_gae([1.0, 2.0], [0.0], [False, False], 0.0, 0.99, 0.95)


def test_normalize_advantages():
    advantages = np.random.default_rng(4).normal(loc=3.0, scale=5.0, size=1000)
    normalized = normalize_advantages(advantages)
    assert abs(normalized.mean()) < 1e-10
    assert normalized.std() == pytest.approx(1.0, abs=1e-6)


def test_discounted_return():
    assert discounted_return([1, 1, 1], 0.9) == pytest.approx(2.71)
    assert discounted_return([], 0.5) == 0.0
    assert discounted_return([0, 0, 1], 0.5) == pytest.approx(0.25)
    with pytest.raises(NonFiniteError):
        discounted_return([1.0, np.nan], 0.9)
