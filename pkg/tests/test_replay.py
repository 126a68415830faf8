import numpy as np
import pytest

from arena.world import OBS_SIZE
from learner.replay import ReplayBuffer, Transition, TransitionBatch
from utils.errors import UsageError


def _transition(i, done=False):
    state = np.full(OBS_SIZE, float(i))
    return Transition(state, (i % 7, (i + 1) % 7), float(i), state + 1.0, done)


def test_capacity_and_fifo_overwrite():
    buffer = ReplayBuffer(capacity=3)
    for i in range(5):
        buffer.add(_transition(i))
    assert len(buffer) == 3
    assert [t.reward for t in buffer.transitions()] == [2.0, 3.0, 4.0]


def test_transitions_round_trip_through_buffer():
    buffer = ReplayBuffer(capacity=10)
    originals = [_transition(i, done=i == 3) for i in range(4)]
    buffer.extend(originals)
    assert buffer.transitions() == originals


def test_sampling_uses_caller_rng():
    buffer = ReplayBuffer(capacity=50)
    buffer.extend(_transition(i) for i in range(50))
    a = buffer.sample(16, np.random.default_rng(3))
    b = buffer.sample(16, np.random.default_rng(3))
    np.testing.assert_array_equal(a.rewards, b.rewards)
    np.testing.assert_array_equal(a.actions, b.actions)
    assert len(a) == 16
    # stored rows stay aligned
    np.testing.assert_array_equal(a.states[:, 0], a.rewards)


def test_sampling_is_roughly_uniform():
    buffer = ReplayBuffer(capacity=4)
    buffer.extend(_transition(i) for i in range(4))
    counts = np.bincount(buffer.sample(8000, np.random.default_rng(0)).rewards.astype(int), minlength=4)
    assert np.all(np.abs(counts / 8000 - 0.25) < 0.03)


def test_empty_buffer_sampling_raises():
    with pytest.raises(UsageError):
        ReplayBuffer(capacity=4).sample(2, np.random.default_rng(0))


def test_invalid_capacity_raises():
    with pytest.raises(UsageError):
        ReplayBuffer(capacity=0)


def test_transition_validation():
    state = np.zeros(OBS_SIZE)
    with pytest.raises(UsageError):
        Transition(state, (0, 7), 0.0, state, False)
    with pytest.raises(UsageError):
        Transition(state, (0,), 0.0, state, False)
    with pytest.raises(UsageError):
        Transition(state, (0, 1), float("nan"), state, False)


def test_with_reward_keeps_everything_else():
    t = _transition(2, done=True)
    lowered = t.with_reward(-1.0)
    assert lowered.reward == -1.0
    assert lowered.actions == t.actions and lowered.done
    np.testing.assert_array_equal(lowered.state, t.state)
    np.testing.assert_array_equal(lowered.next_state, t.next_state)


def test_batch_from_transitions():
    batch = TransitionBatch.from_transitions([_transition(1), _transition(2, done=True)])
    assert batch.states.shape == (2, OBS_SIZE)
    assert batch.actions.tolist() == [[1, 2], [2, 3]]
    assert batch.dones.tolist() == [0.0, 1.0]
    with pytest.raises(UsageError):
        TransitionBatch.from_transitions([])
