"""
Replay Buffer
Bounded FIFO ring of joint transitions with uniform sampling
"""

import math
from dataclasses import dataclass

import numpy as np

from arena.world import NUM_ACTIONS, NUM_AGENTS, OBS_SIZE
from utils.errors import UsageError


@dataclass(frozen=True)
class Transition:
    """(s, (a0, a1), r, s', done) with the shared team reward."""

    state: np.ndarray
    actions: tuple
    reward: float
    next_state: np.ndarray
    done: bool

    def __post_init__(self):
        if len(self.actions) != NUM_AGENTS or any(not 0 <= int(a) < NUM_ACTIONS for a in self.actions):
            raise UsageError(f"Invalid joint action {self.actions}")
        if not math.isfinite(self.reward):
            raise UsageError(f"Non-finite reward {self.reward}")

    def with_reward(self, reward):
        return Transition(self.state, self.actions, float(reward), self.next_state, self.done)

    def __eq__(self, other):
        if not isinstance(other, Transition):
            return NotImplemented
        return (
            np.array_equal(self.state, other.state)
            and tuple(self.actions) == tuple(other.actions)
            and self.reward == other.reward
            and np.array_equal(self.next_state, other.next_state)
            and self.done == other.done
        )


@dataclass(frozen=True)
class TransitionBatch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self):
        return len(self.rewards)

    @classmethod
    def from_transitions(cls, transitions):
        if not transitions:
            raise UsageError("Cannot build an empty batch")
        return cls(
            states=np.stack([t.state for t in transitions]).astype(np.float64),
            actions=np.array([t.actions for t in transitions], dtype=np.int64),
            rewards=np.array([t.reward for t in transitions], dtype=np.float64),
            next_states=np.stack([t.next_state for t in transitions]).astype(np.float64),
            dones=np.array([t.done for t in transitions], dtype=np.float64),
        )


class ReplayBuffer:
    """
    A simple FIFO experience replay buffer shared by both agents.

    Oldest transitions are overwritten once `capacity` is reached.
    """

    def __init__(self, capacity, obs_size=OBS_SIZE):
        if capacity <= 0:
            raise UsageError(f"Replay capacity must be positive, got {capacity}")
        self.capacity = int(capacity)
        self.states = np.zeros((self.capacity, obs_size))
        self.next_states = np.zeros((self.capacity, obs_size))
        self.actions = np.zeros((self.capacity, NUM_AGENTS), dtype=np.int64)
        self.rewards = np.zeros(self.capacity)
        self.dones = np.zeros(self.capacity)
        self.ptr = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, transition):
        self.states[self.ptr] = transition.state
        self.next_states[self.ptr] = transition.next_state
        self.actions[self.ptr] = transition.actions
        self.rewards[self.ptr] = transition.reward
        self.dones[self.ptr] = float(transition.done)

        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def extend(self, transitions):
        for transition in transitions:
            self.add(transition)

    def sample(self, batch_size, rng):
        """Uniform sample with replacement using the caller's generator."""
        if self.size == 0:
            raise UsageError("Cannot sample from an empty replay buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return TransitionBatch(
            states=self.states[idx],
            actions=self.actions[idx],
            rewards=self.rewards[idx],
            next_states=self.next_states[idx],
            dones=self.dones[idx],
        )

    def transitions(self):
        """Stored transitions, oldest first."""
        start = self.ptr if self.size == self.capacity else 0
        order = [(start + i) % self.capacity for i in range(self.size)]
        return [
            Transition(
                state=self.states[i].copy(),
                actions=tuple(int(a) for a in self.actions[i]),
                reward=float(self.rewards[i]),
                next_state=self.next_states[i].copy(),
                done=bool(self.dones[i]),
            )
            for i in order
        ]
