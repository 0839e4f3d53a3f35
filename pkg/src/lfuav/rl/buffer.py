from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring buffer; the oldest transition is overwritten first."""

    def __init__(self, capacity: int = 10_000, state_dim: int = 2, action_dim: int = 2):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity)
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    def add(self, t: Transition) -> None:
        if np.any(np.abs(t.action) > 1.0):
            raise ValueError("stored actions must lie in [-1, 1]")
        i = self.cursor
        self.states[i] = t.state
        self.actions[i] = t.action
        self.rewards[i] = t.reward
        self.next_states[i] = t.next_state
        self.dones[i] = float(t.done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def __getitem__(self, k: int) -> Transition:
        """k-th oldest stored transition."""
        if not 0 <= k < self.size:
            raise IndexError(k)
        i = (self.cursor - self.size + k) % self.capacity
        return Transition(self.states[i].copy(), self.actions[i].copy(), float(self.rewards[i]),
                          self.next_states[i].copy(), bool(self.dones[i]))

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if self.size < batch_size:
            raise ValueError(f"buffer holds {self.size} transitions, batch needs {batch_size}")
        idx = rng.integers(0, self.size, batch_size)
        return Batch(self.states[idx], self.actions[idx], self.rewards[idx],
                     self.next_states[idx], self.dones[idx])

    def state_arrays(self, prefix: str = "buffer") -> dict[str, np.ndarray]:
        return {
            f"{prefix}/states": self.states, f"{prefix}/actions": self.actions,
            f"{prefix}/rewards": self.rewards, f"{prefix}/next_states": self.next_states,
            f"{prefix}/dones": self.dones, f"{prefix}/size": np.array(self.size),
            f"{prefix}/cursor": np.array(self.cursor),
        }

    def load_arrays(self, arrays: dict, prefix: str = "buffer") -> None:
        for name in ("states", "actions", "rewards", "next_states", "dones"):
            getattr(self, name)[...] = arrays[f"{prefix}/{name}"]
        self.size = int(arrays[f"{prefix}/size"])
        self.cursor = int(arrays[f"{prefix}/cursor"])
