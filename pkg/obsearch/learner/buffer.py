import numpy as np


class ReplayBuffer:
    """Preallocated ring of transitions with uniform sampling and FIFO eviction."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int, rng: np.random.Generator | None = None):
        self.capacity = capacity
        self.rng = rng if rng is not None else np.random.default_rng()
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.terminals = np.zeros(capacity)
        self.pos = 0
        self.size = 0

    def push(self, obs, action, reward, next_obs, terminal) -> None:
        idx = self.pos % self.capacity
        self.obs[idx] = obs
        self.actions[idx] = action
        self.rewards[idx] = reward
        self.next_obs[idx] = next_obs
        self.terminals[idx] = float(terminal)
        self.pos += 1
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int):
        if self.size == 0:
            raise IndexError("cannot sample from an empty replay buffer")
        indices = self.rng.integers(0, self.size, size=batch_size)
        return (
            self.obs[indices],
            self.actions[indices],
            self.rewards[indices],
            self.next_obs[indices],
            self.terminals[indices],
        )

    def __len__(self):
        return self.size
