"""Prioritized replay memory backed by a sum tree."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import InsufficientSamples

GENERALIZED_POOL = 0
POLICY_GENERATED = 1


@dataclass
class Transition:
    o: np.ndarray
    a: int
    r: float
    o_next: np.ndarray
    done: bool
    priority: float = 1.0
    source: int = POLICY_GENERATED


class SumTree:
    """Binary tree whose internal nodes hold the sum of their children.

    Parents are recomputed from their children on every update, so the root
    never accumulates floating-point drift.
    """

    def __init__(self, capacity: int):
        self.capacity = int(capacity)
        self.n_leaves = 1
        while self.n_leaves < self.capacity:
            self.n_leaves *= 2
        self.tree = np.zeros(2 * self.n_leaves)

    @property
    def total(self) -> float:
        return float(self.tree[1])

    @property
    def leaves(self) -> np.ndarray:
        return self.tree[self.n_leaves:self.n_leaves + self.capacity]

    def set(self, idx, value):
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        value = np.broadcast_to(np.asarray(value, dtype=np.float64), idx.shape)
        if np.any(idx < 0) or np.any(idx >= self.capacity):
            raise IndexError("sum tree index out of range")
        nodes = idx + self.n_leaves
        self.tree[nodes] = value
        nodes = np.unique(nodes // 2)
        while nodes[0] >= 1:
            self.tree[nodes] = self.tree[2 * nodes] + self.tree[2 * nodes + 1]
            if nodes[0] == 1:
                break
            nodes = np.unique(nodes // 2)

    def find(self, mass: np.ndarray) -> np.ndarray:
        """Leaf indices whose cumulative-sum interval contains each ``mass``."""
        mass = np.array(mass, dtype=np.float64)
        node = np.ones(mass.shape, dtype=np.int64)
        while node[0] < self.n_leaves:
            left = 2 * node
            lv = self.tree[left]
            go_right = (mass >= lv) & (self.tree[left + 1] > 0)
            mass = np.where(go_right, mass - lv, mass)
            node = np.where(go_right, left + 1, left)
        return np.minimum(node - self.n_leaves, self.capacity - 1)


class ReplayMemory:
    """Ring buffer of transitions with proportional prioritization.

    Sampling probability is ``p_i**alpha / sum_j p_j**alpha`` with raw
    priority ``p_i = |delta_i| + eps``. New transitions enter at the running
    maximum priority. Eviction is first-in first-out, so samples merged from
    a previous memory are overwritten before any newer ones.
    """

    def __init__(self, capacity: int = 5000, window: int = 12, channels: int = 4,
                 alpha: float = 0.3, eps: float = 1e-3):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.alpha = float(alpha)
        self.eps = float(eps)
        self.obs = np.zeros((capacity, window, channels))
        self.next_obs = np.zeros((capacity, window, channels))
        self.action = np.zeros(capacity, dtype=np.int64)
        self.reward = np.zeros(capacity)
        self.done = np.zeros(capacity, dtype=bool)
        self.priority = np.zeros(capacity)
        self.episode = np.zeros(capacity, dtype=np.int64)
        self.seq = np.full(capacity, -1, dtype=np.int64)
        self.source = np.zeros(capacity, dtype=np.int8)
        self.tree = SumTree(capacity)
        self.size = 0
        self.head = 0
        self.counter = 0
        self.max_priority = 1.0

    def __len__(self):
        return self.size

    def push(self, o, a, r, o_next, done, episode: int = 0, source: int = POLICY_GENERATED) -> int:
        i = self.head
        self.obs[i] = o
        self.next_obs[i] = o_next
        self.action[i] = a
        self.reward[i] = r
        self.done[i] = bool(done)
        self.episode[i] = episode
        self.seq[i] = self.counter
        self.source[i] = source
        self.priority[i] = self.max_priority
        self.tree.set(i, self.max_priority ** self.alpha)
        self.counter += 1
        self.head = (self.head + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return i

    def push_transition(self, t: Transition, episode: int = 0) -> int:
        return self.push(t.o, t.a, t.r, t.o_next, t.done, episode, t.source)

    def probabilities(self) -> np.ndarray:
        leaves = self.tree.leaves[:self.size]
        return leaves / leaves.sum()

    def sample(self, batch_size: int, beta: float, rng: np.random.Generator, uniform: bool = False):
        """Draw ``batch_size`` indices i.i.d.; returns ``(batch, indices, is_weights)``.

        Importance weights are ``(N * P_i)**-beta`` divided by their maximum
        over the whole memory. Uniform sampling returns unit weights.
        """
        if self.size < batch_size or self.size == 0:
            raise InsufficientSamples(f"need {batch_size} transitions, have {self.size}")
        if uniform:
            idx = rng.integers(0, self.size, size=batch_size)
            weights = np.ones(batch_size)
        else:
            total = self.tree.total
            idx = self.tree.find(rng.uniform(0.0, total, size=batch_size))
            leaves = self.tree.leaves
            p_min = leaves[:self.size].min() / total
            weights = (leaves[idx] / total / p_min) ** (-beta)
        return self.batch(idx), idx, weights

    def batch(self, idx) -> dict:
        return {
            "obs": self.obs[idx],
            "action": self.action[idx],
            "reward": self.reward[idx],
            "next_obs": self.next_obs[idx],
            "done": self.done[idx],
        }

    def update_priorities(self, indices, td_errors):
        idx = np.asarray(indices, dtype=np.int64)
        if np.any(idx < 0) or np.any(idx >= self.size):
            raise IndexError("replay index out of range")
        p = np.abs(np.asarray(td_errors, dtype=np.float64)) + self.eps
        self.priority[idx] = p
        self.tree.set(idx, p ** self.alpha)
        self.max_priority = max(self.max_priority, float(p.max()))

    def nstep(self, idx, n: int, gamma: float):
        """n-step windows starting at each slot in ``idx``.

        The window follows consecutive insertions of the same episode and
        stops after a terminal transition or when the next transition has not
        been stored (yet, or any more). Returns ``(returns, bootstrap_obs,
        bootstrap_discount)`` where the discount is ``gamma**m`` for a window
        of length ``m`` or 0 when it ends on a terminal step.
        """
        idx = np.asarray(idx, dtype=np.int64)
        k = np.arange(n)
        pos = (idx[:, None] + k) % self.capacity
        same = (self.seq[pos] == self.seq[idx][:, None] + k) & (
            self.episode[pos] == self.episode[idx][:, None])
        done = self.done[pos]
        ended_before = np.concatenate(
            [np.zeros((idx.size, 1), dtype=bool), np.cumsum(done, axis=1)[:, :-1] > 0], axis=1)
        incl = np.cumprod(same & ~ended_before, axis=1).astype(bool)
        m = incl.sum(axis=1)
        disc = gamma ** k
        returns = (self.reward[pos] * disc * incl).sum(axis=1)
        last = pos[np.arange(idx.size), m - 1]
        terminal = (done & incl).any(axis=1)
        boot_disc = np.where(terminal, 0.0, gamma ** m.astype(np.float64))
        return returns, self.next_obs[last], boot_disc

    @classmethod
    def merged_from(cls, other: "ReplayMemory", capacity: int | None = None) -> "ReplayMemory":
        """New memory holding ``other``'s transitions, oldest first, with their priorities."""
        cap = other.capacity if capacity is None else capacity
        mem = cls(cap, other.obs.shape[1], other.obs.shape[2], other.alpha, other.eps)
        start = (other.head - other.size) % other.capacity
        order = [(start + j) % other.capacity for j in range(other.size)][-cap:]
        for i in order:
            j = mem.push(other.obs[i], other.action[i], other.reward[i], other.next_obs[i],
                         other.done[i], other.episode[i], GENERALIZED_POOL)
            mem.priority[j] = other.priority[i]
            mem.tree.set(j, other.tree.leaves[i])
        mem.max_priority = other.max_priority
        return mem

    def state_arrays(self) -> dict:
        return {
            "obs": self.obs, "next_obs": self.next_obs, "action": self.action,
            "reward": self.reward, "done": self.done, "priority": self.priority,
            "episode": self.episode, "seq": self.seq, "source": self.source,
            # leaf masses are stored, not recomputed: vectorised and scalar pow can
            # differ in the last bit, which would change later draws after a resume
            "leaves": self.tree.leaves,
        }

    def state_meta(self) -> dict:
        return {"capacity": self.capacity, "alpha": self.alpha, "eps": self.eps,
                "size": self.size, "head": self.head, "counter": self.counter,
                "max_priority": self.max_priority}

    @classmethod
    def from_state(cls, meta: dict, arrays: dict) -> "ReplayMemory":
        obs = arrays["obs"]
        mem = cls(meta["capacity"], obs.shape[1], obs.shape[2], meta["alpha"], meta["eps"])
        for k in mem.state_arrays():
            if k != "leaves":
                getattr(mem, k)[...] = arrays[k]
        mem.size, mem.head, mem.counter = meta["size"], meta["head"], meta["counter"]
        mem.max_priority = meta["max_priority"]
        if mem.size:
            mem.tree.set(np.arange(mem.size), arrays["leaves"][:mem.size])
        return mem
