"""Finite Markov decision processes with exact and sampled Bellman operators.

Everything is stored densely: a transition kernel of shape (S, A, S), a
reward table of shape (S, A) and a boolean admissibility mask of shape
(S, A).  Inadmissible state-action pairs hold zeros internally, and reading
them through :class:`QTable` raises.  A :class:`FiniteMdp` is immutable
after construction and safe to share read-only across threads; all
operations here are pure functions of their inputs (plus the generator
state for sampling).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import IO

import numpy as np

__all__ = [
    "KERNEL_ATOL",
    "FiniteMdp",
    "QTable",
    "Policy",
    "SampleSet",
    "bellman_apply",
    "empirical_bellman",
    "sample_synchronous",
    "solve_q_star",
    "greedy_policy",
    "policy_value",
    "sup_norm_diff",
]

# Kernel rows must sum to one within this absolute slack.
KERNEL_ATOL = 1e-12


def _readonly(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FiniteMdp:
    """Finite MDP: kernel P(y|x,u), reward R(x,u), discount and action mask."""

    kernel: np.ndarray       # (S, A, S)
    reward: np.ndarray       # (S, A)
    gamma: float
    action_mask: np.ndarray  # (S, A) bool, True where (x, u) is admissible
    r_max: float

    @classmethod
    def create(
        cls,
        kernel,
        reward,
        gamma: float,
        action_mask=None,
        r_max: float | None = None,
    ) -> "FiniteMdp":
        """Validate inputs and build an immutable MDP.

        ``action_mask`` defaults to all pairs admissible; ``r_max`` defaults
        to the largest admissible reward.  Kernel rows of admissible pairs
        must be nonnegative and sum to one within ``KERNEL_ATOL``; rewards
        must lie in [0, r_max]; every state needs at least one admissible
        action.
        """
        kernel = np.asarray(kernel, dtype=float)
        reward = np.asarray(reward, dtype=float)
        if kernel.ndim != 3 or kernel.shape[0] != kernel.shape[2]:
            raise ValueError(f"kernel must have shape (S, A, S), got {kernel.shape}")
        n_states, n_actions = kernel.shape[:2]
        if reward.shape != (n_states, n_actions):
            raise ValueError(
                f"reward shape {reward.shape} does not match kernel {kernel.shape}"
            )
        if action_mask is None:
            action_mask = np.ones((n_states, n_actions), dtype=bool)
        else:
            action_mask = np.asarray(action_mask, dtype=bool)
            if action_mask.shape != (n_states, n_actions):
                raise ValueError("action_mask shape does not match kernel")
        if not action_mask.any(axis=1).all():
            raise ValueError("every state needs at least one admissible action")
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"gamma must lie strictly in (0, 1), got {gamma}")

        adm_rows = kernel[action_mask]           # (n_pairs, S)
        if not np.isfinite(adm_rows).all():
            raise ValueError("kernel has non-finite entries")
        if (adm_rows < 0.0).any():
            raise ValueError("kernel has negative entries")
        row_sums = adm_rows.sum(axis=1)
        if np.abs(row_sums - 1.0).max() > KERNEL_ATOL:
            worst = float(np.abs(row_sums - 1.0).max())
            raise ValueError(f"kernel rows must sum to 1 (worst deviation {worst:g})")

        adm_rewards = reward[action_mask]
        if not np.isfinite(adm_rewards).all():
            raise ValueError("reward has non-finite entries")
        if r_max is None:
            r_max = float(adm_rewards.max()) if adm_rewards.size else 0.0
        if r_max < 0.0:
            raise ValueError("r_max must be nonnegative")
        if (adm_rewards < 0.0).any() or (adm_rewards > r_max + 1e-12).any():
            raise ValueError(f"rewards must lie in [0, {r_max}]")

        # zero out inadmissible slots so internals never see stale data
        kernel = np.where(action_mask[:, :, None], kernel, 0.0)
        reward = np.where(action_mask, reward, 0.0)
        return cls(
            kernel=_readonly(kernel, float),
            reward=_readonly(reward, float),
            gamma=float(gamma),
            action_mask=_readonly(action_mask, bool),
            r_max=float(r_max),
        )

    @property
    def num_states(self) -> int:
        return self.kernel.shape[0]

    @property
    def num_actions(self) -> int:
        return self.kernel.shape[1]

    @cached_property
    def num_pairs(self) -> int:
        """n: total number of admissible state-action pairs."""
        return int(self.action_mask.sum())

    @cached_property
    def _flat_kernel(self) -> np.ndarray:
        # (S*A, S) view used for fast expected-value products
        out = self.kernel.reshape(-1, self.num_states).copy()
        out.setflags(write=False)
        return out

    @cached_property
    def _cum_kernel(self) -> np.ndarray:
        cum = self.kernel.cumsum(axis=2)
        # force the top bin to exactly 1 so a uniform draw in [0, 1) always lands
        cum[self.action_mask, -1] = 1.0
        cum.setflags(write=False)
        return cum

    def admissible(self, state: int, action: int) -> bool:
        return bool(self.action_mask[state, action])

    def compatible_with(self, other: "FiniteMdp") -> bool:
        if self is other:
            return True
        return (
            self.kernel.shape == other.kernel.shape
            and np.array_equal(self.action_mask, other.action_mask)
        )


@dataclass
class QTable:
    """Tabular Q-function bound to a :class:`FiniteMdp`.

    Values are a dense (S, A) array; entries at inadmissible pairs are kept
    at zero and reading them via :meth:`value` is an error.
    """

    mdp: FiniteMdp
    values: np.ndarray

    def __post_init__(self):
        expect = (self.mdp.num_states, self.mdp.num_actions)
        if self.values.shape != expect:
            raise ValueError(f"values shape {self.values.shape} != {expect}")

    @classmethod
    def zeros(cls, mdp: FiniteMdp) -> "QTable":
        return cls(mdp, np.zeros((mdp.num_states, mdp.num_actions)))

    @classmethod
    def from_values(cls, mdp: FiniteMdp, values) -> "QTable":
        """Copy ``values`` into a table, checking finiteness on admissible pairs."""
        arr = np.array(values, dtype=float, copy=True)
        if arr.shape != (mdp.num_states, mdp.num_actions):
            raise ValueError(
                f"values shape {arr.shape} != {(mdp.num_states, mdp.num_actions)}"
            )
        if not np.isfinite(arr[mdp.action_mask]).all():
            raise ValueError("Q-values must be finite on admissible pairs")
        arr[~mdp.action_mask] = 0.0
        return cls(mdp, arr)

    def value(self, state: int, action: int) -> float:
        if not self.mdp.admissible(state, action):
            raise ValueError(f"state-action pair ({state}, {action}) is inadmissible")
        return float(self.values[state, action])

    @property
    def sup_norm(self) -> float:
        vals = np.abs(self.values[self.mdp.action_mask])
        return float(vals.max()) if vals.size else 0.0

    def copy(self) -> "QTable":
        return QTable(self.mdp, self.values.copy())

    def to_csv(self, stream: IO[str]) -> None:
        """Write rows ``state,action,value`` for admissible pairs only."""
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["state", "action", "value"])
        for x in range(self.mdp.num_states):
            for u in range(self.mdp.num_actions):
                if self.mdp.action_mask[x, u]:
                    writer.writerow([x, u, repr(float(self.values[x, u]))])


@dataclass(frozen=True)
class Policy:
    """One admissible action per state."""

    actions: np.ndarray  # (S,) int

    def action(self, state: int) -> int:
        return int(self.actions[state])


@dataclass(frozen=True)
class SampleSet:
    """One sampled next state per admissible pair (synchronous sampling)."""

    mdp: FiniteMdp
    next_state: np.ndarray  # (S, A) int
    round_index: int = 0


def _check_table(q: QTable, mdp: FiniteMdp, name: str = "q") -> None:
    if not q.mdp.compatible_with(mdp):
        raise ValueError(f"{name} is bound to a different MDP shape")


def _state_max(mdp: FiniteMdp, values: np.ndarray) -> np.ndarray:
    """Per-state max of ``values`` over admissible actions."""
    return np.where(mdp.action_mask, values, -np.inf).max(axis=1)


def bellman_apply(mdp: FiniteMdp, q: QTable) -> QTable:
    """Exact Bellman operator: R(x,u) + gamma * E_y[max_u' q(y, u')]."""
    _check_table(q, mdp)
    vmax = _state_max(mdp, q.values)
    expected = (mdp._flat_kernel @ vmax).reshape(mdp.num_states, mdp.num_actions)
    out = mdp.reward + mdp.gamma * expected
    out[~mdp.action_mask] = 0.0
    if not np.isfinite(out).all():
        raise ValueError("Bellman image has non-finite entries")
    return QTable(mdp, out)


def empirical_bellman(mdp: FiniteMdp, q: QTable, samples: SampleSet) -> QTable:
    """Sampled Bellman operator using one drawn next state per pair."""
    _check_table(q, mdp)
    if not samples.mdp.compatible_with(mdp):
        raise ValueError("sample set was generated for a different MDP shape")
    if samples.next_state.shape != (mdp.num_states, mdp.num_actions):
        raise ValueError("sample set is missing pairs")
    vmax = _state_max(mdp, q.values)
    out = mdp.reward + mdp.gamma * vmax[samples.next_state]
    out[~mdp.action_mask] = 0.0
    if not np.isfinite(out).all():
        raise ValueError("empirical Bellman image has non-finite entries")
    return QTable(mdp, out)


def sample_synchronous(
    mdp: FiniteMdp, rng: np.random.Generator, round_index: int = 0
) -> SampleSet:
    """Draw one next state y ~ P(.|x,u) for every admissible pair.

    Identical generator state yields an identical sample set.  Inadmissible
    slots are filled with state 0 and never read.
    """
    draws = rng.random((mdp.num_states, mdp.num_actions))
    # inverse-CDF: index of the first cumulative bin strictly above the draw
    idx = (mdp._cum_kernel <= draws[:, :, None]).sum(axis=2)
    np.minimum(idx, mdp.num_states - 1, out=idx)
    idx[~mdp.action_mask] = 0
    return SampleSet(mdp, idx, round_index)


def solve_q_star(mdp: FiniteMdp, tol: float = 1e-10) -> QTable:
    """Optimal Q-function by value iteration from the zero table.

    Iterates until the sup-norm change is at most ``tol * (1 - gamma) / gamma``,
    which guarantees a fixed-point residual of at most ``tol``.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    gamma = mdp.gamma
    stop = tol * (1.0 - gamma) / gamma
    flat = mdp._flat_kernel
    q = np.zeros((mdp.num_states, mdp.num_actions))
    while True:
        vmax = np.where(mdp.action_mask, q, -np.inf).max(axis=1)
        nxt = mdp.reward + gamma * (flat @ vmax).reshape(q.shape)
        nxt[~mdp.action_mask] = 0.0
        delta = float(np.abs(nxt - q).max())
        q = nxt
        if delta <= stop:
            return QTable(mdp, q)


def greedy_policy(mdp: FiniteMdp, q: QTable) -> Policy:
    """Greedy policy w.r.t. q; ties broken by the lowest action index."""
    _check_table(q, mdp)
    masked = np.where(mdp.action_mask, q.values, -np.inf)
    return Policy(masked.argmax(axis=1))


def policy_value(mdp: FiniteMdp, policy: Policy, tol: float = 1e-10) -> np.ndarray:
    """Per-state value of ``policy`` by fixed-point iteration, residual <= tol."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    actions = np.asarray(policy.actions, dtype=int)
    if actions.shape != (mdp.num_states,):
        raise ValueError("policy must assign one action per state")
    idx = np.arange(mdp.num_states)
    if not mdp.action_mask[idx, actions].all():
        raise ValueError("policy selects an inadmissible action")
    p_pi = mdp.kernel[idx, actions]   # (S, S)
    r_pi = mdp.reward[idx, actions]   # (S,)
    gamma = mdp.gamma
    stop = tol * (1.0 - gamma) / gamma
    val = np.zeros(mdp.num_states)
    while True:
        nxt = r_pi + gamma * (p_pi @ val)
        delta = float(np.abs(nxt - val).max())
        val = nxt
        if delta <= stop:
            return val


def sup_norm_diff(q1: QTable, q2: QTable) -> float:
    """max |q1 - q2| over admissible pairs."""
    if not q1.mdp.compatible_with(q2.mdp):
        raise ValueError("tables have different shapes")
    diff = np.abs(q1.values - q2.values)[q1.mdp.action_mask]
    return float(diff.max()) if diff.size else 0.0
