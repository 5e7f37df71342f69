"""Executable pieces of the convergence analysis for the accelerated learner.

Three ingredients: the uniform value bound ``v_max``, the uniform bound
``d_max`` on the combined sampled-operator term, and the resulting
high-probability sup-norm error bound after T rounds.  The module also
provides the combined operator term itself (sampled and exact forms) plus a
running series of their per-pair differences, whose cumulative sums form a
martingale; those are the diagnostics the bound rests on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .learners import schedule
from .mdp import FiniteMdp, QTable, SampleSet, bellman_apply, empirical_bellman

__all__ = [
    "BoundParams",
    "ErrorSeries",
    "v_max",
    "d_max",
    "error_bound",
    "momentum_operator",
    "exact_momentum_operator",
    "error_series_update",
]


def v_max(r_max: float, gamma: float) -> float:
    """Uniform Q-value bound: the fixed point of v = r_max + gamma * v."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if r_max < 0.0:
        raise ValueError("r_max must be nonnegative")
    return r_max / (1.0 - gamma)


def d_max(gamma: float, m: float, vmax: float) -> float:
    """Uniform bound on the combined sampled-operator term.

    Evaluated by direct recursion over the two growth phases:

        B(0) = vmax
        B(k) = (1 + gamma*m) * vmax + gamma*m * B(k-1)   for 1 <= k < m/2
        d_max = (1 + gamma)/(1 - gamma) * vmax + B(ceil(m/2) - 1)

    Direct summation sidesteps the removable singularity of the closed-form
    geometric quotient at gamma*m = 1; for m <= 2 the first phase is empty
    and the recursion contributes just vmax.
    """
    if gamma * m < 1.0:
        raise ValueError(f"need gamma*m >= 1, got gamma={gamma}, m={m}")
    if vmax < 0.0:
        raise ValueError("vmax must be nonnegative")
    gm = gamma * m
    b = vmax
    last = math.ceil(m / 2.0) - 1
    for _ in range(1, last + 1):
        b = (1.0 + gm) * vmax + gm * b
    return (1.0 + gamma) / (1.0 - gamma) * vmax + b


@dataclass(frozen=True)
class BoundParams:
    """Inputs and derived constants of the high-probability error bound."""

    gamma: float
    m: float
    horizon: int      # number of rounds T
    n_pairs: int      # total admissible state-action pairs
    delta: float      # failure probability
    r_max: float
    v_max: float      # derived: r_max / (1 - gamma)
    h: float          # derived: gamma * (m + 1) + 1
    d_max: float      # derived via the phase recursion

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.gamma * self.m < 1.0:
            raise ValueError("need gamma*m >= 1")
        if self.horizon <= self.m:
            raise ValueError(f"horizon T={self.horizon} must exceed m={self.m}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be positive")
        if abs(self.v_max - self.r_max / (1.0 - self.gamma)) > 1e-9 * max(1.0, self.v_max):
            raise ValueError("v_max is inconsistent with r_max/(1-gamma)")
        if abs(self.h - (self.gamma * (self.m + 1.0) + 1.0)) > 1e-12 * max(1.0, self.h):
            raise ValueError("h is inconsistent with gamma*(m+1)+1")
        if self.d_max < self.v_max:
            raise ValueError("d_max cannot be smaller than v_max")

    @classmethod
    def derive(
        cls,
        gamma: float,
        m: float,
        horizon: int,
        n_pairs: int,
        delta: float,
        r_max: float,
    ) -> "BoundParams":
        vmax = v_max(r_max, gamma)
        return cls(
            gamma=gamma,
            m=m,
            horizon=int(horizon),
            n_pairs=int(n_pairs),
            delta=delta,
            r_max=r_max,
            v_max=vmax,
            h=gamma * (m + 1.0) + 1.0,
            d_max=d_max(gamma, m, vmax),
        )


def error_bound(p: BoundParams) -> float:
    """High-probability sup-norm error of the accelerated iterate after T rounds.

    With probability at least 1 - delta,

        ||Q* - Q_T|| <= [2 (gamma r_max + h v_max)
                         + d_max sqrt(8 (T - m) log(2 n / delta))] / (T (1 - gamma)).
    """
    tail = p.d_max * math.sqrt(8.0 * (p.horizon - p.m) * math.log(2.0 * p.n_pairs / p.delta))
    return (2.0 * (p.gamma * p.r_max + p.h * p.v_max) + tail) / (p.horizon * (1.0 - p.gamma))


def momentum_operator(
    q_curr: QTable,
    q_prev: QTable,
    k: int,
    m: float,
    samples: SampleSet,
    mdp: FiniteMdp,
) -> QTable:
    """Combined sampled-operator term (1 + b_k) T_k q_curr - b_k T_k q_prev.

    Both applications use the same sample set; with q_prev == q_curr the
    coefficients collapse and the result is exactly T_k q_curr.
    """
    _, b, _ = schedule(k, m)
    tq_c = empirical_bellman(mdp, q_curr, samples).values
    tq_p = empirical_bellman(mdp, q_prev, samples).values
    return QTable(mdp, (1.0 + b) * tq_c - b * tq_p)


def exact_momentum_operator(
    q_curr: QTable,
    q_prev: QTable,
    k: int,
    m: float,
    mdp: FiniteMdp,
) -> QTable:
    """Conditional expectation of the combined term: uses the true kernel."""
    _, b, _ = schedule(k, m)
    tq_c = bellman_apply(mdp, q_curr).values
    tq_p = bellman_apply(mdp, q_prev).values
    return QTable(mdp, (1.0 + b) * tq_c - b * tq_p)


@dataclass
class ErrorSeries:
    """Per-pair sampling-error history and its running (martingale) sum."""

    eps: list[np.ndarray] = field(default_factory=list)
    cum: np.ndarray | None = None

    def push(self, exact: QTable, empirical: QTable) -> None:
        """Append eps_k = exact - empirical and extend the running sum."""
        if exact.values.shape != empirical.values.shape:
            raise ValueError("exact and empirical tables have different shapes")
        err = exact.values - empirical.values
        self.eps.append(err)
        self.cum = err.copy() if self.cum is None else self.cum + err

    def __len__(self) -> int:
        return len(self.eps)

    @property
    def sup_norms(self) -> np.ndarray:
        """Sup norm of each recorded error term."""
        if not self.eps:
            return np.empty(0)
        return np.array([np.abs(e).max() for e in self.eps])


def error_series_update(series: ErrorSeries, exact: QTable, empirical: QTable) -> ErrorSeries:
    """Functional wrapper around :meth:`ErrorSeries.push`; returns the series."""
    series.push(exact, empirical)
    return series
