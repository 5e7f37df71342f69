"""Synchronous tabular learners: vanilla Q-learning, SpeedyQ, and the
momentum-accelerated update (AQL).

All three updates consume exactly one synchronous sample set per round, so
runs started from the same seed see identical sample streams and can be
compared pairwise (common random numbers).  The accelerated update keeps the
previous iterate around and blends two momentum terms with the polynomial
schedule ``(a_k, b_k, c_k)``:

    S_k = (1 - a_k) Q_{k-1} + a_k T_k Q_{k-1}
    P_k = (1 - a_k) Q_k     + a_k T_k Q_k
    Q_{k+1} = P_k + b_k (P_k - S_k) + c_k (Q_k - Q_{k-1})

where T_k is the sampled Bellman operator.  Both T_k applications in a round
share the same sample set; that pairing is what keeps the combined operator
term bounded as b_k grows.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import IO, Callable, Iterable

import numpy as np

from .mdp import (
    FiniteMdp,
    QTable,
    SampleSet,
    empirical_bellman,
    sample_synchronous,
    sup_norm_diff,
)

__all__ = [
    "ALGORITHMS",
    "COMPACT_FORM_TOL",
    "ScheduleParams",
    "LearnerState",
    "LossTrajectory",
    "schedule",
    "default_m_values",
    "make_learner",
    "vanilla_step",
    "speedy_step",
    "aql_step",
    "aql_expanded_update",
    "aql_compact_update",
    "expected_aql_iterate",
    "run_learner",
    "write_loss_csv",
]

log = logging.getLogger(__name__)

ALGORITHMS = ("vanilla", "speedy", "aql")

# The expanded and compact forms of the accelerated update must agree to
# this sup-norm tolerance at every step; a larger gap is an implementation
# fault, not noise.
COMPACT_FORM_TOL = 1e-9


def schedule(k: int, m: float) -> tuple[float, float, float]:
    """Learning-rate triple (a_k, b_k, c_k) of the accelerated update.

    a_k = 1/(k+1), b_k = k - m - 1 and c_k = (-k^2 + (m+1)k + 1)/(k+1).
    The triple satisfies b_k (1 - a_k) + c_k = a_k for every k >= 0.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    kk = float(k)
    a = 1.0 / (kk + 1.0)
    b = kk - m - 1.0
    # c equals a - b*(1 - a) exactly as reals; evaluating it this way keeps
    # the coefficient identity at roundoff level even for k ~ 1e4, where the
    # literal polynomial quotient drifts past 1e-12.
    c = a - b * (1.0 - a)
    return a, b, c


def default_m_values(gamma: float) -> list[int]:
    """Default sweep of the schedule parameter: ceil(1/g), ceil(2/g), ceil(4/g)."""
    vals = sorted({int(np.ceil(s / gamma)) for s in (1.0, 2.0, 4.0)})
    return vals


@dataclass(frozen=True)
class ScheduleParams:
    """Schedule parameter m together with the discount it must match."""

    m: float
    gamma: float

    def __post_init__(self):
        if self.gamma * self.m < 1.0:
            raise ValueError(
                f"need gamma*m >= 1 (equivalently m >= 1/gamma), "
                f"got gamma={self.gamma}, m={self.m}"
            )


@dataclass
class LearnerState:
    """Iterate pair (Q_k, Q_{k-1}) plus step counter and algorithm tag."""

    q_curr: QTable
    q_prev: QTable
    k: int
    algo: str
    sched: ScheduleParams | None = None


def make_learner(
    mdp: FiniteMdp,
    algo: str,
    m: float | None = None,
    q0: QTable | None = None,
) -> LearnerState:
    """Fresh learner at k = 0 with Q_{-1} = Q_0 (zero table by default)."""
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}, expected one of {ALGORITHMS}")
    if q0 is None:
        q0 = QTable.zeros(mdp)
    else:
        if not q0.mdp.compatible_with(mdp):
            raise ValueError("q0 is bound to a different MDP shape")
        q0 = q0.copy()
    sched = None
    if algo == "aql":
        if m is None:
            raise ValueError("aql requires the schedule parameter m")
        sched = ScheduleParams(float(m), mdp.gamma)
    return LearnerState(q_curr=q0, q_prev=q0.copy(), k=0, algo=algo, sched=sched)


def vanilla_step(
    state: LearnerState,
    samples: SampleSet,
    mdp: FiniteMdp,
    alpha: Callable[[int], float] | None = None,
) -> LearnerState:
    """Q_{k+1} = Q_k - alpha_k (Q_k - T_k Q_k); alpha_k = 1/(k+1) by default."""
    if state.algo != "vanilla":
        raise ValueError(f"vanilla_step on a {state.algo!r} learner")
    a = 1.0 / (state.k + 1.0) if alpha is None else float(alpha(state.k))
    tq = empirical_bellman(mdp, state.q_curr, samples)
    nxt = state.q_curr.values - a * (state.q_curr.values - tq.values)
    return LearnerState(QTable(mdp, nxt), state.q_curr, state.k + 1, "vanilla")


def speedy_step(state: LearnerState, samples: SampleSet, mdp: FiniteMdp) -> LearnerState:
    """SpeedyQ update with momentum term T_k Q_k - T_k Q_{k-1}.

    Q_{k+1} = Q_k + a_k (T_k Q_k - Q_k) + (1 - a_k)(T_k Q_k - T_k Q_{k-1}),
    a_k = 1/(k+1).  Both operator applications share ``samples``.
    """
    if state.algo != "speedy":
        raise ValueError(f"speedy_step on a {state.algo!r} learner")
    a = 1.0 / (state.k + 1.0)
    tq_c = empirical_bellman(mdp, state.q_curr, samples).values
    tq_p = empirical_bellman(mdp, state.q_prev, samples).values
    qc = state.q_curr.values
    nxt = qc + a * (tq_c - qc) + (1.0 - a) * (tq_c - tq_p)
    return LearnerState(QTable(mdp, nxt), state.q_curr, state.k + 1, "speedy")


def aql_expanded_update(
    q_curr: np.ndarray,
    q_prev: np.ndarray,
    tq_curr: np.ndarray,
    tq_prev: np.ndarray,
    k: int,
    m: float,
) -> np.ndarray:
    """Three-line accelerated update (interim iterates S_k, P_k spelled out)."""
    a, b, c = schedule(k, m)
    s_k = (1.0 - a) * q_prev + a * tq_prev
    p_k = (1.0 - a) * q_curr + a * tq_curr
    return p_k + b * (p_k - s_k) + c * (q_curr - q_prev)


def aql_compact_update(
    q_curr: np.ndarray,
    q_prev: np.ndarray,
    tq_curr: np.ndarray,
    tq_prev: np.ndarray,
    k: int,
    m: float,
) -> np.ndarray:
    """One-line rewrite of the accelerated update.

    Q_{k+1} = (1-a_k) Q_k + [b_k(1-a_k) + c_k](Q_k - Q_{k-1})
              + a_k [(1+b_k) T_k Q_k - b_k T_k Q_{k-1}]
    """
    a, b, c = schedule(k, m)
    return (
        (1.0 - a) * q_curr
        + (b * (1.0 - a) + c) * (q_curr - q_prev)
        + a * ((1.0 + b) * tq_curr - b * tq_prev)
    )


def aql_step(state: LearnerState, samples: SampleSet, mdp: FiniteMdp) -> LearnerState:
    """One accelerated round; cross-checks the compact rewrite on the fly.

    Raises RuntimeError if the expanded and compact forms disagree beyond
    ``COMPACT_FORM_TOL`` (that cannot happen without a coding mistake).
    """
    if state.algo != "aql":
        raise ValueError(f"aql_step on a {state.algo!r} learner")
    assert state.sched is not None
    m = state.sched.m
    tq_c = empirical_bellman(mdp, state.q_curr, samples).values
    tq_p = empirical_bellman(mdp, state.q_prev, samples).values
    qc, qp = state.q_curr.values, state.q_prev.values
    expanded = aql_expanded_update(qc, qp, tq_c, tq_p, state.k, m)
    compact = aql_compact_update(qc, qp, tq_c, tq_p, state.k, m)
    gap = float(np.abs(expanded - compact).max())
    if gap > COMPACT_FORM_TOL:
        raise RuntimeError(
            f"expanded/compact update mismatch {gap:g} at k={state.k} (m={m})"
        )
    return LearnerState(
        QTable(mdp, expanded), state.q_curr, state.k + 1, "aql", state.sched
    )


def expected_aql_iterate(
    q_prev: np.ndarray,
    q0: np.ndarray,
    tq_prev: np.ndarray,
    tq0: np.ndarray,
    k: int,
    m: float,
) -> np.ndarray:
    """Closed form of the k-th accelerated iterate on deterministic models.

    With exact operator applications (no sampling error) the iterates obey

        Q_k = (1/k) (Q_{k-1} - Q_0 + (k-m-1) T Q_{k-1} + (m+1) T Q_0)

    for all k >= 1.  Useful as an independent check of the step functions.
    """
    if k < 1:
        raise ValueError("the recursion starts at k = 1")
    return (q_prev - q0 + (k - m - 1.0) * tq_prev + (m + 1.0) * tq0) / float(k)


@dataclass
class LossTrajectory:
    """Sup-norm distance to the optimum after every round of one run."""

    algo: str
    m: float | None
    seed: int
    losses: np.ndarray            # shape (T+1,), losses[k] = ||Q_k - Q*||
    vmax_violations: list[int]    # rounds whose iterate exceeded r_max/(1-gamma)

    @property
    def final_loss(self) -> float:
        return float(self.losses[-1])


_STEPPERS = {"vanilla": vanilla_step, "speedy": speedy_step, "aql": aql_step}


def run_learner(
    mdp: FiniteMdp,
    algo: str,
    m: float | None = None,
    iterations: int = 1,
    seed=0,
    q_star: QTable | None = None,
    alpha: Callable[[int], float] | None = None,
    q0: QTable | None = None,
    track_errors: bool = False,
):
    """Run one learner for ``iterations`` synchronous rounds.

    Returns a :class:`LossTrajectory`; with ``track_errors=True`` (only for
    ``algo="aql"`` and at the cost of exact operator applications per round)
    returns ``(trajectory, error_series)`` where the series collects the
    per-round sampling errors of the combined operator term.

    The sup-norm of every iterate is monitored against the uniform bound
    r_max/(1-gamma); violations are logged once and recorded, never fatal.
    Identical (mdp, algo, m, iterations, seed) reproduce the trajectory
    bit for bit.
    """
    if iterations < 0:
        raise ValueError("iterations must be nonnegative")
    if q_star is None:
        raise ValueError("q_star is required as the loss reference")
    if track_errors and algo != "aql":
        raise ValueError("error tracking is defined for the aql learner only")

    rng = np.random.default_rng(seed)
    state = make_learner(mdp, algo, m=m, q0=q0)
    v_bound = mdp.r_max / (1.0 - mdp.gamma)

    losses = np.empty(iterations + 1)
    losses[0] = sup_norm_diff(state.q_curr, q_star)
    violations: list[int] = []

    series = None
    if track_errors:
        from .bounds import ErrorSeries, exact_momentum_operator, momentum_operator

        series = ErrorSeries()

    step = _STEPPERS[algo]
    for k in range(iterations):
        samples = sample_synchronous(mdp, rng, round_index=k)
        if series is not None:
            exact = exact_momentum_operator(state.q_curr, state.q_prev, k, m, mdp)
            sampled = momentum_operator(state.q_curr, state.q_prev, k, m, samples, mdp)
            series.push(exact, sampled)
        if algo == "vanilla":
            state = step(state, samples, mdp, alpha)
        else:
            state = step(state, samples, mdp)
        losses[k + 1] = sup_norm_diff(state.q_curr, q_star)
        sup = float(np.abs(state.q_curr.values).max())
        if not np.isfinite(sup):
            raise RuntimeError(f"non-finite iterate at round {k + 1}")
        if sup > v_bound * (1.0 + 1e-9):
            if not violations:
                log.warning(
                    "%s iterate exceeded the uniform value bound at round %d "
                    "(sup %.6g > %.6g)",
                    algo,
                    k + 1,
                    sup,
                    v_bound,
                )
            violations.append(k + 1)

    seed_label = seed if isinstance(seed, int) else -1
    traj = LossTrajectory(algo, m if algo == "aql" else None, seed_label, losses, violations)
    if track_errors:
        return traj, series
    return traj


def write_loss_csv(trajectories: Iterable[LossTrajectory], stream: IO[str]) -> None:
    """Serialize trajectories as rows ``algo,m,seed,iteration,loss``."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["algo", "m", "seed", "iteration", "loss"])
    for traj in trajectories:
        m_field = "" if traj.m is None else repr(float(traj.m))
        for k, loss in enumerate(traj.losses):
            writer.writerow([traj.algo, m_field, traj.seed, k, repr(float(loss))])
