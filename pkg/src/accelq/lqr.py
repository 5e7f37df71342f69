"""Discrete-time LQR with a quadratic Q-function learned by parametric
Q-learning and its momentum-accelerated variants.

The Q-function is Q(x, u) = [x; u]^T H [x; u] with H symmetric; the learned
parameter vector ``theta`` is the upper triangle of H, so symmetry holds by
construction.  Costs are minimized: the greedy action is u = -K x with
K = H_uu^{-1} H_ux, which needs H_uu positive definite.  The reference gain
comes from a fixed-point Riccati solver; for a discount gamma < 1 the same
solver runs on the (sqrt(gamma) A, sqrt(gamma) B) scaled system, which keeps
oracle and learner consistent.

Momentum variants of the parameter update, with constants (a, b, c):

    xi_k   = theta_{k-1} - a * mean(delta * dQ/dtheta) at theta_{k-1}
    zeta_k = theta_k     - a * mean(delta * dQ/dtheta) at theta_k
    theta_{k+1} = zeta_k + b (zeta_k - xi_k) + c (theta_k - theta_{k-1})

``vanilla`` forces b = c = 0 (plain parametric Q-learning), ``hb`` forces
b = 0 (heavy-ball momentum on the iterate difference), ``nes`` uses both
terms (Nesterov-style lookahead).
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

__all__ = [
    "VARIANTS",
    "DivergenceError",
    "LinearSystem",
    "QuadraticQ",
    "PaqlState",
    "Transitions",
    "ReplayBuffer",
    "GainErrorTrajectory",
    "build_mass_damper",
    "discount_scaled",
    "dare_solve",
    "dare_residual",
    "optimal_gain",
    "spectral_radius",
    "exact_quadratic_q",
    "q_value",
    "policy_gain",
    "grad_q",
    "td_delta",
    "variant_hypers",
    "paql_step",
    "run_lqr_experiment",
    "write_gain_csv",
]

VARIANTS = ("vanilla", "hb", "nes")

# abort threshold for the parameter norm; past this the run has diverged
THETA_GUARD = 1e8


class DivergenceError(RuntimeError):
    """Raised when a learning run produces non-finite or runaway parameters."""


@dataclass(frozen=True)
class LinearSystem:
    """x' = A x + B u with stage cost x^T Q x + u^T R u + 2 x^T N u."""

    a: np.ndarray       # (n, n)
    b: np.ndarray       # (n, m)
    q_cost: np.ndarray  # (n, n) symmetric PSD
    r_cost: np.ndarray  # (m, m) symmetric PD
    n_cross: np.ndarray # (n, m)
    eta: float = 1.0    # control-cost coefficient used to build r_cost

    @classmethod
    def create(cls, a, b, q_cost, r_cost, n_cross=None, eta: float = 1.0) -> "LinearSystem":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        q_cost = np.atleast_2d(np.asarray(q_cost, dtype=float))
        r_cost = np.atleast_2d(np.asarray(r_cost, dtype=float))
        n = a.shape[0]
        m = b.shape[1]
        if a.shape != (n, n) or b.shape != (n, m):
            raise ValueError(f"inconsistent A {a.shape} / B {b.shape}")
        if q_cost.shape != (n, n) or r_cost.shape != (m, m):
            raise ValueError("cost matrices do not match the system dimensions")
        if n_cross is None:
            n_cross = np.zeros((n, m))
        else:
            n_cross = np.asarray(n_cross, dtype=float).reshape(n, m)
        if not np.allclose(q_cost, q_cost.T, atol=1e-12):
            raise ValueError("Q cost must be symmetric")
        if not np.allclose(r_cost, r_cost.T, atol=1e-12):
            raise ValueError("R cost must be symmetric")
        try:
            np.linalg.cholesky(r_cost)
        except np.linalg.LinAlgError:
            raise ValueError("R cost must be positive definite") from None
        return cls(a, b, 0.5 * (q_cost + q_cost.T), 0.5 * (r_cost + r_cost.T),
                   n_cross, float(eta))

    @property
    def dim_x(self) -> int:
        return self.a.shape[0]

    @property
    def dim_u(self) -> int:
        return self.b.shape[1]

    def stage_cost(self, x: np.ndarray, u: np.ndarray) -> float:
        return float(x @ self.q_cost @ x + u @ self.r_cost @ u + 2.0 * x @ self.n_cross @ u)

    def to_json(self) -> dict:
        return {
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "q_cost": self.q_cost.tolist(),
            "r_cost": self.r_cost.tolist(),
            "n_cross": self.n_cross.tolist(),
            "eta": self.eta,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "LinearSystem":
        return cls.create(
            payload["a"], payload["b"], payload["q_cost"], payload["r_cost"],
            payload.get("n_cross"), payload.get("eta", 1.0),
        )


def build_mass_damper(
    n_masses: int, n_actuators: int, eta: float = 0.1, dt: float = 0.01
) -> LinearSystem:
    """Serially coupled mass-spring-damper chain, forward-Euler discretized.

    Unit masses in a row, anchored to a wall on the left; spring constant 1
    and damping 0.1 on each joint, dampers parallel to the springs.  States
    are the n positions followed by the n velocities; the first
    ``n_actuators`` masses each take a unit-force input.  The position block
    of the cost is the identity, the control block is eta * I, no cross term.
    """
    if n_masses < 1 or not 1 <= n_actuators <= n_masses:
        raise ValueError(
            f"need 1 <= n_actuators <= n_masses, got {n_actuators}/{n_masses}"
        )
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    n = n_masses
    stiffness = np.zeros((n, n))
    for i in range(n):
        stiffness[i, i] = 2.0 if i < n - 1 else 1.0
        if i + 1 < n:
            stiffness[i, i + 1] = stiffness[i + 1, i] = -1.0
    if n == 1:
        stiffness[0, 0] = 1.0
    damping = 0.1 * stiffness

    a_cont = np.zeros((2 * n, 2 * n))
    a_cont[:n, n:] = np.eye(n)
    a_cont[n:, :n] = -stiffness
    a_cont[n:, n:] = -damping
    b_cont = np.zeros((2 * n, n_actuators))
    b_cont[n : n + n_actuators, :] = np.eye(n_actuators)

    a = np.eye(2 * n) + dt * a_cont
    b = dt * b_cont
    q_cost = np.zeros((2 * n, 2 * n))
    q_cost[:n, :n] = np.eye(n)
    r_cost = eta * np.eye(n_actuators)
    return LinearSystem.create(a, b, q_cost, r_cost, eta=eta)


def discount_scaled(sys: LinearSystem, gamma: float) -> LinearSystem:
    """Scale (A, B) by sqrt(gamma); the Riccati solution of the scaled system
    is the fixed point of the gamma-discounted Q-iteration."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    if gamma == 1.0:
        return sys
    root = np.sqrt(gamma)
    return LinearSystem.create(
        root * sys.a, root * sys.b, sys.q_cost, sys.r_cost, sys.n_cross, sys.eta
    )


def dare_solve(
    sys: LinearSystem, tol: float = 1e-10, max_iter: int = 200_000
) -> tuple[np.ndarray, int]:
    """Fixed-point iteration for the discrete-time algebraic Riccati equation.

    P_{j+1} = A^T P A - (A^T P B + N)(R + B^T P B)^{-1}(B^T P A + N^T) + Q
    starting from P_0 = Q, until the sup-norm change is at most ``tol``.
    Returns (P, iterations used).  Raises RuntimeError if the budget runs
    out and numpy.linalg.LinAlgError if (R + B^T P B) becomes singular.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    a, b, q, r, n_c = sys.a, sys.b, sys.q_cost, sys.r_cost, sys.n_cross
    p = q.copy()
    for it in range(1, max_iter + 1):
        atpb = a.T @ p @ b + n_c
        nxt = a.T @ p @ a - atpb @ np.linalg.solve(r + b.T @ p @ b, atpb.T) + q
        nxt = 0.5 * (nxt + nxt.T)
        delta = float(np.abs(nxt - p).max())
        p = nxt
        if delta <= tol:
            return p, it
    raise RuntimeError(f"Riccati iteration did not converge within {max_iter} steps")


def dare_residual(sys: LinearSystem, p: np.ndarray) -> float:
    """Sup-norm residual of P against the Riccati equation."""
    a, b, q, r, n_c = sys.a, sys.b, sys.q_cost, sys.r_cost, sys.n_cross
    atpb = a.T @ p @ b + n_c
    rhs = a.T @ p @ a - atpb @ np.linalg.solve(r + b.T @ p @ b, atpb.T) + q
    return float(np.abs(rhs - p).max())


def optimal_gain(sys: LinearSystem, p: np.ndarray) -> np.ndarray:
    """K = (R + B^T P B)^{-1} (N^T + B^T P A); optimal when P solves the DARE."""
    b = sys.b
    return np.linalg.solve(sys.r_cost + b.T @ p @ b, sys.n_cross.T + b.T @ p @ sys.a)


def spectral_radius(mat: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvals(mat)).max())


@dataclass(frozen=True)
class QuadraticQ:
    """Quadratic Q-function parameter: symmetric H with block sizes (n, m)."""

    h: np.ndarray
    dim_x: int
    dim_u: int

    @classmethod
    def from_matrix(cls, h, dim_x: int, dim_u: int) -> "QuadraticQ":
        h = np.asarray(h, dtype=float)
        d = dim_x + dim_u
        if h.shape != (d, d):
            raise ValueError(f"H must be {(d, d)}, got {h.shape}")
        return cls(0.5 * (h + h.T), dim_x, dim_u)

    @classmethod
    def from_theta(cls, theta: np.ndarray, dim_x: int, dim_u: int) -> "QuadraticQ":
        d = dim_x + dim_u
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (d * (d + 1) // 2,):
            raise ValueError(f"theta must have length {d * (d + 1) // 2}")
        h = np.zeros((d, d))
        iu = np.triu_indices(d)
        h[iu] = theta
        h = h + h.T - np.diag(np.diag(h))
        return cls(h, dim_x, dim_u)

    @classmethod
    def identity(cls, dim_x: int, dim_u: int) -> "QuadraticQ":
        """Block-diagonal start H_xx = I, H_uu = I: greedy action well posed."""
        return cls(np.eye(dim_x + dim_u), dim_x, dim_u)

    @property
    def theta(self) -> np.ndarray:
        d = self.dim_x + self.dim_u
        return self.h[np.triu_indices(d)].copy()

    @property
    def h_xx(self) -> np.ndarray:
        return self.h[: self.dim_x, : self.dim_x]

    @property
    def h_xu(self) -> np.ndarray:
        return self.h[: self.dim_x, self.dim_x :]

    @property
    def h_ux(self) -> np.ndarray:
        return self.h[self.dim_x :, : self.dim_x]

    @property
    def h_uu(self) -> np.ndarray:
        return self.h[self.dim_x :, self.dim_x :]


def exact_quadratic_q(sys: LinearSystem, gamma: float = 1.0, tol: float = 1e-12) -> QuadraticQ:
    """Q-matrix consistent with the Riccati solution of the (scaled) system:
    H_xx = Q + g A^T P A, H_xu = g A^T P B + N, H_uu = R + g B^T P B."""
    p, _ = dare_solve(discount_scaled(sys, gamma), tol=tol)
    a, b = sys.a, sys.b
    d = sys.dim_x + sys.dim_u
    h = np.zeros((d, d))
    h[: sys.dim_x, : sys.dim_x] = sys.q_cost + gamma * a.T @ p @ a
    h[: sys.dim_x, sys.dim_x :] = gamma * a.T @ p @ b + sys.n_cross
    h[sys.dim_x :, : sys.dim_x] = h[: sys.dim_x, sys.dim_x :].T
    h[sys.dim_x :, sys.dim_x :] = sys.r_cost + gamma * b.T @ p @ b
    return QuadraticQ.from_matrix(h, sys.dim_x, sys.dim_u)


def q_value(q: QuadraticQ, x: np.ndarray, u: np.ndarray) -> float:
    """z^T H z with z = [x; u]."""
    x = np.asarray(x, dtype=float).reshape(q.dim_x)
    u = np.asarray(u, dtype=float).reshape(q.dim_u)
    z = np.concatenate([x, u])
    return float(z @ q.h @ z)


def policy_gain(q: QuadraticQ) -> np.ndarray:
    """Gain of the greedy policy u = -K x, K = H_uu^{-1} H_ux.

    Warns when H_uu is not positive definite: the gain then exists but the
    greedy action is no longer a minimizer.
    """
    huu = q.h_uu
    eigs = np.linalg.eigvalsh(huu)
    if eigs.min() <= 0.0:
        warnings.warn(
            "H_uu is not positive definite; the greedy action is not a minimizer",
            stacklevel=2,
        )
    return np.linalg.solve(huu, q.h_ux)


def _theta_grad_from_outer(outer: np.ndarray, d: int) -> np.ndarray:
    # d(z^T H z)/dH_ii = z_i^2 and /dH_ij = 2 z_i z_j for i < j
    scaled = 2.0 * outer - np.diag(np.diag(outer))
    return scaled[np.triu_indices(d)]


def grad_q(q: QuadraticQ, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Gradient of z^T H z w.r.t. the upper-triangle vectorization of H."""
    x = np.asarray(x, dtype=float).reshape(q.dim_x)
    u = np.asarray(u, dtype=float).reshape(q.dim_u)
    z = np.concatenate([x, u])
    return _theta_grad_from_outer(np.outer(z, z), z.size)


def _greedy_value_matrix(q: QuadraticQ) -> np.ndarray:
    # min_u z^T H z = x^T (H_xx - H_xu H_uu^{-1} H_ux) x, requires H_uu > 0
    huu = q.h_uu
    np.linalg.cholesky(huu)  # raises LinAlgError when not PD
    return q.h_xx - q.h_xu @ np.linalg.solve(huu, q.h_ux)


def td_delta(
    q: QuadraticQ,
    x: np.ndarray,
    u: np.ndarray,
    cost: float,
    x_next: np.ndarray,
    gamma: float,
) -> float:
    """Temporal-difference residual with the closed-form greedy successor.

    delta = Q(x, u) - cost - gamma * min_u' Q(x', u'); the inner minimizer is
    u' = -H_uu^{-1} H_ux x'.  Raises numpy.linalg.LinAlgError when H_uu is
    not positive definite (the inner minimum is then undefined).
    """
    x_next = np.asarray(x_next, dtype=float).reshape(q.dim_x)
    w = _greedy_value_matrix(q)
    return q_value(q, x, u) - float(cost) - gamma * float(x_next @ w @ x_next)


@dataclass(frozen=True)
class Transitions:
    """Batch of (x, u, cost, x') rows."""

    x: np.ndarray       # (B, n)
    u: np.ndarray       # (B, m)
    cost: np.ndarray    # (B,)
    x_next: np.ndarray  # (B, n)

    def __len__(self) -> int:
        return self.x.shape[0]


@dataclass
class PaqlState:
    """Parameter pair (theta_k, theta_{k-1}) plus step counter and constants."""

    theta_curr: np.ndarray
    theta_prev: np.ndarray
    k: int
    hyper: tuple[float, float, float]
    dim_x: int
    dim_u: int

    @classmethod
    def start(
        cls,
        hyper: tuple[float, float, float],
        dim_x: int,
        dim_u: int,
        q0: QuadraticQ | None = None,
    ) -> "PaqlState":
        if q0 is None:
            q0 = QuadraticQ.identity(dim_x, dim_u)
        theta = q0.theta
        return cls(theta.copy(), theta.copy(), 0, tuple(float(v) for v in hyper), dim_x, dim_u)

    def as_quadratic(self) -> QuadraticQ:
        return QuadraticQ.from_theta(self.theta_curr, self.dim_x, self.dim_u)


def variant_hypers(variant: str, a: float, b: float, c: float) -> tuple[float, float, float]:
    """Constants actually used per variant: vanilla kills both momentum terms,
    heavy-ball keeps only the iterate difference."""
    if variant == "vanilla":
        return (a, 0.0, 0.0)
    if variant == "hb":
        return (a, 0.0, c)
    if variant == "nes":
        return (a, b, c)
    raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")


def _batch_delta_grad(
    theta: np.ndarray, batch: Transitions, gamma: float, dim_x: int, dim_u: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row TD residuals and the batch-mean gradient at ``theta``."""
    q = QuadraticQ.from_theta(theta, dim_x, dim_u)
    z = np.hstack([batch.x, batch.u])                       # (B, n+m)
    vals = np.einsum("bi,ij,bj->b", z, q.h, z)
    w = _greedy_value_matrix(q)
    succ = np.einsum("bi,ij,bj->b", batch.x_next, w, batch.x_next)
    delta = vals - batch.cost - gamma * succ
    outer = np.einsum("b,bi,bj->ij", delta, z, z) / len(batch)
    grad = _theta_grad_from_outer(outer, dim_x + dim_u)
    return delta, grad


def paql_step(
    state: PaqlState, batch: Transitions, gamma: float, variant: str
) -> PaqlState:
    """One parametric update on a batch; momentum terms depend on the variant.

    The state's hyper constants must already conform to the variant (b = 0
    for ``hb``, b = c = 0 for ``vanilla``); pass them through
    :func:`variant_hypers`.  Raises :class:`DivergenceError` when the new
    parameters are non-finite or their norm exceeds ``THETA_GUARD``.
    """
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    a, b, c = state.hyper
    if variant_hypers(variant, a, b, c) != (a, b, c):
        raise ValueError(
            f"hyper constants {state.hyper} do not conform to variant {variant!r}"
        )
    _, grad_curr = _batch_delta_grad(state.theta_curr, batch, gamma, state.dim_x, state.dim_u)
    zeta = state.theta_curr - a * grad_curr
    if b != 0.0:
        _, grad_prev = _batch_delta_grad(
            state.theta_prev, batch, gamma, state.dim_x, state.dim_u
        )
        xi = state.theta_prev - a * grad_prev
        theta_next = zeta + b * (zeta - xi) + c * (state.theta_curr - state.theta_prev)
    else:
        theta_next = zeta + c * (state.theta_curr - state.theta_prev)
    if not np.isfinite(theta_next).all() or np.linalg.norm(theta_next) > THETA_GUARD:
        raise DivergenceError(f"parameter update diverged at step {state.k}")
    return PaqlState(
        theta_next, state.theta_curr.copy(), state.k + 1, state.hyper,
        state.dim_x, state.dim_u,
    )


@dataclass
class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions with optional |delta| priorities."""

    capacity: int
    dim_x: int
    dim_u: int
    prioritized: bool = False
    priority_floor: float = 1e-3

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be positive")
        self._x = np.zeros((self.capacity, self.dim_x))
        self._u = np.zeros((self.capacity, self.dim_u))
        self._cost = np.zeros(self.capacity)
        self._x_next = np.zeros((self.capacity, self.dim_x))
        self._priority = np.zeros(self.capacity)
        self._size = 0
        self._pos = 0

    def __len__(self) -> int:
        return self._size

    def add(self, x, u, cost, x_next) -> None:
        i = self._pos
        self._x[i] = x
        self._u[i] = u
        self._cost[i] = cost
        self._x_next[i] = x_next
        if self.prioritized:
            current_max = self._priority[: self._size].max() if self._size else 1.0
            self._priority[i] = max(current_max, self.priority_floor)
        self._pos = (self._pos + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> tuple[Transitions, np.ndarray]:
        """Sample ``batch_size`` rows with replacement; returns (batch, indices)."""
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        if self.prioritized:
            weights = self._priority[: self._size]
            probs = weights / weights.sum()
            idx = rng.choice(self._size, size=batch_size, replace=True, p=probs)
        else:
            idx = rng.integers(0, self._size, size=batch_size)
        return (
            Transitions(self._x[idx], self._u[idx], self._cost[idx], self._x_next[idx]),
            idx,
        )

    def update_priorities(self, indices: np.ndarray, deltas: np.ndarray) -> None:
        self._priority[indices] = np.abs(deltas) + self.priority_floor


@dataclass
class GainErrorTrajectory:
    """Spectral-norm distance of the learned gain to the reference per step."""

    variant: str
    seed: int
    gain_errors: np.ndarray  # shape (steps+1,)

    @property
    def final_error(self) -> float:
        return float(self.gain_errors[-1])


def run_lqr_experiment(
    sys: LinearSystem,
    variant: str,
    hyper: tuple[float, float, float] = (0.9, 0.2, 0.2),
    gamma: float = 1.0,
    steps: int = 1000,
    seed=0,
    noise_std: float = 0.5,
    *,
    episode_horizon: int = 40,
    init_scale: float = 0.5,
    batch_size: int = 32,
    capacity: int = 100_000,
    prioritized: bool = False,
    noise_decay: float = 0.999,
    state_blowup: float = 100.0,
    k_star: np.ndarray | None = None,
    dare_tol: float = 1e-10,
) -> GainErrorTrajectory:
    """Roll out the system and learn H online, recording the gain error.

    Behavior policy u = -K_k x + Gaussian noise (std decays by
    ``noise_decay`` each step); episodes restart from a fresh uniform state
    in [-init_scale, init_scale]^n every ``episode_horizon`` steps or when
    the state norm passes ``state_blowup``.  One transition is stored and
    one parameter update performed per step (updates start once the buffer
    holds a full batch).  The reference gain is recomputed from the Riccati
    solver unless ``k_star`` is supplied.  Deterministic given the seed.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    # one shared (a, b, c) tuple serves all variants; inactive terms are zeroed
    hy = variant_hypers(variant, *hyper)
    if k_star is None:
        scaled = discount_scaled(sys, gamma)
        p, _ = dare_solve(scaled, tol=dare_tol)
        k_star = optimal_gain(scaled, p)

    rng = np.random.default_rng(seed)
    n, m = sys.dim_x, sys.dim_u
    buf = ReplayBuffer(capacity, n, m, prioritized=prioritized)
    state = PaqlState.start(hy, n, m)

    errors = np.empty(steps + 1)

    def gain_error(theta: np.ndarray) -> float:
        k_mat = policy_gain(QuadraticQ.from_theta(theta, n, m))
        return float(np.linalg.norm(k_mat - k_star, 2))

    errors[0] = gain_error(state.theta_curr)
    x = rng.uniform(-init_scale, init_scale, n)
    steps_in_episode = 0
    sigma = noise_std

    for k in range(steps):
        k_mat = policy_gain(state.as_quadratic())
        u = -k_mat @ x + rng.normal(0.0, sigma, m)
        cost = sys.stage_cost(x, u)
        x_next = sys.a @ x + sys.b @ u
        buf.add(x, u, cost, x_next)

        if len(buf) >= batch_size:
            batch, idx = buf.sample(batch_size, rng)
            try:
                state = paql_step(state, batch, gamma, variant)
            except np.linalg.LinAlgError as exc:
                raise DivergenceError(
                    f"H_uu lost positive definiteness at step {k}"
                ) from exc
            if prioritized:
                deltas, _ = _batch_delta_grad(state.theta_curr, batch, gamma, n, m)
                buf.update_priorities(idx, deltas)

        sigma *= noise_decay
        steps_in_episode += 1
        x = x_next
        if steps_in_episode >= episode_horizon or np.linalg.norm(x) > state_blowup:
            x = rng.uniform(-init_scale, init_scale, n)
            steps_in_episode = 0
        errors[k + 1] = gain_error(state.theta_curr)

    seed_label = seed if isinstance(seed, int) else -1
    return GainErrorTrajectory(variant, seed_label, errors)


def write_gain_csv(trajectories: Iterable[GainErrorTrajectory], stream: IO[str]) -> None:
    """Serialize trajectories as rows ``variant,seed,step,gain_error``."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["variant", "seed", "step", "gain_error"])
    for traj in trajectories:
        for k, err in enumerate(traj.gain_errors):
            writer.writerow([traj.variant, traj.seed, k, repr(float(err))])


def system_to_json(sys: LinearSystem, stream: IO[str]) -> None:
    """Dump the system matrices as JSON for external verification."""
    json.dump(sys.to_json(), stream, indent=2, sort_keys=True)
    stream.write("\n")
