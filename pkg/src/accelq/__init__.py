"""Momentum-accelerated synchronous Q-learning on finite MDPs, executable
convergence bounds, and a parametric variant for discrete-time LQR."""

from .bounds import (
    BoundParams,
    ErrorSeries,
    d_max,
    error_bound,
    error_series_update,
    exact_momentum_operator,
    momentum_operator,
    v_max,
)
from .frozenlake import GridMap, SlipModel, build_mdp, load_map, parse_map
from .harness import (
    ExperimentConfig,
    RunRecord,
    aggregate,
    config_hash,
    first_crossing,
    run_config,
    threshold_table,
)
from .learners import (
    LearnerState,
    LossTrajectory,
    ScheduleParams,
    aql_step,
    default_m_values,
    expected_aql_iterate,
    make_learner,
    run_learner,
    schedule,
    speedy_step,
    vanilla_step,
)
from .lqr import (
    DivergenceError,
    GainErrorTrajectory,
    LinearSystem,
    PaqlState,
    QuadraticQ,
    ReplayBuffer,
    Transitions,
    build_mass_damper,
    dare_residual,
    dare_solve,
    discount_scaled,
    exact_quadratic_q,
    grad_q,
    optimal_gain,
    paql_step,
    policy_gain,
    q_value,
    run_lqr_experiment,
    spectral_radius,
    td_delta,
    variant_hypers,
)
from .mdp import (
    FiniteMdp,
    Policy,
    QTable,
    SampleSet,
    bellman_apply,
    empirical_bellman,
    greedy_policy,
    policy_value,
    sample_synchronous,
    solve_q_star,
    sup_norm_diff,
)

__version__ = "0.1.0"
