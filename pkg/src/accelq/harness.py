"""Multi-seed experiment runner: cell sweeps, aggregation, threshold tables
and deterministic CSV/JSON emission.

An experiment is a JSON-serializable :class:`ExperimentConfig`.  Each
(algorithm-or-variant, seed) pair is one cell run.  Seeds map to independent
generator streams by deriving the entropy tuple (base_seed, seed) when
sample streams are shared across algorithms (common random numbers, the
default) or (base_seed, cell_index, seed) when they are independent.
Re-running the same config reproduces every output byte for byte.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, frozenlake, learners, lqr
from .mdp import FiniteMdp, QTable, solve_q_star

__all__ = [
    "CONFIG_SCHEMA_VERSION",
    "ExperimentConfig",
    "CellResult",
    "RunRecord",
    "aggregate",
    "first_crossing",
    "threshold_table",
    "config_hash",
    "run_config",
]

CONFIG_SCHEMA_VERSION = 1

TASKS = ("tabular", "lqr", "bound")

# run_lqr_experiment keyword arguments a config may override
_LQR_OPTION_KEYS = frozenset(
    {
        "episode_horizon",
        "init_scale",
        "batch_size",
        "capacity",
        "prioritized",
        "noise_decay",
        "state_blowup",
    }
)


@dataclass
class ExperimentConfig:
    """Declarative experiment definition; see the README for the JSON schema."""

    task: str
    schema_version: int = CONFIG_SCHEMA_VERSION
    # tabular fields
    map_name: str = "frozenlake4x4"
    slip: tuple[float, float, float] | None = None
    algorithms: list[dict] | None = None
    m_values: list[float] | None = None
    # lqr fields
    system: dict = field(
        default_factory=lambda: {"n_masses": 2, "n_actuators": 1, "eta": 0.1, "dt": 0.01}
    )
    variants: list[str] = field(default_factory=lambda: list(lqr.VARIANTS))
    hyper: tuple[float, float, float] = (0.9, 0.2, 0.2)
    noise_std: float = 0.5
    lqr_options: dict = field(default_factory=dict)
    # bound fields
    m: float | None = None
    n_pairs: int | None = None
    delta: float = 0.1
    r_max: float = 1.0
    # shared fields
    gamma: float | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    base_seed: int = 0
    iterations: int = 1
    shared_samples: bool = True
    thresholds: list[float] = field(default_factory=lambda: [0.1])
    tolerance: float = 1e-10
    out: str | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}, expected one of {TASKS}")
        if self.schema_version != CONFIG_SCHEMA_VERSION:
            raise ValueError(
                f"unsupported schema_version {self.schema_version}, "
                f"this build reads version {CONFIG_SCHEMA_VERSION}"
            )
        if self.task != "bound":
            if not self.seeds:
                raise ValueError("seeds must be non-empty")
            if self.iterations < 1:
                raise ValueError("iterations must be at least 1")
        if self.gamma is None:
            self.gamma = 1.0 if self.task == "lqr" else 0.95
        unknown = set(self.lqr_options) - _LQR_OPTION_KEYS
        if unknown:
            raise ValueError(f"unknown lqr_options keys: {sorted(unknown)}")
        if self.task == "lqr":
            bad = [v for v in self.variants if v not in lqr.VARIANTS]
            if bad:
                raise ValueError(f"unknown variants {bad}")

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        payload = dict(payload)
        if "slip" in payload and payload["slip"] is not None:
            payload["slip"] = tuple(payload["slip"])
        if "hyper" in payload:
            payload["hyper"] = tuple(payload["hyper"])
        return cls(**payload)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        if out["slip"] is not None:
            out["slip"] = list(out["slip"])
        out["hyper"] = list(out["hyper"])
        return out

    def tabular_cells(self) -> list[tuple[str, float | None]]:
        """Resolved (algo, m) cells for the tabular task, in canonical order."""
        if self.algorithms is not None:
            cells = []
            for spec in self.algorithms:
                algo = spec["algo"]
                if algo not in learners.ALGORITHMS:
                    raise ValueError(f"unknown algorithm {algo!r}")
                cells.append((algo, spec.get("m")))
            return cells
        ms = self.m_values or learners.default_m_values(self.gamma)
        return [("speedy", None)] + [("aql", float(m)) for m in ms]


def config_hash(cfg: ExperimentConfig) -> str:
    canon = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def aggregate(trajectories) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise sample mean and population standard deviation.

    All trajectories must have equal length.
    """
    arrays = [np.asarray(t, dtype=float) for t in trajectories]
    if not arrays:
        raise ValueError("need at least one trajectory")
    length = arrays[0].shape[0]
    if any(a.shape != (length,) for a in arrays):
        raise ValueError("trajectories have unequal lengths")
    stacked = np.stack(arrays)
    return stacked.mean(axis=0), stacked.std(axis=0)


def first_crossing(curve: np.ndarray, threshold: float) -> int | None:
    """Smallest index where the curve is at or below the threshold, else None."""
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    hits = np.nonzero(np.asarray(curve) <= threshold)[0]
    return int(hits[0]) if hits.size else None


@dataclass
class CellResult:
    """One algorithm/variant cell: per-seed curves plus aggregates."""

    algo: str
    m_or_variant: float | str | None
    trajectories: list        # LossTrajectory or GainErrorTrajectory, seed order
    mean: np.ndarray
    std: np.ndarray
    crossings: dict[float, int | None]

    @property
    def label(self) -> str:
        if self.algo == "aql" and self.m_or_variant is not None:
            return f"aql(m={self.m_or_variant:g})"
        return self.algo

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])


@dataclass
class RunRecord:
    """Everything produced by one config run."""

    config: ExperimentConfig
    config_hash: str
    cells: list[CellResult]
    bound: dict | None = None


def threshold_table(record: RunRecord, threshold: float) -> dict[str, int | None]:
    """First iterate whose mean curve is at or below ``threshold`` per cell."""
    return {
        cell.label: first_crossing(cell.mean, threshold) for cell in record.cells
    }


def _stream_seed(cfg: ExperimentConfig, cell_index: int, seed: int) -> tuple[int, ...]:
    if cfg.shared_samples:
        return (cfg.base_seed, seed)
    return (cfg.base_seed, cell_index, seed)


def _run_tabular_cell(args):
    mdp, q_star, algo, m, iterations, stream_seed, seed_label = args
    traj = learners.run_learner(
        mdp, algo, m=m, iterations=iterations, seed=stream_seed, q_star=q_star
    )
    return dataclasses.replace(traj, seed=seed_label)


def _run_lqr_cell(args):
    sys, variant, hyper, gamma, steps, stream_seed, seed_label, noise_std, options, k_star = args
    traj = lqr.run_lqr_experiment(
        sys,
        variant,
        hyper=hyper,
        gamma=gamma,
        steps=steps,
        seed=stream_seed,
        noise_std=noise_std,
        k_star=k_star,
        **options,
    )
    return dataclasses.replace(traj, seed=seed_label)


def _execute(worker, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks))


def _build_tabular_inputs(cfg: ExperimentConfig) -> tuple[FiniteMdp, QTable]:
    grid = frozenlake.load_map(cfg.map_name)
    slip = frozenlake.SlipModel(*cfg.slip) if cfg.slip is not None else None
    mdp = frozenlake.build_mdp(grid, slip, cfg.gamma)
    return mdp, solve_q_star(mdp, cfg.tolerance)


def _build_system(cfg: ExperimentConfig) -> lqr.LinearSystem:
    spec = cfg.system
    if "matrices" in spec:
        return lqr.LinearSystem.from_json(spec["matrices"])
    return lqr.build_mass_damper(
        spec.get("n_masses", 2),
        spec.get("n_actuators", 1),
        spec.get("eta", 0.1),
        spec.get("dt", 0.01),
    )


def run_config(cfg: ExperimentConfig, jobs: int = 1) -> RunRecord:
    """Execute every cell of the config and (optionally) write its outputs.

    When ``cfg.out`` is set, writes ``trajectories.csv``, ``aggregates.csv``
    and ``summary.json`` under that directory (plus ``system.json`` for the
    lqr task).  Output ordering is canonical regardless of ``jobs``.
    """
    digest = config_hash(cfg)

    if cfg.task == "bound":
        if cfg.m is None or cfg.n_pairs is None:
            raise ValueError("bound task needs both m and n_pairs")
        params = bounds.BoundParams.derive(
            cfg.gamma, cfg.m, cfg.iterations, cfg.n_pairs, cfg.delta, cfg.r_max
        )
        payload = {
            "v_max": params.v_max,
            "h": params.h,
            "d_max": params.d_max,
            "bound": bounds.error_bound(params),
        }
        record = RunRecord(cfg, digest, [], bound=payload)
        if cfg.out:
            _write_outputs(record)
        return record

    if cfg.task == "tabular":
        mdp, q_star = _build_tabular_inputs(cfg)
        cells_spec = cfg.tabular_cells()
        tasks = []
        for ci, (algo, m) in enumerate(cells_spec):
            for seed in cfg.seeds:
                tasks.append(
                    (mdp, q_star, algo, m, cfg.iterations, _stream_seed(cfg, ci, seed), seed)
                )
        results = _execute(_run_tabular_cell, tasks, jobs)
        curves_of = lambda t: t.losses
    else:
        system = _build_system(cfg)
        scaled = lqr.discount_scaled(system, cfg.gamma)
        p, _ = lqr.dare_solve(scaled, tol=cfg.tolerance)
        k_star = lqr.optimal_gain(scaled, p)
        cells_spec = [(v, v) for v in cfg.variants]
        tasks = []
        for ci, variant in enumerate(cfg.variants):
            for seed in cfg.seeds:
                tasks.append(
                    (
                        system,
                        variant,
                        cfg.hyper,
                        cfg.gamma,
                        cfg.iterations,
                        _stream_seed(cfg, ci, seed),
                        seed,
                        cfg.noise_std,
                        cfg.lqr_options,
                        k_star,
                    )
                )
        results = _execute(_run_lqr_cell, tasks, jobs)
        curves_of = lambda t: t.gain_errors

    n_seeds = len(cfg.seeds)
    cells: list[CellResult] = []
    for ci, spec in enumerate(cells_spec):
        cell_trajs = results[ci * n_seeds : (ci + 1) * n_seeds]
        mean, std = aggregate([curves_of(t) for t in cell_trajs])
        crossings = {thr: first_crossing(mean, thr) for thr in cfg.thresholds}
        if cfg.task == "tabular":
            algo, m = spec
            cells.append(CellResult(algo, m, cell_trajs, mean, std, crossings))
        else:
            variant = spec[0]
            cells.append(CellResult(variant, variant, cell_trajs, mean, std, crossings))

    record = RunRecord(cfg, digest, cells)
    if cfg.out:
        _write_outputs(record)
    return record


def _write_outputs(record: RunRecord) -> None:
    cfg = record.config
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    summary = {
        "schema_version": cfg.schema_version,
        "task": cfg.task,
        "config_hash": record.config_hash,
    }
    if record.bound is not None:
        summary["bound"] = record.bound
        _dump_json(summary, out_dir / "summary.json")
        return

    all_trajs = [t for cell in record.cells for t in cell.trajectories]
    with open(out_dir / "trajectories.csv", "w", newline="") as fh:
        if cfg.task == "tabular":
            learners.write_loss_csv(all_trajs, fh)
        else:
            lqr.write_gain_csv(all_trajs, fh)

    with open(out_dir / "aggregates.csv", "w", newline="") as fh:
        import csv as _csv

        writer = _csv.writer(fh, lineterminator="\n")
        if cfg.task == "tabular":
            writer.writerow(["algo", "m", "iteration", "mean_loss", "std_loss"])
            for cell in record.cells:
                m_field = "" if cell.m_or_variant is None else repr(float(cell.m_or_variant))
                for k in range(cell.mean.shape[0]):
                    writer.writerow(
                        [cell.algo, m_field, k, repr(float(cell.mean[k])), repr(float(cell.std[k]))]
                    )
        else:
            writer.writerow(["variant", "step", "mean_gain_error", "std_gain_error"])
            for cell in record.cells:
                for k in range(cell.mean.shape[0]):
                    writer.writerow(
                        [cell.algo, k, repr(float(cell.mean[k])), repr(float(cell.std[k]))]
                    )

    summary["cells"] = [
        {
            "algo": cell.algo,
            "m_or_variant": cell.m_or_variant,
            "final_mean_loss": cell.final_mean,
            "threshold_crossings": {repr(float(t)): c for t, c in cell.crossings.items()},
        }
        for cell in record.cells
    ]
    _dump_json(summary, out_dir / "summary.json")

    if cfg.task == "lqr":
        with open(out_dir / "system.json", "w") as fh:
            lqr.system_to_json(_build_system(cfg), fh)


def _dump_json(payload: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
