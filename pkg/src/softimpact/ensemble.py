"""Ensembles of independent noise realizations with order-independent
aggregation (mean and standard deviation of per-realization statistics).

Each realization re-randomizes the noise draws only; the fitted NoiseModel
is held fixed across the ensemble.  Failed (blown-up) realizations are
excluded from aggregates and counted in the result.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import sys

import numpy as np

from .bath import BathParams, NoiseModel
from .integrator import BlowUpError, lyapunov_run, run
from .model import SystemParams

TASKS = ("lyapunov", "trajectory-stat")


def derive_seeds(master_seed, count: int):
    """Pairwise-distinct per-realization seeds from one master seed."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    state = np.random.SeedSequence(master_seed).generate_state(count, np.uint64)
    seeds = [int(s) for s in state]
    if len(set(seeds)) != count:
        raise RuntimeError("seed derivation collision")
    return seeds


@dataclass(frozen=True)
class EnsembleSpec:
    """Parameter point plus realization count and derived seeds."""

    params: SystemParams
    bath: BathParams
    noise_model: NoiseModel
    count: int
    master_seed: int = 0
    n_transient_cycles: int = 200
    n_span_cycles: int = 300
    run_kwargs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")

    @property
    def seeds(self):
        return derive_seeds(self.master_seed, self.count)


@dataclass(frozen=True)
class EnsembleResult:
    """Per-realization values with order-independent summary statistics."""

    seeds: tuple
    values: np.ndarray        # finite per-realization values, seed order
    mean: float
    std: float
    n_failed: int
    degenerate_count: bool    # True when only one value entered the aggregate
    task: str

    def __len__(self):
        return len(self.values)


def _realize(args):
    task, p, b, model, seed, trans, span, kw = args
    try:
        if task == "lyapunov":
            return seed, lyapunov_run(p, b, model, seed, trans, span, **kw)
        traj = run(p, b, model, seed, trans, span, **kw)
        return seed, float(np.var(traj.X))
    except BlowUpError:
        return seed, np.nan


def run_ensemble(spec: EnsembleSpec, task: str = "lyapunov",
                 n_workers: int = 1, progress: bool = False) -> EnsembleResult:
    """Execute all realizations and aggregate, independent of worker count.

    task 'lyapunov' collects the largest Lyapunov exponent per realization;
    'trajectory-stat' collects the recorded-window variance of X.  Results
    are reduced in derived-seed order, so aggregates are identical for any
    scheduling.  Blow-ups are excluded and counted.
    """
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}, got {task!r}")
    seeds = spec.seeds
    tasks = [(task, spec.params, spec.bath, spec.noise_model, sd,
              spec.n_transient_cycles, spec.n_span_cycles, spec.run_kwargs)
             for sd in seeds]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            raw = list(pool.map(_realize, tasks))
    else:
        raw = []
        for i, t in enumerate(tasks):
            raw.append(_realize(t))
            if progress:
                print(f"realization {i + 1}/{len(tasks)}", file=sys.stderr)
    by_seed = dict(raw)
    ordered = np.array([by_seed[sd] for sd in seeds])
    ok = ordered[np.isfinite(ordered)]
    n_failed = int(len(ordered) - len(ok))
    if len(ok) == 0:
        return EnsembleResult(tuple(seeds), ok, np.nan, np.nan,
                              n_failed, True, task)
    degenerate = len(ok) == 1
    std = 0.0 if degenerate else float(np.std(ok, ddof=1))
    return EnsembleResult(tuple(seeds), ok, float(np.mean(ok)), std,
                          n_failed, degenerate, task)
