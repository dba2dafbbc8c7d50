"""Experiment driver: one descent run per (estimator, seed) row.

Each row owns an independent environment instance and an independent RNG
stream, so rows may execute in any order or in parallel without changing
a single byte of the output CSVs.  Timing is off by default for the same
reason; ``[run] timing = true`` opts in and fills the wall-time column.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..core import RngStream
from ..estimators import estimate_gradient
from ..optimizer import DIVERGENCE_NORM, select_uniform_index
from .config import ExperimentConfig

RESULT_COLUMNS = (
    "method", "seed", "obj_mean", "obj_sd", "samples_used",
    "wall_time_s", "grad_norm_sq", "status",
)
TRACE_COLUMNS = ("method", "seed", "cumulative_samples", "obj_estimate")

STATUS_OK = "ok"
STATUS_DIVERGED = "diverged"
STATUS_BUDGET_ERROR = "budget_error"


@dataclass(frozen=True)
class ResultRow:
    method: str
    seed: int
    obj_mean: float
    obj_sd: float
    samples_used: int
    wall_time_s: float | None
    grad_norm_sq: float | None
    status: str


@dataclass(frozen=True)
class TraceRow:
    method: str
    seed: int
    cumulative_samples: int
    obj_estimate: float


@dataclass(frozen=True)
class RowOutcome:
    row: ResultRow
    trace: tuple[TraceRow, ...]
    output_point: np.ndarray | None


def run_cell(config: ExperimentConfig, spec, seed: int) -> RowOutcome:
    """One descent run for an explicit estimator spec (tuning reuses this)."""
    method = spec.name
    started = time.perf_counter() if config.timing else None

    env = config.environment.build(budget=config.budget)
    cfg, step = spec.resolve(env)
    d = env.dimension
    cost = cfg.samples_per_estimate(d)
    rng = RngStream(seed).child("method", method)

    iterations = config.budget // cost
    if iterations == 0:
        row = ResultRow(
            method=method, seed=seed, obj_mean=math.nan, obj_sd=math.nan,
            samples_used=0, wall_time_s=_elapsed(started),
            grad_norm_sq=None, status=STATUS_BUDGET_ERROR,
        )
        return RowOutcome(row, (), None)

    output_index = select_uniform_index(iterations + 1, rng)
    x = config.start_point().copy()
    iterates = [x.copy()]
    trace: list[TraceRow] = []
    status = STATUS_OK
    for t in range(iterations):
        estimate = estimate_gradient(x, cfg, env, rng.child("iteration", t))
        trace.append(
            TraceRow(
                method=method, seed=seed,
                cumulative_samples=(t + 1) * cost,
                obj_estimate=float(estimate.probe_mean),
            )
        )
        x = x - step * estimate.gradient
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_NORM:
            status = STATUS_DIVERGED
            break
        iterates.append(x.copy())
    samples_used = len(trace) * cost

    if status == STATUS_DIVERGED:
        row = ResultRow(
            method=method, seed=seed, obj_mean=math.nan, obj_sd=math.nan,
            samples_used=samples_used, wall_time_s=_elapsed(started),
            grad_norm_sq=math.nan if env.supports_gradient else None,
            status=status,
        )
        return RowOutcome(row, tuple(trace), None)

    x_out = iterates[output_index]
    eval_env = config.environment.build()
    values = eval_env.sample_at(
        x_out[None, :], rng.child("eval"), replicates=config.eval_draws
    )[:, 0]
    grad_norm_sq = None
    if env.supports_gradient:
        grad_norm_sq = float(np.sum(env.gradient(x_out) ** 2))
    row = ResultRow(
        method=method, seed=seed,
        obj_mean=float(values.mean()), obj_sd=float(values.std(ddof=1)),
        samples_used=samples_used, wall_time_s=_elapsed(started),
        grad_norm_sq=grad_norm_sq, status=status,
    )
    return RowOutcome(row, tuple(trace), x_out)


def run_row(config: ExperimentConfig, method: str, seed: int) -> tuple[ResultRow, list[TraceRow]]:
    """Execute one (estimator, seed) cell of the experiment grid."""
    spec = next(s for s in config.estimators if s.name == method)
    outcome = run_cell(config, spec, seed)
    return outcome.row, list(outcome.trace)


def _elapsed(started: float | None) -> float | None:
    return None if started is None else time.perf_counter() - started


def run_experiment(
    config: ExperimentConfig, threads: int = 1
) -> tuple[list[ResultRow], list[TraceRow]]:
    """All (estimator, seed) rows in config order; parallel rows merge in order."""
    cells = [(spec.name, seed) for spec in config.estimators for seed in config.seeds]
    if threads <= 1:
        outputs = [run_row(config, method, seed) for method, seed in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run_row, config, method, seed) for method, seed in cells]
            outputs = [f.result() for f in futures]
    results = [row for row, _ in outputs]
    traces = [t for _, trace in outputs for t in trace]
    return results, traces


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(path, rows: list[ResultRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for r in rows:
            writer.writerow([
                r.method, r.seed, _fmt(r.obj_mean), _fmt(r.obj_sd),
                r.samples_used, _fmt(r.wall_time_s), _fmt(r.grad_norm_sq), r.status,
            ])


def write_trace(path, rows: list[TraceRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in rows:
            writer.writerow([r.method, r.seed, r.cumulative_samples, _fmt(r.obj_estimate)])
