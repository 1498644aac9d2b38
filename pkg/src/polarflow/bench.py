"""Ensemble convergence study.

Draws random Gaussian matrices, runs a fixed number of Lie-Euler steps of the
vertical gradient flow from each, and tracks the squared distance of every
iterate to the polar factor of its starting point. Per-step median and
10%/90% percentiles summarize the ensemble.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import rng
from .errors import ExhaustedDraws, IoError, NumericalError
from .flow import FlowOptions, integrate
from .geometry import MongeInstance
from .matcore import as_spd, det, frob
from .polar import polar_oracle

log = logging.getLogger(__name__)

MONOTONE_BURN_IN = 5
MONOTONE_TOL = 1e-8
MAX_DRAWS_PER_MATRIX = 100


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 2
    count: int = 1000
    seed: int = 0
    h: float = 0.1
    steps: int = 300
    sigma0: Any = "identity"
    record_every: int = 1
    allow_negative_det: bool = False
    invertibility_threshold: float = 1e-8

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.sigma0 != "identity":
            s0 = as_spd(self.sigma0, "sigma0")
            if s0.shape[0] != self.n:
                raise ValueError(f"sigma0 is {s0.shape[0]}x{s0.shape[0]}, expected n = {self.n}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if not isinstance(self.sigma0, str):
            d["sigma0"] = np.asarray(self.sigma0, dtype=float).tolist()
        return d

    def sigma0_matrix(self) -> np.ndarray:
        if isinstance(self.sigma0, str):
            return np.eye(self.n)
        return as_spd(self.sigma0, "sigma0")

    def recorded_steps(self) -> list[int]:
        ks = list(range(0, self.steps + 1, self.record_every))
        if ks[-1] != self.steps:
            ks.append(self.steps)
        return ks


def draw_matrix(config: ExperimentConfig, index: int) -> np.ndarray:
    """The ``index``-th raw draw, on its own Philox stream."""
    return rng.standard_normal(rng.derive_seed(config.seed, index), (config.n, config.n))


def accept_draw(a: np.ndarray, config: ExperimentConfig) -> bool:
    d = det(a)
    threshold = config.invertibility_threshold * (frob(a) / math.sqrt(config.n)) ** config.n
    if not abs(d) > threshold:
        return False
    return config.allow_negative_det or d > 0


def generate_ensemble(config: ExperimentConfig) -> list[np.ndarray]:
    """``config.count`` accepted draws, in draw order.

    A draw is rejected when ``|det| <= threshold * (|A|_F / sqrt(n))**n`` and,
    unless ``allow_negative_det``, when ``det <= 0``.
    """
    out = []
    max_draws = MAX_DRAWS_PER_MATRIX * config.count
    j = 0
    while len(out) < config.count:
        if j >= max_draws:
            raise ExhaustedDraws(f"only {len(out)} of {config.count} matrices accepted in {j} draws")
        a = draw_matrix(config, j)
        j += 1
        if accept_draw(a, config):
            out.append(a)
    return out


@dataclass
class TrajectoryResult:
    trajectory_id: int
    steps: list[int]
    times: list[float]
    sq_dist: list[float]
    failed: bool = False
    error: str | None = None
    max_fiber_res: float = 0.0
    max_skew_ratio: float = 0.0
    max_cost_increase: float = 0.0
    monotone: bool = True


@dataclass
class AggregateRow:
    step: int
    time: float
    median: float
    p10: float
    p90: float


@dataclass
class ExperimentReport:
    per_trajectory: list[TrajectoryResult]
    aggregate: list[AggregateRow]
    metadata: dict = field(default_factory=dict)


def _skew_ratio(omega: np.ndarray, sigma1: np.ndarray) -> float:
    scale = frob(omega) * frob(sigma1)
    if scale == 0.0:
        return 0.0
    x = omega @ sigma1
    return frob(x + x.T) / scale


def run_trajectory(task) -> TrajectoryResult:
    tid, a, config = task
    steps = config.recorded_steps()
    times = [k * config.h for k in steps]
    try:
        inst = MongeInstance(config.sigma0_matrix(), a, allow_negative_det=config.allow_negative_det)
        p = polar_oracle(inst).p
        skew = [0.0]

        def watch(k, b, omega):
            skew[0] = max(skew[0], _skew_ratio(omega, inst.sigma1))

        opts = FlowOptions(
            h=config.h, max_steps=config.steps, omega_tol=None, record_every=config.record_every
        )
        trace = integrate(inst, opts, reference=p, callback=watch)
    except NumericalError as exc:
        log.warning("trajectory %d failed: %s", tid, exc)
        return TrajectoryResult(
            tid, steps, times, [math.nan] * len(steps), failed=True, error=f"{type(exc).__name__}: {exc}"
        )
    d = trace.dist_to_ref_sq
    tail = np.asarray(d[MONOTONE_BURN_IN:])
    monotone = bool(np.all(np.diff(tail) <= MONOTONE_TOL)) if tail.size > 1 else True
    return TrajectoryResult(
        tid,
        steps,
        times,
        list(d),
        max_fiber_res=trace.max_fiber_res,
        max_skew_ratio=skew[0],
        max_cost_increase=trace.max_cost_increase,
        monotone=monotone,
    )


def aggregate(results: list[TrajectoryResult], config: ExperimentConfig) -> list[AggregateRow]:
    """Per-step median and 10%/90% percentiles (linear interpolation) over non-failed trajectories."""
    steps = config.recorded_steps()
    good = [r.sq_dist for r in results if not r.failed]
    rows = []
    if good:
        table = np.asarray(good)
        med = np.percentile(table, 50, axis=0, method="linear")
        lo = np.percentile(table, 10, axis=0, method="linear")
        hi = np.percentile(table, 90, axis=0, method="linear")
    for i, k in enumerate(steps):
        if good:
            rows.append(AggregateRow(k, k * config.h, float(med[i]), float(lo[i]), float(hi[i])))
        else:
            rows.append(AggregateRow(k, k * config.h, math.nan, math.nan, math.nan))
    return rows


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Run the ensemble study.

    Trajectories are independent; with ``workers > 1`` they run in a process
    pool. Results are collected in trajectory order, so the report does not
    depend on the worker count.
    """
    t0 = time.perf_counter()
    ensemble = generate_ensemble(config)
    tasks = [(i, a, config) for i, a in enumerate(ensemble)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_trajectory, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [run_trajectory(t) for t in tasks]
    rows = aggregate(results, config)
    ok = [r for r in results if not r.failed]
    metadata = {
        "config": config.to_dict(),
        "wall_time_s": time.perf_counter() - t0,
        "workers": workers,
        "trajectories": len(results),
        "failed_trajectories": [r.trajectory_id for r in results if r.failed],
        "non_monotone_trajectories": [r.trajectory_id for r in ok if not r.monotone],
        "max_fiber_residual": max((r.max_fiber_res for r in ok), default=math.nan),
        "max_skew_ratio": max((r.max_skew_ratio for r in ok), default=math.nan),
        "max_cost_increase": max((r.max_cost_increase for r in ok), default=math.nan),
        "percentile_method": "linear",
    }
    return ExperimentReport(results, rows, metadata)


def fmt(x: float) -> str:
    """Shortest round-trip decimal; NaN as the literal ``NaN``."""
    if math.isnan(x):
        return "NaN"
    return repr(float(x))


def _open_for_write(path):
    path = Path(path)
    try:
        return path.open("w", newline="")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}", path=str(path)) from exc


def emit_csv(report: ExperimentReport, trajectory_path, aggregate_path) -> None:
    with _open_for_write(trajectory_path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trajectory_id", "step", "time", "sq_dist"])
        for r in report.per_trajectory:
            for k, t, d in zip(r.steps, r.times, r.sq_dist):
                w.writerow([r.trajectory_id, k, fmt(t), fmt(d)])
    with _open_for_write(aggregate_path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "time", "median", "p10", "p90"])
        for row in report.aggregate:
            w.writerow([row.step, fmt(row.time), fmt(row.median), fmt(row.p10), fmt(row.p90)])


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_jsonable(v) for v in x]
    return x


def write_outputs(report: ExperimentReport, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc.strerror or exc}", path=str(out)) from exc
    paths = {
        "trajectories": out / "trajectories.csv",
        "aggregate": out / "aggregate.csv",
        "metadata": out / "metadata.json",
    }
    emit_csv(report, paths["trajectories"], paths["aggregate"])
    with _open_for_write(paths["metadata"]) as fh:
        json.dump(_jsonable(report.metadata), fh, indent=2)
        fh.write("\n")
    return paths
