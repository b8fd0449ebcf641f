"""Monte Carlo batching, aggregate statistics, sweeps and design studies.

Runs are grouped into batches; the reported value of each figure of merit
is the mean of the per-batch means and the quoted error is the standard
deviation of the batch means.  Censored runs (no end-to-end link within
max_steps) are counted separately and never averaged in; a configuration
whose runs all censor yields an explicit no-estimate result.

Seeding is positional: run (b, r) of a study draws from
SeedSequence([master_seed, *salt, b, r]), so any run can be reproduced in
isolation and worker scheduling cannot change results.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .engine import CCMode, DistillOrdering, RunResult, SimParams, derive_rng, run
from .hardware import (
    HardwareProfile,
    get_preset,
    initial_age,
    link_success_prob,
    memory_cutoff,
    profile_to_sim_params,
    time_step,
)
from .noise import fidelity_of_age
from .policies import SwapPolicy, parse_ordering, parse_policy

# Desk-scale defaults keep the acceptance suite in CI time; the paper-scale
# shape (20 x 1000) sits behind the --full-scale flag.
DEFAULT_BATCHES = 5
DEFAULT_RUNS_PER_BATCH = 200
FULL_SCALE_BATCHES = 20
FULL_SCALE_RUNS_PER_BATCH = 1000

# Batch-mean spread below 5% of the mean is the reporting standard.
PRECISION_TARGET = 0.05


@dataclass(frozen=True)
class BatchStats:
    num_batches: int
    runs_per_batch: int
    mean_waiting: float | None
    mean_age: float | None
    mean_fidelity: float | None
    std_waiting: float | None
    std_age: float | None
    censored: int
    total_runs: int

    @property
    def estimate_valid(self) -> bool:
        return self.mean_waiting is not None

    @property
    def precision_ok(self) -> bool | None:
        """Whether the batch spread meets the 5%-of-mean reporting standard."""
        if not self.estimate_valid or self.mean_waiting == 0:
            return None
        return self.std_waiting <= PRECISION_TARGET * self.mean_waiting

    def to_record(self) -> dict:
        return {
            "num_batches": self.num_batches,
            "runs_per_batch": self.runs_per_batch,
            "mean_waiting": self.mean_waiting,
            "mean_age": self.mean_age,
            "mean_fidelity": self.mean_fidelity,
            "std_waiting": self.std_waiting,
            "std_age": self.std_age,
            "censored": self.censored,
            "total_runs": self.total_runs,
        }

    @classmethod
    def from_record(cls, record: dict) -> "BatchStats":
        return cls(**{k: record[k] for k in (
            "num_batches", "runs_per_batch", "mean_waiting", "mean_age",
            "mean_fidelity", "std_waiting", "std_age", "censored", "total_runs",
        )})


def _batch_aggregate(args) -> tuple[int, list[float], list[float], list[float], int]:
    params, policy, ordering, master_seed, salt, batch, runs = args
    waits, ages, fids = [], [], []
    censored = 0
    for r in range(runs):
        rng = derive_rng((master_seed, *salt, batch, r))
        result = run(params, policy, ordering, rng)
        if result.success:
            waits.append(result.waiting_time)
            ages.append(result.youngest_end_age)
            fids.append(fidelity_of_age(result.youngest_end_age, params.m_star))
        else:
            censored += 1
    return batch, waits, ages, fids, censored


def _mean(values):
    return sum(values) / len(values)


def _std(values):
    if len(values) < 2:
        return 0.0
    mu = _mean(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / (len(values) - 1))


def run_batches(
    params: SimParams,
    policy: SwapPolicy,
    ordering: DistillOrdering = DistillOrdering.NONE,
    num_batches: int = DEFAULT_BATCHES,
    runs_per_batch: int = DEFAULT_RUNS_PER_BATCH,
    master_seed: int | None = None,
    salt: tuple[int, ...] = (),
    workers: int = 1,
) -> BatchStats:
    """Independent batches of runs aggregated into batch statistics."""
    if master_seed is None:
        master_seed = params.seed
    jobs = [
        (params, policy, ordering, master_seed, salt, b, runs_per_batch)
        for b in range(num_batches)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_batch_aggregate, jobs))
    else:
        outcomes = [_batch_aggregate(job) for job in jobs]
    outcomes.sort(key=lambda item: item[0])

    wait_means, age_means, fid_means = [], [], []
    censored = 0
    for _, waits, ages, fids, batch_censored in outcomes:
        censored += batch_censored
        if waits:
            wait_means.append(_mean(waits))
            age_means.append(_mean(ages))
            fid_means.append(_mean(fids))
    total = num_batches * runs_per_batch
    if not wait_means:
        return BatchStats(
            num_batches, runs_per_batch, None, None, None, None, None,
            censored, total,
        )
    return BatchStats(
        num_batches,
        runs_per_batch,
        _mean(wait_means),
        _mean(age_means),
        _mean(fid_means),
        _std(wait_means),
        _std(age_means),
        censored,
        total,
    )


@dataclass(frozen=True)
class ImprovementReport:
    """Ratio of a baseline's figures of merit to a variant's."""

    baseline_label: str
    variant_label: str
    waiting_ratio: float | None
    age_ratio: float | None
    waiting_ratio_error: float | None

    def to_record(self) -> dict:
        return {
            "baseline": self.baseline_label,
            "variant": self.variant_label,
            "waiting_ratio": self.waiting_ratio,
            "age_ratio": self.age_ratio,
            "waiting_ratio_error": self.waiting_ratio_error,
        }


def improvement_factor(
    baseline: BatchStats,
    variant: BatchStats,
    baseline_label: str = "baseline",
    variant_label: str = "variant",
) -> ImprovementReport:
    """Ratios > 1 mean the variant improves on the baseline."""
    if not baseline.estimate_valid or not variant.estimate_valid:
        return ImprovementReport(baseline_label, variant_label, None, None, None)
    waiting_ratio = baseline.mean_waiting / variant.mean_waiting
    age_ratio = baseline.mean_age / variant.mean_age if variant.mean_age else None
    rel = 0.0
    for stats in (baseline, variant):
        if stats.mean_waiting:
            rel += (stats.std_waiting / stats.mean_waiting) ** 2
    return ImprovementReport(
        baseline_label, variant_label, waiting_ratio, age_ratio,
        waiting_ratio * math.sqrt(rel),
    )


# Sweepable axes and how each value lands in the run configuration.
SWEEP_AXES = ("p_l", "p_sw", "n", "n_ch", "m_star", "m0", "t_cc",
              "policy", "ordering", "cc_mode")
DEFAULT_SWEEP_BUDGET = 4096


@dataclass
class SweepSpec:
    axes: list[tuple[str, list]]
    fixed: dict = field(default_factory=dict)
    seed: int = 0
    num_batches: int = DEFAULT_BATCHES
    runs_per_batch: int = DEFAULT_RUNS_PER_BATCH
    budget: int = DEFAULT_SWEEP_BUDGET
    workers: int = 1

    def __post_init__(self):
        for name, values in self.axes:
            if name not in SWEEP_AXES:
                raise ValueError(f"unknown sweep axis {name!r}")
            if not values:
                raise ValueError(f"sweep axis {name!r} has no values")
        size = self.size()
        if size > self.budget:
            raise ValueError(
                f"sweep has {size} points, over the budget of {self.budget}"
            )

    def size(self) -> int:
        return math.prod(len(values) for _, values in self.axes) if self.axes else 1


def _point_config(point: dict) -> tuple[SimParams, SwapPolicy, DistillOrdering]:
    policy = point.pop("policy", "fn")
    ordering = point.pop("ordering", "none")
    cc_mode = point.pop("cc_mode", "quasi-local")
    params = SimParams(
        n=int(point.pop("n", 7)),
        n_ch=int(point.pop("n_ch", 1)),
        p_l=float(point.pop("p_l", 0.5)),
        p_sw=float(point.pop("p_sw", 0.5)),
        m_star=int(point.pop("m_star", 12)),
        m0=int(point.pop("m0", 0)),
        cc_mode=CCMode(cc_mode) if not isinstance(cc_mode, CCMode) else cc_mode,
        t_cc=int(point.pop("t_cc", 1)),
        max_steps=int(point.pop("max_steps", 1_000_000)),
    )
    if point:
        raise ValueError(f"unknown parameters {sorted(point)}")
    policy = parse_policy(policy) if isinstance(policy, str) else policy
    ordering = parse_ordering(ordering) if isinstance(ordering, str) else ordering
    return params, policy, ordering


def sweep(spec: SweepSpec) -> list[dict]:
    """Cartesian sweep in deterministic axis order; one row per point."""
    names = [name for name, _ in spec.axes]
    rows = []
    for index, combo in enumerate(
        itertools.product(*(values for _, values in spec.axes))
    ):
        point = dict(spec.fixed)
        point.update(zip(names, combo))
        params, policy, ordering = _point_config(dict(point))
        stats = run_batches(
            params, policy, ordering,
            num_batches=spec.num_batches,
            runs_per_batch=spec.runs_per_batch,
            master_seed=spec.seed,
            salt=(index,),
            workers=spec.workers,
        )
        row = {
            "point": index,
            **{name: point[name] for name in names},
            **stats.to_record(),
        }
        rows.append(row)
    return rows


def design_study(
    preset: str | HardwareProfile,
    node_range=range(2, 11),
    n_ch: int = 5,
    p_sw: float = 1.0,
    num_batches: int = DEFAULT_BATCHES,
    runs_per_batch: int = DEFAULT_RUNS_PER_BATCH,
    seed: int = 0,
    policy: str = "fn",
    t_cc: int = 1,
    max_steps: int = 20_000,
    workers: int = 1,
    distance_km: float | None = None,
) -> list[dict]:
    """Rate/fidelity versus node count for one hardware platform.

    Each row carries the derived simulation parameters, the physical
    entanglement distribution rate 1 / (mean waiting x dt), and the mean
    end-to-end fidelity; the rate-optimal feasible row is flagged.
    Configurations whose fresh links would be born expired are reported as
    infeasible rows rather than errors, and node counts whose runs all
    censor in a small probe batch are reported as no-estimate rows without
    burning the full batch budget.
    """
    base = get_preset(preset) if isinstance(preset, str) else preset
    if distance_km is not None:
        base = replace(base, total_distance_km=distance_km)
    swap_policy = parse_policy(policy)
    rows = []
    for index, n in enumerate(node_range):
        profile = replace(base, num_nodes=n)
        dt = time_step(profile)
        m_star = memory_cutoff(profile)
        row = {
            "nodes": n,
            "p_l": link_success_prob(profile),
            "m_star": m_star,
            "dt_s": dt,
            "feasible": True,
            "optimal": False,
        }
        try:
            m0 = initial_age(profile, m_star)
        except ValueError:
            row.update({
                "feasible": False, "m0": None, "rate_hz": None,
                "mean_fidelity": None,
            })
            rows.append(row)
            continue
        params = profile_to_sim_params(
            profile, n_ch=n_ch, p_sw=p_sw, t_cc=t_cc, max_steps=max_steps,
        )
        probe_runs = max(2, min(runs_per_batch, 10))
        probe = run_batches(
            params, swap_policy, num_batches=1, runs_per_batch=probe_runs,
            master_seed=seed, salt=(index, 1),
        )
        if not probe.estimate_valid:
            row.update({
                "m0": m0, "rate_hz": None, "mean_fidelity": None,
                "stats_censored": probe.censored,
                "stats_total_runs": probe.total_runs,
            })
            rows.append(row)
            continue
        stats = run_batches(
            params, swap_policy,
            num_batches=num_batches, runs_per_batch=runs_per_batch,
            master_seed=seed, salt=(index,), workers=workers,
        )
        rate = (
            1.0 / (stats.mean_waiting * dt) if stats.estimate_valid else None
        )
        row.update({
            "m0": m0,
            "rate_hz": rate,
            "mean_fidelity": stats.mean_fidelity,
            **{f"stats_{k}": v for k, v in stats.to_record().items()},
        })
        rows.append(row)
    feasible = [r for r in rows if r["feasible"] and r["rate_hz"] is not None]
    if feasible:
        best = max(feasible, key=lambda r: r["rate_hz"])
        best["optimal"] = True
    return rows
