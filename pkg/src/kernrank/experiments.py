"""Monte Carlo rank experiments over kernels, sizes and interaction kinds.

A run sweeps (kernel, n) cells, draws fresh target and source particle sets
per trial from counter-derived seeds, assembles the kernel matrix and records
its epsilon-rank.  Statistics use population variance and exact integer
accumulation, so the numbers are independent of trial ordering and of the
number of worker threads.
"""

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import FitError, NotApplicableError
from .geometry import InteractionKind, make_domain_pair, subdivide
from .kernels import get_kernel
from .lowrank import assemble, eps_rank, realized_R
from .sampling import mix64, realized_counts, sample, sample_grid

_TARGET_TAG = 0x54
_SOURCE_TAG = 0x59


@dataclass
class ExperimentConfig:
    d: int
    dprime: int  # -1 encodes far-field
    kernels: list
    ns: list
    trials: int
    master_seed: int
    eps: float = 1e-12
    side: float = 1.0
    p: int = None  # truncation level, only for realized-R runs
    sampling: str = "iid"  # "grid" = random tensor-product points per domain

    def __post_init__(self):
        if self.sampling not in ("iid", "grid"):
            raise ValueError(f"unknown sampling scheme {self.sampling!r}")
        self.kernels = [str(k).lower() for k in self.kernels]
        self.ns = [int(n) for n in self.ns]
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        for k in self.kernels:
            get_kernel(k)  # fail fast on unknown names
        self.kind  # validates d / dprime

    @property
    def kind(self):
        if self.dprime == -1:
            return InteractionKind.far_field()
        return InteractionKind.shared_surface(self.dprime)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)


@dataclass
class CellStats:
    kernel: str
    n: int
    trials: int
    mean: float
    var: float
    samples: np.ndarray = None


@dataclass
class RankStatistics:
    config: ExperimentConfig
    cells: dict = field(default_factory=dict)  # (kernel, n) -> CellStats

    def cell(self, kernel, n):
        return self.cells[(str(kernel).lower(), int(n))]

    def means(self, kernel):
        return [self.cell(kernel, n).mean for n in self.config.ns]


def _domain_seeds(config, kernel_name, n, trial):
    """Independent streams for the target and source draws of one trial."""
    tag = int.from_bytes(str(kernel_name).encode(), "little")
    base = (config.master_seed, tag, n, trial)
    return mix64(*base, _TARGET_TAG), mix64(*base, _SOURCE_TAG)


def _draw(config, kernel_name, n, trial):
    target, source = make_domain_pair(config.d, config.kind, config.side)
    tseed, sseed = _domain_seeds(config, kernel_name, n, trial)
    if config.sampling == "grid":
        m = round(n ** (1.0 / config.d))
        if m ** config.d != n:
            raise ValueError(
                f"grid sampling needs n to be a perfect d-th power, got {n}")
        return (sample_grid(target, m, tseed), sample_grid(source, m, sseed))
    return sample(target, n, tseed), sample(source, n, sseed)


def run_trial(config, kernel, n, trial):
    """Epsilon-rank of one freshly drawn kernel matrix."""
    targets, sources = _draw(config, kernel, n, trial)
    K = assemble(get_kernel(kernel), targets, sources)
    return eps_rank(K, config.eps).eps_rank


def _cell_stats(kernel, n, ranks, trials):
    s1 = sum(int(r) for r in ranks)
    s2 = sum(int(r) ** 2 for r in ranks)
    mean = s1 / trials
    var = (s2 - s1 * s1 / trials) / trials  # population variance, exact sums
    return CellStats(kernel=kernel, n=n, trials=trials, mean=mean, var=var,
                     samples=np.asarray(ranks, dtype=np.int64))


def run_experiment(config, workers=1, progress=None):
    """Full (kernel, n, trial) sweep; workers only parallelize, never reseed."""
    stats = RankStatistics(config=config)
    for kernel in config.kernels:
        for n in config.ns:
            trials = range(config.trials)
            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    ranks = list(pool.map(
                        lambda t: run_trial(config, kernel, n, t), trials))
            else:
                ranks = [run_trial(config, kernel, n, t) for t in trials]
            stats.cells[(kernel, n)] = _cell_stats(kernel, n, ranks,
                                                   config.trials)
            if progress is not None:
                progress(kernel, n, stats.cells[(kernel, n)])
    return stats


def realized_R_experiment(config, workers=1, progress=None):
    """Blockwise rank bound R from the same source draws as run_trial.

    Uses the source-stream seeds of the rank sweep, so R and the measured
    epsilon-rank can be compared trial by trial.  Requires a shared-surface
    configuration and a truncation level p.
    """
    if config.kind.is_far_field:
        raise NotApplicableError("realized R needs a shared-surface pair")
    if config.p is None:
        raise ValueError("config.p (truncation level) is required")
    stats = RankStatistics(config=config)
    for kernel in config.kernels:
        for n in config.ns:
            target, source = make_domain_pair(config.d, config.kind,
                                              config.side)
            tree = subdivide(source, target, n)

            def one(t):
                _, sseed = _domain_seeds(config, kernel, n, t)
                sources = sample(source, n, sseed)
                return realized_R(realized_counts(sources, tree), config.p)

            trials = range(config.trials)
            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    rs = list(pool.map(one, trials))
            else:
                rs = [one(t) for t in trials]
            stats.cells[(kernel, n)] = _cell_stats(kernel, n, rs,
                                                   config.trials)
            if progress is not None:
                progress(kernel, n, stats.cells[(kernel, n)])
    return stats


def calibrate_p(kernel, d, eps=1e-12, master_seed=0,
                ns=(64, 128, 256, 512, 1024), trials=3):
    """Truncation level from the far-field rank plateau: max rank plus one."""
    config = ExperimentConfig(d=d, dprime=-1, kernels=[kernel], ns=list(ns),
                              trials=trials, master_seed=master_seed, eps=eps)
    stats = run_experiment(config)
    top = max(int(stats.cells[(config.kernels[0], n)].samples.max())
              for n in config.ns)
    return top + 1


def growth_fit(ns, means):
    """Power-law and logarithmic growth fits of mean rank against n.

    Returns a dict with the power-law slope (log-log least squares) and the
    coefficients of mean = a + b log2 n, each with its R^2.
    """
    ns = np.asarray(ns, dtype=float)
    means = np.asarray(means, dtype=float)
    if ns.size < 3 or ns.size != means.size:
        raise FitError("need at least three (n, mean) pairs")
    if np.any(means <= 0) or np.any(ns <= 0):
        raise FitError("growth fits need positive sizes and means")

    def _lsq(x, y):
        A = np.column_stack([np.ones_like(x), x])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ coef
        ss_tot = np.sum((y - y.mean()) ** 2)
        r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
        return coef, float(r2)

    (pl_int, pl_slope), pl_r2 = _lsq(np.log(ns), np.log(means))
    (lg_int, lg_slope), lg_r2 = _lsq(np.log2(ns), means)
    return {
        "power_slope": float(pl_slope),
        "power_prefactor": float(math.exp(pl_int)),
        "power_r2": pl_r2,
        "log_slope": float(lg_slope),
        "log_intercept": float(lg_int),
        "log_r2": lg_r2,
    }


def emit_csv(stats, path):
    config = stats.config
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kernel", "n", "trials", "mean_rank", "var_rank",
                         "eps", "master_seed"])
        for kernel in config.kernels:
            for n in config.ns:
                c = stats.cell(kernel, n)
                writer.writerow([kernel, n, c.trials, repr(c.mean),
                                 repr(c.var), repr(config.eps),
                                 config.master_seed])


def emit_json(stats, path):
    config = stats.config
    payload = {
        "config": asdict(config),
        "cells": [
            {"kernel": kernel, "n": n, "trials": c.trials,
             "mean_rank": c.mean, "var_rank": c.var}
            for (kernel, n), c in sorted(stats.cells.items())
            for c in [stats.cell(kernel, n)]
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def emit_plot_data(stats, path):
    """Per-n growth data with the matching theory columns.

    Columns: n, mean, var, theory_exact, theory_witness.  Requires a
    shared-surface config with a truncation level p, since the theory
    columns evaluate the expected blockwise rank bound.
    """
    from .probmodel import BoundInputs, expected_R

    config = stats.config
    if config.kind.is_far_field or config.p is None:
        raise NotApplicableError(
            "plot data needs a shared-surface config with p set")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "mean", "var", "theory_exact", "theory_witness"])
        for kernel in config.kernels:
            for n in config.ns:
                c = stats.cell(kernel, n)
                exact, witness = expected_R(
                    BoundInputs(d=config.d, dprime=config.dprime, n=n,
                                p=config.p))
                writer.writerow([n, repr(c.mean), repr(c.var),
                                 repr(exact), repr(witness)])


def format_table(stats, digits=2):
    """Kernels-by-sizes text table of mean (variance) entries."""
    config = stats.config
    header = ["kernel"] + [f"n={n}" for n in config.ns]
    rows = [header]
    for kernel in config.kernels:
        row = [kernel]
        for n in config.ns:
            c = stats.cell(kernel, n)
            row.append(f"{c.mean:.{digits}f} ({c.var:.{digits}f})")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return "\n".join(
        "  ".join(cell.rjust(w) for cell, w in zip(row, widths))
        for row in rows
    )


def parse_csv(path):
    """Round-trip reader for emit_csv output."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append({
                "kernel": row["kernel"],
                "n": int(row["n"]),
                "trials": int(row["trials"]),
                "mean_rank": float(row["mean_rank"]),
                "var_rank": float(row["var_rank"]),
                "eps": float(row["eps"]),
                "master_seed": int(row["master_seed"]),
            })
    return out
