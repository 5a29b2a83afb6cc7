"""Random-set null model, scaling-law fit, and per-group z-score tests.

The null model draws R random node sets per size N, records mean and spread
of their mean inter-point distances, and fits sigma(N) = a * N**(-alpha) by
least squares on logs.  A labeled group of N_data nodes with mean distance
mu_data then gets z = (mu_data - mu_r) / sigma(N_data); |z| > 2 (strict)
flags p < 0.05.

Every random draw derives its stream from (master seed, task identity), so
results are reproducible and independent of evaluation order.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .embedding import (
    DEFAULT_PAIR_BUDGET,
    MeanDistanceResult,
    pair_sample_distances,
)

__all__ = [
    "NullFitError",
    "NullSamplingConfig",
    "NullSampleRow",
    "NullSamples",
    "NullModel",
    "GroupTestResult",
    "SignificanceSummary",
    "sample_null",
    "fit_null_scaling",
    "group_mean_distance",
    "z_score",
    "summarize",
    "write_null_samples_tsv",
    "read_null_samples_tsv",
    "write_null_model_tsv",
    "read_null_model_tsv",
    "write_results_tsv",
    "read_results_tsv",
    "write_summary_tsv",
]

_HIST_CLAMP = 20
SIGNIFICANCE_Z = 2.0


class NullFitError(ValueError):
    """Scaling-law fit impossible (too few usable sample sizes)."""


@dataclass(frozen=True)
class NullSamplingConfig:
    set_sizes: tuple[int, ...]
    sets_per_size: int = 100
    pair_budget: int = DEFAULT_PAIR_BUDGET
    seed: int = 0
    pooled_std: bool = False  # spread over pooled pair distances instead of set means

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.set_sizes)
        if not sizes or any(s < 2 for s in sizes):
            raise ValueError("set sizes must all be >= 2")
        if list(sizes) != sorted(set(sizes)):
            raise ValueError("set sizes must be strictly ascending")
        if self.sets_per_size < 2:
            raise ValueError("need at least 2 sets per size")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        object.__setattr__(self, "set_sizes", sizes)


@dataclass(frozen=True)
class NullSampleRow:
    set_size: int
    mean: float
    std: float
    reps: int


@dataclass(frozen=True)
class NullSamples:
    rows: tuple[NullSampleRow, ...]


@dataclass(frozen=True)
class NullModel:
    """mu_r plus fitted sigma(N) = a * N**(-alpha)."""

    mu_r: float
    a: float
    alpha: float
    fit_residual: float
    samples: NullSamples | None = None

    def sigma(self, n: int) -> float:
        return self.a * float(n) ** (-self.alpha)


@dataclass(frozen=True)
class GroupTestResult:
    level: str
    group: str
    n_data: int
    mu_data: float
    z: float
    p_value: float
    significant: bool


@dataclass(frozen=True)
class SignificanceSummary:
    n_groups: int
    n_significant: int
    n_low: int  # z < -2
    n_high: int  # z > +2
    histogram: tuple[tuple[int, int, int], ...]  # (bin_low, bin_high, count)


def _task_rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *tags]))


def _key_rng(seed: int, key: str) -> np.random.Generator:
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=16).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return _task_rng(seed, 2, *words)


def sample_null(points: np.ndarray, config: NullSamplingConfig) -> NullSamples:
    """Draw R random node sets per size and record mean/std of their set means.

    Each (size, repetition) task owns a stream seeded from (seed, size index,
    repetition index), so the output is bit-reproducible for a given config.
    """
    points = np.asarray(points, dtype=np.float64)
    n_points = len(points)
    if n_points < max(config.set_sizes):
        raise ValueError(
            f"largest set size {max(config.set_sizes)} exceeds point count {n_points}"
        )
    rows = []
    for size_index, set_size in enumerate(config.set_sizes):
        set_means = np.empty(config.sets_per_size)
        pooled_sum = pooled_sumsq = 0.0
        pooled_count = 0
        for rep in range(config.sets_per_size):
            rng = _task_rng(config.seed, 1, size_index, rep)
            chosen = rng.choice(n_points, size=set_size, replace=False)
            dists, _ = pair_sample_distances(points[chosen], config.pair_budget, rng)
            set_means[rep] = dists.mean()
            if config.pooled_std:
                pooled_sum += float(dists.sum())
                pooled_sumsq += float((dists**2).sum())
                pooled_count += len(dists)
        mean = float(set_means.mean())
        if config.pooled_std:
            var = (pooled_sumsq - pooled_sum**2 / pooled_count) / (pooled_count - 1)
            std = math.sqrt(max(var, 0.0))
        else:
            std = float(set_means.std(ddof=1))
        rows.append(NullSampleRow(set_size, mean, std, config.sets_per_size))
    return NullSamples(rows=tuple(rows))


def fit_null_scaling(samples: NullSamples, fix_alpha: float | None = None) -> NullModel:
    """Fit mu_r and the power law sigma(N) = a * N**(-alpha).

    mu_r is the rep-weighted mean of the per-size means.  Sizes with zero
    spread are excluded from the power-law fit; a free-alpha fit needs at
    least 3 usable sizes, a fixed-alpha fit at least 1.
    """
    rows = samples.rows
    if not rows:
        raise NullFitError("no sample rows to fit")
    weights = np.array([r.reps for r in rows], dtype=np.float64)
    means = np.array([r.mean for r in rows])
    mu_r = float((weights * means).sum() / weights.sum())

    usable = [r for r in rows if r.std > 0.0]
    needed = 1 if fix_alpha is not None else 3
    if len(usable) < needed:
        raise NullFitError(
            f"need at least {needed} sizes with nonzero spread, got {len(usable)}"
        )
    log_n = np.log(np.array([r.set_size for r in usable], dtype=np.float64))
    log_s = np.log(np.array([r.std for r in usable]))
    if fix_alpha is not None:
        alpha = float(fix_alpha)
        log_a = float((log_s + alpha * log_n).mean())
    else:
        slope, log_a = np.polyfit(log_n, log_s, 1)
        alpha = float(-slope)
        log_a = float(log_a)
    residuals = log_s - (log_a - alpha * log_n)
    return NullModel(
        mu_r=mu_r,
        a=float(math.exp(log_a)),
        alpha=alpha,
        fit_residual=float(np.sqrt(np.mean(residuals**2))),
        samples=samples,
    )


def group_mean_distance(
    points: np.ndarray,
    membership: Mapping[str, np.ndarray],
    pair_budget: int = DEFAULT_PAIR_BUDGET,
    seed: int = 0,
    min_group_size: int = 2,
) -> tuple[dict[str, MeanDistanceResult], list[str]]:
    """Mean inter-node distance per group; undersized groups are skipped.

    Each group's pair-sampling stream is derived from (seed, group key), so
    results do not depend on evaluation order.
    """
    if not membership:
        raise ValueError("empty membership")
    points = np.asarray(points, dtype=np.float64)
    results: dict[str, MeanDistanceResult] = {}
    skipped: list[str] = []
    for key in sorted(membership):
        ids = np.asarray(membership[key])
        if len(ids) < max(min_group_size, 2):
            skipped.append(key)
            continue
        rng = _key_rng(seed, key)
        dists, exact = pair_sample_distances(points[ids], pair_budget, rng)
        results[key] = MeanDistanceResult(float(dists.mean()), len(dists), exact)
    return results, skipped


def z_score(
    model: NullModel,
    group: str,
    level: str,
    n_data: int,
    mu_data: float,
) -> GroupTestResult:
    """Score one group against the null; significance is strict |z| > 2."""
    if n_data < 2:
        raise ValueError("group needs at least 2 nodes")
    z = (mu_data - model.mu_r) / model.sigma(n_data)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return GroupTestResult(
        level=level,
        group=group,
        n_data=n_data,
        mu_data=mu_data,
        z=float(z),
        p_value=float(p),
        significant=abs(z) > SIGNIFICANCE_Z,
    )


def summarize(results: Sequence[GroupTestResult]) -> SignificanceSummary:
    """Tail counts plus a unit-width z histogram clamped at +/-20."""
    if not results:
        raise ValueError("no results to summarize")
    z = np.array([r.z for r in results])
    counts = np.zeros(2 * _HIST_CLAMP, dtype=np.int64)
    bins = np.clip(np.floor(z).astype(np.int64), -_HIST_CLAMP, _HIST_CLAMP - 1) + _HIST_CLAMP
    for b in bins:
        counts[b] += 1
    histogram = tuple(
        (lo, lo + 1, int(counts[lo + _HIST_CLAMP])) for lo in range(-_HIST_CLAMP, _HIST_CLAMP)
    )
    return SignificanceSummary(
        n_groups=len(results),
        n_significant=int(sum(r.significant for r in results)),
        n_low=int(np.sum(z < -SIGNIFICANCE_Z)),
        n_high=int(np.sum(z > SIGNIFICANCE_Z)),
        histogram=histogram,
    )


# ---------------------------------------------------------------------------
# TSV artifacts
# ---------------------------------------------------------------------------

def write_null_samples_tsv(samples: NullSamples, out: TextIO) -> None:
    out.write("# N\tmean\tstd\tR\n")
    for row in samples.rows:
        out.write(f"{row.set_size}\t{row.mean:.9g}\t{row.std:.9g}\t{row.reps}\n")


def read_null_samples_tsv(lines: Iterable[str]) -> NullSamples:
    rows = []
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        n, mean, std, reps = line.split("\t")
        rows.append(NullSampleRow(int(n), float(mean), float(std), int(reps)))
    return NullSamples(rows=tuple(rows))


def write_null_model_tsv(model: NullModel, out: TextIO) -> None:
    out.write("# mu_r\ta\talpha\tresidual\n")
    out.write(f"{model.mu_r:.9g}\t{model.a:.9g}\t{model.alpha:.9g}\t{model.fit_residual:.9g}\n")


def read_null_model_tsv(lines: Iterable[str]) -> NullModel:
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        mu_r, a, alpha, residual = line.split("\t")
        return NullModel(float(mu_r), float(a), float(alpha), float(residual))
    raise ValueError("empty null model file")


def write_results_tsv(results: Sequence[GroupTestResult], out: TextIO) -> None:
    """Rows sorted by z ascending."""
    out.write("# level\tgroup\tn_nodes\tmean_dist\tz\tp\tsignificant\n")
    for r in sorted(results, key=lambda r: (r.z, r.level, r.group)):
        out.write(
            f"{r.level}\t{r.group}\t{r.n_data}\t{r.mu_data:.9g}\t{r.z:.9g}"
            f"\t{r.p_value:.9g}\t{int(r.significant)}\n"
        )


def read_results_tsv(lines: Iterable[str]) -> list[GroupTestResult]:
    results = []
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        level, group, n, mu, z, p, sig = line.split("\t")
        results.append(
            GroupTestResult(level, group, int(n), float(mu), float(z), float(p), sig == "1")
        )
    return results


def write_summary_tsv(summary: SignificanceSummary, out: TextIO) -> None:
    out.write(f"# groups={summary.n_groups}\tsignificant={summary.n_significant}")
    out.write(f"\tz_below_-2={summary.n_low}\tz_above_+2={summary.n_high}\n")
    out.write("# bin_low\tbin_high\tcount\n")
    for lo, hi, count in summary.histogram:
        out.write(f"{lo}\t{hi}\t{count}\n")
