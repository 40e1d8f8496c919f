"""Seeded, parallel Monte Carlo runner with streaming statistics.

Estimates are accumulated by Welford updates inside fixed-size tasks and
combined with the parallel (Chan) merge, which is associative up to
floating-point roundoff.  Task substreams are derived from the experiment
seed by a fixed rule — ``SeedSequence(seed, spawn_key=(task_index,))`` —
and task results are merged in task order, so a run is bit-identical for
any thread count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MCEstimate",
    "ComparisonVerdict",
    "run_mc",
    "moment_table",
    "joint_cumulant",
    "compare_report",
    "write_comparison_csv",
]


class MCEstimate:
    """Streaming mean/variance accumulator for one scalar statistic."""

    __slots__ = ("stat_id", "seed", "count", "mean", "m2")

    def __init__(self, stat_id: str = "", seed: int = 0):
        self.stat_id = stat_id
        self.seed = int(seed)
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def update(self, value: float) -> None:
        value = float(value)
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def merge(self, other: "MCEstimate") -> "MCEstimate":
        """Combined estimate, exact in count and stable in mean/m2."""
        if self.stat_id != other.stat_id:
            raise ValueError(f"cannot merge {self.stat_id!r} with {other.stat_id!r}")
        out = MCEstimate(self.stat_id, self.seed)
        n = self.count + other.count
        if n == 0:
            return out
        delta = other.mean - self.mean
        out.count = n
        out.mean = self.mean + delta * other.count / n
        out.m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return out

    @property
    def variance(self) -> float:
        if self.count < 2:
            raise ValueError("variance needs at least two samples")
        return self.m2 / (self.count - 1)

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.count)

    def __repr__(self):
        return (
            f"MCEstimate({self.stat_id!r}, count={self.count}, mean={self.mean:.6g})"
        )


def _task_sizes(num_samples: int, samples_per_task: int):
    full, rem = divmod(num_samples, samples_per_task)
    sizes = [samples_per_task] * full
    if rem:
        sizes.append(rem)
    return sizes


def run_mc(sample_fn, statistics, num_samples: int, seed: int, *, threads: int = 1,
           samples_per_task: int = 512):
    """Estimate each statistic over ``num_samples`` draws of ``sample_fn``.

    ``sample_fn(rng)`` produces one sample object; ``statistics`` maps
    stat_id -> callable(sample) -> float.  The sample budget is split into
    tasks of ``samples_per_task`` draws (the task size is part of the
    result's identity: changing it reshuffles substreams).
    """
    if num_samples < 2:
        raise ValueError("need at least two samples")
    if samples_per_task < 1:
        raise ValueError("samples_per_task must be >= 1")
    stat_items = list(statistics.items())
    sizes = _task_sizes(int(num_samples), int(samples_per_task))

    def task(args):
        idx, size = args
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(idx,)))
        accs = [MCEstimate(sid, seed) for sid, _ in stat_items]
        for _ in range(size):
            sample = sample_fn(rng)
            for acc, (_, fn) in zip(accs, stat_items):
                acc.update(fn(sample))
        return accs

    jobs = list(enumerate(sizes))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(task, jobs))
    else:
        partials = [task(j) for j in jobs]

    merged = partials[0]
    for part in partials[1:]:
        merged = [a.merge(b) for a, b in zip(merged, part)]
    return merged


# ---------------------------------------------------------------------------
# joint cumulants


def moment_table(samples) -> dict:
    """Empirical mixed moments E[prod_{i in S} X_i] for every nonempty S.

    ``samples`` is an (n, d) array; keys are frozensets of column indices.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2:
        raise ValueError("samples must be a 2-d array")
    d = arr.shape[1]
    table = {}
    for mask in range(1, 1 << d):
        idx = frozenset(i for i in range(d) if mask >> i & 1)
        prod = np.prod(arr[:, sorted(idx)], axis=1)
        table[idx] = float(prod.mean())
    return table


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] + (first,)] + part[i + 1 :]
        yield part + [(first,)]


def joint_cumulant(table: dict, subset) -> float:
    """Alternating set-partition sum of mixed moments.

    kappa(S) = sum over partitions pi of S of (-1)^(|pi|-1) (|pi|-1)!
    prod_{B in pi} E[prod_{i in B} X_i].  Order 1 is the mean, order 2 the
    covariance; all orders >= 2 vanish on factorizing moments.
    """
    items = tuple(subset)
    if not items:
        raise ValueError("subset must be nonempty")
    total = 0.0
    for part in _set_partitions(items):
        term = (-1.0) ** (len(part) - 1) * math.factorial(len(part) - 1)
        for block in part:
            key = frozenset(block)
            if key not in table:
                raise ValueError(f"moment table is missing E[prod of {sorted(key)}]")
            term *= table[key]
        total += term
    return total


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class ComparisonVerdict:
    stat_id: str
    mean: float
    stderr: float
    count: int
    seed: int
    z_score: float
    reference: float
    passed: bool


def compare_report(estimate: MCEstimate, reference: float, sigma_gate: float = 4.0
                   ) -> ComparisonVerdict:
    """z-score the estimate against a reference; pass iff |z| <= sigma_gate."""
    if estimate.count < 30:
        raise ValueError("comparison needs at least 30 samples")
    err = estimate.stderr
    diff = estimate.mean - float(reference)
    if err == 0.0:
        z = 0.0 if diff == 0.0 else math.inf
    else:
        z = diff / err
    return ComparisonVerdict(
        stat_id=estimate.stat_id,
        mean=estimate.mean,
        stderr=err,
        count=estimate.count,
        seed=estimate.seed,
        z_score=z,
        reference=float(reference),
        passed=abs(z) <= sigma_gate,
    )


def write_comparison_csv(path, verdicts) -> None:
    """Write verdict rows as stat_id,mean,stderr,count,seed,z_score,reference,verdict."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["stat_id", "mean", "stderr", "count", "seed", "z_score", "reference", "verdict"]
        )
        for v in verdicts:
            writer.writerow(
                [
                    v.stat_id,
                    repr(v.mean),
                    repr(v.stderr),
                    v.count,
                    v.seed,
                    repr(v.z_score),
                    repr(v.reference),
                    "pass" if v.passed else "fail",
                ]
            )
