"""Acceptance-rejection engine working entirely in log space."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import BoundViolation, NoAccepts, TrialCapExceeded
from .rng import RngStream

BOUND_TOL = 1e-9
TRIAL_CAP = 10**9
MAX_BATCH = 1 << 17


@dataclass(frozen=True)
class Envelope:
    """Target/envelope pair for acceptance-rejection.

    ``log_target`` and ``log_envelope`` are the log unnormalised densities
    (vectorised over the leading axis of a batch of points), ``log_mstar``
    the log of the constant in ``f* <= M* g*`` and ``proposal(stream, m)``
    draws ``m`` points from the normalised envelope.

    ``log_stage`` optionally splits the acceptance ratio into an outer
    factor (an intermediate envelope); it is used only to report the
    acceptance rate of each stage, never to change which points are kept.
    """

    log_target: Callable[[np.ndarray], np.ndarray]
    log_envelope: Callable[[np.ndarray], np.ndarray]
    log_mstar: float
    proposal: Callable[[RngStream, int], np.ndarray]
    log_stage: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def log_ratio(self, x) -> np.ndarray:
        """``log f*(x) - log M* - log g*(x)``; at most 0 for a valid envelope."""
        return self.log_target(x) - self.log_envelope(x) - self.log_mstar


@dataclass
class AcceptStats:
    trials: int = 0
    accepts: int = 0
    stage_passes: Optional[int] = None

    @property
    def efficiency(self) -> float:
        return self.accepts / self.trials if self.trials else float("nan")

    @property
    def stage_efficiency(self):
        """Acceptance rate of the outer stage and of the inner stage given the outer."""
        if self.stage_passes is None or not self.trials:
            return None
        inner = self.accepts / self.stage_passes if self.stage_passes else float("nan")
        return self.stage_passes / self.trials, inner

    def __add__(self, other: AcceptStats) -> AcceptStats:
        if self.stage_passes is None or other.stage_passes is None:
            sp = None
        else:
            sp = self.stage_passes + other.stage_passes
        return AcceptStats(self.trials + other.trials, self.accepts + other.accepts, sp)


class SampleBatch(NamedTuple):
    samples: np.ndarray
    stats: AcceptStats

    @property
    def efficiency(self) -> float:
        return self.stats.efficiency


def expected_trials(stats: AcceptStats) -> float:
    """Empirical estimate of the bound M, i.e. mean trials per accepted draw."""
    if stats.trials < 1:
        raise ValueError("no trials recorded")
    if stats.accepts == 0:
        raise NoAccepts("no accepted draws, M cannot be estimated")
    return stats.trials / stats.accepts


def _propose(env: Envelope, stream: RngStream, m: int):
    x = env.proposal(stream, m)
    logw = np.log(stream.uniform(m))
    lr = env.log_ratio(x)
    worst = np.max(lr)
    if not worst <= BOUND_TOL:  # also catches NaN
        raise BoundViolation(
            f"log f* - log g* exceeds log M* by {worst:.3e} (tolerance {BOUND_TOL:g})"
        )
    return x, logw, lr


def ar_sample(env: Envelope, stream: RngStream, n: int, *, trial_cap: int = TRIAL_CAP) -> SampleBatch:
    """Draw ``n`` exact samples from the target of ``env``.

    Proposals are generated in batches.  Trials are counted only up to the
    ``n``-th acceptance; surplus proposals of the final batch are discarded
    and not counted.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    chunks = []
    got = 0
    stats = AcceptStats(stage_passes=0 if env.log_stage is not None else None)
    est = 1.0
    while got < n:
        need = n - got
        m = int(min(MAX_BATCH, max(64, math.ceil(1.1 * need / est) + 16)))
        x, logw, lr = _propose(env, stream, m)
        acc = np.flatnonzero(logw < lr)
        if acc.size >= need:
            used = int(acc[need - 1]) + 1
            acc = acc[:need]
        else:
            used = m
        stats.trials += used
        stats.accepts += acc.size
        if env.log_stage is not None:
            stats.stage_passes += int(np.count_nonzero(logw[:used] < env.log_stage(x[:used])))
        chunks.append(x[acc])
        got += acc.size
        if stats.trials >= trial_cap and got < n:
            raise TrialCapExceeded(
                f"{stats.trials} trials for {got} of {n} samples; envelope looks pathological"
            )
        # no accepts yet: keep shrinking the estimate (floored so batch sizing stays finite)
        est = max(stats.efficiency, 1e-3) if stats.accepts else max(est / 2, 1e-12)
    return SampleBatch(np.concatenate(chunks, axis=0), stats)


def count_accepts(env: Envelope, stream: RngStream, trials: int) -> AcceptStats:
    """Run exactly ``trials`` proposals and count acceptances (no samples kept)."""
    stats = AcceptStats(stage_passes=0 if env.log_stage is not None else None)
    left = int(trials)
    while left > 0:
        m = min(MAX_BATCH, left)
        x, logw, lr = _propose(env, stream, m)
        stats.trials += m
        stats.accepts += int(np.count_nonzero(logw < lr))
        if env.log_stage is not None:
            stats.stage_passes += int(np.count_nonzero(logw < env.log_stage(x)))
        left -= m
    return stats


def default_threads(requested: Optional[int] = None) -> int:
    """Worker count: ``requested`` (default: CPU count, at most 8) capped by DIRSIM_THREADS."""
    n = requested if requested else min(8, os.cpu_count() or 1)
    cap = os.environ.get("DIRSIM_THREADS")
    if cap:
        n = min(n, int(cap))
    return max(1, int(n))


def _run_shards(work, stream: RngStream, total: int, shard_size: int, threads):
    sizes = [shard_size] * (total // shard_size)
    if total % shard_size:
        sizes.append(total % shard_size)
    jobs = [(stream.shard(i), k) for i, k in enumerate(sizes)]
    threads = default_threads(threads)
    if threads == 1 or len(jobs) == 1:
        return [work(s, k) for s, k in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: work(*job), jobs))


def sample_sharded(draw: Callable[[RngStream, int], SampleBatch], stream: RngStream, n: int,
                   shard_size: int = 50_000, threads: Optional[int] = None) -> SampleBatch:
    """Run ``draw`` over fixed-size shards and concatenate in shard order.

    Shard ``i`` always uses ``stream.shard(i)``, so the merged output does
    not depend on ``threads``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    parts = _run_shards(draw, stream, n, shard_size, threads)
    stats = parts[0].stats
    for p in parts[1:]:
        stats = stats + p.stats
    return SampleBatch(np.concatenate([p.samples for p in parts], axis=0), stats)


def count_accepts_sharded(env: Envelope, stream: RngStream, trials: int,
                          shard_size: int = 250_000, threads: Optional[int] = None) -> AcceptStats:
    """:func:`count_accepts` over fixed shards; result independent of ``threads``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    parts = _run_shards(lambda s, k: count_accepts(env, s, k), stream, trials, shard_size, threads)
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total
