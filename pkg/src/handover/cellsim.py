"""Discrete-event simulation of one guard-channel cell.

Serves as a statistical cross-check of :mod:`handover.teletraffic`: new
calls and handoffs arrive as independent Poisson streams, every admitted
call holds its channel for an exponential time at rate ``mu_call +
eta_dwell``, and departures are kept in a heap.

Random numbers come from NumPy's PCG64 (period 2**128), one spawned
stream each for new arrivals, handoff arrivals and holding times, so a
given seed fixes the output exactly.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InsufficientDataError, ValidationError
from .teletraffic import GuardChannelSpec, blocking_probabilities

PRNG = "numpy.random.PCG64 via SeedSequence.spawn(3)"
BATCHES = 20


@dataclass(frozen=True)
class SimConfig:
    spec: GuardChannelSpec
    target_arrivals: int
    seed: int = 0
    warmup_arrivals: Optional[int] = None

    def __post_init__(self):
        if self.warmup_arrivals is None:
            object.__setattr__(self, "warmup_arrivals", self.target_arrivals // 100)
        if not self.target_arrivals > self.warmup_arrivals >= 0:
            raise ValidationError("need target_arrivals > warmup_arrivals >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


@dataclass
class SimStats:
    new_offered: int
    new_blocked: int
    handoff_offered: int
    handoff_dropped: int
    # per-batch (offered, refused) counts for batch-means standard errors
    new_batches: list = field(default_factory=list, repr=False)
    handoff_batches: list = field(default_factory=list, repr=False)
    seed: Optional[int] = None
    prng: str = PRNG

    @property
    def p_block_hat(self) -> Optional[float]:
        return self.new_blocked / self.new_offered if self.new_offered else None

    @property
    def p_drop_hat(self) -> Optional[float]:
        return self.handoff_dropped / self.handoff_offered if self.handoff_offered else None

    @property
    def se_block(self) -> Optional[float]:
        return _ratio_se(self.new_batches)

    @property
    def se_drop(self) -> Optional[float]:
        return _ratio_se(self.handoff_batches)

    def as_dict(self) -> dict:
        return {
            "new_offered": self.new_offered, "new_blocked": self.new_blocked,
            "handoff_offered": self.handoff_offered, "handoff_dropped": self.handoff_dropped,
            "p_block_hat": self.p_block_hat, "p_drop_hat": self.p_drop_hat,
            "se_block": self.se_block, "se_drop": self.se_drop,
            "seed": self.seed, "prng": self.prng,
        }


def _ratio_se(batches) -> Optional[float]:
    """Batch-means standard error of the ratio estimator sum(refused)/sum(offered)."""
    batches = [(o, r) for o, r in batches if o > 0]
    k = len(batches)
    total = sum(o for o, _ in batches)
    if k < 2 or total == 0:
        return None
    p = sum(r for _, r in batches) / total
    mean_o = total / k
    var = sum((r - p * o) ** 2 for o, r in batches) / (k * (k - 1))
    return math.sqrt(var) / mean_o


class _Exponentials:
    """Buffered unit-mean exponential variates."""

    def __init__(self, rng: np.random.Generator, chunk: int = 1 << 16):
        self.rng = rng
        self.chunk = chunk
        self.buf = []
        self.pos = 0

    def __call__(self) -> float:
        if self.pos == len(self.buf):
            self.buf = self.rng.standard_exponential(self.chunk).tolist()
            self.pos = 0
        x = self.buf[self.pos]
        self.pos += 1
        return x


def simulate(cfg: SimConfig) -> SimStats:
    spec = cfg.spec
    C, threshold = spec.channels, spec.threshold
    lam_n, lam_h, nu = spec.lambda_new, spec.lambda_handoff, spec.holding_rate
    stats = SimStats(0, 0, 0, 0, seed=cfg.seed)
    if lam_n == 0 and lam_h == 0:
        return stats

    streams = [np.random.Generator(np.random.PCG64(s))
               for s in np.random.SeedSequence(cfg.seed).spawn(3)]
    exp_new, exp_ho, exp_hold = (_Exponentials(g) for g in streams)
    inf = math.inf
    next_new = exp_new() / lam_n if lam_n > 0 else inf
    next_ho = exp_ho() / lam_h if lam_h > 0 else inf

    measured = cfg.target_arrivals - cfg.warmup_arrivals
    batch_size = max(1, -(-measured // BATCHES))
    nb = [[0, 0] for _ in range(BATCHES)]
    hb = [[0, 0] for _ in range(BATCHES)]

    departures = []
    busy = 0
    for k in range(cfg.target_arrivals):
        if next_new <= next_ho:
            now = next_new
            next_new = now + exp_new() / lam_n
            is_new = True
        else:
            now = next_ho
            next_ho = now + exp_ho() / lam_h
            is_new = False
        while departures and departures[0] <= now:
            heapq.heappop(departures)
            busy -= 1
        admitted = busy < (threshold if is_new else C)
        if admitted:
            busy += 1
            heapq.heappush(departures, now + exp_hold() / nu)
        if busy > C or busy < 0:
            raise RuntimeError(f"occupancy {busy} outside [0, {C}]")
        if k >= cfg.warmup_arrivals:
            b = (nb if is_new else hb)[(k - cfg.warmup_arrivals) // batch_size]
            b[0] += 1
            b[1] += not admitted

    stats.new_batches = [tuple(b) for b in nb]
    stats.handoff_batches = [tuple(b) for b in hb]
    stats.new_offered = sum(b[0] for b in nb)
    stats.new_blocked = sum(b[1] for b in nb)
    stats.handoff_offered = sum(b[0] for b in hb)
    stats.handoff_dropped = sum(b[1] for b in hb)
    return stats


def merge_stats(runs) -> SimStats:
    """Combine independent replications by summing counts and pooling batches."""
    runs = list(runs)
    out = SimStats(0, 0, 0, 0, seed=None)
    for r in runs:
        out.new_offered += r.new_offered
        out.new_blocked += r.new_blocked
        out.handoff_offered += r.handoff_offered
        out.handoff_dropped += r.handoff_dropped
        out.new_batches += r.new_batches
        out.handoff_batches += r.handoff_batches
    out.seed = [r.seed for r in runs] if runs else None
    return out


def simulate_replications(spec: GuardChannelSpec, arrivals: int, seed: int, replications: int = 1,
                          warmup: Optional[int] = None) -> SimStats:
    """Run replications with seeds ``seed, seed+1, ...`` concurrently and merge them."""
    cfgs = [SimConfig(spec, arrivals, seed + i, warmup) for i in range(replications)]
    if replications == 1:
        return simulate(cfgs[0])
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=min(replications, 8)) as pool:
        return merge_stats(pool.map(simulate, cfgs))


@dataclass
class ZCheck:
    estimate: Optional[float]
    analytic: float
    standard_error: Optional[float]
    z: Optional[float]
    passed: Optional[bool]     # None when there is no data to judge
    note: str = ""


@dataclass
class ComparisonReport:
    block: ZCheck
    drop: ZCheck
    threshold: float = 3.0

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in (self.block, self.drop))


def _zcheck(refused, offered, se, analytic, threshold) -> ZCheck:
    if offered == 0:
        return ZCheck(None, analytic, None, None, None, "insufficient data: no arrivals offered")
    est = refused / offered
    if not se:
        # no refusals in any batch: fall back to the binomial error at the analytic value
        se = math.sqrt(analytic * (1 - analytic) / offered)
    z = 0.0 if se == 0 else (est - analytic) / se
    return ZCheck(est, analytic, se, z, abs(z) <= threshold)


def compare_to_analytic(stats: SimStats, spec: GuardChannelSpec, threshold: float = 3.0) -> ComparisonReport:
    if stats.new_offered == 0 and stats.handoff_offered == 0:
        raise InsufficientDataError("simulation offered no traffic")
    ref = blocking_probabilities(spec)
    return ComparisonReport(
        _zcheck(stats.new_blocked, stats.new_offered, stats.se_block, ref.p_block_new, threshold),
        _zcheck(stats.handoff_dropped, stats.handoff_offered, stats.se_drop, ref.p_drop_handoff, threshold),
        threshold,
    )
