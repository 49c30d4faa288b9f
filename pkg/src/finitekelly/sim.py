"""
Seeded Monte Carlo engine for the betting games.

Every trial draws from its own Philox stream keyed by ``(seed, trial)``
through ``SeedSequence(seed, spawn_key=(trial,))``, so results do not depend
on how trials are scheduled over threads. Streams are reproducible for a
fixed numpy bit-generator version (Philox4x64-10, numpy >= 1.17).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .divergence import DistLike, as_dist
from .kelly import wealth_log_ratio
from .sideinfo import CondStrategy, TripartiteDist
from .types import DEFAULT_TYPE_CAP, EmpiricalType, iter_types, log2_type_class_probability


def trial_generator(seed: int, trial: int = 0) -> np.random.Generator:
    """Independent Philox stream for one trial of a seeded run."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial),))
    return np.random.Generator(np.random.Philox(ss))


def _draw(rng: np.random.Generator, probs: np.ndarray, n: int) -> np.ndarray:
    # inverse-CDF on uniforms; deterministic given the stream
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    # zero-probability tail letters can never be hit
    return np.minimum(idx, np.flatnonzero(probs > 0)[-1])


def sample_iid(p: DistLike, n: int, seed: int, trial: int = 0) -> np.ndarray:
    """``n`` i.i.d. symbols from ``p``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = as_dist(p)
    return _draw(trial_generator(seed, trial), np.array(p.probs), n)


def sample_tripartite(p: TripartiteDist, n: int, seed: int, trial: int = 0):
    """Joint i.i.d. draws ``(x, y, z)`` from a tripartite pmf."""
    if n < 1:
        raise ValueError("n must be >= 1")
    flat = _draw(trial_generator(seed, trial), p.probs.ravel().copy(), n)
    x, y, z = np.unravel_index(flat, p.sizes)
    return x, y, z


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return int(threads)


def _map_trials(fn: Callable[[int], object], trials: int, threads: Optional[int]) -> list:
    threads = resolve_threads(threads)
    if threads == 1 or trials <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map preserves trial order regardless of completion order
        return list(pool.map(fn, range(trials)))


@dataclass
class WealthLedger:
    """Per-round log2 wealth of one trial (initial wealth normalized to 1)."""

    n_rounds: int
    log2_wealth_trajectory: np.ndarray
    realized_type: EmpiricalType
    seed: int
    trial: int = 0

    def __post_init__(self):
        if len(self.log2_wealth_trajectory) != self.n_rounds:
            raise ValueError("trajectory length must equal the number of rounds")

    @property
    def final(self) -> float:
        return float(self.log2_wealth_trajectory[-1])

    def check(self, q_a, q_b, tol: float = 1e-9) -> None:
        """Re-derive the final entry from the realized type."""
        ref = wealth_log_ratio(q_a, q_b, self.realized_type)
        fin = self.final
        if math.isinf(ref) or math.isinf(fin):
            ok = ref == fin
        else:
            ok = abs(ref - fin) <= tol * max(1.0, abs(ref))
        if not ok:
            raise AssertionError(f"ledger final {fin} disagrees with type-based {ref}")


@dataclass
class BettingStats:
    """
    Summary of ``(1/n) log2 W_F`` over trials.

    Ruined trials (a realized outcome with zero stake) have rate ``-inf``;
    they are counted in ``ruin_count`` and excluded from ``mean_rate`` and
    ``std_rate``.
    """

    n: int
    trials: int
    seed: int
    rates: np.ndarray
    ruin_count: int
    ledgers: Optional[List[WealthLedger]] = field(default=None, repr=False)

    @property
    def finite_rates(self) -> np.ndarray:
        return self.rates[np.isfinite(self.rates)]

    @property
    def mean_rate(self) -> float:
        r = self.finite_rates
        return math.fsum(r) / len(r) if len(r) else math.nan

    @property
    def std_rate(self) -> float:
        r = self.finite_rates
        return float(np.std(r, ddof=1)) if len(r) > 1 else math.nan

    @property
    def stderr(self) -> float:
        """Standard error of ``mean_rate`` (plug-in, from the trial spread)."""
        r = self.finite_rates
        return self.std_rate / math.sqrt(len(r)) if len(r) > 1 else math.nan

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        return abs(self.mean_rate - target) <= sigmas * self.stderr

    def summary(self) -> dict:
        return dict(
            n=self.n,
            trials=self.trials,
            seed=self.seed,
            mean_rate_bits=self.mean_rate,
            std_rate_bits=self.std_rate,
            stderr_bits=self.stderr,
            ruin_count=self.ruin_count,
        )


def _log2_ratios(q_a, q_b):
    q_a, q_b = as_dist(q_a), as_dist(q_b)
    if q_a.alphabet_size != q_b.alphabet_size:
        raise ValueError("alphabet mismatch")
    with np.errstate(divide="ignore"):
        return np.log2(q_a.probs), np.log2(q_b.probs)


def _log2_wealth_from_counts(counts, la, lb) -> float:
    used = np.asarray(counts) > 0
    if np.any(la[used] == -math.inf):
        return -math.inf
    if np.any(lb[used] == -math.inf):
        return math.inf
    c = np.asarray(counts)[used]
    return math.fsum(c * la[used]) - math.fsum(c * lb[used])


def run_betting(
    p: DistLike,
    q_a: DistLike,
    q_b: DistLike,
    n: int,
    trials: int,
    seed: int,
    keep_ledgers: bool = False,
    threads: Optional[int] = 1,
) -> BettingStats:
    """
    Simulate ``trials`` independent runs of ``n`` reinvested rounds.

    Alice stakes ``q_a`` and the bookmaker pays ``1/q_b``, so each round adds
    ``log2(q_a(x)/q_b(x))`` bits of log wealth.
    """
    if n < 1 or trials < 1:
        raise ValueError("need n >= 1 and trials >= 1")
    p = as_dist(p)
    la, lb = _log2_ratios(q_a, q_b)
    k = p.alphabet_size
    if la.size != k:
        raise ValueError("alphabet mismatch")

    def one(trial):
        xs = sample_iid(p, n, seed, trial)
        counts = np.bincount(xs, minlength=k)
        final = _log2_wealth_from_counts(counts, la, lb)
        ledger = None
        if keep_ledgers:
            with np.errstate(invalid="ignore"):
                inc = la[xs] - lb[xs]
            traj = np.cumsum(inc)
            # keep the ledger consistent with the count-based total
            traj[-1] = final
            ledger = WealthLedger(n, traj, EmpiricalType(tuple(int(c) for c in counts)), seed, trial)
        return final / n, ledger

    out = _map_trials(one, trials, threads)
    rates = np.array([r for r, _ in out])
    ledgers = [l for _, l in out] if keep_ledgers else None
    ruin = int(np.sum(rates == -math.inf))
    return BettingStats(n, trials, seed, rates, ruin, ledgers)


def empirical_success_rate(
    p: DistLike,
    q_a: DistLike,
    q_b: DistLike,
    n: int,
    target_rate: float,
    trials: int,
    seed: int,
    threads: Optional[int] = 1,
) -> float:
    """Fraction of trials with ``(1/n) log2 W_F >= target_rate``."""
    stats = run_betting(p, q_a, q_b, n, trials, seed, threads=threads)
    return float(np.mean(stats.rates >= target_rate))


def exact_success_probability(
    p: DistLike,
    q_a: DistLike,
    q_b: DistLike,
    n: int,
    target_rate: float,
    cap: int = DEFAULT_TYPE_CAP,
) -> float:
    """Sum of exact type-class probabilities over the types reaching the target."""
    p = as_dist(p)
    la, lb = _log2_ratios(q_a, q_b)
    terms = []
    for t in iter_types(n, p.alphabet_size, cap):
        lp = log2_type_class_probability(p, t)
        if lp == -math.inf:
            continue
        if _log2_wealth_from_counts(t.counts, la, lb) / n >= target_rate:
            terms.append(2.0**lp)
    return min(1.0, math.fsum(terms))


def binomial_band(p: float, n: int, sigmas: float = 3.0):
    """``(lo, hi)`` band for an empirical frequency of ``n`` Bernoulli(p) draws."""
    half = sigmas * math.sqrt(p * (1 - p) / n)
    return p - half, p + half


def run_sideinfo(
    p: TripartiteDist,
    q_a: CondStrategy,
    q_b: CondStrategy,
    n: int,
    trials: int,
    seed: int,
    threads: Optional[int] = 1,
) -> BettingStats:
    """Per-round payoff ``(1/n) log2 prod Q^A(z|x)/Q^B(z|y)`` over trials."""
    if n < 1 or trials < 1:
        raise ValueError("need n >= 1 and trials >= 1")
    with np.errstate(divide="ignore"):
        la, lb = np.log2(q_a.matrix), np.log2(q_b.matrix)
    kx, ky, kz = p.sizes

    def one(trial):
        x, y, z = sample_tripartite(p, n, seed, trial)
        a, b = la[x, z], lb[y, z]
        if np.any(a == -math.inf):
            return -math.inf
        if np.any(b == -math.inf):
            return math.inf
        return (math.fsum(a) - math.fsum(b)) / n

    rates = np.array(_map_trials(one, trials, threads))
    return BettingStats(n, trials, seed, rates, int(np.sum(rates == -math.inf)))
