"""
CRRA expected-utility layer.

Wealth is the relative ``W_F / W_i`` with ``W_i = 1``. ``u_beta`` at
``beta = 1`` is ``log2 w`` so that it is measured in bits like every other
rate here; this rescales the utility but never moves its argmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .divergence import Dist, DistLike, as_dist, kl_divergence, renyi_divergence
from .kelly import tilted_bet
from .types import (
    DEFAULT_TYPE_CAP,
    ResourceCapError,
    iter_types,
    log2_type_class_probability,
)


@dataclass(frozen=True)
class UtilityParams:
    beta: float

    def __post_init__(self):
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")

    @property
    def alpha(self) -> float:
        return eta_from_beta(self.beta)


def _beta(params) -> float:
    return params.beta if isinstance(params, UtilityParams) else float(params)


def crra_utility(w: float, params) -> float:
    """``(w^(1-beta) - 1)/(1-beta)``, or ``log2 w`` at ``beta = 1``."""
    beta = _beta(params)
    if not w > 0:
        raise ValueError(f"wealth must be positive, got {w}")
    if beta == 1:
        return math.log2(w)
    return math.expm1((1.0 - beta) * math.log(w)) / (1.0 - beta)


def _crra_from_log2(log2_w: float, beta: float) -> float:
    # same as crra_utility(2**log2_w) without overflowing the wealth itself
    if beta == 1:
        return log2_w
    if log2_w == -math.inf:
        return -1.0 / (1.0 - beta) if beta < 1 else -math.inf
    return math.expm1((1.0 - beta) * log2_w * math.log(2.0)) / (1.0 - beta)


def eta_from_beta(beta: float) -> float:
    """Tilt parameter ``1/(1-beta)`` matching the CRRA strategy to the tilted bet."""
    if beta == 1:
        raise ValueError("beta = 1 has no finite tilt; it is the Kelly bet q_a = p")
    return 1.0 / (1.0 - beta)


def crra_optimal_strategy(p: DistLike, q_b: DistLike, beta: float):
    """
    ``Q(x) ∝ p(x)^(1/(1-beta)) O(x)^(beta/(1-beta))`` with odds ``O = 1/q_b``.

    Evaluated in log space; algebraically this is ``tilted_bet`` at
    ``eta = 1/(1-beta)`` but it is computed here from the odds form.
    """
    if beta == 1:
        raise ValueError("beta = 1 is the logarithmic case; bet q_a = p")
    p, q_b = as_dist(p), as_dist(q_b)
    if p.alphabet_size != q_b.alphabet_size:
        raise ValueError("alphabet mismatch")
    mask = (p.probs > 0) & (q_b.probs > 0)
    if not np.any(mask):
        raise ValueError("p and q_b have disjoint supports")
    a = 1.0 / (1.0 - beta)
    log_odds = -np.log(q_b.probs[mask])
    logw = a * np.log(p.probs[mask]) + beta * a * log_odds
    logw -= logw.max()
    w = np.exp(logw)
    out = np.zeros(p.alphabet_size)
    out[mask] = w / math.fsum(w)
    return Dist(out)


def crra_expected_utility_maximizer(p: DistLike, q_b: DistLike, beta: float):
    """
    Letter-wise bet that actually maximizes ``E[u_beta(W)]`` for ``beta > 0``.

    Stationarity of ``sum_x p (q_a/q_b)^(1-beta)`` on the simplex gives the
    tilted bet at ``eta = 1/beta``; for ``0 < beta`` the objective is concave
    in ``q_a`` so the stationary point is the maximum.
    """
    if not beta > 0:
        raise ValueError("for beta <= 0 the expected utility is convex; the maximum is a vertex")
    return tilted_bet(p, q_b, 1.0 / beta)


def expected_log_wealth_closed_form(p: DistLike, q_b: DistLike, alpha: float) -> float:
    """``alpha D(p||q_b) + (1-alpha) D_alpha(p||q_b)`` in bits per round."""
    d = kl_divergence(p, q_b)
    if alpha == 1:
        return d
    d_alpha = renyi_divergence(alpha, p, q_b)
    if math.isinf(d_alpha) or math.isinf(d):
        raise ValueError(f"Rényi sum diverges at alpha={alpha}")
    return alpha * d + (1.0 - alpha) * d_alpha


def expected_log_wealth_direct(p: DistLike, q_a: DistLike, q_b: DistLike) -> float:
    """``D(p||q_b) - D(p||q_a)``; ``-inf`` when ``p`` escapes the support of ``q_a``."""
    d_a = kl_divergence(p, q_a)
    if math.isinf(d_a):
        return -math.inf
    return kl_divergence(p, q_b) - d_a


def expected_utility_estimate(
    p: DistLike,
    q_a: DistLike,
    q_b: DistLike,
    beta: float,
    n: int,
    cap: int = DEFAULT_TYPE_CAP,
) -> float:
    """
    Exact ``E[u_beta(W_n)]`` for ``n`` rounds of a letter-wise bet, summed over
    type classes (all strings of one type share probability and wealth).
    """
    p, q_a, q_b = as_dist(p), as_dist(q_a), as_dist(q_b)
    k = p.alphabet_size
    if k**n > cap:
        raise ResourceCapError(f"k^n = {k**n} strings exceeds the cap of {cap}")
    la = np.full(k, -math.inf)
    lb = np.full(k, -math.inf)
    la[q_a.probs > 0] = np.log2(q_a.probs[q_a.probs > 0])
    lb[q_b.probs > 0] = np.log2(q_b.probs[q_b.probs > 0])
    terms = []
    for t in iter_types(n, k, cap):
        lp = log2_type_class_probability(p, t)
        if lp == -math.inf:
            continue
        c = np.array(t.counts)
        used = c > 0
        if np.any(lb[used] == -math.inf):
            raise ValueError("odds put zero weight on an outcome that can occur")
        log2_w = math.fsum(c[used] * (la[used] - lb[used]))
        terms.append(2.0**lp * _crra_from_log2(log2_w, beta))
    return math.fsum(terms)
