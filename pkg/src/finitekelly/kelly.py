"""
Single-shot and finite-n Kelly analysis.

Conventions
-----------
``eta`` always weights the true distribution: the tilted bet is
``Q_eta ∝ p^eta q_b^(1-eta)``. The geodesic parameter that weights the odds
is ``lam = 1 - eta``; :attr:`RiskRewardPoint.lemma_exponent` reports it.

The constrained optimizers are exact for finite alphabets. Along the tilted
family ``eta -> D(Q_eta||p)`` is decreasing on ``eta < 1`` and increasing on
``eta > 1`` (and likewise around ``eta = 0`` for ``D(Q_eta||q_b)``), so every
branch is solved by bracketing plus Brent's method. Optima that sit on a face
of the simplex are found by repeating the search on every sub-support.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .divergence import (
    Dist,
    DistLike,
    as_dist,
    kl_divergence,
    renyi_divergence,
    tilted_log2_normalizer,
)
from .types import (
    DEFAULT_TYPE_CAP,
    EmpiricalType,
    iter_types,
    log2_string_probability,
    log2_type_class_probability,
)

CONSTRAINT_TOL = 1e-9
FACE_ENUM_LIMIT = 12


class DegenerateTiltError(ValueError):
    """The tilted family has no common support to normalize over."""


class InfeasibleError(ValueError):
    """No strategy (or type) satisfies the requested constraint."""


@dataclass(frozen=True)
class RiskRewardPoint:
    """
    One point of the risk-reward frontier.

    ``reward_bits_per_round`` is D(Q*||q_b) and ``risk_exponent`` is
    D(Q*||p), both in bits. ``eta`` is NaN when the optimum lies on a face of
    the simplex that no member of the full tilted family reaches.
    """

    epsilon: Optional[float]
    eta: float
    strategy: Dist
    reward_bits_per_round: float
    risk_exponent: float
    budget: float
    branch: str
    support: Tuple[int, ...]
    constraint_active: bool = True

    @property
    def lemma_exponent(self) -> float:
        """Exponent carried by q_b, i.e. ``1 - eta``."""
        return 1.0 - self.eta

    @property
    def multiplier(self) -> float:
        """KKT multiplier of the active divergence constraint (``eta/(eta-1)``)."""
        if not self.constraint_active:
            return 0.0
        if self.eta == 1.0:
            return math.inf
        return self.eta / (self.eta - 1.0)


# -- wealth ---------------------------------------------------------------

def wealth_log_ratio(q_a: DistLike, q_b: DistLike, t: EmpiricalType) -> float:
    """
    log2 of the wealth relative after a string of type ``t``:
    ``n (D(lambda||q_b) - D(lambda||q_a))``.
    """
    d_b = kl_divergence(t.freq, q_b)
    d_a = kl_divergence(t.freq, q_a)
    if math.isinf(d_a) and math.isinf(d_b):
        raise ValueError(f"type {t} escapes the support of both bet and odds")
    if math.isinf(d_b):
        return math.inf
    if math.isinf(d_a):
        return -math.inf
    return t.n * (d_b - d_a)


def wealth_log_ratio_direct(q_a: DistLike, q_b: DistLike, t: EmpiricalType) -> float:
    """Same quantity as a difference of per-string allocations."""
    la = log2_string_probability(q_a, t)
    lb = log2_string_probability(q_b, t)
    return la - lb


def asymptotic_kelly_rate(p: DistLike, q_a: DistLike, q_b: DistLike) -> float:
    """Growth rate ``D(p||q_b) - D(p||q_a)`` in bits per round."""
    d_b = kl_divergence(p, q_b)
    d_a = kl_divergence(p, q_a)
    if math.isinf(d_a):
        if math.isinf(d_b):
            raise ValueError("p escapes the support of both bet and odds")
        return -math.inf
    return d_b - d_a


# -- tilted family ---------------------------------------------------------

def _tilt(p: np.ndarray, q: np.ndarray, eta: float) -> np.ndarray:
    """Normalized p^eta q^(1-eta) for strictly positive p, q of equal length."""
    logw = eta * np.log(p) + (1.0 - eta) * np.log(q)
    logw -= logw.max()
    w = np.exp(logw)
    return w / math.fsum(w)


def tilted_bet(p: DistLike, q_b: DistLike, eta: float) -> Dist:
    """
    Geometric mixture ``p^eta q_b^(1-eta) / Z``.

    ``eta = 1`` returns ``p`` and ``eta = 0`` returns ``q_b`` exactly. For
    other values the mixture lives on the common support of ``p`` and ``q_b``.
    """
    p, q_b = as_dist(p), as_dist(q_b)
    if p.alphabet_size != q_b.alphabet_size:
        raise ValueError("alphabet mismatch")
    if not math.isfinite(eta):
        raise ValueError(f"eta must be finite, got {eta}")
    if eta == 1:
        return p
    if eta == 0:
        return q_b
    mask = (p.probs > 0) & (q_b.probs > 0)
    if not np.any(mask):
        raise DegenerateTiltError(
            "p and q_b have disjoint supports; the normalizer Z is zero"
        )
    out = np.zeros(p.alphabet_size)
    out[mask] = _tilt(p.probs[mask], q_b.probs[mask], eta)
    return Dist(out)


def _kl(a: np.ndarray, b: np.ndarray) -> float:
    m = a > 0
    return math.fsum(a[m] * np.log2(a[m] / b[m]))


def _limit_set(p: np.ndarray, q: np.ndarray, upward: bool) -> np.ndarray:
    r = np.log(p) - np.log(q)
    target = r.max() if upward else r.min()
    return np.isclose(r, target, rtol=0, atol=1e-12)


def _solve_branch(p, q, target, measure, upward):
    """
    Find eta on one branch with ``measure(Q_eta) == target``.

    ``measure`` grows with ``|eta - start|`` along the branch, which starts at
    eta=1 (upward) or eta=0 (downward). Returns ``None`` when the target lies
    below the branch start or beyond its limit point.
    """
    start = 1.0 if upward else 0.0
    step = 1.0 if upward else -1.0
    f0 = measure(_tilt(p, q, start))
    if target < f0 - CONSTRAINT_TOL:
        return None
    if target <= f0:
        return start
    lim = _limit_set(p, q, upward)
    q_lim = np.where(lim, p, 0.0)
    q_lim = q_lim / q_lim.sum()
    if target >= measure(q_lim) - CONSTRAINT_TOL:
        return None
    g = lambda eta: measure(_tilt(p, q, eta)) - target
    inner, span = start, 1.0
    while g(start + step * span) < 0:
        inner = start + step * span
        span *= 2.0
        if span > 2.0**200:
            return None
    lo, hi = sorted((inner, start + step * span))
    return brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def _sphere_on_segment(p, v, measure, target):
    """Point on the segment p -> vertex v where ``measure`` equals ``target``."""
    e = np.zeros_like(p)
    e[v] = 1.0
    g = lambda t: measure((1 - t) * p + t * e) - target
    t = brentq(g, 0.0, 1.0, xtol=1e-15, maxiter=500)
    return (1 - t) * p + t * e


def _embed(k, support, local) -> Dist:
    out = np.zeros(k)
    out[list(support)] = local
    return Dist(out / math.fsum(out))


def _faces(support: Tuple[int, ...]):
    if len(support) <= FACE_ENUM_LIMIT:
        for r in range(len(support), 0, -1):
            yield from itertools.combinations(support, r)
    else:
        yield support
        for x in support:
            yield (x,)


def _budget_candidates(pp, qq, d):
    """Yield (Q, eta, branch) candidates maximizing D(Q||q) with D(Q||p) <= d."""
    k = pp.size
    s0 = tuple(int(i) for i in np.flatnonzero(pp > 0))
    for face in _faces(s0):
        idx = list(face)
        p_mass, q_mass = math.fsum(pp[idx]), math.fsum(qq[idx])
        budget = d + math.log2(p_mass)
        if budget < -CONSTRAINT_TOL:
            continue
        if len(face) == 1:
            yield _embed(k, face, [1.0]), math.nan, "vertex"
            continue
        ph, qh = pp[idx] / p_mass, qq[idx] / q_mass
        full = len(face) == len(s0)
        if budget <= CONSTRAINT_TOL:
            yield _embed(k, face, ph), (1.0 if full else math.nan), (
                "kelly" if full else "face"
            )
            continue
        risk = lambda Q, ph=ph: _kl(Q, ph)
        if np.allclose(ph, qh, rtol=0, atol=1e-15):
            v = int(np.argmin(ph))
            if budget < -math.log2(ph[v]):
                Q = _sphere_on_segment(ph, v, risk, budget)
                yield _embed(k, face, Q), math.nan, "face"
            continue
        for upward in (True, False):
            eta = _solve_branch(ph, qh, budget, risk, upward)
            if eta is not None:
                Q = _tilt(ph, qh, eta)
                yield _embed(k, face, Q), (eta if full else math.nan), (
                    "up" if upward else "down"
                )


def _risk_budget(epsilon: float, n: int) -> float:
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    if n < 1:
        raise ValueError("n must be a positive integer")
    return -math.log2(epsilon) / n


def solve_max_reward(p: DistLike, q_b: DistLike, d: float) -> RiskRewardPoint:
    """
    Maximize ``D(Q||q_b)`` over the simplex subject to ``D(Q||p) <= d``.

    The optimum is either a vertex or a point of the divergence sphere on
    some face, where it is a tilted bet with ``eta >= 1`` or ``eta <= 0``.
    """
    p, q_b = as_dist(p), as_dist(q_b)
    if p.alphabet_size != q_b.alphabet_size:
        raise ValueError("alphabet mismatch")
    if d < 0 or math.isnan(d):
        raise ValueError(f"risk budget must be >= 0, got {d}")
    kelly_reward = kl_divergence(p, q_b)
    s0 = tuple(sorted(p.support))
    if math.isinf(kelly_reward):
        return RiskRewardPoint(None, 1.0, p, math.inf, 0.0, d, "kelly", s0, False)
    best = None
    for Q, eta, branch in _budget_candidates(p.probs, q_b.probs, d):
        reward = kl_divergence(Q, q_b)
        if best is None or reward > best[0] + 1e-13:
            best = (reward, Q, eta, branch)
    reward, Q, eta, branch = best
    risk = kl_divergence(Q, p)
    return RiskRewardPoint(
        epsilon=None,
        eta=eta,
        strategy=Q,
        reward_bits_per_round=reward,
        risk_exponent=risk,
        budget=d,
        branch=branch,
        support=tuple(sorted(Q.support)),
        constraint_active=abs(risk - d) <= 1e-8,
    )


def solve_risk_constrained(
    p: DistLike, q_b: DistLike, epsilon: float, n: int
) -> RiskRewardPoint:
    """
    Best guaranteed growth for a bet that must succeed with probability
    at least ``epsilon`` after ``n`` rounds.

    The success constraint ``2^{-n D(Q||p)} >= epsilon`` becomes the budget
    ``D(Q||p) <= -log2(epsilon)/n``; see :func:`solve_max_reward`.
    """
    point = solve_max_reward(p, q_b, _risk_budget(epsilon, n))
    return _with_epsilon(point, epsilon)


def _with_epsilon(point: RiskRewardPoint, epsilon) -> RiskRewardPoint:
    return RiskRewardPoint(
        epsilon,
        point.eta,
        point.strategy,
        point.reward_bits_per_round,
        point.risk_exponent,
        point.budget,
        point.branch,
        point.support,
        point.constraint_active,
    )


def solve_payoff_constrained(p: DistLike, q_b: DistLike, k_bits: float) -> RiskRewardPoint:
    """
    Minimize ``D(Q||p)`` subject to ``D(Q||q_b) >= k_bits``.

    Returns ``p`` itself (multiplier 0) while ``k_bits <= D(p||q_b)``. Raises
    :class:`InfeasibleError` when no distribution of finite risk reaches the
    target.
    """
    p, q_b = as_dist(p), as_dist(q_b)
    if p.alphabet_size != q_b.alphabet_size:
        raise ValueError("alphabet mismatch")
    if not k_bits >= 0:
        raise ValueError(f"payoff target must be >= 0, got {k_bits}")
    s0 = tuple(sorted(p.support))
    kelly_reward = kl_divergence(p, q_b)
    if kelly_reward >= k_bits:
        active = abs(kelly_reward - k_bits) <= CONSTRAINT_TOL and k_bits > 0
        return RiskRewardPoint(None, 1.0, p, kelly_reward, 0.0, k_bits, "kelly", s0, active)

    pp, qq = p.probs, q_b.probs
    sup_all = max(-math.log2(x) if x > 0 else math.inf for x in qq)
    if k_bits > sup_all + CONSTRAINT_TOL:
        raise InfeasibleError(
            f"target {k_bits} bits exceeds the largest attainable D(Q||q_b) = {sup_all}"
        )
    k = pp.size
    best = None
    for face in _faces(s0):
        idx = list(face)
        p_mass, q_mass = math.fsum(pp[idx]), math.fsum(qq[idx])
        target = k_bits + math.log2(q_mass)
        cands = []
        if len(face) == 1:
            if target <= CONSTRAINT_TOL:
                cands.append((_embed(k, face, [1.0]), math.nan, "vertex"))
        else:
            ph, qh = pp[idx] / p_mass, qq[idx] / q_mass
            full = len(face) == len(s0)
            reward = lambda Q, qh=qh: _kl(Q, qh)
            if reward(ph) >= target:
                cands.append((_embed(k, face, ph), math.nan, "face"))
            elif np.allclose(ph, qh, rtol=0, atol=1e-15):
                v = int(np.argmin(qh))
                if target < -math.log2(qh[v]):
                    Q = _sphere_on_segment(ph, v, reward, target)
                    cands.append((_embed(k, face, Q), math.nan, "face"))
            else:
                for upward in (True, False):
                    eta = _solve_branch(ph, qh, target, reward, upward)
                    if eta is not None:
                        cands.append(
                            (
                                _embed(k, face, _tilt(ph, qh, eta)),
                                eta if full else math.nan,
                                "up" if upward else "down",
                            )
                        )
        for Q, eta, branch in cands:
            risk = kl_divergence(Q, p)
            if best is None or risk < best[0] - 1e-13:
                best = (risk, Q, eta, branch)
    if best is None:
        raise InfeasibleError(
            f"target {k_bits} bits is reachable only by leaving the support of p"
        )
    risk, Q, eta, branch = best
    return RiskRewardPoint(
        None, eta, Q, kl_divergence(Q, q_b), risk, k_bits, branch,
        tuple(sorted(Q.support)), True,
    )


# -- discrete single-type optimum -------------------------------------------

def best_type_under_risk(
    p: DistLike,
    q_b: DistLike,
    n: int,
    epsilon: float,
    cap: int = DEFAULT_TYPE_CAP,
) -> Tuple[EmpiricalType, float]:
    """
    Exact discrete optimum: the type with exact class probability at least
    ``epsilon`` that maximizes ``D(lambda||q_b)`` (bits per round).

    Ties go to the lexicographically smallest count vector.
    """
    p, q_b = as_dist(p), as_dist(q_b)
    _risk_budget(epsilon, n)
    log2_eps = math.log2(epsilon)
    best_t, best_r = None, -math.inf
    for t in iter_types(n, p.alphabet_size, cap):
        if log2_type_class_probability(p, t) < log2_eps:
            continue
        r = kl_divergence(t.freq, q_b)
        if best_t is None or r > best_r + 1e-12:
            best_t, best_r = t, r
    if best_t is None:
        raise InfeasibleError(
            f"no single type of length {n} has probability >= {epsilon}"
        )
    return best_t, best_r


# -- identities and the frontier bound ------------------------------------

@dataclass(frozen=True)
class IdentityCheck:
    geodesic_lhs: float
    geodesic_rhs: float
    reward_lhs: float
    reward_rhs: float


def reward_identity_check(p: DistLike, q_b: DistLike, lam: float, tol: float = 1e-10) -> IdentityCheck:
    """
    Evaluate both geodesic identities at ``R ∝ p^(1-lam) q_b^lam``.

    * ``(1-lam) D(R||p) + lam D(R||q_b) = (1-lam) D_lam(q_b||p)``
    * ``D(R||q_b) = D_eta(p||q_b) - eta/(1-eta) D(R||p)`` with ``eta = 1 - lam``

    Raises ``AssertionError`` if either side pair differs by more than
    ``tol`` (scaled by the magnitude of the terms).
    """
    if not 0 < lam < 1:
        raise ValueError(f"lam must lie in (0, 1), got {lam}")
    eta = 1.0 - lam
    R = tilted_bet(p, q_b, eta)
    d_rp, d_rq = kl_divergence(R, p), kl_divergence(R, q_b)
    g_lhs = (1 - lam) * d_rp + lam * d_rq
    g_rhs = (1 - lam) * renyi_divergence(lam, q_b, p)
    r_lhs = d_rq
    r_rhs = renyi_divergence(eta, p, q_b) - eta / (1 - eta) * d_rp
    for a, b in ((g_lhs, g_rhs), (r_lhs, r_rhs)):
        scale = max(1.0, abs(a), abs(b))
        assert abs(a - b) <= tol * scale, f"identity violated: {a!r} vs {b!r}"
    return IdentityCheck(g_lhs, g_rhs, r_lhs, r_rhs)


def frontier_bound(p: DistLike, q_b: DistLike, point: RiskRewardPoint, n: int) -> float:
    """
    ``log2 Z(eta)/(eta-1) + eta/(1-eta) * log2(epsilon)/n`` at the solver's eta,
    where ``Z(eta) = sum p^eta q_b^(1-eta)``; this is D_eta(p||q_b) for eta > 0.

    Only defined when the optimum is a member of the tilted family on the
    support of ``p``.
    """
    eta = point.eta
    if math.isnan(eta):
        raise ValueError(
            f"optimum lies on a face ({point.branch}); no single-multiplier bound"
        )
    if eta == 1.0:
        return kl_divergence(p, q_b)
    if eta > 0:
        base = renyi_divergence(eta, p, q_b)
    else:
        # unsigned form; the signed negative-order divergence would flip it
        base = tilted_log2_normalizer(p, q_b, eta) / (eta - 1.0)
    return base + eta / (1 - eta) * math.log2(point.epsilon) / n


def risk_reward_bound(p: DistLike, q_b: DistLike, epsilon: float, n: int) -> float:
    """
    Lower bound on the guaranteed growth rate at success probability
    ``epsilon``; asserted to not exceed the achieved reward.
    """
    point = solve_risk_constrained(p, q_b, epsilon, n)
    bound = frontier_bound(p, q_b, point, n)
    assert bound <= point.reward_bits_per_round + 1e-10, (
        f"bound {bound} exceeds achieved reward {point.reward_bits_per_round}"
    )
    return bound


def frontier(p: DistLike, q_b: DistLike, n: int, epsilons) -> List[dict]:
    """Frontier rows (epsilon, eta, reward, risk, bound) for a grid of epsilons."""
    rows = []
    for eps in epsilons:
        pt = solve_risk_constrained(p, q_b, float(eps), n)
        try:
            bound = frontier_bound(p, q_b, pt, n)
        except ValueError:
            bound = math.nan
        rows.append(
            dict(
                epsilon=float(eps),
                eta=pt.eta,
                reward_bits=pt.reward_bits_per_round,
                risk_exponent=pt.risk_exponent,
                bound_bits=bound,
            )
        )
    return rows
