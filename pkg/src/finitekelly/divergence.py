"""
Information measures over finite distributions.

Every quantity is in bits. ``+inf`` is a legitimate return value (support
mismatch), never an error.
"""

from __future__ import annotations

import math
from typing import Iterable, Union

import numpy as np

SUM_TOL = 1e-12
LN2 = math.log(2.0)


class Dist:
    """
    Probability mass function over ``{0, ..., k-1}``.

    The probability vector is stored as a read-only float64 array. Construction
    validates non-negativity and normalization (absolute tolerance 1e-12); it
    does not renormalize.
    """

    __slots__ = ("probs",)

    def __init__(self, probs: Iterable[float], tol: float = SUM_TOL):
        arr = np.array(probs, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("distribution needs at least one symbol")
        if not np.all(np.isfinite(arr)):
            raise ValueError("probabilities must be finite")
        if np.any(arr < 0):
            raise ValueError(f"negative probability in {arr.tolist()}")
        total = math.fsum(arr)
        if abs(total - 1.0) > tol:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Dist is immutable")

    @classmethod
    def normalized(cls, weights: Iterable[float]) -> "Dist":
        w = np.array(weights, dtype=float).ravel()
        total = math.fsum(w)
        if not total > 0:
            raise ValueError("weights must have positive total mass")
        return cls(w / total)

    @classmethod
    def uniform(cls, k: int) -> "Dist":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point_mass(cls, k: int, x: int) -> "Dist":
        arr = np.zeros(k)
        arr[x] = 1.0
        return cls(arr)

    @property
    def alphabet_size(self) -> int:
        return int(self.probs.size)

    @property
    def support(self) -> frozenset:
        return frozenset(int(i) for i in np.flatnonzero(self.probs > 0))

    def __len__(self):
        return self.alphabet_size

    def __getitem__(self, x):
        return self.probs[x]

    def __iter__(self):
        return iter(self.probs.tolist())

    def __eq__(self, other):
        if not isinstance(other, Dist):
            return NotImplemented
        return self.alphabet_size == other.alphabet_size and bool(
            np.array_equal(self.probs, other.probs)
        )

    def __hash__(self):
        return hash(self.probs.tobytes())

    def allclose(self, other, atol: float = 1e-12) -> bool:
        other = as_dist(other)
        return self.alphabet_size == other.alphabet_size and bool(
            np.allclose(self.probs, other.probs, rtol=0, atol=atol)
        )

    def tolist(self) -> list:
        return self.probs.tolist()

    def __repr__(self):
        return f"Dist({self.probs.tolist()})"


DistLike = Union[Dist, Iterable[float]]


def as_dist(p: DistLike) -> Dist:
    return p if isinstance(p, Dist) else Dist(p)


def _pair(p: DistLike, q: DistLike):
    p, q = as_dist(p), as_dist(q)
    if p.alphabet_size != q.alphabet_size:
        raise ValueError(
            f"alphabet mismatch: {p.alphabet_size} vs {q.alphabet_size}"
        )
    return p.probs, q.probs


def _log2_sum_exp2(exponents: np.ndarray) -> float:
    """log2(sum 2**e) with max-shift and compensated summation."""
    m = float(np.max(exponents))
    if m == -math.inf:
        return -math.inf
    return m + math.log2(math.fsum(np.exp2(exponents - m)))


def shannon_entropy(p: DistLike) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    probs = as_dist(p).probs
    s = probs[probs > 0]
    h = -math.fsum(s * np.log2(s))
    return max(h, 0.0)


def entropy_of_weights(w: np.ndarray) -> float:
    """Entropy of a non-negative array normalized by its own total mass."""
    w = np.asarray(w, dtype=float).ravel()
    total = math.fsum(w)
    s = w[w > 0] / total
    return max(-math.fsum(s * np.log2(s)), 0.0)


def kl_divergence(p: DistLike, q: DistLike) -> float:
    """
    Relative entropy D(p||q) in bits.

    Returns ``inf`` exactly when the support of ``p`` is not contained in the
    support of ``q``.
    """
    pp, qq = _pair(p, q)
    mask = pp > 0
    if np.any(qq[mask] == 0):
        return math.inf
    a, b = pp[mask], qq[mask]
    with np.errstate(over="ignore"):
        r = np.log2(a / b)
    # subnormal q can overflow the ratio; the log difference is still finite
    bad = ~np.isfinite(r)
    r[bad] = np.log2(a[bad]) - np.log2(b[bad])
    return math.fsum(a * r)


def renyi_divergence(alpha: float, p: DistLike, q: DistLike) -> float:
    """
    Rényi divergence of order ``alpha`` in bits.

    Parameters
    ----------
    alpha : float
        Any real order, or ``math.inf``. ``alpha == 1`` is the relative
        entropy; ``0`` and ``inf`` are the usual limits.
    p, q : Dist or array-like
        Distributions on the same alphabet.

    Notes
    -----
    For finite ``alpha`` not in {0, 1}::

        D_alpha = sgn(alpha) / (alpha - 1) * log2 sum_x p^alpha q^(1-alpha)

    For ``alpha > 0`` symbols outside the support of ``p`` contribute nothing.
    Negative orders are supported but carry the sign factor.
    """
    pp, qq = _pair(p, q)
    if math.isnan(alpha):
        raise ValueError("alpha is NaN")
    if alpha == 1:
        return kl_divergence(p, q)
    if alpha == math.inf:
        mask = pp > 0
        if np.any(qq[mask] == 0):
            return math.inf
        return float(np.max(np.log2(pp[mask]) - np.log2(qq[mask])))
    if alpha == -math.inf:
        raise ValueError("alpha = -inf is not supported")
    if alpha == 0:
        mass = math.fsum(qq[pp > 0])
        return math.inf if mass == 0 else max(-math.log2(mass), 0.0)

    if alpha > 0:
        mask = pp > 0
        if alpha > 1 and np.any(qq[mask] == 0):
            return math.inf
        mask &= qq > 0
    else:
        if np.any((pp == 0) & (qq > 0)):
            return math.inf
        mask = (pp > 0) & (qq > 0)
    if not np.any(mask):
        # empty overlap: log2(0) = -inf, sign factor makes it +inf for 0<alpha<1
        return math.inf
    a, b = pp[mask], qq[mask]
    sign = 1.0 if alpha > 0 else -1.0
    expo = (1.0 - alpha) * (np.log(b) - np.log(a))
    if alpha > 0 and float(np.max(expo)) < 30.0:
        # s - 1 = sum p((q/p)^(1-alpha) - 1) keeps precision near alpha = 1
        s_minus_1 = math.fsum(a * np.expm1(expo)) - math.fsum(pp[pp > 0][qq[pp > 0] == 0])
        if s_minus_1 <= -1.0:
            return math.inf
        log2_s = math.log1p(s_minus_1) / LN2
    else:
        log2_s = _log2_sum_exp2(alpha * np.log2(a) + (1.0 - alpha) * np.log2(b))
    return sign * log2_s / (alpha - 1.0)


def tilted_log2_normalizer(p: DistLike, q: DistLike, eta: float) -> float:
    """log2 of sum_x p^eta q^(1-eta) over the common support."""
    pp, qq = _pair(p, q)
    mask = (pp > 0) & (qq > 0)
    if not np.any(mask):
        return -math.inf
    return _log2_sum_exp2(eta * np.log2(pp[mask]) + (1.0 - eta) * np.log2(qq[mask]))


def cross_entropy(p: DistLike, q: DistLike) -> float:
    """-sum p log2 q; ``inf`` on support escape."""
    return shannon_entropy(p) + kl_divergence(p, q)


# -- joint-array helpers ---------------------------------------------------

def mutual_information(joint: np.ndarray) -> float:
    """I(A:B) for a 2-D joint pmf, as H(A) + H(B) - H(AB)."""
    joint = np.asarray(joint, dtype=float)
    return max(
        entropy_of_weights(joint.sum(axis=1))
        + entropy_of_weights(joint.sum(axis=0))
        - entropy_of_weights(joint),
        0.0,
    )


def mutual_information_direct(joint: np.ndarray) -> float:
    """I(A:B) as sum P(a,b) log P(a,b)/(P(a)P(b)); an independent route."""
    joint = np.asarray(joint, dtype=float)
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    ratio = joint / (pa * pb)
    return math.fsum(joint[mask] * np.log2(ratio[mask]))


def conditional_entropy(joint: np.ndarray) -> float:
    """H(B|A) for a 2-D joint pmf indexed [a, b]."""
    joint = np.asarray(joint, dtype=float)
    return entropy_of_weights(joint) - entropy_of_weights(joint.sum(axis=1))
