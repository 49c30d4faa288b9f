"""
Method-of-types machinery: empirical types, exact type-class sizes and
probabilities, and per-string allocations.

Sizes are exact Python integers. Probabilities are evaluated through their
base-2 exponents so that ``2**(-n (H + D))`` stays finite for long strings;
the ``log2_*`` companions return the exponent itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .divergence import (
    Dist,
    DistLike,
    as_dist,
    entropy_of_weights,
    kl_divergence,
    shannon_entropy,
)

DEFAULT_TYPE_CAP = 10**7


class ResourceCapError(RuntimeError):
    """Raised when an exhaustive enumeration would exceed its configured cap."""


@dataclass(frozen=True)
class EmpiricalType:
    """Integer count vector of a length-n string over a k-letter alphabet."""

    counts: Tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts:
            raise ValueError("empty count vector")
        if any(c < 0 for c in counts):
            raise ValueError(f"negative count in {counts}")
        if sum(counts) < 1:
            raise ValueError("a type needs n >= 1")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def k(self) -> int:
        return len(self.counts)

    @cached_property
    def freq(self) -> Dist:
        n = self.n
        return Dist([c / n for c in self.counts])

    @property
    def entropy(self) -> float:
        return shannon_entropy(self.freq)

    def __repr__(self):
        return f"EmpiricalType{self.counts}"


class JointEmpiricalType:
    """
    Joint type over a product alphabet: an integer array of counts summing to n.

    Axis order follows the caller (``[x, z]`` for two variables,
    ``[x, y, z]`` for the tripartite game).
    """

    def __init__(self, counts):
        arr = np.array(counts)
        if arr.size == 0 or arr.ndim < 1:
            raise ValueError("empty joint count array")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.round(arr)):
                raise ValueError("joint counts must be integers")
            arr = np.round(arr)
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise ValueError("negative joint count")
        if int(arr.sum()) < 1:
            raise ValueError("a joint type needs n >= 1")
        arr.setflags(write=False)
        self.counts = arr

    @classmethod
    def from_sequences(cls, *seqs: Sequence[int], sizes: Sequence[int]):
        if len(seqs) != len(sizes):
            raise ValueError("one alphabet size per sequence")
        lengths = {len(s) for s in seqs}
        if len(lengths) != 1:
            raise ValueError("sequences must have equal length")
        counts = np.zeros(tuple(sizes), dtype=np.int64)
        idx = []
        for s, size in zip(seqs, sizes):
            a = np.asarray(s, dtype=np.int64)
            if a.size and (a.min() < 0 or a.max() >= size):
                raise ValueError("symbol out of range")
            idx.append(a)
        np.add.at(counts, tuple(idx), 1)
        return cls(counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.counts.shape)

    @property
    def freq(self) -> np.ndarray:
        return self.counts / self.n

    def marginal(self, axes: Sequence[int]) -> "JointEmpiricalType":
        """Joint type of the listed axes, in the listed order."""
        axes = list(axes)
        drop = tuple(a for a in range(self.counts.ndim) if a not in axes)
        kept = self.counts.sum(axis=drop) if drop else self.counts
        remaining = [a for a in range(self.counts.ndim) if a in axes]
        order = [remaining.index(a) for a in axes]
        return JointEmpiricalType(np.transpose(kept, order))

    def as_type(self) -> EmpiricalType:
        """Flatten (row-major) to a plain empirical type."""
        return EmpiricalType(tuple(int(c) for c in self.counts.ravel()))

    def entropy(self) -> float:
        return entropy_of_weights(self.counts)

    def __eq__(self, other):
        if not isinstance(other, JointEmpiricalType):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.counts, other.counts))

    def __repr__(self):
        return f"JointEmpiricalType({self.counts.tolist()})"


def count_types(n: int, k: int) -> int:
    return math.comb(n + k - 1, k - 1)


def _compositions(n: int, k: int) -> Iterator[Tuple[int, ...]]:
    # lexicographic on the count vector
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def iter_types(n: int, k: int, cap: int = DEFAULT_TYPE_CAP) -> Iterator[EmpiricalType]:
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    total = count_types(n, k)
    if total > cap:
        raise ResourceCapError(
            f"{total} types for n={n}, k={k} exceeds the cap of {cap}"
        )
    for c in _compositions(n, k):
        yield EmpiricalType(c)


def enumerate_types(n: int, k: int, cap: int = DEFAULT_TYPE_CAP) -> List[EmpiricalType]:
    """All C(n+k-1, k-1) types of length-n strings over k letters, lexicographic."""
    return list(iter_types(n, k, cap))


def type_of_sequence(seq: Sequence[int], k: int) -> EmpiricalType:
    if len(seq) == 0:
        raise ValueError("empty sequence has no type")
    counts = [0] * k
    for s in seq:
        s = int(s)
        if not 0 <= s < k:
            raise ValueError(f"symbol {s} outside alphabet of size {k}")
        counts[s] += 1
    return EmpiricalType(tuple(counts))


def type_class_size(t: EmpiricalType) -> int:
    """Exact multinomial n! / prod(N_x!)."""
    size = 1
    remaining = t.n
    for c in t.counts:
        size *= math.comb(remaining, c)
        remaining -= c
    return size


def type_size_bounds_check(t: EmpiricalType) -> Tuple[float, int, float]:
    """
    Return ``(lower, |class|, upper)`` with ``lower = (n+1)^-k 2^{nH}`` and
    ``upper = 2^{nH}``; raises ``AssertionError`` if the sandwich fails.
    """
    n, k = t.n, t.k
    nh = n * t.entropy
    size = type_class_size(t)
    log2_size = math.log2(size)
    log2_lower = nh - k * math.log2(n + 1)
    # compare in the exponent; tolerance covers rounding of nH only
    if not (log2_lower <= log2_size + 1e-9 and log2_size <= nh + 1e-9):
        raise AssertionError(f"type-size sandwich violated for {t}")
    return 2.0**log2_lower, size, 2.0**nh


def _check_alphabet(p: Dist, t: EmpiricalType):
    if p.alphabet_size != t.k:
        raise ValueError(f"alphabet mismatch: dist has {p.alphabet_size}, type has {t.k}")


def log2_string_probability(q: DistLike, t: EmpiricalType) -> float:
    """-n (H(lambda) + D(lambda||q)); ``-inf`` if the type leaves supp(q)."""
    q = as_dist(q)
    _check_alphabet(q, t)
    d = kl_divergence(t.freq, q)
    if math.isinf(d):
        return -math.inf
    return -t.n * (t.entropy + d)


def sequence_probability(p: DistLike, t: EmpiricalType) -> float:
    """Probability of any single string of type ``t`` under i.i.d. ``p``."""
    return 2.0 ** log2_string_probability(p, t)


def string_allocation(q: DistLike, t: EmpiricalType) -> float:
    """Fraction of wealth a letter-wise bet ``q`` places on one string of type ``t``."""
    return 2.0 ** log2_string_probability(q, t)


def log2_type_class_probability(p: DistLike, t: EmpiricalType) -> float:
    lp = log2_string_probability(p, t)
    if lp == -math.inf:
        return lp
    return math.log2(type_class_size(t)) + lp


def type_class_probability_exact(p: DistLike, t: EmpiricalType) -> float:
    return 2.0 ** log2_type_class_probability(p, t)


def type_class_probability_ld(p: DistLike, t: EmpiricalType) -> float:
    """
    Large-deviation exponent ``-n D(lambda||p)`` in bits.

    This is the estimate up to sub-exponential factors, not the exact value;
    the exact log-probability lies within ``k log2(n+1)`` below it.
    """
    p = as_dist(p)
    _check_alphabet(p, t)
    d = kl_divergence(t.freq, p)
    return -math.inf if math.isinf(d) else -t.n * d


def log2_conditional_sequence_probability(p_cond, jt: JointEmpiricalType) -> float:
    """
    Exponent of P(z^n | x^n) for a joint type over (X, Z).

    ``p_cond`` is a row-stochastic matrix (or ``CondStrategy``) with
    ``p_cond[x, z] = P(z|x)``.
    """
    w = _cond_matrix(p_cond)
    if jt.counts.ndim != 2 or jt.shape != w.shape:
        raise ValueError(f"joint type shape {jt.shape} does not match channel {w.shape}")
    n = jt.n
    lam_xz = jt.freq
    lam_x = lam_xz.sum(axis=1)
    W = lam_x[:, None] * w
    mask = lam_xz > 0
    if np.any(W[mask] == 0):
        return -math.inf
    d = math.fsum(lam_xz[mask] * np.log2(lam_xz[mask] / W[mask]))
    h_cond = entropy_of_weights(lam_xz) - entropy_of_weights(lam_x)
    return -n * (h_cond + d)


def conditional_sequence_probability(p_cond, jt: JointEmpiricalType) -> float:
    return 2.0 ** log2_conditional_sequence_probability(p_cond, jt)


def _cond_matrix(p_cond) -> np.ndarray:
    rows = getattr(p_cond, "matrix", p_cond)
    return np.asarray(rows, dtype=float)
