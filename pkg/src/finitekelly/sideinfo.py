"""
The tripartite betting game: Alice sees X, Bob sees Y, both bet on Z.

Tensors are indexed ``[x, y, z]``. Conditional strategies are row-stochastic
matrices ``[given, outcome]``.
"""

from __future__ import annotations

import math
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np

from .divergence import (
    SUM_TOL,
    Dist,
    conditional_entropy,
    entropy_of_weights,
    kl_divergence,
    mutual_information,
    mutual_information_direct,
)
from .types import JointEmpiricalType


class TripartiteDist:
    """Joint pmf over X x Y x Z with cached marginals and conditionals."""

    def __init__(self, probs, tol: float = SUM_TOL):
        arr = np.array(probs, dtype=float)
        if arr.ndim != 3:
            raise ValueError(f"need a 3-tensor, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("tensor entries must be finite and non-negative")
        total = math.fsum(arr.ravel())
        if abs(total - 1.0) > tol:
            raise ValueError(f"tensor sums to {total!r}, not 1")
        arr.setflags(write=False)
        self.probs = arr

    @classmethod
    def from_flat(cls, sizes: Sequence[int], flat: Sequence[float]) -> "TripartiteDist":
        sizes = tuple(int(s) for s in sizes)
        flat = np.asarray(flat, dtype=float)
        if len(sizes) != 3 or flat.size != int(np.prod(sizes)):
            raise ValueError(f"{flat.size} entries do not fill sizes {sizes}")
        return cls(flat.reshape(sizes))

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return tuple(self.probs.shape)

    def marginal(self, axes: str) -> np.ndarray:
        """Marginal over the named variables, e.g. ``"xz"`` or ``"y"``."""
        names = "xyz"
        drop = tuple(i for i, c in enumerate(names) if c not in axes)
        m = self.probs.sum(axis=drop) if drop else self.probs
        kept = [c for c in names if c in axes]
        return np.transpose(m, [kept.index(c) for c in axes])

    @cached_property
    def p_x(self):
        return self.marginal("x")

    @cached_property
    def p_y(self):
        return self.marginal("y")

    @cached_property
    def p_z(self):
        return self.marginal("z")

    @cached_property
    def p_xz(self):
        return self.marginal("xz")

    @cached_property
    def p_yz(self):
        return self.marginal("yz")

    @cached_property
    def p_xy(self):
        return self.marginal("xy")

    @cached_property
    def p_z_given_x(self) -> "CondStrategy":
        return CondStrategy.from_joint(self.p_xz)

    @cached_property
    def p_z_given_y(self) -> "CondStrategy":
        return CondStrategy.from_joint(self.p_yz)

    def product_of_marginals(self) -> np.ndarray:
        return np.einsum("i,j,k->ijk", self.p_x, self.p_y, self.p_z)

    def flat(self) -> list:
        return self.probs.ravel().tolist()

    def __repr__(self):
        return f"TripartiteDist(sizes={self.sizes})"


class CondStrategy:
    """
    One distribution over outcomes per conditioning symbol (a stake or odds
    vector for every observation).
    """

    def __init__(self, rows, tol: float = 1e-12):
        m = np.array(rows, dtype=float)
        if m.ndim != 2:
            raise ValueError("conditional strategy needs a 2-D row array")
        for r in m:
            Dist(r, tol=tol)
        m.setflags(write=False)
        self.matrix = m

    @classmethod
    def from_joint(cls, joint) -> "CondStrategy":
        """Rows ``P(z|a)`` of a joint ``[a, z]``; zero-mass rows become uniform."""
        joint = np.asarray(joint, dtype=float)
        marg = joint.sum(axis=1)
        rows = np.empty_like(joint)
        for a, mass in enumerate(marg):
            if mass > 0:
                rows[a] = joint[a] / mass
                rows[a] /= rows[a].sum()
            else:
                rows[a] = 1.0 / joint.shape[1]
        return cls(rows)

    @classmethod
    def constant(cls, given_size: int, row) -> "CondStrategy":
        return cls(np.tile(np.asarray(row, dtype=float), (given_size, 1)))

    @property
    def given_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def out_size(self) -> int:
        return self.matrix.shape[1]

    def row(self, a: int) -> Dist:
        return Dist(self.matrix[a])

    @property
    def rows(self):
        return [self.row(a) for a in range(self.given_size)]

    def allclose(self, other: "CondStrategy", atol: float = 1e-12) -> bool:
        return np.allclose(self.matrix, other.matrix, rtol=0, atol=atol)

    def __repr__(self):
        return f"CondStrategy({self.matrix.tolist()})"


def _weighted_kl(lam: np.ndarray, w: np.ndarray) -> float:
    """D(lam||w) for same-shape arrays; inf on support escape."""
    lam, w = lam.ravel(), w.ravel()
    m = lam > 0
    if np.any(w[m] == 0):
        return math.inf
    return math.fsum(lam[m] * np.log2(lam[m] / w[m]))


def _check_game(q_a: CondStrategy, q_b: CondStrategy, jt: JointEmpiricalType):
    if jt.counts.ndim != 3:
        raise ValueError("payoffs need a joint type over X x Y x Z")
    kx, ky, kz = jt.shape
    if q_a.matrix.shape != (kx, kz) or q_b.matrix.shape != (ky, kz):
        raise ValueError(
            f"strategy shapes {q_a.matrix.shape}, {q_b.matrix.shape} "
            f"do not match joint type {jt.shape}"
        )


def _combine(d_bob: float, d_alice: float) -> float:
    if math.isinf(d_bob) and math.isinf(d_alice):
        raise ValueError("realized joint type escapes both players' supports")
    if math.isinf(d_bob):
        return math.inf
    if math.isinf(d_alice):
        return -math.inf
    return d_bob - d_alice


def payoff_conditional_form(q_a: CondStrategy, q_b: CondStrategy, jt: JointEmpiricalType) -> float:
    """
    log2 of Alice's wealth relative, through the pairwise joint types::

        n [ D(lam_yz||W_YZ) - D(lam_xz||W_XZ) + H_lam(Z|Y) - H_lam(Z|X) ]

    with ``W_XZ = lam_x Q^A(z|x)`` and ``W_YZ = lam_y Q^B(z|y)``.
    """
    _check_game(q_a, q_b, jt)
    lam = jt.freq
    lam_xz, lam_yz = lam.sum(axis=1), lam.sum(axis=0)
    lam_x, lam_y = lam_xz.sum(axis=1), lam_yz.sum(axis=1)
    d_alice = _weighted_kl(lam_xz, lam_x[:, None] * q_a.matrix)
    d_bob = _weighted_kl(lam_yz, lam_y[:, None] * q_b.matrix)
    h_zy = entropy_of_weights(lam_yz) - entropy_of_weights(lam_y)
    h_zx = entropy_of_weights(lam_xz) - entropy_of_weights(lam_x)
    core = _combine(d_bob, d_alice)
    if math.isinf(core):
        return core
    return jt.n * (core + h_zy - h_zx)


def payoff_global_form(q_a: CondStrategy, q_b: CondStrategy, jt: JointEmpiricalType) -> float:
    """``n [ D(lam_xyz||W_B) - D(lam_xyz||W_A) ]`` with ``W_A = lam_xy Q^A(z|x)``."""
    _check_game(q_a, q_b, jt)
    lam = jt.freq
    lam_xy = lam.sum(axis=2)
    w_a = lam_xy[:, :, None] * q_a.matrix[:, None, :]
    w_b = lam_xy[:, :, None] * q_b.matrix[None, :, :]
    core = _combine(_weighted_kl(lam, w_b), _weighted_kl(lam, w_a))
    return core if math.isinf(core) else jt.n * core


def payoff_direct(q_a: CondStrategy, q_b: CondStrategy, x, y, z) -> float:
    """log2 prod Q^A(z_i|x_i) / Q^B(z_i|y_i) for explicit sequences."""
    x, y, z = (np.asarray(s, dtype=int) for s in (x, y, z))
    a = q_a.matrix[x, z]
    b = q_b.matrix[y, z]
    if np.any(b == 0) and np.any(a == 0):
        raise ValueError("realization escapes both players' supports")
    if np.any(b == 0):
        return math.inf
    if np.any(a == 0):
        return -math.inf
    return math.fsum(np.log2(a)) - math.fsum(np.log2(b))


def asymptotic_value(p: TripartiteDist) -> float:
    """Per-round value ``H(Z|Y) - H(Z|X)`` in bits."""
    return conditional_entropy(p.p_yz) - conditional_entropy(p.p_xz)


def asymptotic_value_mi(p: TripartiteDist) -> float:
    """Same value as ``I(X:Z) - I(Y:Z)``, each computed from its own definition."""
    return mutual_information_direct(p.p_xz) - mutual_information_direct(p.p_yz)


def equilibrium_strategies(p: TripartiteDist) -> Tuple[CondStrategy, CondStrategy]:
    """``(P_{Z|X}, P_{Z|Y})``; rows with zero conditioning mass are uniform."""
    return p.p_z_given_x, p.p_z_given_y


def deviation_penalty(p: TripartiteDist, q_a: CondStrategy) -> float:
    """
    Rate Alice loses by playing ``q_a`` against Bob's equilibrium odds:
    ``sum_x P(x) D(P_{Z|X=x} || q_a(.|x))``, over rows with ``P(x) > 0``.
    """
    return _penalty(p.p_x, p.p_z_given_x, q_a)


def bob_deviation_gain(p: TripartiteDist, q_b: CondStrategy) -> float:
    """Rate Alice gains when Bob deviates to ``q_b`` (non-negative)."""
    return _penalty(p.p_y, p.p_z_given_y, q_b)


def _penalty(marg, cond: CondStrategy, dev: CondStrategy) -> float:
    if dev.matrix.shape != cond.matrix.shape:
        raise ValueError("deviation has the wrong shape")
    terms = []
    for a, mass in enumerate(marg):
        if mass <= 0:
            continue
        d = kl_divergence(cond.matrix[a], dev.matrix[a])
        if math.isinf(d):
            return math.inf
        terms.append(mass * d)
    return math.fsum(terms)


def asymptotic_rate(p: TripartiteDist, q_a: CondStrategy, q_b: CondStrategy) -> float:
    """Expected log-wealth per round ``E[log2 Q^A(Z|X) - log2 Q^B(Z|Y)]``."""
    t = p.probs
    a = np.broadcast_to(q_a.matrix[:, None, :], t.shape)
    b = np.broadcast_to(q_b.matrix[None, :, :], t.shape)
    m = t > 0
    if np.any(a[m] == 0):
        return -math.inf
    if np.any(b[m] == 0):
        return math.inf
    return math.fsum((t[m] * (np.log2(a[m]) - np.log2(b[m]))).ravel())


class OnesWeight:
    """
    The all-ones weight over Y tensored with Bob's conditional odds.

    Not a distribution: ``D(lam||1_Y Q) = D(lam||mu_Y Q) - log2|Y|`` with
    ``mu_Y`` uniform.
    """

    def __init__(self, q_b: CondStrategy):
        self.q_b = q_b

    def divergence_from(self, lam_yz: np.ndarray) -> float:
        ky = self.q_b.given_size
        mu_q = self.q_b.matrix / ky
        return _weighted_kl(lam_yz, mu_q) - math.log2(ky)


def sideinfo_risk_reward(
    p: TripartiteDist,
    target_joint_type: JointEmpiricalType,
    q_b: CondStrategy,
    n: Optional[int] = None,
) -> Tuple[float, float]:
    """
    Risk exponent and reward (both in bits, totals over ``n`` rounds) for
    Alice concentrating her bet on a target joint type.

    ``risk = n D(lam_yz||P_YZ)`` so that success ``≐ 2^-risk``, and::

        reward = n [ D(lam_yz||1_Y Q^B) + H(lam_yz) - H_lam(Z|X) ]

    The target may be a joint type over X x Y x Z, in which case ``H_lam(Z|X)``
    is the empirical one; over Y x Z alone it falls back to ``H(Z|X)`` of
    ``p``.
    """
    counts = target_joint_type.counts
    if counts.ndim == 3:
        lam = target_joint_type.freq
        lam_yz = lam.sum(axis=0)
        lam_xz = lam.sum(axis=1)
        h_zx = entropy_of_weights(lam_xz) - entropy_of_weights(lam_xz.sum(axis=1))
    elif counts.ndim == 2:
        lam_yz = target_joint_type.freq
        h_zx = conditional_entropy(p.p_xz)
    else:
        raise ValueError("target type must be over Y x Z or X x Y x Z")
    if lam_yz.shape != p.p_yz.shape or q_b.matrix.shape != p.p_yz.shape:
        raise ValueError("target type, odds and distribution disagree on |Y| x |Z|")
    if n is None:
        n = target_joint_type.n
    elif n != target_joint_type.n:
        raise ValueError(f"n={n} but the target type has length {target_joint_type.n}")
    risk = _weighted_kl(lam_yz, p.p_yz)
    d_ones = OnesWeight(q_b).divergence_from(lam_yz)
    h_yz = entropy_of_weights(lam_yz)
    risk_total = math.inf if math.isinf(risk) else n * risk
    reward_total = math.inf if math.isinf(d_ones) else n * (d_ones + h_yz - h_zx)
    return risk_total, reward_total


def sideinfo_diagnostics(p: TripartiteDist, target_joint_type: JointEmpiricalType) -> dict:
    """Both candidate entropy terms for the reward, per round."""
    lam = target_joint_type.freq
    lam_yz = lam.sum(axis=0) if lam.ndim == 3 else lam
    return dict(
        h_yz=entropy_of_weights(lam_yz),
        h_z_given_y=entropy_of_weights(lam_yz) - entropy_of_weights(lam_yz.sum(axis=1)),
    )


def mutual_informations(p: TripartiteDist) -> dict:
    return dict(
        i_xz=mutual_information(p.p_xz),
        i_yz=mutual_information(p.p_yz),
        h_z_given_x=conditional_entropy(p.p_xz),
        h_z_given_y=conditional_entropy(p.p_yz),
    )
