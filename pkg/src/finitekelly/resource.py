"""
Resource-theory layer: free states, divergence monotones, adversarial
payoff quantifiers, and the variable-length-code realization of betting.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from .divergence import DistLike, as_dist, conditional_entropy, entropy_of_weights
from .divergence import mutual_information, renyi_divergence
from .sideinfo import CondStrategy, TripartiteDist, asymptotic_value
from .types import ResourceCapError

FREE = "free"
GRID_CAP = 2_000_000


def is_free_state(p: TripartiteDist, tol: float = 1e-12) -> bool:
    """True iff the tensor is within ``tol`` (max-norm) of ``P_X P_Y P_Z``."""
    return float(np.max(np.abs(p.probs - p.product_of_marginals()))) <= tol


# -- infima of D_alpha over product references ------------------------------

@dataclass
class Infimum:
    """Best incumbent of an infimum over product distributions."""

    value: float
    argmin: List[np.ndarray]
    numeric: float
    grid: float = math.nan
    closed_form: float = math.nan
    converged: bool = True

    @property
    def gap(self) -> float:
        """Grid incumbent minus numeric incumbent (nan without a grid)."""
        return self.grid - self.numeric


def _simplex_grid(k: int, step: float, interior: bool = False) -> np.ndarray:
    m = int(round(1.0 / step))
    if abs(m * step - 1.0) > 1e-9:
        raise ValueError(f"grid step {step} must divide 1")
    lo = 1 if interior else 0
    pts = [
        c + (m - sum(c),)
        for c in itertools.product(range(lo, m + 1), repeat=k - 1)
        if m - sum(c) >= lo
    ]
    return np.array(pts, dtype=float) / m


def _softmax(theta):
    e = np.exp(theta - theta.max())
    return e / e.sum()


def _marginal(P: np.ndarray, axis: int) -> np.ndarray:
    others = tuple(i for i in range(P.ndim) if i != axis)
    return P.sum(axis=others)


def _outer(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = factors[0]
    for f in factors[1:]:
        out = np.multiply.outer(out, f)
    return out


def _product_divergence(P: np.ndarray, factors: Sequence[np.ndarray], alpha: float) -> float:
    return renyi_divergence(alpha, P.ravel(), _outer(factors).ravel())


def _grid_search(P, refs, alpha, step):
    free_axes = [i for i, r in enumerate(refs) if isinstance(r, str)]
    grids = [_simplex_grid(P.shape[i], step) for i in free_axes]
    if math.prod(len(g) for g in grids) > GRID_CAP:
        return math.nan, None
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if alpha == 1:
            # D(P || prod R_i) = -H(P) - sum_i sum_x P_i(x) log2 R_i(x)
            total = -entropy_of_weights(P)
            acc = np.zeros([len(g) for g in grids])
            for j, (i, g) in enumerate(zip(free_axes, grids)):
                pi = _marginal(P, i)
                ce = -np.where(pi > 0, pi * np.log2(g), 0.0).sum(axis=1)
                shape = [1] * len(grids)
                shape[j] = len(g)
                acc = acc + ce.reshape(shape)
            for i, r in enumerate(refs):
                if not isinstance(r, str):
                    pi = _marginal(P, i)
                    m = pi > 0
                    total += -math.fsum(pi[m] * np.log2(r[m]))
            vals = total + acc
        elif 0 < alpha < math.inf:
            # separable: sum P^a prod R_i^(1-a)
            T = np.where(P > 0, P**alpha, 0.0)
            for i, r in enumerate(refs):
                if not isinstance(r, str):
                    shape = [1] * P.ndim
                    shape[i] = -1
                    T = T * (r ** (1 - alpha)).reshape(shape)
            letters = "abcdefgh"
            ops = [T]
            sub_in = letters[: P.ndim]
            outs = ""
            terms = [sub_in]
            for j, (i, g) in enumerate(zip(free_axes, grids)):
                gl = "ABCDEFGH"[j]
                ops.append(g ** (1 - alpha))
                terms.append(gl + letters[i])
                outs += gl
            S = np.einsum(",".join(terms) + "->" + outs, *ops)
            vals = np.log2(S) / (alpha - 1)
        else:
            return math.nan, None
    vals = np.where(np.isnan(vals), np.inf, vals)
    flat = int(np.argmin(vals))
    idx = np.unravel_index(flat, vals.shape)
    return float(vals[idx]), [g[j] for g, j in zip(grids, idx)]


def divergence_infimum(
    P,
    refs: Sequence[Union[str, np.ndarray]],
    alpha: float,
    grid_step: Optional[float] = None,
    starts: int = 6,
    seed: int = 0,
) -> Infimum:
    """
    ``inf D_alpha(P || R_0 x R_1 x ...)`` where each ``refs[i]`` is either a
    fixed factor or ``"free"`` (optimized over its simplex).

    Multi-start L-BFGS on softmax logits, the first start at the marginal of
    ``P``; the other starts are Dirichlet draws from a seeded generator. A
    simplex grid of ``grid_step`` is searched too when it fits under the cap,
    and the better incumbent is returned.
    """
    P = np.asarray(P, dtype=float)
    if len(refs) != P.ndim:
        raise ValueError("one reference per tensor axis")
    refs = [r if isinstance(r, str) else np.asarray(r, dtype=float) for r in refs]
    free_axes = [i for i, r in enumerate(refs) if isinstance(r, str)]
    sizes = [P.shape[i] for i in free_axes]
    splits = np.cumsum(sizes)[:-1]

    def factors(theta):
        parts = np.split(theta, splits) if free_axes else []
        out, j = [], 0
        for r in refs:
            if isinstance(r, str):
                out.append(_softmax(parts[j]))
                j += 1
            else:
                out.append(r)
        return out

    def objective(theta):
        v = _product_divergence(P, factors(theta), alpha)
        return v if math.isfinite(v) else 1e300

    rng = np.random.default_rng(seed)
    best_val, best_theta, converged = math.inf, None, True
    for s in range(max(starts, 1) if free_axes else 1):
        if s == 0:
            theta0 = np.concatenate(
                [np.log(np.maximum(_marginal(P, i), 1e-12)) for i in free_axes]
            ) if free_axes else np.zeros(0)
        else:
            theta0 = np.concatenate([np.log(rng.dirichlet(np.ones(k))) for k in sizes])
        if free_axes:
            res = minimize(objective, theta0, method="L-BFGS-B",
                           options=dict(ftol=1e-15, gtol=1e-12, maxiter=2000))
            val, theta = float(res.fun), res.x
            ok = bool(res.success)
        else:
            val, theta, ok = objective(theta0), theta0, True
        # ties resolve to the lowest start index
        if val < best_val:
            best_val, best_theta, converged = val, theta, ok
    numeric = best_val
    argmin = [f for f, r in zip(factors(best_theta), refs) if isinstance(r, str)]

    grid = math.nan
    if grid_step is not None and free_axes:
        grid, grid_arg = _grid_search(P, refs, alpha, grid_step)
        if grid_arg is not None and grid < numeric:
            argmin = grid_arg
    value = numeric if not (grid < numeric) else grid
    return Infimum(value=value, argmin=argmin, numeric=numeric, grid=grid, converged=converged)


def _pair_array(p_pair) -> np.ndarray:
    arr = np.asarray(p_pair, dtype=float)
    if arr.ndim != 2:
        raise ValueError("need a 2-D joint pmf over A x Z")
    if abs(math.fsum(arr.ravel()) - 1) > 1e-12 or np.any(arr < 0):
        raise ValueError("joint pmf must be non-negative and sum to 1")
    return arr


def _grid_step_for(sizes) -> Optional[float]:
    return 0.01 if all(k <= 3 for k in sizes) else None


def monotone_E_alpha(p_pair, alpha: float, tol: float = 1e-6) -> Infimum:
    """
    ``inf_Q D_alpha(P_AZ || Q_A x P_Z)`` in bits.

    At ``alpha = 1`` the closed form ``I(A:Z)`` is attached and the numeric
    infimum is asserted to agree with it within ``tol``.
    """
    P = _pair_array(p_pair)
    if alpha < 0:
        raise ValueError("order must be >= 0")
    res = divergence_infimum(P, [FREE, P.sum(axis=0)], alpha, _grid_step_for(P.shape[:1]))
    if alpha == 1:
        res.closed_form = mutual_information(P)
        assert abs(res.value - res.closed_form) <= tol, (
            f"numeric infimum {res.value} disagrees with I(A:Z) = {res.closed_form}"
        )
    return res


def conditional_negentropy_E_alpha(p_pair, alpha: float, tol: float = 1e-6) -> Infimum:
    """
    Conditional negentropy ``inf_Q D_alpha(P_AZ || Q_A x mu_Z)``, with
    ``mu_Z`` uniform; zero when Z is uniform given A. At ``alpha = 1`` it is
    ``log2|Z| - H(Z|A)`` (asserted).
    """
    P = _pair_array(p_pair)
    if alpha < 0:
        raise ValueError("order must be >= 0")
    kz = P.shape[1]
    res = divergence_infimum(P, [FREE, np.full(kz, 1.0 / kz)], alpha, _grid_step_for(P.shape[:1]))
    if alpha == 1:
        res.closed_form = math.log2(kz) - conditional_entropy(P)
        assert abs(res.value - res.closed_form) <= tol, (
            f"numeric infimum {res.value} disagrees with log|Z| - H(Z|A) = {res.closed_form}"
        )
    return res


def monotone_E_alpha_xy_z(p: TripartiteDist, alpha: float) -> Infimum:
    """``inf D_alpha(P_XYZ || Q_X x Q_Y x P_Z)``."""
    step = 0.02 if all(k <= 3 for k in p.sizes[:2]) else None
    res = divergence_infimum(p.probs, [FREE, FREE, p.p_z], alpha, step)
    if alpha == 1:
        res.closed_form = (
            entropy_of_weights(p.p_x) + entropy_of_weights(p.p_y)
            + entropy_of_weights(p.p_z) - entropy_of_weights(p.probs)
        )
    return res


def monotone_M_alpha(p: TripartiteDist, alpha: float, grid_step: float = 0.01) -> Infimum:
    """
    ``inf D_alpha(P_XYZ || Q)`` over all free (product) states; desk scale
    only (every alphabet of size <= 2).
    """
    if any(k > 2 for k in p.sizes):
        raise ResourceCapError("M_alpha is only evaluated for |X|, |Y|, |Z| <= 2")
    res = divergence_infimum(p.probs, [FREE, FREE, FREE], alpha, grid_step)
    if alpha == 1:
        res.closed_form = (
            entropy_of_weights(p.p_x) + entropy_of_weights(p.p_y)
            + entropy_of_weights(p.p_z) - entropy_of_weights(p.probs)
        )
    return res


def sibson_infimum(p_pair, alpha: float) -> float:
    """
    Closed form of ``inf_Q D_alpha(P_AZ || Q_A x P_Z)`` for ``alpha > 0``,
    ``alpha != 1``: ``alpha/(alpha-1) log2 sum_a (sum_z P^alpha P_Z^(1-alpha))^(1/alpha)``.
    """
    P = _pair_array(p_pair)
    pz = P.sum(axis=0)
    with np.errstate(divide="ignore"):
        g = np.where(P > 0, P**alpha, 0.0) @ np.where(pz > 0, pz ** (1 - alpha), 0.0)
    return alpha / (alpha - 1) * math.log2(math.fsum(g ** (1 / alpha)))


# -- adversarial resource quantifiers ------------------------------------------

def arq_log_value(p: TripartiteDist) -> float:
    """Saddle value of the expected log wealth relative: ``H(Z|Y) - H(Z|X)``."""
    return asymptotic_value(p)


def _row_values(p: TripartiteDist, f, rows_a: np.ndarray, rows_b: np.ndarray) -> np.ndarray:
    """``v[x, g, y, h] = sum_z P(x,y,z) f(rows_a[g,z] / rows_b[h,z])``."""
    t = p.probs
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = rows_a[:, None, :] / rows_b[None, :, :]
        ratio = np.where(rows_a[:, None, :] == 0, 0.0, ratio)
        fr = np.asarray(f(ratio), dtype=float)
    # skip zero-probability cells so inf * 0 never appears
    v = np.zeros((t.shape[0], rows_a.shape[0], t.shape[1], rows_b.shape[0]))
    for x, y, z in zip(*np.nonzero(t)):
        v[x, :, y, :] += t[x, y, z] * fr[:, :, z]
    return v


def _default_rows(kz: int, step: float) -> np.ndarray:
    return _simplex_grid(kz, step, interior=True)


@dataclass
class BestResponseRun:
    value: float
    alice: CondStrategy
    bob: CondStrategy
    rounds: int
    history: List[float] = field(default_factory=list)


def alternating_best_response(
    p: TripartiteDist,
    f: Callable = np.log2,
    grid_step: float = 0.05,
    max_rounds: int = 50,
) -> BestResponseRun:
    """
    Alternate grid best responses (Alice maximizes, Bob minimizes
    ``E[f(Q_A/Q_B)]``) until neither strategy changes.

    Payoffs are separable across conditioning symbols, so each best
    response is a per-row grid search. Grid rows are interior (every stake
    at least ``grid_step``) so the log payoff stays finite.
    """
    if max(p.sizes) > 3:
        raise ResourceCapError("grid best responses are limited to alphabets of size <= 3")
    kx, ky, kz = p.sizes
    rows = _default_rows(kz, grid_step)
    v = _row_values(p, f, rows, rows)
    a_idx = np.zeros(kx, dtype=int)
    b_idx = np.zeros(ky, dtype=int)
    uniform = int(np.argmin(np.abs(rows - 1.0 / kz).sum(axis=1)))
    a_idx[:], b_idx[:] = uniform, uniform
    history = []
    for r in range(1, max_rounds + 1):
        # Alice: per x, maximize sum_y v[x, g, y, b_y]
        ga = np.stack([v[:, :, y, b_idx[y]] for y in range(ky)]).sum(axis=0)
        new_a = np.argmax(ga, axis=1)
        gb = np.stack([v[x, new_a[x], :, :] for x in range(kx)]).sum(axis=0)
        new_b = np.argmin(gb, axis=1)
        value = float(sum(v[x, new_a[x], y, new_b[y]] for x in range(kx) for y in range(ky)))
        history.append(value)
        done = np.array_equal(new_a, a_idx) and np.array_equal(new_b, b_idx)
        a_idx, b_idx = new_a, new_b
        if done:
            break
    return BestResponseRun(value, CondStrategy(rows[a_idx]), CondStrategy(rows[b_idx]), r, history)


def arq_numeric(
    p: TripartiteDist,
    f: Callable,
    grid_step: float = 0.05,
    alice_rows: Optional[np.ndarray] = None,
    bob_rows: Optional[np.ndarray] = None,
    cap: int = 50_000_000,
) -> Tuple[float, float]:
    """
    Pure-strategy ``(sup_inf, inf_sup)`` of ``E[f(Q_A(Z|X)/Q_B(Z|Y))]`` for a
    single round, with each player choosing one grid row per observation.

    ``alice_rows`` / ``bob_rows`` override the default interior simplex grid.
    Raises :class:`ResourceCapError` when the enumeration exceeds ``cap``.
    """
    kx, ky, kz = p.sizes
    rows_a = _default_rows(kz, grid_step) if alice_rows is None else np.atleast_2d(alice_rows)
    rows_b = _default_rows(kz, grid_step) if bob_rows is None else np.atleast_2d(bob_rows)
    na, nb = len(rows_a), len(rows_b)
    work = max(na**kx * ky * nb, nb**ky * kx * na)
    if work > cap:
        raise ResourceCapError(f"grid too large: {work} evaluations exceed cap {cap}")
    v = _row_values(p, f, rows_a, rows_b)

    sup_inf = -math.inf
    for combo in itertools.product(range(na), repeat=kx):
        acc = sum(v[x, combo[x], :, :] for x in range(kx))  # [y, h]
        sup_inf = max(sup_inf, float(acc.min(axis=1).sum()))
    inf_sup = math.inf
    for combo in itertools.product(range(nb), repeat=ky):
        acc = sum(v[:, :, y, combo[y]] for y in range(ky))  # [x, g]
        inf_sup = min(inf_sup, float(acc.max(axis=1).sum()))
    slack = 2 * grid_step
    assert sup_inf <= inf_sup + slack, f"sup-inf {sup_inf} exceeds inf-sup {inf_sup}"
    return sup_inf, inf_sup


# -- variable-length codes -------------------------------------------------------

@dataclass(frozen=True)
class CodeTable:
    """
    Per-symbol code lengths in bits, extended additively over sequences.

    ``real`` mode requires the Kraft sum to equal 1 (within 1e-10);
    ``integer`` mode requires integral lengths with Kraft sum at most 1.
    Infinite length marks a symbol that cannot be encoded.
    """

    mode: str
    lengths: Tuple[float, ...]

    def __post_init__(self):
        lengths = tuple(float(l) for l in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if self.mode not in ("real", "integer"):
            raise ValueError(f"unknown code mode {self.mode!r}")
        if any(l < 0 or math.isnan(l) for l in lengths):
            raise ValueError("code lengths must be non-negative")
        kraft = self.kraft_sum
        if self.mode == "real":
            if abs(kraft - 1.0) > 1e-10:
                raise ValueError(f"real-mode Kraft sum is {kraft}, not 1")
        else:
            if any(math.isfinite(l) and l != math.floor(l) for l in lengths):
                raise ValueError("integer-mode lengths must be integers")
            if kraft > 1.0 + 1e-12:
                raise ValueError(f"Kraft inequality violated: sum = {kraft}")

    @property
    def kraft_sum(self) -> float:
        return math.fsum(2.0**-l for l in self.lengths)

    def sequence_length(self, outcome: Sequence[int]) -> float:
        return math.fsum(self.lengths[int(z)] for z in outcome)


def lengths_from_strategy(q: DistLike, mode: str = "real") -> CodeTable:
    """``-log2 q`` (real) or Shannon lengths ``ceil(-log2 q)`` (integer)."""
    q = as_dist(q)
    probs = q.probs
    if mode == "real":
        if np.any(probs == 0):
            raise ValueError("real-mode code needs a full-support strategy")
        return CodeTable("real", tuple(-np.log2(probs)))
    if mode == "integer":
        out = []
        for x in probs:
            if x == 0:
                out.append(math.inf)
            else:
                ell = -math.log2(x)
                r = round(ell)
                # exact powers of two must not round up
                out.append(float(r) if abs(ell - r) < 1e-12 else float(math.ceil(ell)))
        return CodeTable("integer", tuple(out))
    raise ValueError(f"unknown code mode {mode!r}")


def payout_bits(table_b: CodeTable, table_a: CodeTable, outcome: Sequence[int]) -> float:
    """
    Surplus channel capacity ``l_B(z^n) - l_A(z^n)``; negative values are
    Alice's cost.
    """
    if len(table_a.lengths) != len(table_b.lengths):
        raise ValueError("tables cover different outcome spaces")
    la = table_a.sequence_length(outcome)
    lb = table_b.sequence_length(outcome)
    if math.isinf(la) and math.isinf(lb):
        raise ValueError("outcome cannot be encoded by either code")
    return lb - la


def conditional_tables(cond: CondStrategy, mode: str = "real") -> List[CodeTable]:
    """One code per observed symbol."""
    return [lengths_from_strategy(cond.matrix[a], mode) for a in range(cond.given_size)]


def conditional_payout_bits(
    tables_b: Sequence[CodeTable],
    tables_a: Sequence[CodeTable],
    x: Sequence[int],
    y: Sequence[int],
    z: Sequence[int],
) -> float:
    """``sum_i l_B(z_i|y_i) - l_A(z_i|x_i)`` for side-information codes."""
    la = math.fsum(tables_a[int(a)].lengths[int(c)] for a, c in zip(x, z))
    lb = math.fsum(tables_b[int(b)].lengths[int(c)] for b, c in zip(y, z))
    if math.isinf(la) and math.isinf(lb):
        raise ValueError("outcome cannot be encoded by either code")
    return lb - la
