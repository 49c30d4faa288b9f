"""
Command-line front end.

Exit codes: 0 on success, 1 on invalid input or arguments (one-line
diagnostic on stderr), 2 when an enumeration would exceed its cap.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import fileio
from .divergence import kl_divergence, renyi_divergence
from .kelly import (
    DegenerateTiltError,
    InfeasibleError,
    frontier,
    solve_max_reward,
    solve_payoff_constrained,
    solve_risk_constrained,
    tilted_bet,
)
from .resource import (
    conditional_negentropy_E_alpha,
    is_free_state,
    lengths_from_strategy,
    monotone_E_alpha,
    monotone_E_alpha_xy_z,
    monotone_M_alpha,
    payout_bits,
)
from .sideinfo import asymptotic_value, equilibrium_strategies, mutual_informations
from .sim import run_betting, run_sideinfo
from .types import (
    DEFAULT_TYPE_CAP,
    ResourceCapError,
    count_types,
    iter_types,
    log2_type_class_probability,
    type_class_size,
)
from .utility import (
    crra_expected_utility_maximizer,
    crra_optimal_strategy,
    eta_from_beta,
    expected_log_wealth_closed_form,
    expected_utility_estimate,
)

COMMANDS = ("frontier", "optimize", "utility", "simulate", "sideinfo", "monotones", "kraft", "types")
FRONTIER_COLUMNS = ("epsilon", "eta", "reward_bits", "risk_exponent", "bound_bits")
REPORTS = ("value", "equilibrium", "mi", "simulate")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated options for one command-line invocation."""

    command: str
    inputs: dict = field(default_factory=dict)
    output_path: Optional[str] = None
    seed: Optional[int] = None
    threads: Optional[int] = None
    n: Optional[int] = None
    epsilon: Optional[float] = None
    eps_grid: Optional[List[float]] = None
    budget: Optional[float] = None
    payoff_bits: Optional[float] = None
    eta: Optional[float] = None
    beta: Optional[float] = None
    alpha: Optional[float] = None
    trials: Optional[int] = None
    target_rate: Optional[float] = None
    grid_step: Optional[float] = None
    cap: int = DEFAULT_TYPE_CAP
    k: Optional[int] = None
    mode: str = "real"
    report: List[str] = field(default_factory=lambda: ["value", "equilibrium"])
    outcome: Optional[List[int]] = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.n is not None and self.n < 1:
            raise UsageError("--n must be a positive integer")
        if self.trials is not None and self.trials < 1:
            raise UsageError("--trials must be a positive integer")
        if self.epsilon is not None and not 0 < self.epsilon <= 1:
            raise UsageError("--epsilon must lie in (0, 1]")
        for e in self.eps_grid or []:
            if not 0 < e <= 1:
                raise UsageError(f"epsilon grid value {e} outside (0, 1]")
        if self.budget is not None and not self.budget >= 0:
            raise UsageError("--budget must be >= 0")
        if self.payoff_bits is not None and not self.payoff_bits >= 0:
            raise UsageError("--payoff-bits must be >= 0")
        if self.alpha is not None and not self.alpha >= 0:
            raise UsageError("--alpha must be >= 0")
        if self.beta is not None and not math.isfinite(self.beta):
            raise UsageError("--beta must be finite")
        if self.seed is not None and self.seed < 0:
            raise UsageError("--seed must be non-negative")
        if self.cap < 1:
            raise UsageError("--cap must be positive")
        if self.mode not in ("real", "integer"):
            raise UsageError("--mode must be 'real' or 'integer'")
        for r in self.report:
            if r not in REPORTS:
                raise UsageError(f"unknown report {r!r}; choose from {','.join(REPORTS)}")
        if self.command == "simulate" or (self.command == "sideinfo" and "simulate" in self.report):
            if self.seed is None:
                raise UsageError("randomized commands need an explicit --seed")
            if self.n is None or self.trials is None:
                raise UsageError("simulation needs --n and --trials")
        return self


def parse_grid(text: str) -> List[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(s) for s in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(count)]
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}") from None


def _int_list(text: str) -> List[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"cannot parse symbol list {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="finitekelly", description="Finite-horizon Kelly betting analyses (all rates in bits).")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
        sp.add_argument("--cap", type=int, default=DEFAULT_TYPE_CAP, help="enumeration cap")
        return sp

    sp = common(sub.add_parser("frontier", help="risk-reward frontier as CSV"))
    sp.add_argument("--p", required=True)
    sp.add_argument("--qb", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--eps-grid", required=True)

    sp = common(sub.add_parser("optimize", help="single constrained optimum"))
    sp.add_argument("--p", required=True)
    sp.add_argument("--qb", required=True)
    sp.add_argument("--n", type=int)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--budget", type=float, help="risk budget D(Q||p) in bits")
    sp.add_argument("--payoff-bits", type=float, help="minimum D(Q||q_b) in bits")
    sp.add_argument("--eta", type=float, help="just evaluate the tilted bet at this eta")

    sp = common(sub.add_parser("utility", help="CRRA strategy and expected utility"))
    sp.add_argument("--p", required=True)
    sp.add_argument("--qb", required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--n", type=int, help="also compute the exact n-round expected utility")

    sp = common(sub.add_parser("simulate", help="Monte Carlo betting runs"))
    sp.add_argument("--p", required=True)
    sp.add_argument("--qa", required=True)
    sp.add_argument("--qb", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--target-rate", type=float)

    sp = common(sub.add_parser("sideinfo", help="side-information game analysis"))
    sp.add_argument("--pxyz", required=True)
    sp.add_argument("--report", default="value,equilibrium")
    sp.add_argument("--n", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)

    sp = common(sub.add_parser("monotones", help="divergence monotones of a tripartite pmf"))
    sp.add_argument("--pxyz", required=True)
    sp.add_argument("--alpha", type=float, default=1.0)

    sp = common(sub.add_parser("kraft", help="code lengths and payouts"))
    sp.add_argument("--q", required=True, help="strategy defining the code (Bob's when --qa is given)")
    sp.add_argument("--qa", help="Alice's strategy for payout computation")
    sp.add_argument("--outcome", help="comma-separated outcome sequence")
    sp.add_argument("--mode", default="real")

    sp = common(sub.add_parser("types", help="type classes of length-n strings"))
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int)
    sp.add_argument("--p", help="include exact class probabilities under p")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    g = lambda name, default=None: getattr(ns, name, default)
    inputs = {k: g(k) for k in ("p", "qa", "qb", "q", "pxyz") if g(k) is not None}
    cfg = RunConfig(
        command=ns.command,
        inputs=inputs,
        output_path=g("out"),
        seed=g("seed"),
        threads=g("threads"),
        n=g("n"),
        epsilon=g("epsilon"),
        eps_grid=parse_grid(ns.eps_grid) if g("eps_grid") else None,
        budget=g("budget"),
        payoff_bits=g("payoff_bits"),
        eta=g("eta"),
        beta=g("beta"),
        alpha=g("alpha"),
        trials=g("trials"),
        target_rate=g("target_rate"),
        cap=g("cap", DEFAULT_TYPE_CAP),
        k=g("k"),
        mode=g("mode", "real"),
        report=[r.strip() for r in g("report", "value,equilibrium").split(",") if r.strip()],
        outcome=_int_list(ns.outcome) if g("outcome") else None,
    )
    return cfg.validate()


def _point_json(pt) -> dict:
    return dict(
        eta=pt.eta,
        lemma_exponent=pt.lemma_exponent,
        strategy=fileio.dist_to_json(pt.strategy),
        reward_bits_per_round=pt.reward_bits_per_round,
        risk_exponent=pt.risk_exponent,
        budget=pt.budget,
        branch=pt.branch,
        constraint_active=pt.constraint_active,
        epsilon=pt.epsilon,
    )


def cmd_frontier(cfg: RunConfig) -> str:
    p, qb = fileio.load_dist(cfg.inputs["p"]), fileio.load_dist(cfg.inputs["qb"])
    rows = frontier(p, qb, cfg.n, cfg.eps_grid)
    return fileio.dumps_csv(rows, FRONTIER_COLUMNS)


def cmd_optimize(cfg: RunConfig) -> str:
    p, qb = fileio.load_dist(cfg.inputs["p"]), fileio.load_dist(cfg.inputs["qb"])
    modes = [cfg.epsilon is not None, cfg.budget is not None, cfg.payoff_bits is not None, cfg.eta is not None]
    if sum(modes) != 1:
        raise UsageError("give exactly one of --epsilon, --budget, --payoff-bits, --eta")
    if cfg.eta is not None:
        q = tilted_bet(p, qb, cfg.eta)
        return fileio.dumps_json(
            dict(
                eta=cfg.eta,
                strategy=fileio.dist_to_json(q),
                reward_bits_per_round=kl_divergence(q, qb),
                risk_exponent=kl_divergence(q, p),
            )
        )
    if cfg.epsilon is not None:
        if cfg.n is None:
            raise UsageError("--epsilon needs --n")
        pt = solve_risk_constrained(p, qb, cfg.epsilon, cfg.n)
    elif cfg.budget is not None:
        pt = solve_max_reward(p, qb, cfg.budget)
    else:
        pt = solve_payoff_constrained(p, qb, cfg.payoff_bits)
    return fileio.dumps_json(_point_json(pt))


def cmd_utility(cfg: RunConfig) -> str:
    p, qb = fileio.load_dist(cfg.inputs["p"]), fileio.load_dist(cfg.inputs["qb"])
    beta = cfg.beta
    out = dict(beta=beta)
    if beta == 1:
        out.update(eta=1.0, strategy=fileio.dist_to_json(p), expected_log2_wealth=kl_divergence(p, qb))
    else:
        eta = eta_from_beta(beta)
        q = crra_optimal_strategy(p, qb, beta)
        out.update(eta=eta, strategy=fileio.dist_to_json(q))
        if eta > 0 and math.isfinite(renyi_divergence(eta, p, qb)):
            out["expected_log2_wealth"] = expected_log_wealth_closed_form(p, qb, eta)
        if beta > 0:
            out["utility_maximizer"] = fileio.dist_to_json(crra_expected_utility_maximizer(p, qb, beta))
        if cfg.n is not None:
            out["n"] = cfg.n
            out["expected_utility"] = expected_utility_estimate(p, q, qb, beta, cfg.n, cfg.cap)
    return fileio.dumps_json(out)


def cmd_simulate(cfg: RunConfig) -> str:
    p = fileio.load_dist(cfg.inputs["p"])
    qa, qb = fileio.load_dist(cfg.inputs["qa"]), fileio.load_dist(cfg.inputs["qb"])
    stats = run_betting(p, qa, qb, cfg.n, cfg.trials, cfg.seed, threads=cfg.threads)
    out = stats.summary()
    if cfg.target_rate is not None:
        out["target_rate_bits"] = cfg.target_rate
        out["success_rate"] = float(np.mean(stats.rates >= cfg.target_rate))
    return fileio.dumps_json(out)


def cmd_sideinfo(cfg: RunConfig) -> str:
    t = fileio.load_tensor(cfg.inputs["pxyz"])
    out = {}
    if "value" in cfg.report:
        out["value_bits"] = asymptotic_value(t)
    if "mi" in cfg.report:
        out.update(mutual_informations(t))
    if "equilibrium" in cfg.report:
        qa, qb = equilibrium_strategies(t)
        out["alice_strategy"] = qa.matrix.tolist()
        out["bob_strategy"] = qb.matrix.tolist()
    if "simulate" in cfg.report:
        qa, qb = equilibrium_strategies(t)
        stats = run_sideinfo(t, qa, qb, cfg.n, cfg.trials, cfg.seed, threads=cfg.threads)
        out["simulation"] = stats.summary()
    return fileio.dumps_json(out)


def cmd_monotones(cfg: RunConfig) -> str:
    t = fileio.load_tensor(cfg.inputs["pxyz"])
    a = cfg.alpha
    out = dict(
        alpha=a,
        free_state=is_free_state(t),
        E_xz=monotone_E_alpha(t.p_xz, a).value,
        E_yz=monotone_E_alpha(t.p_yz, a).value,
        negentropy_z_given_x=conditional_negentropy_E_alpha(t.p_xz, a).value,
        negentropy_z_given_y=conditional_negentropy_E_alpha(t.p_yz, a).value,
        E_xy_z=monotone_E_alpha_xy_z(t, a).value,
    )
    if max(t.sizes) <= 2:
        out["M"] = monotone_M_alpha(t, a).value
    return fileio.dumps_json(out)


def cmd_kraft(cfg: RunConfig) -> str:
    q = fileio.load_dist(cfg.inputs["q"])
    table = lengths_from_strategy(q, cfg.mode)
    out = dict(mode=cfg.mode, lengths=list(table.lengths), kraft_sum=table.kraft_sum)
    if "qa" in cfg.inputs:
        table_a = lengths_from_strategy(fileio.load_dist(cfg.inputs["qa"]), cfg.mode)
        out["alice_lengths"] = list(table_a.lengths)
        if cfg.outcome:
            if max(cfg.outcome) >= q.alphabet_size or min(cfg.outcome) < 0:
                raise UsageError("outcome symbol outside the alphabet")
            out["outcome"] = cfg.outcome
            out["payout_bits"] = payout_bits(table, table_a, cfg.outcome)
    return fileio.dumps_json(out)


def cmd_types(cfg: RunConfig) -> str:
    p = fileio.load_dist(cfg.inputs["p"]) if "p" in cfg.inputs else None
    k = cfg.k if cfg.k is not None else (p.alphabet_size if p is not None else None)
    if k is None:
        raise UsageError("types needs --k or --p")
    if p is not None and p.alphabet_size != k:
        raise UsageError("--k disagrees with the alphabet of --p")
    rows = []
    for t in iter_types(cfg.n, k, cfg.cap):
        row = dict(counts=list(t.counts), class_size=type_class_size(t), entropy_bits=t.entropy)
        if p is not None:
            lp = log2_type_class_probability(p, t)
            row["probability"] = 2.0**lp
        rows.append(row)
    return fileio.dumps_json(dict(n=cfg.n, k=k, count=count_types(cfg.n, k), types=rows))


DISPATCH = dict(
    frontier=cmd_frontier,
    optimize=cmd_optimize,
    utility=cmd_utility,
    simulate=cmd_simulate,
    sideinfo=cmd_sideinfo,
    monotones=cmd_monotones,
    kraft=cmd_kraft,
    types=cmd_types,
)


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split()) or type(exc).__name__


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = config_from_args(ns)
        text = DISPATCH[cfg.command](cfg)
        fileio.write_text(text, cfg.output_path)
    except ResourceCapError as exc:
        print(f"finitekelly: resource cap: {_one_line(exc)}", file=sys.stderr)
        return 2
    except (UsageError, fileio.InputError, InfeasibleError, DegenerateTiltError, ValueError, OSError) as exc:
        print(f"finitekelly: error: {_one_line(exc)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
