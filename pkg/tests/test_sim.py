import math

import numpy as np
import pytest

from finitekelly.divergence import Dist, mutual_information
from finitekelly.kelly import tilted_bet, wealth_log_ratio
from finitekelly.sideinfo import TripartiteDist, asymptotic_value, equilibrium_strategies
from finitekelly.sim import (
    WealthLedger,
    binomial_band,
    empirical_success_rate,
    exact_success_probability,
    run_betting,
    run_sideinfo,
    sample_iid,
    sample_tripartite,
)
from finitekelly.types import EmpiricalType
from oracles import FROZEN

P = Dist([0.7, 0.3])
U = Dist.uniform(2)


def test_point_mass_constant():
    assert np.all(sample_iid(Dist.point_mass(3, 2), 100, seed=1) == 2)


def test_zero_probability_letters_never_drawn():
    xs = sample_iid([0.0, 0.5, 0.0, 0.5, 0.0], 5000, seed=3)
    assert set(np.unique(xs)) <= {1, 3}


def test_sampling_deterministic():
    a = sample_iid(P, 1000, seed=42)
    b = sample_iid(P, 1000, seed=42)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_iid(P, 1000, seed=43))
    assert not np.array_equal(a, sample_iid(P, 1000, seed=42, trial=1))


def test_frequency_band():
    n = 10**5
    xs = sample_iid(P, n, seed=11)
    lo, hi = binomial_band(0.7, n)
    assert lo <= np.mean(xs == 0) <= hi


def test_equal_bets_flat_trajectories():
    stats = run_betting(P, U, U, 50, 5, seed=0, keep_ledgers=True)
    for led in stats.ledgers:
        assert np.all(led.log2_wealth_trajectory == 0)
    assert stats.mean_rate == 0 and stats.ruin_count == 0


@pytest.mark.parametrize("eta,target", [(1.0, FROZEN["D_p_u"]), (0.5, FROZEN["closed_form_half"])])
def test_mean_rate_band(eta, target):
    qa = tilted_bet(P, U, eta)
    stats = run_betting(P, qa, U, 10**4, 100, seed=2024)
    assert stats.within(target)


def test_ledgers_consistent():
    qa = tilted_bet(P, U, 0.5)
    stats = run_betting(P, qa, U, 200, 20, seed=5, keep_ledgers=True)
    for led in stats.ledgers:
        assert len(led.log2_wealth_trajectory) == led.n_rounds == 200
        led.check(qa, U)


def test_ledger_length_invariant():
    with pytest.raises(ValueError):
        WealthLedger(3, np.zeros(2), EmpiricalType((2, 1)), seed=0)


def test_ruin_recorded_not_fatal():
    stats = run_betting(P, [1.0, 0.0], U, 20, 30, seed=9)
    assert stats.ruin_count == 30 - np.sum(np.isfinite(stats.rates))
    assert stats.ruin_count > 25


def test_thread_count_invariance():
    qa = tilted_bet(P, U, 0.5)
    a = run_betting(P, qa, U, 500, 16, seed=77, threads=1).rates
    b = run_betting(P, qa, U, 500, 16, seed=77, threads=4).rates
    assert a.tobytes() == b.tobytes()


class TestSuccessRate:
    def test_minus_infinity_target(self):
        assert empirical_success_rate(P, P, U, 10, -math.inf, 50, seed=1) == 1.0

    def test_unreachable_target(self):
        qa = tilted_bet(P, U, 0.5)
        top = max(math.log2(qa[x] / U[x]) for x in range(2))
        assert empirical_success_rate(P, qa, U, 10, top + 1e-9, 200, seed=1) == 0.0

    def test_matches_exact_enumeration(self):
        qa = tilted_bet(P, U, 0.5)
        trials = 4000
        exact = exact_success_probability(P, qa, U, 10, 0.05)
        emp = empirical_success_rate(P, qa, U, 10, 0.05, trials, seed=123)
        lo, hi = binomial_band(exact, trials)
        assert lo <= emp <= hi

    def test_exact_oracle_total(self):
        assert exact_success_probability(P, P, U, 8, -math.inf) == pytest.approx(1.0, abs=1e-14)


class TestTripartite:
    def test_copy_channel(self):
        t = np.zeros((2, 2, 2))
        for z in range(2):
            t[z, :, z] = 0.25
        x, y, z = sample_tripartite(TripartiteDist(t), 500, seed=4)
        assert np.array_equal(x, z)

    def test_reproducible(self):
        t = TripartiteDist(np.full((2, 3, 2), 1 / 12))
        a = sample_tripartite(t, 100, seed=8)
        b = sample_tripartite(t, 100, seed=8)
        assert all(np.array_equal(u, v) for u, v in zip(a, b))

    def test_product_tensor_decorrelates(self):
        t = TripartiteDist(np.einsum("i,j,k->ijk", [0.3, 0.7], [0.5, 0.5], [0.6, 0.4]))
        x, y, z = sample_tripartite(t, 10**5, seed=12)
        xz = np.zeros((2, 2))
        np.add.at(xz, (x, z), 1)
        assert mutual_information(xz / xz.sum()) < 1e-3

    def test_sideinfo_rate_converges(self, rng):
        t = TripartiteDist(rng.dirichlet(np.ones(8)).reshape(2, 2, 2))
        qa, qb = equilibrium_strategies(t)
        stats = run_sideinfo(t, qa, qb, 10**4, 60, seed=31)
        assert stats.within(asymptotic_value(t))
