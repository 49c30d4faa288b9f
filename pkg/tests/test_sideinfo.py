import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finitekelly.divergence import Dist, entropy_of_weights, shannon_entropy
from finitekelly.kelly import wealth_log_ratio
from finitekelly.sideinfo import (
    CondStrategy,
    OnesWeight,
    TripartiteDist,
    asymptotic_rate,
    asymptotic_value,
    asymptotic_value_mi,
    bob_deviation_gain,
    deviation_penalty,
    equilibrium_strategies,
    payoff_conditional_form,
    payoff_direct,
    payoff_global_form,
    sideinfo_diagnostics,
    sideinfo_risk_reward,
)
from finitekelly.types import JointEmpiricalType, enumerate_types, log2_type_class_probability


def random_tensor(rng, sizes=(2, 2, 2), conc=1.0):
    return TripartiteDist(rng.dirichlet(np.full(int(np.prod(sizes)), conc)).reshape(sizes))


def random_cond(rng, rows, cols):
    return CondStrategy(rng.dirichlet(np.ones(cols), size=rows))


def copy_tensor(pz, ky=2):
    kz = len(pz)
    t = np.zeros((kz, ky, kz))
    for z, m in enumerate(pz):
        t[z, :, z] = m / ky
    return TripartiteDist(t)


def test_tensor_validation():
    with pytest.raises(ValueError):
        TripartiteDist(np.full((2, 2), 0.25))
    with pytest.raises(ValueError):
        TripartiteDist(np.full((2, 2, 2), 0.2))


def test_marginals_consistent(rng):
    t = random_tensor(rng, (2, 3, 2))
    assert np.allclose(t.p_xz, t.probs.sum(axis=1))
    assert np.allclose(t.p_yz, t.probs.sum(axis=0))
    assert np.allclose(t.marginal("zx"), t.p_xz.T)
    assert np.allclose(t.p_x[:, None] * t.p_z_given_x.matrix, t.p_xz)


def test_flat_round_trip(rng):
    t = random_tensor(rng, (3, 2, 2))
    assert np.array_equal(TripartiteDist.from_flat(t.sizes, t.flat()).probs, t.probs)


def test_zero_mass_rows_uniform():
    t = np.zeros((2, 1, 3))
    t[0, 0] = [0.2, 0.3, 0.5]
    qa, _ = equilibrium_strategies(TripartiteDist(t))
    assert qa.matrix[1].tolist() == pytest.approx([1 / 3] * 3)


def test_cond_strategy_rows_valid():
    with pytest.raises(ValueError):
        CondStrategy([[0.5, 0.6]])


class TestPayoffs:
    def test_forms_agree(self, rng):
        for _ in range(500):
            sizes = tuple(int(s) for s in rng.integers(1, 4, size=3))
            qa = random_cond(rng, sizes[0], sizes[2])
            qb = random_cond(rng, sizes[1], sizes[2])
            jt = JointEmpiricalType(rng.integers(0, 4, sizes) + (np.arange(np.prod(sizes)).reshape(sizes) == 0))
            a = payoff_conditional_form(qa, qb, jt)
            b = payoff_global_form(qa, qb, jt)
            assert a == pytest.approx(b, abs=1e-9)

    @given(st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_forms_match_direct_product(self, n, seed):
        rng = np.random.default_rng(seed)
        qa, qb = random_cond(rng, 2, 3), random_cond(rng, 2, 3)
        x, y, z = rng.integers(0, 2, n), rng.integers(0, 2, n), rng.integers(0, 3, n)
        jt = JointEmpiricalType.from_sequences(x, y, z, sizes=[2, 2, 3])
        direct = payoff_direct(qa, qb, x, y, z)
        assert payoff_conditional_form(qa, qb, jt) == pytest.approx(direct, abs=1e-9)
        assert payoff_global_form(qa, qb, jt) == pytest.approx(direct, abs=1e-9)

    def test_identical_bets_and_signals(self, rng):
        q = random_cond(rng, 2, 2)
        x = rng.integers(0, 2, 7)
        z = rng.integers(0, 2, 7)
        jt = JointEmpiricalType.from_sequences(x, x, z, sizes=[2, 2, 2])
        assert payoff_conditional_form(q, q, jt) == pytest.approx(0.0, abs=1e-12)
        assert payoff_global_form(q, q, jt) == pytest.approx(0.0, abs=1e-12)

    def test_no_side_information_reduces_to_kelly(self, rng):
        qa, qb = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        for t in enumerate_types(5, 3):
            jt = JointEmpiricalType(np.array(t.counts).reshape(1, 1, 3))
            got = payoff_conditional_form(CondStrategy([qa]), CondStrategy([qb]), jt)
            assert got == pytest.approx(wealth_log_ratio(qa, qb, t), abs=1e-10)

    def test_plug_in_value(self):
        # joint type equal to P_XYZ on a rational grid
        counts = np.array([[[3, 1], [2, 2]], [[1, 3], [2, 6]]])
        p = TripartiteDist(counts / counts.sum())
        qa, qb = equilibrium_strategies(p)
        jt = JointEmpiricalType(counts)
        got = payoff_global_form(qa, qb, jt)
        assert got == pytest.approx(jt.n * asymptotic_value(p), abs=1e-12)

    def test_support_escape(self):
        qa = CondStrategy([[1.0, 0.0]])
        qb = CondStrategy([[0.5, 0.5]])
        jt = JointEmpiricalType([[[1, 1]]])
        assert payoff_conditional_form(qa, qb, jt) == -math.inf
        assert payoff_global_form(qa, qb, jt) == -math.inf

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            payoff_conditional_form(random_cond(rng, 2, 2), random_cond(rng, 3, 2), JointEmpiricalType(np.ones((2, 2, 2), int)))


class TestValue:
    def test_alice_copy_bob_ignorant(self):
        pz = [0.2, 0.8]
        assert asymptotic_value(copy_tensor(pz)) == pytest.approx(shannon_entropy(pz), abs=1e-15)

    def test_independent_signals(self, rng):
        pxy = rng.dirichlet(np.ones(4)).reshape(2, 2)
        t = TripartiteDist(np.einsum("ij,k->ijk", pxy, [0.3, 0.7]))
        assert asymptotic_value(t) == pytest.approx(0.0, abs=1e-15)

    def test_noisy_copy(self):
        # Z uniform, X = Z with probability 0.9, Y uniform and independent
        t = np.zeros((2, 2, 2))
        for x in range(2):
            for z in range(2):
                t[x, :, z] = 0.5 * (0.9 if x == z else 0.1) / 2
        p = TripartiteDist(t)
        assert asymptotic_value(p) == pytest.approx(1 - shannon_entropy([0.9, 0.1]), abs=1e-15)

    def test_value_identity(self, rng):
        for _ in range(200):
            p = random_tensor(rng, tuple(int(s) for s in rng.integers(1, 4, 3)))
            assert asymptotic_value(p) == pytest.approx(asymptotic_value_mi(p), abs=1e-12)

    def test_equilibrium_rate_is_value(self, rng):
        p = random_tensor(rng)
        qa, qb = equilibrium_strategies(p)
        assert asymptotic_rate(p, qa, qb) == pytest.approx(asymptotic_value(p), abs=1e-12)


class TestNash:
    def test_penalty_zero_at_equilibrium(self, rng):
        p = random_tensor(rng, (3, 2, 3))
        qa, qb = equilibrium_strategies(p)
        assert deviation_penalty(p, qa) == pytest.approx(0.0, abs=1e-15)
        assert bob_deviation_gain(p, qb) == pytest.approx(0.0, abs=1e-15)

    def test_perturbations_strictly_positive(self, rng):
        for _ in range(200):
            p = random_tensor(rng)
            qa, _ = equilibrium_strategies(p)
            dev = random_cond(rng, 2, 2)
            assert deviation_penalty(p, dev) > 0

    def test_penalty_is_rate_loss(self, rng):
        for _ in range(50):
            p = random_tensor(rng)
            qa, qb = equilibrium_strategies(p)
            dev = random_cond(rng, 2, 2)
            loss = asymptotic_rate(p, qa, qb) - asymptotic_rate(p, dev, qb)
            assert deviation_penalty(p, dev) == pytest.approx(loss, abs=1e-12)
            gain = asymptotic_rate(p, qa, dev) - asymptotic_rate(p, qa, qb)
            assert bob_deviation_gain(p, dev) == pytest.approx(gain, abs=1e-12)
            assert gain >= 0

    def test_zero_mass_rows_ignored(self):
        t = np.zeros((2, 1, 2))
        t[0, 0] = [0.4, 0.6]
        p = TripartiteDist(t)
        dev = CondStrategy([[0.4, 0.6], [1.0, 0.0]])
        assert deviation_penalty(p, dev) == 0.0


class TestRiskReward:
    def test_ones_weight_identity(self, rng):
        qb = random_cond(rng, 3, 2)
        lam = rng.dirichlet(np.ones(6)).reshape(3, 2)
        direct = math.fsum((lam * np.log2(lam / qb.matrix)).ravel())
        assert OnesWeight(qb).divergence_from(lam) == pytest.approx(direct, abs=1e-12)

    def test_zero_risk_at_population(self):
        counts = np.array([[[1, 2], [1, 0]], [[2, 1], [1, 4]]])
        p = TripartiteDist(counts / counts.sum())
        _, qb = equilibrium_strategies(p)
        risk, _ = sideinfo_risk_reward(p, JointEmpiricalType(counts.sum(axis=0)), qb)
        assert risk == pytest.approx(0.0, abs=1e-12)

    def test_reward_is_payoff_of_matching_bet(self, rng):
        # Alice betting the empirical conditional lam(z|x) earns the stated reward
        for _ in range(100):
            p = random_tensor(rng)
            qb = random_cond(rng, 2, 2)
            jt = JointEmpiricalType(rng.integers(1, 5, (2, 2, 2)))
            qa = CondStrategy.from_joint(jt.freq.sum(axis=1))
            _, reward = sideinfo_risk_reward(p, jt, qb)
            assert reward == pytest.approx(payoff_conditional_form(qa, qb, jt), abs=1e-9)

    def test_single_bob_symbol_reduces(self, rng):
        pz = rng.dirichlet(np.ones(2))
        p = TripartiteDist(np.reshape(pz, (1, 1, 2)))
        qb = CondStrategy([[0.5, 0.5]])
        jt = JointEmpiricalType([[[3, 1]]])
        risk, reward = sideinfo_risk_reward(p, jt, qb)
        lam = jt.freq.ravel()
        assert risk == pytest.approx(4 * math.fsum(lam * np.log2(lam / pz)), abs=1e-12)
        assert reward == pytest.approx(wealth_log_ratio(lam, [0.5, 0.5], enumerate_types(4, 2)[3]), abs=1e-12)

    def test_exponent_against_exact_class_probability(self, rng):
        p = random_tensor(rng)
        n = 6
        qb = random_cond(rng, 2, 2)
        flat_p = p.p_yz.ravel()
        for t in enumerate_types(n, 4):
            jt = JointEmpiricalType(np.array(t.counts).reshape(2, 2))
            risk, _ = sideinfo_risk_reward(p, jt, qb)
            exact = -log2_type_class_probability(flat_p, t)
            assert -1e-9 <= exact - risk <= 4 * math.log2(n + 1) + 1e-9

    def test_diagnostics(self, rng):
        jt = JointEmpiricalType(rng.integers(1, 5, (2, 2, 2)))
        d = sideinfo_diagnostics(random_tensor(rng), jt)
        assert d["h_yz"] >= d["h_z_given_y"]
