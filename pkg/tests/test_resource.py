import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_dist
from finitekelly.divergence import Dist, conditional_entropy, mutual_information
from finitekelly.kelly import wealth_log_ratio
from finitekelly.resource import (
    CodeTable,
    alternating_best_response,
    arq_log_value,
    arq_numeric,
    conditional_negentropy_E_alpha,
    conditional_payout_bits,
    conditional_tables,
    divergence_infimum,
    is_free_state,
    lengths_from_strategy,
    monotone_E_alpha,
    monotone_E_alpha_xy_z,
    monotone_M_alpha,
    payout_bits,
    sibson_infimum,
)
from finitekelly.sideinfo import CondStrategy, TripartiteDist, asymptotic_value
from finitekelly.types import ResourceCapError, type_of_sequence
from oracles import FROZEN


def random_tensor(rng, sizes=(2, 2, 2)):
    return TripartiteDist(rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes))


def random_joint(rng, ka, kz):
    return rng.dirichlet(np.ones(ka * kz)).reshape(ka, kz)


class TestFreeStates:
    def test_product_is_free(self, rng):
        px, py, pz = (rng.dirichlet(np.ones(k)) for k in (2, 3, 2))
        assert is_free_state(TripartiteDist(np.einsum("i,j,k->ijk", px, py, pz)))

    def test_copy_is_not_free(self):
        t = np.zeros((2, 1, 2))
        t[0, 0, 0] = t[1, 0, 1] = 0.5
        assert not is_free_state(TripartiteDist(t))

    def test_small_perturbation_detected(self):
        prod = np.full((2, 2, 2), 1 / 8)
        e = 0.004
        prod[0, 0, 0] += e
        prod[0, 0, 1] -= e
        prod[1, 1, 0] -= e
        prod[1, 1, 1] += e
        t = TripartiteDist(prod)
        assert 0 < mutual_information(t.probs.reshape(4, 2)) < 2e-3
        assert not is_free_state(t, tol=1e-9)


class TestMonotones:
    def test_independent_pair_is_zero(self, rng):
        pa, pz = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(2))
        for a in (0.5, 1, 2):
            res = monotone_E_alpha(np.outer(pa, pz), a)
            assert res.value == pytest.approx(0.0, abs=1e-9)

    def test_perfect_correlation_one_bit(self):
        res = monotone_E_alpha(np.diag([0.5, 0.5]), 1)
        assert res.value == pytest.approx(1.0, abs=1e-9)
        assert res.closed_form == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 2.0, 3.0])
    def test_matches_sibson_closed_form(self, alpha, rng):
        for _ in range(10):
            P = random_joint(rng, 3, 2)
            assert monotone_E_alpha(P, alpha).value == pytest.approx(sibson_infimum(P, alpha), abs=1e-7)

    def test_kl_case_asserts_mutual_information(self, rng):
        for _ in range(20):
            P = random_joint(rng, int(rng.integers(2, 5)), int(rng.integers(2, 4)))
            res = monotone_E_alpha(P, 1)
            assert abs(res.value - mutual_information(P)) <= 1e-6

    def test_grid_and_numeric_reported(self, rng):
        res = monotone_E_alpha(random_joint(rng, 2, 3), 2)
        assert math.isfinite(res.grid) and res.gap >= -1e-12

    @pytest.mark.parametrize("alpha", [0.5, 1, 2])
    def test_non_increasing_under_local_maps(self, alpha, rng):
        for _ in range(15):
            ka, kz, m = (int(v) for v in rng.integers(2, 4, 3))
            P = random_joint(rng, ka, kz)
            T = rng.dirichlet(np.ones(m), size=ka).T  # m x ka
            before = monotone_E_alpha(P, alpha).value
            after = monotone_E_alpha(T @ P, alpha).value
            assert after <= before + 1e-6


class TestNegentropy:
    def test_uniform_independent_is_zero(self, rng):
        pa = rng.dirichlet(np.ones(2))
        P = np.outer(pa, np.full(3, 1 / 3))
        for a in (0.5, 1, 2):
            assert conditional_negentropy_E_alpha(P, a).value == pytest.approx(0.0, abs=1e-9)

    def test_perfect_correlation(self):
        assert conditional_negentropy_E_alpha(np.eye(3) / 3, 1).value == pytest.approx(math.log2(3), abs=1e-9)

    def test_closed_form(self, rng):
        for _ in range(20):
            P = random_joint(rng, 3, 3)
            res = conditional_negentropy_E_alpha(P, 1)
            assert res.value == pytest.approx(math.log2(3) - conditional_entropy(P), abs=1e-6)


class TestTripartiteMonotones:
    def test_M_below_E(self, rng):
        for _ in range(5):
            t = random_tensor(rng)
            for a in (0.5, 1, 2):
                assert monotone_M_alpha(t, a).value <= monotone_E_alpha_xy_z(t, a).value + 1e-9

    def test_M_closed_form_at_one(self, rng):
        t = random_tensor(rng)
        res = monotone_M_alpha(t, 1)
        assert res.value == pytest.approx(res.closed_form, abs=1e-7)

    def test_M_zero_on_free_states(self, rng):
        px, py, pz = (rng.dirichlet(np.ones(2)) for _ in range(3))
        t = TripartiteDist(np.einsum("i,j,k->ijk", px, py, pz))
        assert monotone_M_alpha(t, 2).value == pytest.approx(0.0, abs=1e-9)

    def test_M_desk_scale_only(self, rng):
        with pytest.raises(ResourceCapError):
            monotone_M_alpha(random_tensor(rng, (3, 2, 2)), 1)

    def test_fixed_only_references(self):
        P = np.array([[0.25, 0.25], [0.25, 0.25]])
        res = divergence_infimum(P, [np.array([0.5, 0.5]), np.array([0.5, 0.5])], 2)
        assert res.value == pytest.approx(0.0, abs=1e-15)


class TestARQ:
    def test_log_value_cross_module(self, rng):
        t = random_tensor(rng)
        assert arq_log_value(t) == asymptotic_value(t)

    def test_symmetric_information(self, rng):
        pz_x = rng.dirichlet(np.ones(2), size=2)
        px = rng.dirichlet(np.ones(2))
        t = np.zeros((2, 2, 2))
        for x in range(2):
            t[x, x] = px[x] * pz_x[x]
        assert arq_log_value(TripartiteDist(t)) == pytest.approx(0.0, abs=1e-15)

    def test_alternating_best_response_converges(self, rng):
        for _ in range(30):
            t = random_tensor(rng, tuple(int(s) for s in rng.integers(2, 4, 3)))
            run = alternating_best_response(t, grid_step=0.05)
            assert abs(run.value - arq_log_value(t)) <= 0.02

    def test_grid_minimax_log(self, rng):
        for _ in range(10):
            t = random_tensor(rng)
            lo, hi = arq_numeric(t, np.log2, 0.05)
            v = arq_log_value(t)
            assert abs(lo - v) <= 0.02 and abs(hi - v) <= 0.02

    def test_degenerate_grid_identity(self, rng):
        row = np.array([[0.5, 0.5]])
        lo, hi = arq_numeric(random_tensor(rng), lambda r: r, alice_rows=row, bob_rows=row)
        assert lo == pytest.approx(1.0) and hi == pytest.approx(1.0)

    def test_independent_outcome(self, rng):
        pxy = rng.dirichlet(np.ones(4)).reshape(2, 2)
        t = TripartiteDist(np.einsum("ij,k->ijk", pxy, [0.5, 0.5]))
        lo, hi = arq_numeric(t, np.log2, 0.05)
        assert lo == pytest.approx(0.0, abs=1e-12) and hi == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=25)
    @given(st.integers(0, 2**32 - 1))
    def test_minimax_ordering_convex_f(self, seed):
        t = random_tensor(np.random.default_rng(seed))
        lo, hi = arq_numeric(t, lambda r: r**2, 0.1)
        assert lo <= hi + 0.2

    def test_grid_cap(self, rng):
        with pytest.raises(ResourceCapError):
            arq_numeric(random_tensor(rng, (3, 3, 3)), np.log2, 0.05, cap=10**6)


class TestCodes:
    def test_uniform_four(self):
        assert lengths_from_strategy(Dist.uniform(4)).lengths == (2.0, 2.0, 2.0, 2.0)

    def test_dyadic(self):
        t = lengths_from_strategy([0.5, 0.25, 0.25])
        assert t.lengths == (1.0, 2.0, 2.0) and t.kraft_sum == 1.0

    def test_shannon_integer(self):
        t = lengths_from_strategy([0.7, 0.3], "integer")
        assert t.lengths == (1.0, 2.0) and t.kraft_sum == 0.75

    def test_kraft_checked_on_construction(self):
        with pytest.raises(ValueError):
            CodeTable("real", (1.0, 1.0, 2.0))
        with pytest.raises(ValueError):
            CodeTable("integer", (1.0, 1.5))
        with pytest.raises(ValueError):
            CodeTable("integer", (1.0, 1.0, 1.0))
        with pytest.raises(ValueError):
            lengths_from_strategy([1.0, 0.0])

    def test_payout_examples(self):
        a = lengths_from_strategy([0.7, 0.3])
        b = lengths_from_strategy([0.5, 0.5])
        assert payout_bits(a, a, [0, 1, 1]) == 0.0
        assert payout_bits(b, a, [0]) == pytest.approx(FROZEN["payout_z0"], abs=1e-15)
        assert payout_bits(b, a, [1]) < 0

    @given(st.integers(0, 2**32 - 1), st.integers(1, 40))
    def test_payout_is_wealth_ratio(self, seed, n):
        rng = np.random.default_rng(seed)
        qa, qb = random_dist(rng, 3), random_dist(rng, 3)
        z = rng.integers(0, 3, n)
        k = payout_bits(lengths_from_strategy(qb), lengths_from_strategy(qa), z)
        ratio = math.prod(qa[s] / qb[s] for s in z)
        assert 2.0**k == pytest.approx(ratio, rel=1e-10)
        assert k == pytest.approx(wealth_log_ratio(qa, qb, type_of_sequence(z, 3)), abs=1e-10)

    def test_conditional_payout(self, rng):
        qa, qb = CondStrategy(rng.dirichlet(np.ones(2), 2)), CondStrategy(rng.dirichlet(np.ones(2), 3))
        x, y, z = rng.integers(0, 2, 9), rng.integers(0, 3, 9), rng.integers(0, 2, 9)
        k = conditional_payout_bits(conditional_tables(qb), conditional_tables(qa), x, y, z)
        direct = math.fsum(math.log2(qa.matrix[a, c] / qb.matrix[b, c]) for a, b, c in zip(x, y, z))
        assert k == pytest.approx(direct, abs=1e-12)
