import math

import numpy as np
import pytest

from csplab.analytic import (
    AnglePlan,
    avg_advantage_2xor,
    no_overlap_term_expectation,
    optimal_g_2xor,
    optimize_beta,
    optimize_beta_mixed,
    predicted_advantage_lower_bound,
)
from csplab.csp import (
    WeightDistribution,
    dist_kxor,
    gen_scopes_circulant,
    gen_scopes_no_overlap,
    has_gf2_independent_neighborhoods,
    sample_instance,
    sample_weighted_xor,
)
from csplab.qaoa_sim import (
    build_cost,
    expectation,
    per_constraint_expectation,
    qaoa_state,
)

BETA = np.pi / 8


def edge_excess_degrees(edges):
    deg = {}
    for a, b in edges:
        deg[a] = deg.get(a, 0) + 1
        deg[b] = deg.get(b, 0) + 1
    return [(deg[a] - 1, deg[b] - 1) for a, b in edges]


def exact_no_overlap_instance(n, m, k, max_degree, seed):
    """No-overlap scopes filtered so the closed form is exact."""
    for attempt in range(200):
        scopes = gen_scopes_no_overlap(n, m, k, max_degree, seed=(seed, attempt))
        if has_gf2_independent_neighborhoods(scopes):
            return sample_instance(scopes, dist_kxor(k), seed=(seed, attempt, 1), n=n)
    raise AssertionError("could not build an independence-filtered instance")


class TestAnglePlan:
    def test_gamma_scaling(self):
        plan = AnglePlan(beta=BETA, g=1.0, excess_degree=4)
        assert plan.gamma == pytest.approx(0.5)

    def test_requires_positive_degree(self):
        with pytest.raises(ValueError):
            AnglePlan(beta=BETA, g=1.0, excess_degree=0)


class TestAvgAdvantage2Xor:
    def test_isolated_edge(self):
        for gamma in (0.3, 1.0, np.pi / 2):
            want = math.sin(gamma) / 2
            assert avg_advantage_2xor([(0, 0)], BETA, gamma) == pytest.approx(want)
        # certainty at the quarter turn
        assert avg_advantage_2xor([(0, 0)], BETA, np.pi / 2) == pytest.approx(0.5)

    def test_vanishes_at_zero_angles(self):
        assert avg_advantage_2xor([(2, 3)], 0.0, 0.7) == 0.0
        assert avg_advantage_2xor([(2, 3)], BETA, 0.0) == 0.0

    def test_matches_sign_ensemble_statevector(self):
        # n=12 graph with max excess degree 3; >=500 sign resamples
        edges = gen_scopes_circulant(12, 4)
        gamma = 1.0 / math.sqrt(3)
        want = avg_advantage_2xor(edge_excess_degrees(edges), BETA, gamma)
        base = build_cost(sample_instance(edges, dist_kxor(2), seed=(0, 0), n=12), "full")
        advs = []
        for rep in range(500):
            inst = sample_instance(edges, dist_kxor(2), seed=(0, rep), n=12)
            op = base.with_weights(build_cost(inst, "full").weights)
            state = qaoa_state(op, BETA, gamma)
            advs.append(expectation(state, inst) - 0.5 * inst.m)
        advs = np.array(advs)
        se = advs.std(ddof=1) / math.sqrt(len(advs))
        assert abs(advs.mean() - want) <= 3 * se

    def test_asymptotic_prefactor(self):
        g = 1.0
        for D in (100, 400):
            gamma = g / math.sqrt(D)
            per_edge = avg_advantage_2xor([(D, D)], BETA, gamma)
            limit = 0.5 * g * math.exp(-0.5 * g * g)
            assert abs(per_edge * math.sqrt(D) - limit) / limit < 0.05


class TestOptimalG:
    def test_argmax_is_one(self):
        g, value = optimal_g_2xor()
        assert g == pytest.approx(1.0, abs=1e-6)
        assert value == pytest.approx(1 / (2 * math.sqrt(math.e)), abs=1e-9)

    def test_unimodality_spot_check(self):
        def objective(g):
            return 0.5 * g * math.exp(-0.5 * g * g)

        assert objective(2.0) < objective(1.0)


class TestNoOverlapTermExpectation:
    def test_matches_statevector_per_term(self):
        for seed in range(4):
            inst = exact_no_overlap_instance(n=14, m=8, k=3, max_degree=3, seed=seed)
            gamma = 0.5
            state = qaoa_state(build_cost(inst, "truncated"), BETA, gamma)
            per = per_constraint_expectation(state, inst)
            for u in range(inst.m):
                want = per[u] - inst.constraints[u].predicate.mean()
                got = no_overlap_term_expectation(inst, u, BETA, gamma)
                assert got == pytest.approx(want, abs=1e-10)

    def test_isolated_constraint_consistent_with_edge_formula(self):
        inst = sample_instance([(0, 1)], dist_kxor(2), seed=3, n=2)
        for gamma in (0.2, 0.9):
            got = no_overlap_term_expectation(inst, 0, BETA, gamma)
            assert got == pytest.approx(avg_advantage_2xor([(0, 0)], BETA, gamma), abs=1e-12)

    def test_zero_gamma(self):
        inst = exact_no_overlap_instance(n=12, m=6, k=3, max_degree=3, seed=9)
        assert no_overlap_term_expectation(inst, 0, BETA, 0.0) == 0.0

    def test_rejects_overlapping_instance(self):
        scopes = [(0, 1, 2), (0, 1, 3)]
        inst = sample_instance(scopes, dist_kxor(3), seed=0, n=4)
        with pytest.raises(ValueError):
            no_overlap_term_expectation(inst, 0, BETA, 0.3)

    def test_rejects_non_covering_predicates(self):
        from csplab.csp import dist_ksat

        inst = sample_instance([(0, 1, 2)], dist_ksat(3), seed=0, n=3)
        with pytest.raises(ValueError):
            no_overlap_term_expectation(inst, 0, BETA, 0.3)

    def test_weighted_instance_supported(self):
        scopes = gen_scopes_no_overlap(12, 5, 3, 2, seed=4)
        if not has_gf2_independent_neighborhoods(scopes):
            pytest.skip("unlucky scope draw")
        inst = sample_weighted_xor(scopes, WeightDistribution.gaussian(0.7), seed=5, n=12)
        gamma = 0.4
        state = qaoa_state(build_cost(inst, "truncated"), BETA, gamma)
        per = per_constraint_expectation(state, inst)
        total = sum(no_overlap_term_expectation(inst, u, BETA, gamma) for u in range(inst.m))
        assert total == pytest.approx(per.sum(), abs=1e-10)


class TestAdvantageLowerBound:
    def test_single_variable_case(self):
        for beta in (0.2, np.pi / 4):
            want = 2 * 1.0 * 0.3 * math.sin(2 * beta) * math.exp(-2 * 0.3)
            assert predicted_advantage_lower_bound(1, 0.3, 0.3, beta, 1.0) == pytest.approx(want)

    def test_pair_case_value(self):
        got = predicted_advantage_lower_bound(2, 0.25, 0.25, BETA, 1.0)
        assert got == pytest.approx(0.5 * math.exp(-0.5), abs=1e-12)
        assert got == pytest.approx(0.3033, abs=5e-4)

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
    def test_optimized_bound_positive(self, k):
        var = 2.0 ** (-2 * k)
        beta = optimize_beta(k, 1.0, var)
        assert 0 < beta < math.pi / 4
        assert predicted_advantage_lower_bound(k, var, var, beta, 1.0) > 0

    @pytest.mark.parametrize("d", [9, 16])
    def test_half_bound_below_exact_ensemble_mean(self, d):
        # regular pair instances: exact per-constraint mean advantage * sqrt(D)
        gamma = 1.0 / math.sqrt(d)
        exact = avg_advantage_2xor([(d, d)], BETA, gamma) * math.sqrt(d)
        bound = predicted_advantage_lower_bound(2, 0.25, 0.25, BETA, 1.0)
        assert 0.5 * bound <= exact

    def test_beta_quarter_optimal_for_k1(self):
        assert optimize_beta(1, 1.0, 0.25) == pytest.approx(math.pi / 4, abs=1e-6)

    def test_mixed_arity_beta_between_pure_optima(self):
        b2 = optimize_beta(2, 1.0, 0.25)
        b4 = optimize_beta(4, 1.0, 0.25)
        mixed = optimize_beta_mixed([(2, 0.25), (4, 0.25)], 1.0, 0.25)
        assert min(b2, b4) - 1e-6 <= mixed <= max(b2, b4) + 1e-6
