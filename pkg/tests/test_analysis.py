"""Robustness, explanation, marginal and unateness queries against oracles."""

import math
import random
from fractions import Fraction

import pytest

from nnobdd import (
    Manager,
    Unateness,
    dataset_average_robustness,
    fooling_complete,
    instance_robustness,
    marginal,
    marginal_grid,
    max_robustness,
    model_robustness,
    pi_explanation,
    robust_sets,
    robustness_histogram,
    unateness,
    unateness_grid,
)

from oracles import (
    all_instances,
    bdd_from_table,
    bits_of,
    formula_table,
    forces_label,
    hamming_robustness,
    max_positive_robustness,
    mean_robustness,
    min_sufficient_size,
    random_formula,
    robustness_counts,
    tt_marginal,
    tt_unateness,
)


def or2():
    m = Manager(2)
    return m, m.literal(0) | m.literal(1)


def and2():
    m = Manager(2)
    return m, m.literal(0) & m.literal(1)


def random_nontrivial(rng, n, manager):
    while True:
        if rng.random() < 0.5:
            expr = random_formula(rng, n, depth=rng.randint(2, 4))
            table = formula_table(expr, n)
        else:
            table = [rng.randint(0, 1) for _ in range(1 << n)]
        if 0 < sum(table) < len(table):
            return bdd_from_table(manager, table), table


class TestInstanceRobustness:
    def test_trivial_is_infinite(self):
        m = Manager(2)
        assert instance_robustness(m.true, (0, 1)) == math.inf
        assert instance_robustness(m.false, (0, 1)) == math.inf

    def test_conjunction_breaks_in_one_flip(self):
        m, f = and2()
        assert instance_robustness(f, (1, 1)) == 1

    def test_disjunction_needs_two_flips(self):
        m, f = or2()
        assert instance_robustness(f, (1, 1)) == 2

    def test_matches_bfs_oracle(self):
        rng = random.Random(404)
        for _ in range(60):
            n = rng.randint(1, 8)
            m = Manager(n)
            f, table = random_nontrivial(rng, n, m)
            oracle = hamming_robustness(table, n)
            for i in range(1 << n):
                assert instance_robustness(f, bits_of(i, n)) == oracle[i]


class TestRobustSets:
    def test_disjunction_second_level(self):
        m, f = or2()
        levels = robust_sets(f)
        assert levels[0] == f
        assert levels[1] == (m.literal(0) & m.literal(1))
        assert len(levels) == 2

    def test_conjunction_stops_immediately(self):
        m, f = and2()
        assert len(robust_sets(f)) == 1

    def test_levels_shrink(self):
        rng = random.Random(405)
        for _ in range(30):
            n = rng.randint(2, 7)
            m = Manager(n)
            f, _ = random_nontrivial(rng, n, m)
            levels = robust_sets(f)
            counts = [m.model_count(level) for level in levels]
            assert all(a >= b for a, b in zip(counts, counts[1:]))
            assert counts[-1] > 0

    def test_level_chain_empties_within_n(self):
        rng = random.Random(406)
        for _ in range(40):
            n = rng.randint(1, 8)
            m = Manager(n)
            f, _ = random_nontrivial(rng, n, m)
            levels = robust_sets(f)
            assert len(levels) <= n
            # one more step from the last satisfiable level must be empty
            last = levels[-1]
            nxt = m.true
            for v in range(n):
                nxt = nxt & m.condition(last, v, 1) & m.condition(last, v, 0)
            assert nxt == m.false

    def test_trivial_rejected(self):
        m = Manager(2)
        with pytest.raises(ValueError):
            robust_sets(m.true)


class TestModelRobustness:
    def test_single_variable(self):
        m = Manager(1)
        profile = model_robustness(m.literal(0))
        assert profile.positive.flip_sum == 1
        assert profile.negative.flip_sum == 1
        assert profile.mr == 1

    def test_disjunction_profile(self):
        m, f = or2()
        profile = model_robustness(f)
        assert profile.positive.counts == ((1, 2), (2, 1))
        assert profile.positive.flip_sum == 4
        assert profile.negative.counts == ((1, 1),)
        assert profile.mr == Fraction(5, 4)
        assert profile.maxr == 2

    def test_matches_exhaustive_mean(self):
        rng = random.Random(407)
        for _ in range(40):
            n = rng.randint(1, 8)
            m = Manager(n)
            f, table = random_nontrivial(rng, n, m)
            assert model_robustness(f).mr == mean_robustness(table, n)

    def test_per_polarity_counts_match_oracle(self):
        rng = random.Random(408)
        for _ in range(30):
            n = rng.randint(1, 7)
            m = Manager(n)
            f, table = random_nontrivial(rng, n, m)
            profile = model_robustness(f)
            assert dict(profile.positive.counts) == robustness_counts(table, n, True)
            assert dict(profile.negative.counts) == robustness_counts(table, n, False)

    def test_counts_partition_and_are_disjoint(self):
        rng = random.Random(409)
        for _ in range(20):
            n = rng.randint(2, 7)
            m = Manager(n)
            f, _ = random_nontrivial(rng, n, m)
            levels = robust_sets(f)
            exact = [
                levels[k] & ~levels[k + 1] if k + 1 < len(levels) else levels[k]
                for k in range(len(levels))
            ]
            total = sum(m.model_count(g) for g in exact)
            assert total == m.model_count(f)
            for i in range(len(exact)):
                for j in range(i + 1, len(exact)):
                    assert (exact[i] & exact[j]) == m.false


class TestMaxRobustness:
    def test_disjunction(self):
        _, f = or2()
        assert max_robustness(f) == 2

    def test_parity(self):
        m = Manager(4)
        f = m.literal(0)
        for v in range(1, 4):
            f = f ^ m.literal(v)
        assert max_robustness(f) == 1

    def test_conjunction_positive_side(self):
        _, f = and2()
        assert max_robustness(f) == 1

    def test_matches_exhaustive_positive_max(self):
        rng = random.Random(410)
        for _ in range(40):
            n = rng.randint(1, 8)
            m = Manager(n)
            f, table = random_nontrivial(rng, n, m)
            assert max_robustness(f) == max_positive_robustness(table, n)


class TestHistogram:
    def test_disjunction(self):
        _, f = or2()
        assert robustness_histogram(f) == {1: Fraction(1, 2), 2: Fraction(1, 4)}

    def test_single_literal(self):
        m = Manager(1)
        assert robustness_histogram(m.literal(0)) == {1: Fraction(1, 2)}

    def test_proportions_sum_to_positive_mass(self):
        rng = random.Random(411)
        for _ in range(25):
            n = rng.randint(1, 7)
            m = Manager(n)
            f, table = random_nontrivial(rng, n, m)
            hist = robustness_histogram(f)
            assert sum(hist.values()) == Fraction(sum(table), 1 << n)
            assert sum(hist.values()) <= 1


class TestPiExplanation:
    def test_disjunction_single_literal(self):
        _, f = or2()
        reason = pi_explanation(f, (1, 1))
        assert reason.cardinality == 1
        assert reason.literals == ((0, 1),)  # ties prefer the lower variable

    def test_conjunction_needs_both(self):
        _, f = and2()
        reason = pi_explanation(f, (1, 1))
        assert reason.literals == ((0, 1), (1, 1))

    def test_cardinality_matches_brute_force(self):
        rng = random.Random(412)
        for _ in range(60):
            n = rng.randint(1, 8)
            m = Manager(n)
            f, table = random_nontrivial(rng, n, m)
            i = rng.randrange(1 << n)
            x = bits_of(i, n)
            reason = pi_explanation(f, x)
            assert reason.cardinality == min_sufficient_size(table, n, x)

    def test_sufficiency_and_minimality(self):
        rng = random.Random(413)
        for _ in range(40):
            n = rng.randint(1, 7)
            m = Manager(n)
            f, table = random_nontrivial(rng, n, m)
            x = bits_of(rng.randrange(1 << n), n)
            reason = pi_explanation(f, x)
            assert forces_label(table, n, reason.literals, reason.label)
            assert all(x[var] == bit for var, bit in reason.literals)
            for dropped in range(reason.cardinality):
                subset = (
                    reason.literals[:dropped] + reason.literals[dropped + 1 :]
                )
                assert not forces_label(table, n, subset, reason.label)

    def test_trivial_rejected(self):
        m = Manager(2)
        with pytest.raises(ValueError):
            pi_explanation(m.true, (0, 0))


class TestFooling:
    def test_zero_fill(self):
        _, f = or2()
        out = fooling_complete(f, {0: 1}, (0, 0))
        assert out == (1, 0)
        assert f.manager.evaluate(f, out) == 1

    def test_every_fill_keeps_the_label(self):
        rng = random.Random(414)
        for _ in range(20):
            n = rng.randint(1, 6)
            m = Manager(n)
            f, table = random_nontrivial(rng, n, m)
            x = bits_of(rng.randrange(1 << n), n)
            reason = pi_explanation(f, x)
            for fill in all_instances(n):
                out = fooling_complete(f, reason, fill)
                assert m.evaluate(f, out) == reason.label
                assert all(out[var] == bit for var, bit in reason.literals)

    def test_insufficient_reason_rejected(self):
        _, f = or2()
        with pytest.raises(ValueError):
            fooling_complete(f, {0: 0}, (0, 0))

    def test_duplicate_assignment_rejected(self):
        _, f = or2()
        with pytest.raises(ValueError):
            fooling_complete(f, [(0, 1), (0, 0)], (0, 0))


class TestMarginal:
    def test_disjunction(self):
        _, f = or2()
        assert marginal(f, 0) == Fraction(2, 3)

    def test_literal(self):
        m = Manager(1)
        assert marginal(m.literal(0), 0) == 1

    def test_unused_variable_is_half(self):
        m = Manager(3)
        f = m.literal(0) & m.literal(1)
        assert marginal(f, 2) == Fraction(1, 2)

    def test_matches_truth_table(self):
        rng = random.Random(415)
        for _ in range(40):
            n = rng.randint(1, 8)
            m = Manager(n)
            f, table = random_nontrivial(rng, n, m)
            v = rng.randrange(n)
            assert marginal(f, v) == tt_marginal(table, n, v)

    def test_unsatisfiable_rejected(self):
        m = Manager(2)
        with pytest.raises(ValueError):
            marginal(m.false, 0)


class TestUnateness:
    def test_examples(self):
        m = Manager(3)
        a, b = m.literal(0), m.literal(1)
        assert unateness(a | b, 0) == Unateness.POSITIVE
        assert unateness(~a & ~b, 0) == Unateness.NEGATIVE
        assert unateness(a & b, 2) == Unateness.UNUSED
        assert unateness(a ^ b, 0) == Unateness.NONE

    def test_matches_truth_table(self):
        rng = random.Random(416)
        for _ in range(60):
            n = rng.randint(1, 8)
            m = Manager(n)
            f, table = random_nontrivial(rng, n, m)
            v = rng.randrange(n)
            assert unateness(f, v).value == tt_unateness(table, n, v)


class TestGridsAndDatasets:
    def test_grid_shapes_and_values(self):
        m = Manager(4)
        f = (m.literal(0) | m.literal(1)) & m.literal(3)
        mg = marginal_grid(f, 2, 2)
        assert [(v, r, c) for v, r, c, _ in mg] == [
            (0, 0, 0),
            (1, 0, 1),
            (2, 1, 0),
            (3, 1, 1),
        ]
        assert mg[2][3] == Fraction(1, 2)  # unused pixel
        ug = unateness_grid(f, 2, 2)
        assert ug[3][3] == Unateness.POSITIVE
        assert ug[2][3] == Unateness.UNUSED

    def test_grid_must_cover_variables(self):
        m = Manager(4)
        with pytest.raises(ValueError):
            marginal_grid(m.true, 3, 2)

    def test_dataset_average(self):
        m, f = or2()
        rows = [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert dataset_average_robustness(f, rows) == Fraction(5, 4)

    def test_dataset_single_row(self):
        m, f = or2()
        assert dataset_average_robustness(f, [(1, 1)]) == 2

    def test_dataset_order_invariance(self):
        m, f = or2()
        rows = [(0, 0), (1, 1), (1, 0)]
        assert dataset_average_robustness(f, rows) == dataset_average_robustness(
            f, list(reversed(rows))
        )

    def test_dataset_trivial_rejected(self):
        m = Manager(2)
        with pytest.raises(ValueError):
            dataset_average_robustness(m.true, [(0, 0)])
