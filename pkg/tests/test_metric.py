import math

import numpy as np
import pytest

from coarsekit.errors import PreconditionError, StructuralError
from coarsekit.metric import (
    FiniteMetricSpace,
    GroupAction,
    ball,
    neighborhood,
    product,
    quotient,
    quotient_with_map,
    validate_action,
    validate_metric,
)
from support import (
    brute_quotient_distance,
    cyclic_isometric_action,
    integer_points_space,
    line_space,
    space_from_matrix,
)


def two_point(d=1.0):
    return space_from_matrix([[0, d], [d, 0]])


class TestValidate:
    def test_smallest_metric_space(self):
        assert validate_metric(two_point()).ok

    def test_triangle_violation_witnessed(self):
        s = space_from_matrix([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
        rep = validate_metric(s)
        assert not rep.ok
        kinds = {v.kind for v in rep.violations}
        assert kinds == {"triangle"}
        witnesses = {v.witness for v in rep.violations}
        assert (0, 1, 2) in witnesses

    def test_symmetry_violation(self):
        s = space_from_matrix([[0, 1], [2, 0]])
        rep = validate_metric(s)
        assert any(v.kind == "symmetry" for v in rep.violations)

    def test_dimension_mismatch_is_structural(self):
        s = FiniteMetricSpace("bad", ("a", "b", "c"), np.zeros((2, 2)))
        with pytest.raises(StructuralError):
            validate_metric(s)

    def test_zero_distance_needs_pseudo_flag(self):
        rows = [[0, 0], [0, 0]]
        assert not validate_metric(space_from_matrix(rows)).ok
        assert validate_metric(space_from_matrix(rows, pseudo=True)).ok


def negation_action(space):
    # points must be ordered -k..k; negation reverses the order
    n = space.n
    flip = tuple(n - 1 - i for i in range(n))
    return GroupAction(
        space.id,
        ("e", "g"),
        (tuple(range(n)), flip),
        ((0, 1), (1, 0)),
    )


class TestQuotient:
    def test_line_negation(self):
        s = line_space([-2, -1, 0, 1, 2])
        q = quotient(s, negation_action(s))
        assert q.points == ("F·-2", "F·-1", "F·0")
        by = {p: i for i, p in enumerate(q.points)}
        assert q.d(by["F·-1"], by["F·-2"]) == 1
        assert q.d(by["F·0"], by["F·-1"]) == 1
        assert q.d(by["F·0"], by["F·-2"]) == 2

    def test_trivial_group_is_isometric_copy(self):
        s = line_space([0, 3, 7])
        act = GroupAction(s.id, ("e",), (tuple(range(3)),), ((0,),))
        q = quotient(s, act)
        assert np.array_equal(q.dist, s.dist)

    def test_swap_of_far_pair_with_fixed_center(self):
        # center at distance 3 from both swapped points, which sit at
        # distance 6 from each other (boundary of the triangle inequality)
        s = space_from_matrix(
            [[0, 3, 3], [3, 0, 6], [3, 6, 0]], labels=("c", "p", "q")
        )
        act = GroupAction(s.id, ("e", "g"), ((0, 1, 2), (0, 2, 1)), ((0, 1), (1, 0)))
        q = quotient(s, act)
        assert q.points == ("F·c", "F·p")
        expected = brute_quotient_distance(s, act, (0,), (1, 2))
        assert q.d(0, 1) == expected == 3

    def test_non_isometric_action_rejected(self):
        s = line_space([0, 1, 3])
        bad = GroupAction(s.id, ("e", "g"), ((0, 1, 2), (2, 1, 0)), ((0, 1), (1, 0)))
        with pytest.raises(StructuralError):
            quotient(s, bad)

    def test_randomized_quotients_validate_and_contract(self):
        rng = np.random.default_rng(7)
        for trial in range(25):
            base = integer_points_space(rng, int(rng.integers(4, 12)), space_id=f"b{trial}")
            order = int(rng.integers(2, 5))
            sym, act = cyclic_isometric_action(rng, base, order)
            q, orbit_of = quotient_with_map(act, sym)
            assert validate_metric(q).ok
            # contracting: d(Fx, Fx') <= d(x, x') for every pair of lifts
            for x in range(sym.n):
                for y in range(sym.n):
                    assert q.dist[orbit_of[x], orbit_of[y]] <= sym.dist[x, y]
            # agreement with full enumeration on a few orbit pairs
            reps = {}
            for i in range(sym.n):
                reps.setdefault(orbit_of[i], []).append(i)
            pairs = list(reps)[:4]
            for a in pairs:
                for b in pairs:
                    if a < b:
                        assert q.dist[a, b] == brute_quotient_distance(
                            sym, act, reps[a], reps[b]
                        )


class TestProduct:
    def test_diagonal_distances(self):
        a = two_point(3.0)
        b = space_from_matrix([[0, 4], [4, 0]], labels=("x", "y"))
        assert product([a, b], 1).dist[0, 3] == 7
        assert product([a, b], 2).dist[0, 3] == 5
        assert product([a, b], math.inf).dist[0, 3] == 4

    def test_labels_concatenate(self):
        a = two_point()
        b = space_from_matrix([[0, 4], [4, 0]], labels=("x", "y"))
        assert product([a, b], 1).points == ("a,x", "a,y", "b,x", "b,y")

    def test_rejects_bad_inputs(self):
        with pytest.raises(PreconditionError):
            product([], 2)
        with pytest.raises(PreconditionError):
            product([two_point()], 0.5)

    def test_lp_comparison_inequalities(self):
        rng = np.random.default_rng(3)
        exponents = [1.0, 2.0, 4.0, math.inf]
        for trial in range(10):
            m = int(rng.integers(2, 4))
            factors = [
                integer_points_space(rng, int(rng.integers(2, 4)), space_id=f"f{trial}_{k}")
                for k in range(m)
            ]
            prods = {p: product(factors, p) for p in exponents}
            n = prods[1.0].n
            samples = rng.integers(0, n, size=(40, 2))
            for p in exponents:
                for q in exponents:
                    if p > q:
                        continue
                    scale = m ** ((0 if math.isinf(p) else 1 / p) - (0 if math.isinf(q) else 1 / q))
                    for i, j in samples:
                        dq = prods[q].dist[i, j]
                        dp = prods[p].dist[i, j]
                        ref = max(dp, dq, 1.0)
                        assert dq <= dp + 1e-12 * ref
                        assert dp <= scale * dq + 1e-12 * ref


class TestBall:
    def test_unit_path_examples(self):
        s = line_space([0, 1, 2, 3])
        assert ball(s, 1, 1).indices == (0, 1, 2)
        assert ball(s, 1, 0).indices == (1,)
        assert ball(s, 1, 99).indices == (0, 1, 2, 3)

    def test_closed_neighborhood(self):
        s = line_space([0, 1, 2, 3, 4])
        sub = ball(s, 0, 0)
        assert neighborhood(s, sub, 2).indices == (0, 1, 2)


def test_validate_action_checks_group_axioms():
    s = line_space([0, 1])
    # composition table that is not a group (constant rows)
    bad = GroupAction(s.id, ("e", "g"), ((0, 1), (1, 0)), ((0, 0), (0, 0)))
    with pytest.raises(StructuralError):
        validate_action(bad, s)
