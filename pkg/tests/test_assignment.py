import itertools
import random

import pytest

from roadaudit.assignment import hungarian, matching_cost


def brute_force_min(cost):
    """Exhaustive minimum over all full-cardinality matchings.

    Totals are summed in row order, matching matching_cost, so exact
    float comparisons are meaningful.
    """
    n = len(cost)
    m = len(cost[0]) if n else 0
    best = None
    best_pairs = None
    if n <= m:
        for cols in itertools.permutations(range(m), n):
            pairs = list(enumerate(cols))
            total = sum(cost[i][j] for i, j in pairs)
            if best is None or total < best:
                best = total
                best_pairs = pairs
    else:
        for rows_sel in itertools.permutations(range(n), m):
            pairs = sorted((i, j) for j, i in enumerate(rows_sel))
            total = sum(cost[i][j] for i, j in pairs)
            if best is None or total < best:
                best = total
                best_pairs = pairs
    return best, best_pairs


def brute_force_lex_min(cost):
    """Among all optimal matchings, the lexicographically smallest pair list."""
    n = len(cost)
    m = len(cost[0]) if n else 0
    best_total, _ = brute_force_min(cost)
    candidates = []
    if n <= m:
        for cols in itertools.permutations(range(m), n):
            pairs = sorted(enumerate(cols))
            if sum(cost[i][j] for i, j in pairs) == best_total:
                candidates.append(pairs)
    else:
        for rows_sel in itertools.permutations(range(n), m):
            pairs = sorted((i, j) for j, i in enumerate(rows_sel))
            if sum(cost[i][j] for i, j in pairs) == best_total:
                candidates.append(pairs)
    return min(candidates)


def test_single_cell():
    assert hungarian([[3.5]]) == [(0, 0)]


def test_diagonal_dominance():
    pairs = hungarian([[0.1, 0.9], [0.9, 0.1]])
    assert pairs == [(0, 0), (1, 1)]
    assert matching_cost([[0.1, 0.9], [0.9, 0.1]], pairs) == pytest.approx(0.2)


def test_empty_matrix():
    assert hungarian([]) == []


def test_zero_width_matrix():
    assert hungarian([[], []]) == []


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        hungarian([[1.0, float("inf")], [0.0, 1.0]])
    with pytest.raises(ValueError):
        hungarian([[float("nan")]])


def test_ragged_rejected():
    with pytest.raises(ValueError):
        hungarian([[1.0, 2.0], [3.0]])


def test_all_equal_costs_prefers_diagonal():
    # Every matching costs the same; lexicographic rule picks row i -> col i.
    pairs = hungarian([[1.0] * 3 for _ in range(3)])
    assert pairs == [(0, 0), (1, 1), (2, 2)]


def test_tie_broken_lexicographically():
    # Both diagonals cost 5; {(0,0),(1,1)} is the lexicographically smaller set.
    cost = [[1.0, 2.0], [3.0, 4.0]]
    assert hungarian(cost) == [(0, 0), (1, 1)]


def test_rectangular_wide():
    cost = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0]]
    pairs = hungarian(cost)
    assert len(pairs) == 2
    total, _ = brute_force_min(cost)
    assert matching_cost(cost, pairs) == total


def test_rectangular_tall():
    cost = [[4.0, 1.0], [2.0, 0.0], [3.0, 9.0]]
    pairs = hungarian(cost)
    assert len(pairs) == 2
    total, _ = brute_force_min(cost)
    assert matching_cost(cost, pairs) == total


def test_negative_costs():
    cost = [[-5.0, 2.0], [1.0, -4.0]]
    assert hungarian(cost) == [(0, 0), (1, 1)]


@pytest.mark.parametrize("shape", [(2, 2), (3, 3), (4, 4), (5, 5), (6, 4), (4, 6), (7, 7)])
def test_random_matrices_match_brute_force(shape):
    rng = random.Random(shape[0] * 100 + shape[1])
    n, m = shape
    for _ in range(60):
        cost = [[rng.random() for _ in range(m)] for _ in range(n)]
        pairs = hungarian(cost)
        assert len(pairs) == min(n, m)
        assert len({i for i, _ in pairs}) == len(pairs)
        assert len({j for _, j in pairs}) == len(pairs)
        best, _ = brute_force_min(cost)
        assert matching_cost(cost, pairs) == best


def test_random_small_matrices_are_lex_minimal():
    # Quantized costs force frequent ties; the solver must still pick the
    # lexicographically smallest optimal matching.
    rng = random.Random(7)
    for _ in range(150):
        n = rng.randint(1, 4)
        m = rng.randint(1, 4)
        cost = [[rng.choice([0.0, 0.5, 1.0]) for _ in range(m)] for _ in range(n)]
        assert hungarian(cost) == brute_force_lex_min(cost)
