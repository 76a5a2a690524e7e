"""Minimum-cost assignment between two index sets.

The solver runs the classic augmenting-path Hungarian algorithm on an
exact integer transform of the cost matrix, so results never depend on
floating-point summation order. Tie-breaking among equally cheap
matchings is resolved by folding a secondary objective into the integer
costs: every cell gets a weight that decays geometrically with its
(row, col) rank, which makes the optimum unique and equal to the
lexicographically smallest optimal matching.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence


def hungarian(cost: Sequence[Sequence[float]]) -> list[tuple[int, int]]:
    """Return a minimum-cost matching of min(n, m) (row, col) pairs.

    Ties between equally cheap matchings resolve to the one whose sorted
    pair list is lexicographically smallest. Raises ValueError on ragged
    or non-finite input. An empty matrix yields an empty matching.
    """
    rows = [list(r) for r in cost]
    n = len(rows)
    m = len(rows[0]) if n else 0
    if any(len(r) != m for r in rows):
        raise ValueError("cost matrix must be rectangular")
    if n == 0 or m == 0:
        return []
    for r in rows:
        for v in r:
            if not math.isfinite(v):
                raise ValueError(f"cost entries must be finite, got {v!r}")

    transposed = n > m
    if transposed:
        rows = [[rows[i][j] for i in range(n)] for j in range(m)]
        n, m = m, n

    composite = _composite_costs(rows, n, m, transposed)
    col_of_row = _solve(composite, n, m)

    pairs = [(i, j) for i, j in enumerate(col_of_row)]
    if transposed:
        pairs = [(j, i) for i, j in pairs]
    return sorted(pairs)


def _composite_costs(rows: list[list[float]], n: int, m: int, transposed: bool) -> list[list[int]]:
    """Scale float costs to exact integers and embed the tie-break weights.

    Primary costs are converted losslessly (every float is a dyadic
    rational). Secondary weights B^(cells-1-rank) with B > min(n, m) are
    subtracted so that, among primary-optimal matchings, the one covering
    the smallest (row, col) ranks wins; W separates the two objectives.
    """
    fracs = [[Fraction(v) for v in r] for r in rows]
    denom = 1
    for r in fracs:
        for f in r:
            if f.denominator > denom:
                denom = f.denominator
    ints = [[int(f * denom) for f in r] for r in fracs]

    cells = n * m
    base = min(n, m) + 2
    sep = base**cells + 1
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            oi, oj = (j, i) if transposed else (i, j)
            rank = oi * (n if transposed else m) + oj
            row.append(ints[i][j] * sep - base ** (cells - 1 - rank))
        out.append(row)
    return out


def _solve(a: list[list[int]], n: int, m: int) -> list[int]:
    """Hungarian algorithm with row/column potentials, n <= m.

    Returns the column matched to each row. Integer costs only.
    """
    big = 1 + 2 * sum(abs(v) for row in a for v in row)
    u = [0] * (n + 1)
    v = [0] * (m + 1)
    match = [0] * (m + 1)  # match[j] = 1-based row assigned to column j
    way = [0] * (m + 1)

    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [big] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = big
            j1 = 0
            row = a[i0 - 1]
            ui = u[i0]
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - ui - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1

    col_of_row = [-1] * n
    for j in range(1, m + 1):
        if match[j]:
            col_of_row[match[j] - 1] = j - 1
    return col_of_row


def matching_cost(cost: Sequence[Sequence[float]], pairs: Sequence[tuple[int, int]]) -> float:
    """Total cost of a matching, summed in row order."""
    return sum(cost[i][j] for i, j in sorted(pairs))
