"""One-to-one assignment with forbidden entries.

Solves min-total-cost maximum-cardinality bipartite matching. Forbidden
pairs (None or non-finite cost) are excluded from the feasible domain
outright instead of being mapped to a large finite penalty, so they can
never be selected and never distort the optimum.

The solver is successive-shortest-augmenting-paths with Johnson
potentials (dense Dijkstra per augmentation). Costs are shifted to be
nonnegative first; at fixed cardinality the shift is rank-preserving, and
cardinality itself is a pure reachability property, so the optimum is
unchanged.
"""

from __future__ import annotations

import math
from typing import Sequence


def _entry(value) -> float | None:
    if value is None:
        return None
    v = float(value)
    return v if math.isfinite(v) else None


def solve_assignment(cost: Sequence[Sequence[float | None]]) -> list[tuple[int, int]]:
    """Return matched (row, col) pairs, sorted by row.

    The matching has maximum cardinality over the valid entries and, among
    those, minimum total cost. An empty or fully forbidden matrix yields
    an empty matching.
    """
    n = len(cost)
    m = len(cost[0]) if n else 0
    if n == 0 or m == 0:
        return []

    c = [[_entry(v) for v in row] for row in cost]
    if any(len(row) != m for row in c):
        raise ValueError("cost matrix rows have unequal lengths")
    finite_vals = [v for row in c for v in row if v is not None]
    if not finite_vals:
        return []
    shift = min(finite_vals)
    c = [[None if v is None else v - shift for v in row] for row in c]

    row_match = [-1] * n
    col_match = [-1] * m
    pot_r = [0.0] * n
    pot_c = [0.0] * m
    inf = math.inf

    while True:
        dist_r = [inf] * n
        dist_c = [inf] * m
        parent_c = [-1] * m
        done_r = [False] * n
        done_c = [False] * m
        for r in range(n):
            if row_match[r] == -1:
                # Seed with the negated potential so labels of different
                # source rows are comparable in reduced-cost space.
                dist_r[r] = -pot_r[r]

        while True:
            # Dense extraction: cheapest unsettled node, rows before columns.
            best = inf
            node = -1
            is_row = True
            for r in range(n):
                if not done_r[r] and dist_r[r] < best:
                    best, node, is_row = dist_r[r], r, True
            for col in range(m):
                if not done_c[col] and dist_c[col] < best:
                    best, node, is_row = dist_c[col], col, False
            if node == -1:
                break
            if is_row:
                done_r[node] = True
                base = dist_r[node] + pot_r[node]
                crow = c[node]
                for col in range(m):
                    v = crow[col]
                    if v is None or done_c[col] or col_match[col] == node:
                        continue
                    nd = base + v - pot_c[col]
                    if nd < dist_c[col]:
                        dist_c[col] = nd
                        parent_c[col] = node
            else:
                done_c[node] = True
                r2 = col_match[node]
                if r2 != -1 and not done_r[r2]:
                    # Residual (matched) edge runs column -> row at negated cost.
                    nd = dist_c[node] - c[r2][node] + pot_c[node] - pot_r[r2]
                    if nd < dist_r[r2]:
                        dist_r[r2] = nd

        # Pick the sink by TRUE path cost; reduced labels of different
        # columns are offset by their potentials and not comparable raw.
        target = -1
        best = inf
        for col in range(m):
            if col_match[col] == -1 and dist_c[col] < inf:
                true_dist = dist_c[col] + pot_c[col]
                if true_dist < best:
                    best, target = true_dist, col
        if target == -1:
            break

        col = target
        while col != -1:
            r = parent_c[col]
            prev = row_match[r]
            row_match[r] = col
            col_match[col] = r
            col = prev

        for r in range(n):
            if dist_r[r] < inf:
                pot_r[r] += dist_r[r]
        for col in range(m):
            if dist_c[col] < inf:
                pot_c[col] += dist_c[col]

    return [(r, row_match[r]) for r in range(n) if row_match[r] != -1]


def assignment_cost(cost: Sequence[Sequence[float | None]], pairs: Sequence[tuple[int, int]]) -> float:
    """Total cost of a pair set against the original matrix."""
    total = 0.0
    for r, col in pairs:
        v = _entry(cost[r][col])
        if v is None:
            raise ValueError(f"pair ({r}, {col}) uses a forbidden entry")
        total += v
    return total
