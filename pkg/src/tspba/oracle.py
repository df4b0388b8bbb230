"""Independent brute-force ground truth for tests and small-n fallback.

Everything here is implemented from first principles (enumeration and
subset dynamic programming) without reusing the combinatorial helpers of
the solver modules, so that agreement between the two is meaningful
evidence of correctness.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from math import comb

import numpy as np

from .errors import BudgetExceeded, SizeMismatch
from .hamcycle import HamCycle
from .instance import Weighting, beats_average, edge_key

_INF = 1 << 60
_DP_MEMORY_CAP = 1_600_000_000  # bytes, both tables together


@dataclass(frozen=True)
class EnumerationBudget:
    """Hard limits for the exhaustive oracles; exceeding them is an error."""

    max_n_enumerate: int = 10
    max_n_dp: int = 22


DEFAULT_BUDGET = EnumerationBudget()

_order_cache: dict[int, np.ndarray] = {}


def _orders(n: int) -> np.ndarray:
    """All canonical Hamilton cycle orders of K_n, lexicographic, as an array."""
    if n not in _order_cache:
        rows = [
            (1,) + p
            for p in permutations(range(2, n + 1))
            if p[0] < p[-1]
        ]
        _order_cache[n] = np.array(rows, dtype=np.int16)
    return _order_cache[n]


def enumerate_hamiltons(n: int, budget: EnumerationBudget = DEFAULT_BUDGET) -> list[HamCycle]:
    """All (n-1)!/2 Hamilton cycles in canonical form, lexicographic order."""
    if n > budget.max_n_enumerate:
        raise BudgetExceeded(f"enumeration of n={n} exceeds budget {budget.max_n_enumerate}")
    return [HamCycle(order=tuple(int(v) for v in row)) for row in _orders(n)]


def cycle_weights_matrix(W: Weighting, modified: np.ndarray | None = None) -> np.ndarray:
    """Vector of weights of every enumerated cycle (optionally under a
    modified weight matrix, 0-indexed)."""
    n = W.n
    orders = _orders(n) - 1
    M = modified if modified is not None else np.array(W.rows(), dtype=np.int64)
    nxt = np.roll(orders, -1, axis=1)
    return M[orders, nxt].sum(axis=1)


def _popcount_classes(nbits: int) -> list[np.ndarray]:
    masks = np.arange(1 << nbits, dtype=np.int64)
    pc = np.zeros(1 << nbits, dtype=np.int64)
    for b in range(nbits):
        pc += (masks >> b) & 1
    return [masks[pc == c] for c in range(nbits + 1)]


def exact_min_hamilton(
    W: Weighting, budget: EnumerationBudget = DEFAULT_BUDGET
) -> tuple[HamCycle, int]:
    """Held-Karp minimum-weight Hamilton cycle.

    Ties are broken toward the lexicographically smallest canonical
    cycle, reconstructed greedily with a feasibility table.
    """
    n = W.n
    if n > budget.max_n_dp:
        raise BudgetExceeded(f"DP at n={n} exceeds budget {budget.max_n_dp}")
    nbits = n - 1
    need = 2 * (1 << nbits) * nbits * 8
    if need > _DP_MEMORY_CAP:
        raise BudgetExceeded(f"DP tables would need {need} bytes")
    if W.max_abs() * (n + 1) >= (1 << 59):
        raise BudgetExceeded("weights too large for int64 dynamic programming")

    Wm = np.array(W.rows(), dtype=np.int64)
    # f[mask, j]: min cost to start at vertex j+2, visit every vertex of
    # mask (bits over vertices 2..n), then end with an edge back to 1.
    # fin[mask, j]: bitmask of possible vertices adjacent to 1 at the end
    # of a minimum completion.
    f = np.full(((1 << nbits), nbits), _INF, dtype=np.int64)
    fin = np.zeros(((1 << nbits), nbits), dtype=np.int64)
    f[0, :] = Wm[1:, 0]
    fin[0, :] = 1 << np.arange(nbits, dtype=np.int64)

    classes = _popcount_classes(nbits)
    for c in range(1, nbits + 1):
        masks = classes[c]
        best = np.full((len(masks), nbits), _INF, dtype=np.int64)
        for u in range(nbits):
            has = (masks >> u) & 1 == 1
            if not has.any():
                continue
            sub = masks[has] ^ (1 << u)
            cand = f[sub, u][:, None] + Wm[u + 1, 1:][None, :]
            best[has] = np.minimum(best[has], cand)
        f[masks] = best
        # second pass: merge final-vertex sets over argmin branches
        acc = np.zeros((len(masks), nbits), dtype=np.int64)
        for u in range(nbits):
            has = (masks >> u) & 1 == 1
            if not has.any():
                continue
            sub = masks[has] ^ (1 << u)
            cand = f[sub, u][:, None] + Wm[u + 1, 1:][None, :]
            hit = cand == best[has]
            contrib = np.where(hit, fin[sub, u][:, None], 0)
            acc[has] |= contrib
        fin[masks] = acc

    full = (1 << nbits) - 1
    start_costs = Wm[0, 1:] + f[np.array([full ^ (1 << u) for u in range(nbits)]), np.arange(nbits)]
    opt = int(start_costs.min())

    # greedy lexicographic reconstruction of the canonical min cycle
    order = [1]
    cur = 0  # 0-based vertex index
    remaining = full
    cost = 0
    u2 = None
    for pos in range(nbits):
        chosen = None
        for u in range(nbits):
            if not (remaining >> u) & 1:
                continue
            rem2 = remaining ^ (1 << u)
            total = cost + int(Wm[cur, u + 1]) + int(f[rem2, u])
            if total != opt:
                continue
            allowed = fin[rem2, u]
            if u2 is None:
                # canonical form needs last vertex > second vertex
                if not int(allowed) >> (u + 1):
                    continue
            else:
                if not int(allowed) >> (u2 + 1):
                    continue
            chosen = u
            break
        assert chosen is not None, "reconstruction lost the optimum"
        if u2 is None:
            u2 = chosen
        order.append(chosen + 2)
        cost += int(Wm[cur, chosen + 1])
        cur = chosen + 1
        remaining ^= 1 << chosen
    cycle = HamCycle(order=tuple(order))
    return cycle, opt


def verdict_oracle(W: Weighting, k: int, budget: EnumerationBudget = DEFAULT_BUDGET):
    """Exact yes/no answer with the optimal cycle, via exact_min_hamilton."""
    from .kernel import Verdict

    cycle, wmin = exact_min_hamilton(W, budget)
    if beats_average(W, cycle, k):
        return Verdict.yes(cycle, wmin)
    return Verdict.no(cycle, wmin)


def equivalence_check(
    W: Weighting, W2: Weighting, budget: EnumerationBudget = DEFAULT_BUDGET
) -> int | None:
    """The constant alpha with w2(H) = w(H) + alpha for every Hamilton
    cycle, or None if no such constant exists."""
    if W.n != W2.n:
        raise SizeMismatch(f"weightings on {W.n} and {W2.n} vertices")
    if W.n > budget.max_n_enumerate:
        raise BudgetExceeded(f"enumeration of n={W.n} exceeds budget {budget.max_n_enumerate}")
    d = cycle_weights_matrix(W2) - cycle_weights_matrix(W)
    alpha = int(d[0])
    return alpha if bool((d == alpha).all()) else None


def brute_min_x_partial(
    W: Weighting, X: frozenset[int] | set[int], budget: EnumerationBudget = DEFAULT_BUDGET
):
    """Minimum weight of a Hamilton cycle after deleting the edges inside
    the complement of X, by exhaustive enumeration."""
    from .kernel import XPartialHC

    n = W.n
    if n > budget.max_n_enumerate:
        raise BudgetExceeded(f"enumeration of n={n} exceeds budget {budget.max_n_enumerate}")
    inside = np.zeros(n, dtype=bool)
    for v in range(1, n + 1):
        if v not in X:
            inside[v - 1] = True
    M = np.array(W.rows(), dtype=np.int64)
    M = np.where(inside[:, None] & inside[None, :], 0, M)
    weights = cycle_weights_matrix(W, modified=M)
    i = int(weights.argmin())
    order = [int(v) for v in _orders(n)[i]]
    kept = []
    for j in range(n):
        u, v = order[j], order[(j + 1) % n]
        if u in X or v in X:
            kept.append(edge_key(u, v))
    return XPartialHC.from_edges(W, frozenset(X), kept)
