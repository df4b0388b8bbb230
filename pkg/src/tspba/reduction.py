"""Structural reduction pipeline: from any weighting to an equivalent
one with small absolute norm, or a certificate cycle.

The pipeline removes the edges of unbalanced 4-cycles until every
remaining 4-cycle is balanced, zeroes out a dominating star plus the
majority component by per-vertex shifts, and finally recentres the few
high-degree support vertices.  Every edit is an equivalence-preserving
transform recorded in a ledger, so all Hamilton cycle weights move by
one known constant.

All numeric thresholds live in a ConstantsProfile.  Only the profile
named "paper" carries the theoretical guarantees; under any other
profile every guarantee degrades to a runtime-checked assertion or an
explicit error, never a silently wrong result.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import combinations
from math import comb

from .errors import IterationCapExceeded, PreconditionFailed
from .fourcycle import four_cycle_norm, light_hamilton, norm_overflow_safe
from .hamcycle import HamCycle
from .instance import (
    Edge,
    TransformLedger,
    Weighting,
    apply_transform,
    beats_average,
    edge_key,
    total_abs_weight,
)


@dataclass(frozen=True)
class ConstantsProfile:
    """Named constants steering the reduction and kernel thresholds."""

    name: str
    dichotomy_n_factor: int = 5000      # dichotomy requires n > factor*(k+1)
    abs_norm_factor: int = 4000         # reduced instance: w*[K_n] <= factor*k*n
    removal_iter_factor: int = 4        # removal loop cap: factor*k*n iterations
    removal_edge_factor: int = 16       # |S| <= factor*k*n under the guarantee
    sparsify_support_factor: int = 32   # support <= factor*k*(n+1)
    high_degree_fraction: Fraction = Fraction(1, 4)
    matching_threshold: int = 100_000   # derandomize when |Q| > threshold*k
    x_bound_factor: int = 300_000       # |X| <= factor*k under the guarantee
    kernel_degree_slack: int = 4        # condition (b): deg >= |X_bar|/2 + slack*t
    candidate_multiplier: int = 2       # candidate list length: mult*t + 1
    brute_force_cutoff: int = 22        # n at or below: answer by exact search
    dp_cap: int = 22                    # subset-DP size limit (vertices)

    @property
    def is_paper(self) -> bool:
        return self.name == "paper"


PAPER_PROFILE = ConstantsProfile(name="paper")

# scaled-down constants so the pipeline branches are reachable at desk sizes;
# no theoretical guarantee is claimed under this profile
TEST_PROFILE = ConstantsProfile(
    name="test",
    dichotomy_n_factor=0,
    matching_threshold=2,
    kernel_degree_slack=2,
    removal_iter_factor=64,
    brute_force_cutoff=7,
)


def make_profile(name: str, **overrides) -> ConstantsProfile:
    base = {"paper": PAPER_PROFILE, "test": TEST_PROFILE}.get(name)
    if base is None:
        base = replace(TEST_PROFILE, name=name)
    if overrides:
        base = replace(base, name="custom" if name in ("paper", "test") else name,
                       **overrides)
    return base


@dataclass(frozen=True)
class DichotomyResult:
    """Either a certificate cycle strictly below the threshold, or an
    equivalent reduced weighting with its ledger and absolute norm."""

    certificate: HamCycle | None = None
    reduced: Weighting | None = None
    ledger: TransformLedger | None = None
    abs_norm: int | None = None

    @property
    def is_certificate(self) -> bool:
        return self.certificate is not None


# -- unbalanced-4-cycle removal ---------------------------------------------


def _first_unbalanced_py(rows, present, n):
    for quad in combinations(range(n), 4):
        a, b, c, d = quad
        m1 = rows[a][b] + rows[c][d]
        m2 = rows[a][c] + rows[b][d]
        m3 = rows[a][d] + rows[b][c]
        # pairing order: a-b-c-d-a, a-b-d-c-a, a-c-b-d-a
        if (m1 != m3 and present[a][b] and present[b][c] and present[c][d] and present[a][d]):
            return ((a, b), (b, c), (c, d), (a, d))
        if (m1 != m2 and present[a][b] and present[b][d] and present[c][d] and present[a][c]):
            return ((a, b), (b, d), (c, d), (a, c))
        if (m2 != m3 and present[a][c] and present[b][c] and present[b][d] and present[a][d]):
            return ((a, c), (b, c), (b, d), (a, d))
    return None


def _first_unbalanced_np(Wm, P, n):
    import numpy as np

    for b in range(1, n - 2):
        rng = np.arange(b + 1, n)
        t = len(rng)
        tri = np.triu(np.ones((t, t), dtype=bool), 1)
        subW = Wm[np.ix_(rng, rng)]
        subP = P[np.ix_(rng, rng)]
        for a in range(b):
            m1 = Wm[a, b] + subW
            m2 = Wm[a, rng][:, None] + Wm[b, rng][None, :]
            m3 = m2.T
            pa_r = P[a, rng]
            pb_r = P[b, rng]
            # rows index c, columns index d (c < d within rng)
            # cycle1 a-b-c-d-a: edges ab, bc, cd, ad
            h1 = (m1 != m3) & P[a, b] & pb_r[:, None] & subP & pa_r[None, :] & tri
            # cycle2 a-b-d-c-a: edges ab, bd, dc, ca
            h2 = (m1 != m2) & P[a, b] & pb_r[None, :] & subP & pa_r[:, None] & tri
            # cycle3 a-c-b-d-a: edges ac, cb, bd, da
            h3 = (m2 != m3) & pa_r[:, None] & pb_r[:, None] & pb_r[None, :] & pa_r[None, :] & tri
            if not (h1.any() or h2.any() or h3.any()):
                continue
            combined = h1 | h2 | h3
            flat = int(np.flatnonzero(combined.ravel())[0])
            i, j = divmod(flat, t)
            c, d = int(rng[i]), int(rng[j])
            if h1[i, j]:
                return ((a, b), (b, c), (c, d), (a, d))
            if h2[i, j]:
                return ((a, b), (b, d), (c, d), (a, c))
            return ((a, c), (b, c), (b, d), (a, d))
    return None


def removal_set(W: Weighting, k: int, P: ConstantsProfile) -> set[Edge]:
    """Edges S such that every 4-cycle of K_n - S is balanced.

    Repeatedly removes the four edges of the lexicographically first
    unbalanced 4-cycle still present.  The iteration cap
    removal_iter_factor*k*n signals a profile/precondition mismatch; it
    never silently returns a wrong set.
    """
    n = W.n
    cap = P.removal_iter_factor * k * n
    use_np = norm_overflow_safe(W)
    S: set[Edge] = set()
    if use_np:
        import numpy as np

        Wm = np.array(W.rows(), dtype=np.int64)
        Pm = np.ones((n, n), dtype=bool)
        np.fill_diagonal(Pm, False)
        iters = 0
        while True:
            hit = _first_unbalanced_np(Wm, Pm, n)
            if hit is None:
                return S
            iters += 1
            if iters > cap:
                raise IterationCapExceeded(
                    f"removed {iters - 1} cycles without exhausting unbalance (cap {cap})"
                )
            for u, v in hit:
                Pm[u, v] = Pm[v, u] = False
                S.add((u + 1, v + 1))
    rows = W.rows()
    present = [[u != v for v in range(n)] for u in range(n)]
    iters = 0
    while True:
        hit = _first_unbalanced_py(rows, present, n)
        if hit is None:
            return S
        iters += 1
        if iters > cap:
            raise IterationCapExceeded(
                f"removed {iters - 1} cycles without exhausting unbalance (cap {cap})"
            )
        for u, v in hit:
            present[u][v] = present[v][u] = False
            S.add((u + 1, v + 1))


def all_balanced(W: Weighting, S: set[Edge]) -> bool:
    """Exhaustive check that K_n - S has no unbalanced 4-cycle."""
    n = W.n
    rows = W.rows()
    present = [[u != v for v in range(n)] for u in range(n)]
    for u, v in S:
        present[u - 1][v - 1] = present[v - 1][u - 1] = False
    return _first_unbalanced_py(rows, present, n) is None


def largest_component(vertices, edges) -> set[int]:
    """Vertex set of the component with the most edges (ties: smallest
    minimum vertex id)."""
    verts = sorted(set(vertices))
    adj: dict[int, list[int]] = {v: [] for v in verts}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen: set[int] = set()
    best: tuple[int, int, set[int]] | None = None
    for start in verts:
        if start in seen:
            continue
        comp = {start}
        queue = [start]
        seen.add(start)
        ecount = 0
        while queue:
            x = queue.pop()
            ecount += len(adj[x])
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    comp.add(y)
                    queue.append(y)
        ecount //= 2
        key = (-ecount, min(comp))
        if best is None or key < (best[0], best[1]):
            best = (key[0], key[1], comp)
    return best[2] if best else set()


def sparsify(W: Weighting, S: set[Edge], k: int, P: ConstantsProfile) -> tuple[Weighting, TransformLedger]:
    """Equivalent weighting that is zero outside a small edge set.

    Requires every 4-cycle of K_n - S balanced.  Zeroes the star of a
    maximum-degree vertex v0 of G = K_n - S by per-vertex shifts, then
    subtracts the uniform weight alpha of the largest component of
    G - v0 from all edges while crediting alpha back at v0.
    """
    n = W.n
    sset = {edge_key(u, v) for u, v in S}
    deg = [n - 1] * (n + 1)
    for u, v in sset:
        deg[u] -= 1
        deg[v] -= 1
    v0 = max(range(1, n + 1), key=lambda v: (deg[v], -v))
    neigh = [u for u in range(1, n + 1) if u != v0 and edge_key(u, v0) not in sset]

    shifts = {u: -W.weight(u, v0) for u in neigh}
    ledger1 = TransformLedger.shift(n, shifts)
    w1 = apply_transform(W, ledger1)

    rest = [v for v in range(1, n + 1) if v != v0]
    rest_edges = [
        (u, v) for u, v in combinations(rest, 2) if edge_key(u, v) not in sset
    ]
    comp = largest_component(rest, rest_edges)
    weights = [w1.weight(u, v) for u, v in rest_edges if u in comp and v in comp]
    if not weights:
        alpha = 0
    else:
        # all component edges carry one weight when the balance
        # precondition holds; otherwise fall back to the most common one
        uniq = sorted(set(weights))
        if len(uniq) == 1:
            alpha = uniq[0]
        else:
            counts = {x: 0 for x in uniq}
            for x in weights:
                counts[x] += 1
            alpha = min(uniq, key=lambda x: (-counts[x], x))
    ledger2 = TransformLedger.shift(n, {v0: alpha}, constant=-alpha)
    ledger = ledger1.compose(ledger2)
    return apply_transform(W, ledger), ledger


def compress(W: Weighting, k: int, P: ConstantsProfile) -> tuple[Weighting, TransformLedger]:
    """Equivalent weighting with small total absolute weight.

    Runs removal + sparsify, then recentres every vertex whose support
    degree reaches high_degree_fraction*n by the floored average of its
    weights into the low-degree side.
    """
    n = W.n
    S = removal_set(W, k, P)
    w1, ledger = sparsify(W, S, k, P)

    deg = [0] * (n + 1)
    rows = w1.rows()
    for u in range(n):
        for v in range(u + 1, n):
            if rows[u][v] != 0:
                deg[u + 1] += 1
                deg[v + 1] += 1
    frac = P.high_degree_fraction
    X = [v for v in range(1, n + 1) if deg[v] * frac.denominator >= n * frac.numerator]
    outside = [v for v in range(1, n + 1) if v not in set(X)]
    if X and outside:
        shifts = {}
        for x in X:
            s = sum(w1.weight(x, v) for v in outside)
            shifts[x] = -(s // len(outside))
        ledger3 = TransformLedger.shift(n, shifts)
        ledger = ledger.compose(ledger3)
        w1 = apply_transform(w1, ledger3)
    if P.is_paper and n > P.dichotomy_n_factor * (k + 1):
        assert total_abs_weight(w1) <= P.abs_norm_factor * k * n, \
            "paper-profile absolute norm bound violated"
    return w1, ledger


def dichotomy(W: Weighting, k: int, P: ConstantsProfile) -> DichotomyResult:
    """Certificate strictly below dn - k, or an equivalent reduced instance.

    The certificate branch runs when the four-cycle norm exceeds k*n^3;
    otherwise the reduction pipeline produces (w*, ledger).
    """
    n = W.n
    if P.is_paper and n <= P.dichotomy_n_factor * (k + 1):
        raise PreconditionFailed(
            f"paper profile requires n > {P.dichotomy_n_factor}*(k+1) = "
            f"{P.dichotomy_n_factor * (k + 1)}, got n = {n}"
        )
    norm = four_cycle_norm(W)
    if norm > k * n ** 3:
        H = light_hamilton(W, k)
        assert beats_average(W, H, k, strict=True), "unverified certificate"
        return DichotomyResult(certificate=H)
    wstar, ledger = compress(W, k, P)
    return DichotomyResult(
        reduced=wstar, ledger=ledger, abs_norm=total_abs_weight(wstar)
    )
