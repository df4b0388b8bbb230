"""Kernelized exact search and the main decision pipeline.

After reduction, negative weight is confined to a small vertex set X.
A minimum-weight solution restricted to X (an (X)-partial Hamilton
cycle: vertex-disjoint paths covering V with every X-vertex internal
and no edge inside the complement) can be found inside a kernel of
O(|X|^3) candidate vertices, and completed through the zero-weight
graph by a minimum-degree (Dirac-style) cycle builder that respects
forced path chords.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from time import perf_counter

from .errors import (
    ExtensionStalled,
    IterationCapExceeded,
    KernelTooLarge,
    NotJoinable,
    PreconditionFailed,
    TooFewOutsideVertices,
)
from .hamcycle import HamCycle, min_avg_cycle, phc_from_edges, expected_weight
from .instance import (
    Edge,
    Weighting,
    beats_average,
    certificate_failure,
    edge_key,
    subgraph_weight,
)
from .reduction import ConstantsProfile, dichotomy


@dataclass(frozen=True)
class Verdict:
    """Solver answer: yes with a certificate, no with the exact minimum,
    or profile_insufficient when a runtime precondition failed."""

    kind: str
    cycle: HamCycle | None = None
    weight: int | None = None
    reason: str | None = None

    @classmethod
    def yes(cls, cycle: HamCycle, weight: int) -> "Verdict":
        return cls(kind="yes", cycle=cycle, weight=weight)

    @classmethod
    def no(cls, cycle: HamCycle, weight: int) -> "Verdict":
        return cls(kind="no", cycle=cycle, weight=weight)

    @classmethod
    def insufficient(cls, reason: str) -> "Verdict":
        return cls(kind="profile_insufficient", reason=reason)


@dataclass(frozen=True)
class XPartialHC:
    """Vertex-disjoint paths covering V, every X-vertex internal, no edge
    inside the complement of X."""

    X: frozenset[int]
    paths: tuple[tuple[int, ...], ...]
    weight: int

    @classmethod
    def from_edges(cls, W: Weighting, X: frozenset[int], edges) -> "XPartialHC":
        n = W.n
        adj: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
        canon = {edge_key(u, v) for u, v in edges}
        for u, v in canon:
            if u not in X and v not in X:
                raise NotJoinable(f"edge ({u},{v}) lies inside the complement of X")
            adj[u].append(v)
            adj[v].append(u)
            if len(adj[u]) > 2 or len(adj[v]) > 2:
                raise NotJoinable(f"vertex degree exceeds 2 at ({u},{v})")
        for x in X:
            if len(adj[x]) != 2:
                raise NotJoinable(f"X-vertex {x} is not internal (degree {len(adj[x])})")
        seen: set[int] = set()
        paths: list[tuple[int, ...]] = []
        for v in range(1, n + 1):
            if v in seen or len(adj[v]) == 2:
                continue
            walk, prev, cur = [v], None, v
            seen.add(v)
            while True:
                nxt = [x for x in adj[cur] if x != prev]
                if not nxt:
                    break
                prev, cur = cur, nxt[0]
                walk.append(cur)
                seen.add(cur)
            paths.append(tuple(walk))
        if len(seen) != n:
            raise NotJoinable("edge set contains a cycle")
        oriented = sorted(
            (p if p[0] < p[-1] else p[::-1] for p in paths), key=lambda p: p[0]
        )
        return cls(
            X=frozenset(X),
            paths=tuple(oriented),
            weight=subgraph_weight(W, canon),
        )

    def nontrivial_paths(self) -> list[tuple[int, ...]]:
        return [p for p in self.paths if len(p) > 1]

    def edge_set(self) -> frozenset[Edge]:
        return frozenset(
            edge_key(p[i], p[i + 1]) for p in self.paths for i in range(len(p) - 1)
        )


@dataclass(frozen=True)
class CandidateSets:
    """Cheapest-attachment orderings around X and the kernel they span."""

    t: int
    ell: int
    per_vertex: dict[int, tuple[int, ...]]
    per_pair: dict[Edge, tuple[int, ...]]
    Y: frozenset[int]
    M: frozenset[Edge]


def maximal_negative_matching(W: Weighting) -> list[Edge]:
    """Inclusion-maximal matching in the negative-weight graph, greedy
    over lexicographically ordered edges."""
    used: set[int] = set()
    out: list[Edge] = []
    rows = W.rows()
    for u in range(1, W.n + 1):
        if u in used:
            continue
        for v in range(u + 1, W.n + 1):
            if v not in used and rows[u - 1][v - 1] < 0:
                out.append((u, v))
                used.add(u)
                used.add(v)
                break
    return out


def build_X(W: Weighting, Q, P: ConstantsProfile, k: int | None = None) -> frozenset[int]:
    """Matched vertices plus vertices of high positive degree."""
    n = W.n
    rows = W.rows()
    frac = P.high_degree_fraction
    X: set[int] = set()
    for u, v in Q:
        X.add(u)
        X.add(v)
    for v in range(1, n + 1):
        deg = sum(1 for u in range(n) if rows[v - 1][u] > 0)
        if deg * frac.denominator >= n * frac.numerator:
            X.add(v)
    if P.is_paper and k is not None:
        assert len(X) <= P.x_bound_factor * k, "paper-profile |X| bound violated"
    return frozenset(X)


def candidate_sets(W: Weighting, X, P: ConstantsProfile) -> CandidateSets:
    """Per-vertex and per-pair cheapest outside vertices, ell = 2t+1 deep."""
    n = W.n
    Xs = sorted(X)
    t = len(Xs)
    ell = P.candidate_multiplier * t + 1
    outside = [v for v in range(1, n + 1) if v not in X]
    if t and len(outside) < ell:
        raise TooFewOutsideVertices(
            f"need {ell} vertices outside X, have {len(outside)}"
        )
    per_vertex: dict[int, tuple[int, ...]] = {}
    per_pair: dict[Edge, tuple[int, ...]] = {}
    for a in Xs:
        order = sorted(outside, key=lambda y: (W.weight(a, y), y))
        per_vertex[a] = tuple(order[:ell])
    for i, a in enumerate(Xs):
        for b in Xs[i + 1:]:
            order = sorted(outside, key=lambda y: (W.weight(a, y) + W.weight(b, y), y))
            per_pair[(a, b)] = tuple(order[:ell])
    Y: set[int] = set()
    M: set[Edge] = set()
    for a, ys in per_vertex.items():
        for y in ys:
            Y.add(y)
            M.add(edge_key(a, y))
    for (a, b), ys in per_pair.items():
        for y in ys:
            Y.add(y)
            M.add(edge_key(a, y))
            M.add(edge_key(b, y))
    return CandidateSets(t=t, ell=ell, per_vertex=per_vertex,
                         per_pair=per_pair, Y=frozenset(Y), M=frozenset(M))


def _min_cycle_dp(labels: list[int], wfn) -> tuple[list[int], int]:
    """Minimum-weight Hamilton cycle of the complete graph on labels under
    wfn(u, v); deterministic reconstruction (smallest argmin parents)."""
    import numpy as np

    kappa = len(labels)
    Wm = np.zeros((kappa, kappa), dtype=np.int64)
    for i in range(kappa):
        for j in range(i + 1, kappa):
            Wm[i, j] = Wm[j, i] = wfn(labels[i], labels[j])
    nbits = kappa - 1
    INF = 1 << 60
    dp = np.full(((1 << nbits), nbits), INF, dtype=np.int64)
    par = np.full(((1 << nbits), nbits), -1, dtype=np.int64)
    for j in range(nbits):
        dp[1 << j, j] = Wm[0, j + 1]
    masks = np.arange(1 << nbits, dtype=np.int64)
    pc = np.zeros(1 << nbits, dtype=np.int64)
    for b in range(nbits):
        pc += (masks >> b) & 1
    for c in range(2, nbits + 1):
        cls = masks[pc == c]
        for v in range(nbits):
            has = (cls >> v) & 1 == 1
            if not has.any():
                continue
            mk = cls[has]
            sub = mk ^ (1 << v)
            # predecessor u ranges over sub; dp is INF outside it
            cand = dp[sub] + Wm[1:, v + 1][None, :]
            best_u = np.argmin(cand, axis=1)
            dp[mk, v] = cand[np.arange(len(mk)), best_u]
            par[mk, v] = best_u
    full = (1 << nbits) - 1
    totals = dp[full] + Wm[1:, 0]
    v = int(np.argmin(totals))
    weight = int(totals[v])
    seq = []
    mask = full
    while v >= 0:
        seq.append(v + 1)
        u = int(par[mask, v])
        mask ^= 1 << v
        v = u
    seq.append(0)
    seq.reverse()
    return [labels[i] for i in seq], weight


def min_x_partial(W: Weighting, X, P: ConstantsProfile) -> XPartialHC:
    """Minimum-weight (X)-partial Hamilton cycle.

    Restricts to the kernel K[X u Y], zeroes every edge inside Y, finds
    a minimum modified-weight Hamilton cycle of the kernel by subset
    dynamic programming, and deletes the winner's Y-internal edges.
    Every Hamilton cycle of the kernel yields the partial solution of
    exactly its modified weight and every optimal partial solution
    extends to such a cycle, so this matches exhaustive search.
    """
    Xf = frozenset(X)
    t = len(Xf)
    if t == 0:
        return XPartialHC.from_edges(W, Xf, [])
    if t == W.n:
        raise TooFewOutsideVertices("X covers every vertex")
    cs = candidate_sets(W, Xf, P)
    kernel = sorted(Xf | cs.Y)
    if len(kernel) > P.dp_cap:
        raise KernelTooLarge(
            f"kernel has {len(kernel)} vertices, cap is {P.dp_cap}"
        )

    def wfn(u, v):
        if u not in Xf and v not in Xf:
            return 0
        return W.weight(u, v)

    order, _ = _min_cycle_dp(kernel, wfn)
    kept = []
    for i in range(len(order)):
        u, v = order[i], order[(i + 1) % len(order)]
        if u in Xf or v in Xf:
            kept.append(edge_key(u, v))
    return XPartialHC.from_edges(W, Xf, kept)


def dirac_extend(vertices, allowed, forced) -> tuple[int, ...]:
    """Hamilton cycle of (vertices, allowed u forced) through every forced
    edge, as a cyclic vertex tuple.

    Grows a path absorbing forced edges as locked two-vertex segments,
    closes it through a crossing pair whose broken edge is unforced (the
    degree margin guarantees one), and absorbs outside vertices into the
    cycle.  Requires 2*deg(v) >= m + 3r for every vertex.
    """
    verts = sorted(set(vertices))
    m = len(verts)
    vset = set(verts)
    fset = {edge_key(u, v) for u, v in forced}
    aset = {edge_key(u, v) for u, v in allowed if u != v} | fset
    adj: dict[int, set[int]] = {v: set() for v in verts}
    for u, v in aset:
        if u not in vset or v not in vset:
            raise PreconditionFailed(f"edge ({u},{v}) leaves the vertex set")
        adj[u].add(v)
        adj[v].add(u)
    lock: dict[int, int] = {}
    for u, v in fset:
        if u in lock or v in lock:
            raise PreconditionFailed("forced edges must form a matching")
        lock[u] = v
        lock[v] = u
    r = len(fset)
    if m < 3:
        raise PreconditionFailed(f"need at least 3 vertices, got {m}")
    for v in verts:
        if 2 * len(adj[v]) < m + 3 * r:
            raise PreconditionFailed(
                f"degree {len(adj[v])} at vertex {v} is below (m + 3r)/2 = {(m + 3 * r) / 2}"
            )

    def extend_max(path: list[int]) -> list[int]:
        inpath = set(path)
        progress = True
        while progress:
            progress = False
            for flip in (False, True):
                if flip:
                    path.reverse()
                tail = path[-1]
                for w in sorted(adj[tail]):
                    if w in inpath:
                        continue
                    if w in lock:
                        path.extend([w, lock[w]])
                        inpath.update((w, lock[w]))
                    else:
                        path.append(w)
                        inpath.add(w)
                    progress = True
                    break
                if flip:
                    path.reverse()
                if progress:
                    break
        return path

    def close(path: list[int]) -> list[int]:
        """Cycle on the path's vertices breaking no forced edge."""
        x, y = path[0], path[-1]
        if y in adj[x]:
            return path[:]
        for i in range(len(path) - 1):
            if (path[i + 1] in adj[x] and path[i] in adj[y]
                    and edge_key(path[i], path[i + 1]) not in fset):
                return path[: i + 1] + path[: i:-1]
        raise ExtensionStalled("no crossing pair available to close the path")

    def absorb(cycle: list[int]) -> list[int]:
        incyc = set(cycle)
        pos = {v: i for i, v in enumerate(cycle)}
        s = len(cycle)
        for w in sorted(vset - incyc):
            for c in sorted(adj[w] & incyc):
                i = pos[c]
                nxt = cycle[(i + 1) % s]
                prv = cycle[(i - 1) % s]
                if edge_key(c, nxt) not in fset:
                    # walk from c backwards: c, prv, ..., nxt
                    path = [cycle[(i - j) % s] for j in range(s)]
                elif edge_key(c, prv) not in fset:
                    path = [cycle[(i + j) % s] for j in range(s)]
                else:
                    continue
                head = [lock[w], w] if w in lock else [w]
                return head + path
        raise ExtensionStalled("no outside vertex attaches to the cycle")

    start = sorted(fset)[0] if fset else (verts[0],)
    path = list(start)
    while True:
        path = extend_max(path)
        cycle = close(path)
        if len(cycle) == m:
            break
        path = absorb(cycle)

    out = tuple(cycle)
    eset = {edge_key(out[i], out[(i + 1) % m]) for i in range(m)}
    if not (fset <= eset and eset <= aset and len(set(out)) == m):
        raise ExtensionStalled("assembled cycle failed structural validation")
    return out


def min_hamilton_with_structure(W: Weighting, X, P: ConstantsProfile) -> HamCycle:
    """Exact minimum-weight Hamilton cycle when negative weight is
    confined to X and the zero-weight graph outside X is dense.

    Conditions checked at runtime: (a) no negative edge inside the
    complement of X; (b) minimum zero-degree in the complement at least
    half the complement plus kernel_degree_slack * |X|.
    """
    n = W.n
    Xf = frozenset(X)
    t = len(Xf)
    outside = [v for v in range(1, n + 1) if v not in Xf]
    rows = W.rows()
    for i, u in enumerate(outside):
        for v in outside[i + 1:]:
            if rows[u - 1][v - 1] < 0:
                raise PreconditionFailed(
                    f"negative edge ({u},{v}) inside the complement of X"
                )
    for u in outside:
        zdeg = sum(1 for v in outside if v != u and rows[u - 1][v - 1] == 0)
        if 2 * zdeg < len(outside) + 2 * P.kernel_degree_slack * t:
            raise PreconditionFailed(
                f"zero-degree {zdeg} at vertex {u} below |X_bar|/2 + {P.kernel_degree_slack}t"
            )

    gstar = min_x_partial(W, Xf, P)
    nontrivial = gstar.nontrivial_paths()
    internal = {v for p in nontrivial for v in p[1:-1]}
    chords = [edge_key(p[0], p[-1]) for p in nontrivial]
    dverts = [v for v in range(1, n + 1) if v not in internal]
    if len(dverts) < 3:
        raise PreconditionFailed("too few vertices remain for cycle completion")
    zero_edges = [
        (u, v)
        for i, u in enumerate(dverts)
        for v in dverts[i + 1:]
        if rows[u - 1][v - 1] == 0
    ]
    cyc = dirac_extend(dverts, zero_edges, chords)

    # splice each chord back into its path
    expand: dict[Edge, tuple[int, ...]] = {}
    for p in nontrivial:
        expand[edge_key(p[0], p[-1])] = p
    order: list[int] = []
    mlen = len(cyc)
    for i in range(mlen):
        u, v = cyc[i], cyc[(i + 1) % mlen]
        key = edge_key(u, v)
        order.append(u)
        if key in expand:
            p = expand.pop(key)
            if p[0] != u:
                p = p[::-1]
            order.extend(p[1:-1])
    H = HamCycle.from_sequence(order)
    assert H.weight(W) == gstar.weight, "completion changed the optimal weight"
    return H


def solve(W: Weighting, k: int, P: ConstantsProfile,
          timings: dict[str, int] | None = None) -> Verdict:
    """Decide whether some Hamilton cycle has weight at most dn - k.

    Yes answers carry a certificate verified against the original
    weighting; no answers carry the exact minimum cycle.  Any failed
    branch precondition yields profile_insufficient, never a wrong
    answer.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    n = W.n

    def mark(stage: str, t0: float) -> None:
        if timings is not None:
            timings[stage] = timings.get(stage, 0) + int((perf_counter() - t0) * 1000)

    if k == 0:
        t0 = perf_counter()
        H = min_avg_cycle(W)
        mark("derandomize", t0)
        assert verifyable_yes(W, 0, H)
        return Verdict.yes(H, H.weight(W))

    if n <= P.brute_force_cutoff:
        from . import oracle
        from .errors import BudgetExceeded

        t0 = perf_counter()
        try:
            v = oracle.verdict_oracle(W, k)
        except BudgetExceeded as exc:
            return Verdict.insufficient(f"exact search unavailable: {exc}")
        finally:
            mark("oracle", t0)
        return v

    if P.is_paper and n <= P.dichotomy_n_factor * (k + 1):
        return Verdict.insufficient(
            f"paper profile needs n > {P.dichotomy_n_factor * (k + 1)} for k={k}, "
            f"and n={n} is too large for exact search"
        )

    t0 = perf_counter()
    try:
        dres = dichotomy(W, k, P)
    except (PreconditionFailed, IterationCapExceeded) as exc:
        mark("dichotomy", t0)
        return Verdict.insufficient(str(exc))
    mark("dichotomy", t0)
    if dres.is_certificate:
        H = dres.certificate
        assert verifyable_yes(W, k, H)
        return Verdict.yes(H, H.weight(W))

    wp, ledger = dres.reduced, dres.ledger
    alpha = ledger.alpha

    t0 = perf_counter()
    Q = maximal_negative_matching(wp)
    mark("matching", t0)
    if len(Q) > P.matching_threshold * k:
        G0 = phc_from_edges(n, Q)
        exp = expected_weight(wp, G0)
        # branch guarantee: E(w'(H | Q)) <= d'n - k, checked exactly
        if exp * comb(n, 2) <= n * wp.total() - k * comb(n, 2):
            t0 = perf_counter()
            H = min_avg_cycle(wp, G0)
            mark("derandomize", t0)
            assert verifyable_yes(W, k, H), "equivalence broke the certificate"
            return Verdict.yes(H, H.weight(W))
        return Verdict.insufficient(
            "negative matching exceeds the threshold but its conditional "
            "expectation misses dn - k"
        )

    t0 = perf_counter()
    X = build_X(wp, Q, P, k=k)
    try:
        Hmin = min_hamilton_with_structure(wp, X, P)
    except (PreconditionFailed, TooFewOutsideVertices, KernelTooLarge) as exc:
        mark("kernel", t0)
        return Verdict.insufficient(str(exc))
    mark("kernel", t0)
    # exact minimum for wp is exact for W: all cycle weights shift by alpha
    assert Hmin.weight(wp) - Hmin.weight(W) == alpha, "ledger offset mismatch"
    wmin = Hmin.weight(W)
    if beats_average(W, Hmin, k):
        return Verdict.yes(Hmin, wmin)
    return Verdict.no(Hmin, wmin)


def verifyable_yes(W: Weighting, k: int, H: HamCycle) -> bool:
    return certificate_failure(W, k, H) is None
