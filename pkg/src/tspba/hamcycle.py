"""Partial Hamilton cycles, extension counting, and derandomization.

A partial Hamilton cycle is a spanning union of vertex-disjoint paths of
K_n (single vertices count as trivial paths); a full Hamilton cycle is a
flagged terminal state.  With r non-trivial and s trivial paths, the
number of Hamilton cycles containing the structure is 2^(r-1)(r+s-1)!,
and the probability that a uniformly random such cycle uses a given
join edge has a closed form depending only on how the edge attaches.

The derandomizer turns any exactly-computable conditional expectation
into a deterministic greedy edge selection: at each step it adds the
join edge minimizing the conditional expectation, breaking ties by the
lexicographically smallest edge, so the expectation never increases.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Iterable, Sequence

from .errors import (
    AlreadyComplete,
    DegreeExceeded,
    NotHamiltonian,
    NotJoinable,
    PrematureCycle,
)
from .instance import Edge, Weighting, edge_key, subgraph_weight


@dataclass(frozen=True)
class HamCycle:
    """A Hamilton cycle in canonical form.

    order starts at vertex 1 and the second vertex is the smaller of
    vertex 1's two neighbours, so equal cycles compare equal.
    """

    order: tuple[int, ...]

    @classmethod
    def from_sequence(cls, seq: Sequence[int]) -> "HamCycle":
        n = len(seq)
        if n < 3 or sorted(seq) != list(range(1, n + 1)):
            raise NotHamiltonian(f"sequence is not a permutation of 1..{n}")
        i = seq.index(1)
        rot = tuple(seq[i:]) + tuple(seq[:i])
        if rot[1] > rot[-1]:
            rot = (rot[0],) + tuple(reversed(rot[1:]))
        return cls(order=rot)

    @property
    def n(self) -> int:
        return len(self.order)

    def edge_list(self) -> list[Edge]:
        o, n = self.order, len(self.order)
        return [edge_key(o[i], o[(i + 1) % n]) for i in range(n)]

    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edge_list())

    def positions(self) -> dict[int, int]:
        """vertex -> 0-based position along the canonical order."""
        return {v: i for i, v in enumerate(self.order)}

    def weight(self, W: Weighting) -> int:
        return subgraph_weight(W, self.edge_list())


class PartialHamCycle:
    """Vertex-disjoint spanning paths of K_n, or a flagged full cycle.

    paths are stored oriented from their smaller endpoint and sorted by
    first vertex, so the whole structure is canonical.
    """

    __slots__ = ("n", "paths", "is_cycle", "cycle_order", "_end_of", "_edge_set")

    def __init__(self, n: int, paths: tuple[tuple[int, ...], ...],
                 is_cycle: bool = False, cycle_order: tuple[int, ...] = ()):
        self.n = n
        self.paths = paths
        self.is_cycle = is_cycle
        self.cycle_order = cycle_order
        self._end_of: dict[int, int] | None = None
        self._edge_set: frozenset[Edge] | None = None

    # -- constructors ---------------------------------------------------

    @classmethod
    def empty(cls, n: int) -> "PartialHamCycle":
        return cls(n, tuple((v,) for v in range(1, n + 1)))

    # -- structure queries ------------------------------------------------

    @property
    def r(self) -> int:
        """Number of non-trivial paths (0 for a completed cycle)."""
        return sum(1 for p in self.paths if len(p) > 1)

    @property
    def s(self) -> int:
        """Number of trivial paths."""
        return sum(1 for p in self.paths if len(p) == 1)

    @property
    def m(self) -> int:
        return len(self.paths)

    def edge_set(self) -> frozenset[Edge]:
        if self._edge_set is None:
            if self.is_cycle:
                o, n = self.cycle_order, self.n
                es = frozenset(edge_key(o[i], o[(i + 1) % n]) for i in range(n))
            else:
                es = frozenset(
                    edge_key(p[i], p[i + 1])
                    for p in self.paths for i in range(len(p) - 1)
                )
            self._edge_set = es
        return self._edge_set

    def weight(self, W: Weighting) -> int:
        return subgraph_weight(W, self.edge_set())

    def _ends(self) -> dict[int, int]:
        """endpoint vertex -> index of its path (trivial: the vertex itself)."""
        if self._end_of is None:
            self._end_of = {}
            for i, p in enumerate(self.paths):
                self._end_of[p[0]] = i
                self._end_of[p[-1]] = i
        return self._end_of

    def path_of_end(self, v: int) -> tuple[int, ...] | None:
        i = self._ends().get(v)
        return None if i is None else self.paths[i]

    def to_ham_cycle(self) -> HamCycle:
        if not self.is_cycle:
            raise NotJoinable("structure is not a complete Hamilton cycle")
        return HamCycle.from_sequence(self.cycle_order)

    # -- growth -----------------------------------------------------------

    def add_edge(self, e: Edge) -> "PartialHamCycle":
        """New structure with e added; e must join two paths or close a
        spanning Hamilton path."""
        if self.is_cycle:
            raise AlreadyComplete("cannot extend a complete Hamilton cycle")
        u, v = e
        ends = self._ends()
        iu, iv = ends.get(u), ends.get(v)
        if iu is None or iv is None:
            raise NotJoinable(f"edge {e} does not touch two path ends")
        if iu == iv:
            p = self.paths[iu]
            if len(p) == self.n and {u, v} == {p[0], p[-1]}:
                return PartialHamCycle(self.n, (), is_cycle=True, cycle_order=p)
            raise NotJoinable(f"edge {e} would close a short cycle")
        pu, pv = self.paths[iu], self.paths[iv]
        if pu[-1] != u:
            pu = pu[::-1]
        if pv[0] != v:
            pv = pv[::-1]
        merged = pu + pv
        if merged[0] > merged[-1]:
            merged = merged[::-1]
        rest = [p for i, p in enumerate(self.paths) if i not in (iu, iv)]
        rest.append(merged)
        rest.sort(key=lambda p: p[0])
        return PartialHamCycle(self.n, tuple(rest))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PartialHamCycle)
            and self.n == other.n
            and self.paths == other.paths
            and self.is_cycle == other.is_cycle
            and self.cycle_order == other.cycle_order
        )

    def __repr__(self) -> str:
        if self.is_cycle:
            return f"PartialHamCycle(cycle={self.cycle_order})"
        return f"PartialHamCycle(n={self.n}, r={self.r}, s={self.s})"


def phc_from_edges(n: int, edges: Iterable[Edge]) -> PartialHamCycle:
    """Build a partial Hamilton cycle from an edge set.

    Raises DegreeExceeded if some vertex gets degree three, and
    PrematureCycle if the edges close a cycle on fewer than n vertices.
    A full Hamilton cycle is accepted and flagged.
    """
    adj: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
    seen: set[Edge] = set()
    for u, v in edges:
        k = edge_key(u, v)
        if k in seen:
            continue
        seen.add(k)
        if u == v or not (1 <= u <= n) or not (1 <= v <= n):
            raise NotJoinable(f"edge ({u},{v}) outside K_{n}")
        adj[u].append(v)
        adj[v].append(u)
        if len(adj[u]) > 2 or len(adj[v]) > 2:
            raise DegreeExceeded(f"vertex degree exceeds 2 at edge ({u},{v})")

    visited: set[int] = set()
    paths: list[tuple[int, ...]] = []
    # walk from every degree<=1 vertex: collects all path components
    for v in range(1, n + 1):
        if v in visited or len(adj[v]) == 2:
            continue
        walk = [v]
        visited.add(v)
        prev, cur = None, v
        while True:
            nxt = [x for x in adj[cur] if x != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            walk.append(cur)
            visited.add(cur)
        paths.append(tuple(walk))
    leftover = [v for v in range(1, n + 1) if v not in visited]
    if leftover:
        # every leftover vertex has degree 2: a cycle component
        start = leftover[0]
        walk = [start]
        prev, cur = None, start
        while True:
            nxt = [x for x in adj[cur] if x != prev]
            prev, cur = cur, nxt[0]
            if cur == start:
                break
            walk.append(cur)
        if len(walk) < n:
            raise PrematureCycle(f"cycle on {len(walk)} < {n} vertices")
        return PartialHamCycle(n, (), is_cycle=True, cycle_order=tuple(walk))

    oriented = []
    for p in paths:
        if p[0] > p[-1]:
            p = p[::-1]
        oriented.append(p)
    oriented.sort(key=lambda p: p[0])
    return PartialHamCycle(n, tuple(oriented))


def join_edges(G: PartialHamCycle) -> list[Edge]:
    """Edges whose addition keeps G a partial Hamilton cycle, sorted.

    For a spanning Hamilton path this is the single closing edge.
    """
    if G.is_cycle:
        raise AlreadyComplete("structure is already a Hamilton cycle")
    if G.m == 1:
        p = G.paths[0]
        return [edge_key(p[0], p[-1])]
    out: set[Edge] = set()
    paths = G.paths
    for i in range(len(paths)):
        ei = paths[i] if len(paths[i]) == 1 else (paths[i][0], paths[i][-1])
        for j in range(i + 1, len(paths)):
            ej = paths[j] if len(paths[j]) == 1 else (paths[j][0], paths[j][-1])
            for a in ei:
                for b in ej:
                    out.add(edge_key(a, b))
    return sorted(out)


def extension_count(G: PartialHamCycle) -> int:
    """|{Hamilton cycles containing G}| = 2^(r-1) (r+s-1)!.

    The r = 0 case is the closed form (n-1)!/2; a complete cycle counts
    itself once.
    """
    if G.is_cycle:
        return 1
    r, s = G.r, G.s
    if r == 0:
        return factorial(s - 1) // 2
    return (2 ** (r - 1)) * factorial(r + s - 1)


def _join_class(G: PartialHamCycle, e: Edge) -> int:
    """0: trivial-trivial, 1: trivial-end, 2: end-end; raises NotJoinable."""
    u, v = e
    ends = G._ends()
    iu, iv = ends.get(u), ends.get(v)
    if iu is None or iv is None or iu == iv:
        raise NotJoinable(f"edge {e} is not a join edge")
    cls = (len(G.paths[iu]) > 1) + (len(G.paths[iv]) > 1)
    return cls


def edge_prob(G: PartialHamCycle, e: Edge) -> Fraction:
    """Exact probability that a random Hamilton cycle containing G uses e."""
    if G.is_cycle:
        raise AlreadyComplete("structure is already a Hamilton cycle")
    e = edge_key(*e)
    if G.m == 1:
        p = G.paths[0]
        if e == edge_key(p[0], p[-1]):
            return Fraction(1)
        raise NotJoinable(f"edge {e} is not the closing edge")
    cls = _join_class(G, e)
    m = G.m
    # 2^(r'-r) is 2, 1, 1/2 for the three attachment classes
    return Fraction((4, 2, 1)[cls], 2 * (m - 1))


def expected_weight(W: Weighting, G: PartialHamCycle) -> Fraction:
    """Exact E(w(H)) over random Hamilton cycles H containing G."""
    if G.is_cycle:
        return Fraction(G.weight(W))
    base = G.weight(W)
    if G.m == 1:
        p = G.paths[0]
        return Fraction(base + W.weight(p[0], p[-1]))
    num = 0
    for e in join_edges(G):
        num += (4, 2, 1)[_join_class(G, e)] * W.weight(*e)
    return base + Fraction(num, 2 * (G.m - 1))


# -- derandomization --------------------------------------------------------


def derandomize(G0: PartialHamCycle, expect: Callable) -> HamCycle:
    """Greedy conditional-expectation descent from G0 to a full cycle.

    expect(G) must return the exact conditional expectation of a fixed
    cycle functional given the partial structure G.  If expect has a
    `batch(G, candidates)` method it is used to score all candidates at
    once; scores must order exactly like the expectations.  Each step
    commits the candidate with the smallest score, ties resolved by the
    lexicographically smallest edge, so the expectation never increases;
    the output cycle H* satisfies X(H*) <= expect(G0).
    """
    G = G0
    while not G.is_cycle:
        cands = join_edges(G)
        if hasattr(expect, "batch"):
            scores = expect.batch(G, cands)
        else:
            scores = [expect(G.add_edge(e)) for e in cands]
        best = min(range(len(cands)), key=lambda i: (scores[i], cands[i]))
        G = G.add_edge(cands[best])
    return G.to_ham_cycle()


class ExpectedWeightFunctional:
    """Conditional expectation of the cycle weight, with a fast batch path.

    batch() returns integer scores equal to the candidate expectations
    times the positive constant 2(m-2) shared by all candidates of one
    step, so comparing scores compares expectations exactly.
    """

    def __init__(self, W: Weighting):
        self.W = W
        n = W.n
        # numpy scoring is exact in int64 only while this bound holds
        self._np_ok = 16 * n * n * n * max(W.max_abs(), 1) < 2 ** 62

    def __call__(self, G: PartialHamCycle) -> Fraction:
        return expected_weight(self.W, G)

    def batch(self, G: PartialHamCycle, cands: list[Edge]) -> list[int]:
        W = self.W
        m = G.m
        if m <= 2:
            out = []
            for e in cands:
                G1 = G.add_edge(e)
                if G1.is_cycle:
                    out.append(G1.weight(W))
                else:
                    p = G1.paths[0]
                    out.append(G1.weight(W) + W.weight(p[0], p[-1]))
            return out
        if self._np_ok:
            return self._batch_np(G, cands)
        return [self._score_py(G, e) for e in cands]

    # the per-candidate closed forms below update the three endpoint-pair
    # aggregates S_tt, S_tn, S_nn of G to those of G+e in O(1)

    def _aggregates(self, G: PartialHamCycle):
        W = self.W
        triv = [p[0] for p in G.paths if len(p) == 1]
        epaths = [(p[0], p[-1]) for p in G.paths if len(p) > 1]
        ep = [v for pair in epaths for v in pair]
        a_t = {v: sum(W.weight(v, t) for t in triv if t != v) for v in triv + ep}
        a_e = {v: sum(W.weight(v, u) for u in ep if u != v) for v in triv + ep}
        s_tt = sum(a_t[t] for t in triv) // 2
        s_tn = sum(a_e[t] for t in triv)
        s_nn = sum(a_e[u] for u in ep) // 2 - sum(W.weight(a, b) for a, b in epaths)
        mate = {a: b for a, b in epaths} | {b: a for a, b in epaths}
        status = {v: 0 for v in triv} | {v: 1 for v in ep}
        return status, mate, a_t, a_e, s_tt, s_tn, s_nn

    def _score_py(self, G: PartialHamCycle, e: Edge) -> int:
        status, mate, a_t, a_e, s_tt, s_tn, s_nn = self._aggregates(G)
        return self._score_one(G, e, status, mate, a_t, a_e, s_tt, s_tn, s_nn)

    def _score_one(self, G, e, status, mate, a_t, a_e, s_tt, s_tn, s_nn) -> int:
        W, m = self.W, G.m
        x, y = e
        if status[x] > status[y]:
            x, y = y, x
        wxy = W.weight(x, y)
        if status[x] == 0 and status[y] == 0:
            tt = s_tt - a_t[x] - a_t[y] + wxy
            tn = s_tn - a_e[x] - a_e[y] + a_t[x] + a_t[y] - 2 * wxy
            nn = s_nn + a_e[x] + a_e[y]
        elif status[x] == 0:
            b = mate[y]
            tt = s_tt - a_t[x]
            tn = s_tn - a_e[x] - a_t[y] + wxy + a_t[x]
            nn = s_nn - a_e[y] + W.weight(y, b) + a_e[x] - wxy - W.weight(x, b)
        else:
            a, b = mate[x], mate[y]
            tt = s_tt
            tn = s_tn - a_t[x] - a_t[y]
            nn = (s_nn - a_e[x] + W.weight(x, a) - a_e[y] + W.weight(y, b)
                  + wxy - W.weight(a, b))
        return 2 * (m - 2) * (G.weight(W) + wxy) + 4 * tt + 2 * tn + nn

    def _batch_np(self, G: PartialHamCycle, cands: list[Edge]) -> list[int]:
        import numpy as np

        W, m = self.W, G.m
        n = W.n
        Wm = np.array(W.rows(), dtype=np.int64)
        triv = np.array([p[0] - 1 for p in G.paths if len(p) == 1], dtype=np.int64)
        epaths = [(p[0] - 1, p[-1] - 1) for p in G.paths if len(p) > 1]
        ep = np.array([v for pair in epaths for v in pair], dtype=np.int64)
        a_t = (Wm[:, triv].sum(axis=1) if len(triv) else np.zeros(n, dtype=np.int64))
        a_e = (Wm[:, ep].sum(axis=1) if len(ep) else np.zeros(n, dtype=np.int64))
        s_tt = int(a_t[triv].sum()) // 2 if len(triv) else 0
        s_tn = int(a_e[triv].sum()) if len(triv) else 0
        s_same = sum(int(Wm[a, b]) for a, b in epaths)
        # a_e[u] sums over ep\{u}, so sum(a_e[ep])/2 counts every unordered
        # endpoint pair once; the r same-path pairs do not belong in S_nn
        s_nn = (int(a_e[ep].sum()) // 2 - s_same) if len(ep) else 0

        mate_arr = np.arange(n, dtype=np.int64)
        for a, b in epaths:
            mate_arr[a], mate_arr[b] = b, a
        st = np.full(n, -1, dtype=np.int64)
        st[triv] = 0
        st[ep] = 1

        xs = np.array([e[0] - 1 for e in cands], dtype=np.int64)
        ys = np.array([e[1] - 1 for e in cands], dtype=np.int64)
        # orient so status[x] <= status[y]
        swap = st[xs] > st[ys]
        xs2 = np.where(swap, ys, xs)
        ys2 = np.where(swap, xs, ys)
        xs, ys = xs2, ys2
        wxy = Wm[xs, ys]
        stx, sty = st[xs], st[ys]
        base = 2 * (m - 2) * (G.weight(W) + wxy)

        tt = np.full(len(cands), s_tt, dtype=np.int64)
        tn = np.full(len(cands), s_tn, dtype=np.int64)
        nn = np.full(len(cands), s_nn, dtype=np.int64)

        tt_mask = (stx == 0) & (sty == 0)
        te_mask = (stx == 0) & (sty == 1)
        ee_mask = (stx == 1) & (sty == 1)

        if tt_mask.any():
            i = tt_mask
            tt[i] += -a_t[xs[i]] - a_t[ys[i]] + wxy[i]
            tn[i] += -a_e[xs[i]] - a_e[ys[i]] + a_t[xs[i]] + a_t[ys[i]] - 2 * wxy[i]
            nn[i] += a_e[xs[i]] + a_e[ys[i]]
        if te_mask.any():
            i = te_mask
            b = mate_arr[ys[i]]
            tt[i] += -a_t[xs[i]]
            tn[i] += -a_e[xs[i]] - a_t[ys[i]] + wxy[i] + a_t[xs[i]]
            nn[i] += (-a_e[ys[i]] + Wm[ys[i], b] + a_e[xs[i]] - wxy[i]
                      - Wm[xs[i], b])
        if ee_mask.any():
            i = ee_mask
            a = mate_arr[xs[i]]
            b = mate_arr[ys[i]]
            tt[i] += 0
            tn[i] += -a_t[xs[i]] - a_t[ys[i]]
            nn[i] += (-a_e[xs[i]] + Wm[xs[i], a] - a_e[ys[i]] + Wm[ys[i], b]
                      + wxy[i] - Wm[a, b])
        scores = base + 4 * tt + 2 * tn + nn
        return [int(v) for v in scores]


def min_avg_cycle(W: Weighting, G: PartialHamCycle | None = None) -> HamCycle:
    """Deterministic Hamilton cycle with w(H) <= E(w | G) (G empty: <= dn)."""
    if G is None:
        G = PartialHamCycle.empty(W.n)
    fn = ExpectedWeightFunctional(W)
    bound = fn(G)
    H = derandomize(G, fn)
    assert Fraction(H.weight(W)) <= bound, "expectation contract violated"
    return H
