"""Batched conditional expectation of w(H) - q(H)/(2n).

Scoring every candidate edge of a derandomization step needs the exact
conditional expectation of q for every G+e.  Computed independently per
candidate this is O(n^4) each; here one pass over all unordered disjoint
edge pairs produces every candidate's value at once.

The pair formulation: for disjoint edges f = {a,b}, g = {c,d} (a<b, c<d,
a<c), exactly one of the two 4-cycles having {f,g} as a perfect matching
is correctly embedded in any Hamilton cycle through f and g, decided by
the traversal pattern, and it contributes when {f,g} is its strictly
heavier matching:

    gamma1 = max(0, w(f)+w(g) - w(b,d) - w(a,c))   pattern a->b ... c->d
    gamma2 = max(0, w(f)+w(g) - w(b,c) - w(a,d))   pattern a->b ... d->c

E(q | G') sums, over all pairs, the probability that both edges lie on a
random extension of G' times the pattern-resolved gamma (the average of
the two when the pattern is free, i.e. the edges land on different
paths).  The probability factors over attachment classes: an edge
joining two paths of an m-path structure is used with probability
su/(2(m-1)) where su is 4, 2 or 1 as its endpoints are trivial/trivial,
trivial/end or end/end.

Bucket bookkeeping: for a structure with mh paths, writing DEN1 = mh-1
and DEN2 = (mh-1)(mh-2),

    E(q) = B_MM/2 + B_MJ/(4*DEN1) + B_JJ/(8*DEN2)

where both-member pairs add 2*gamma_sel (same path) or gamma1+gamma2 to
B_MM, member/join pairs add su*(2*gamma_sel) or su*(gamma1+gamma2) to
B_MJ, and join/join pairs add su_f*su_g*(2*gamma_sel or gamma1+gamma2)
to B_JJ.  For every candidate e = (x,y): pairs not touching the merged
paths keep their bucket weights (denominators shift globally); pairs
touching x or y at a join endpoint get a uniform per-vertex correction
(death when the endpoint was a path end, halved su when it was
trivial); and pairs whose path-contact set contains both endpoints of
the candidate are re-evaluated exactly against the merged structure.
This covers every affected pair: an edge of a pair reclassifies only
when it loses an endpoint to the merge or when both of the candidate's
endpoints lie among the ends of the pair's contact paths.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np

from .hamcycle import HamCycle, PartialHamCycle, expected_weight
from .hamcycle import ExpectedWeightFunctional
from .instance import Weighting

try:
    from numba import njit

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*a, **k):
        def wrap(fn):
            return fn
        return wrap


DEAD, MEMBER, JOIN = 0, 1, 2


@njit(cache=True)
def _st_hat(v, st, ox, oy, ov):
    if ov and (v == ox or v == oy):
        return 2 if st[v] == 1 else 1
    return st[v]


@njit(cache=True)
def _pid_hat(v, pid, ox, oy, ov):
    if ov and pid[v] == pid[oy]:
        return pid[ox]
    return pid[v]


@njit(cache=True)
def _edge_code(p, q, st, pid, mem, n, ox, oy, ov):
    if mem[p * n + q] == 1 or (ov and ((p == ox and q == oy) or (p == oy and q == ox))):
        return MEMBER, 0
    sp = _st_hat(p, st, ox, oy, ov)
    sq = _st_hat(q, st, ox, oy, ov)
    if sp == 2 or sq == 2:
        return DEAD, 0
    if _pid_hat(p, pid, ox, oy, ov) == _pid_hat(q, pid, ox, oy, ov):
        return DEAD, 0
    return JOIN, 4 >> (sp + sq)


@njit(cache=True)
def _pos_hat(v, pos, pid, plen, ox, oy, ov):
    if ov == 0:
        return pos[v]
    if pid[v] == pid[ox]:
        lx = plen[pid[ox]]
        return pos[v] if pos[ox] == lx - 1 else lx - 1 - pos[v]
    if pid[v] == pid[oy]:
        lx = plen[pid[ox]]
        if pos[oy] == 0:
            return lx + pos[v]
        return lx + plen[pid[oy]] - 1 - pos[v]
    return pos[v]


@njit(cache=True)
def _enter_drn(vs, st, pos, pid, mate, ox, oy, ov):
    """+1 when entering path at vs means walking in increasing position."""
    if ov and (pid[vs] == pid[ox] or pid[vs] == pid[oy]):
        apr = mate[ox] if st[ox] == 1 else ox
        return 1 if vs == apr else -1
    return 1 if pos[vs] == 0 else -1


@njit(cache=True)
def _contrib(k, pa, pb, pc, pd, g1, g2, st, pid, mate, pos, plen, mem, n, ox, oy, ov):
    """Bucket (0 MM, 1 MJ, 2 JJ) and weight of pair k w.r.t. the structure,
    optionally overridden by the candidate edge (ox, oy).  Returns
    (-1, 0, cf, cg) when the pair cannot lie on any extension."""
    a, b, c, d = pa[k], pb[k], pc[k], pd[k]
    cf, suf = _edge_code(a, b, st, pid, mem, n, ox, oy, ov)
    cg, sug = _edge_code(c, d, st, pid, mem, n, ox, oy, ov)
    if cf == DEAD or cg == DEAD:
        return -1, 0, cf, cg
    ga, gb = g1[k], g2[k]
    if cf == MEMBER and cg == MEMBER:
        if _pid_hat(a, pid, ox, oy, ov) == _pid_hat(c, pid, ox, oy, ov):
            sig = _pos_hat(a, pos, pid, plen, ox, oy, ov) < _pos_hat(b, pos, pid, plen, ox, oy, ov)
            tau = _pos_hat(c, pos, pid, plen, ox, oy, ov) < _pos_hat(d, pos, pid, plen, ox, oy, ov)
            sel = ga if sig == tau else gb
            return 0, 2 * sel, cf, cg
        return 0, ga + gb, cf, cg
    if cf == MEMBER or cg == MEMBER:
        if cf == MEMBER:
            m1, m2, j1, j2, suj = a, b, c, d, sug
        else:
            m1, m2, j1, j2, suj = c, d, a, b, suf
        pm = _pid_hat(m1, pid, ox, oy, ov)
        pj1 = _pid_hat(j1, pid, ox, oy, ov)
        pj2 = _pid_hat(j2, pid, ox, oy, ov)
        if pm == pj1 or pm == pj2:
            js = j1 if pm == pj1 else j2
            drn = _enter_drn(js, st, pos, pid, mate, ox, oy, ov)
            sigm = (_pos_hat(m1, pos, pid, plen, ox, oy, ov)
                    < _pos_hat(m2, pos, pid, plen, ox, oy, ov)) == (drn == 1)
            tauj = js == j2
            # gamma1 iff both edges are traversed low->high together
            sel = ga if sigm == tauj else gb
            return 1, 2 * suj * sel, cf, cg
        return 1, suj * (ga + gb), cf, cg
    # both join
    pf1 = _pid_hat(a, pid, ox, oy, ov)
    pf2 = _pid_hat(b, pid, ox, oy, ov)
    pg1 = _pid_hat(c, pid, ox, oy, ov)
    pg2 = _pid_hat(d, pid, ox, oy, ov)
    s1 = pf1 == pg1 or pf1 == pg2
    s2 = pf2 == pg1 or pf2 == pg2
    if s1 and s2:
        return -1, 0, cf, cg
    if s1 or s2:
        fs = a if s1 else b
        sig = fs == b
        shared = pf1 if s1 else pf2
        gs = c if pg1 == shared else d
        tau = gs == c
        sel = ga if sig == tau else gb
        return 2, 2 * suf * sug * sel, cf, cg
    return 2, suf * sug * (ga + gb), cf, cg


@njit(cache=True)
def _kernel_step(alive, pa, pb, pc, pd, g1, g2,
                 st, pid, mate, pos, plen, pend1, pend2, mem, n,
                 cid, GB, UD, CORRX):
    ends = np.empty(8, dtype=np.int64)
    epids = np.empty(4, dtype=np.int64)
    verts = np.empty(4, dtype=np.int64)
    for t in range(alive.size):
        k = alive[t]
        b0, w0, cf, cg = _contrib(k, pa, pb, pc, pd, g1, g2,
                                  st, pid, mate, pos, plen, mem, n, -1, -1, 0)
        if b0 < 0:
            continue
        GB[b0] += w0
        verts[0] = pa[k]
        verts[1] = pb[k]
        verts[2] = pc[k]
        verts[3] = pd[k]
        # uniform correction for candidates consuming a join endpoint
        if cf == JOIN:
            for i in range(2):
                u = verts[i]
                UD[u, b0] += -w0 if st[u] == 1 else -(w0 // 2)
        if cg == JOIN:
            for i in range(2, 4):
                u = verts[i]
                UD[u, b0] += -w0 if st[u] == 1 else -(w0 // 2)
        # candidates with both endpoints among the contact-path ends are
        # re-evaluated exactly
        ne_p = 0
        for i in range(4):
            pv = pid[verts[i]]
            dup = False
            for j in range(ne_p):
                if epids[j] == pv:
                    dup = True
                    break
            if not dup:
                epids[ne_p] = pv
                ne_p += 1
        ne = 0
        for i in range(ne_p):
            e1 = pend1[epids[i]]
            e2 = pend2[epids[i]]
            ends[ne] = e1
            ne += 1
            if e2 != e1:
                ends[ne] = e2
                ne += 1
        for i in range(ne):
            for j in range(i + 1, ne):
                u = ends[i]
                v = ends[j]
                if pid[u] == pid[v]:
                    continue
                c = cid[u * n + v]
                if c < 0:
                    continue
                bn, wn, _, _ = _contrib(k, pa, pb, pc, pd, g1, g2,
                                        st, pid, mate, pos, plen, mem, n, u, v, 1)
                du = np.int64(0)
                dv = np.int64(0)
                if cf == JOIN:
                    if u == verts[0] or u == verts[1]:
                        du = -w0 if st[u] == 1 else -(w0 // 2)
                    if v == verts[0] or v == verts[1]:
                        dv = -w0 if st[v] == 1 else -(w0 // 2)
                if cg == JOIN:
                    if u == verts[2] or u == verts[3]:
                        du = -w0 if st[u] == 1 else -(w0 // 2)
                    if v == verts[2] or v == verts[3]:
                        dv = -w0 if st[v] == 1 else -(w0 // 2)
                CORRX[c, b0] += -w0 - du - dv
                if bn >= 0:
                    CORRX[c, bn] += wn


def build_pair_tables(W: Weighting):
    """Static per-instance arrays over all unordered disjoint edge pairs."""
    n = W.n
    Wm = np.array(W.rows(), dtype=np.int64)
    quads = np.array(list(combinations(range(n), 4)), dtype=np.int64)
    a, b, c, d = quads[:, 0], quads[:, 1], quads[:, 2], quads[:, 3]
    # the three matchings of each 4-subset: (ab|cd), (ac|bd), (ad|bc)
    pa = np.concatenate([a, a, a])
    pb = np.concatenate([b, c, d])
    pc = np.concatenate([c, b, b])
    pd_ = np.concatenate([d, d, c])
    s = Wm[pa, pb] + Wm[pc, pd_]
    g1 = s - Wm[pb, pd_] - Wm[pa, pc]
    g2 = s - Wm[pb, pc] - Wm[pa, pd_]
    np.maximum(g1, 0, out=g1)
    np.maximum(g2, 0, out=g2)
    keep = (g1 + g2) > 0
    return pa[keep], pb[keep], pc[keep], pd_[keep], g1[keep], g2[keep]


def structure_arrays(G: PartialHamCycle):
    n = G.n
    m = G.m
    st = np.full(n, 2, dtype=np.int64)
    pid = np.zeros(n, dtype=np.int64)
    mate = np.arange(n, dtype=np.int64)
    pos = np.zeros(n, dtype=np.int64)
    plen = np.zeros(max(m, 1), dtype=np.int64)
    pend1 = np.zeros(max(m, 1), dtype=np.int64)
    pend2 = np.zeros(max(m, 1), dtype=np.int64)
    for i, p in enumerate(G.paths):
        plen[i] = len(p)
        last = len(p) - 1
        for j, v1 in enumerate(p):
            v = v1 - 1
            pid[v] = i
            pos[v] = j
            st[v] = 0 if last == 0 else (1 if j in (0, last) else 2)
        pend1[i] = p[0] - 1
        pend2[i] = p[-1] - 1
        mate[p[0] - 1] = p[-1] - 1
        mate[p[-1] - 1] = p[0] - 1
    mem = np.zeros(n * n, dtype=np.uint8)
    for (u, v) in G.edge_set():
        mem[(u - 1) * n + (v - 1)] = 1
        mem[(v - 1) * n + (u - 1)] = 1
    return st, pid, mate, pos, plen, pend1, pend2, mem


def _completions(G: PartialHamCycle) -> list[HamCycle]:
    """All Hamilton cycles containing G, for structures with <= 2 paths."""
    if G.is_cycle:
        return [G.to_ham_cycle()]
    if G.m == 1:
        return [HamCycle.from_sequence(G.paths[0])]
    assert G.m == 2, "explicit completion only for endgame structures"
    p, q = G.paths
    out = {}
    for qq in (q, q[::-1]):
        H = HamCycle.from_sequence(p + qq)
        out[H.order] = H
    return list(out.values())


class LightFunctional:
    """Exact conditional expectation of w(H) - q(H)/(2n), batched.

    batch() returns integer scores sharing one positive denominator per
    step, so comparing scores compares the expectations exactly.
    """

    def __init__(self, W: Weighting):
        self.W = W
        self.n = W.n
        self._ew = ExpectedWeightFunctional(W)
        self._tables = None
        M = max(W.max_abs(), 1)
        self._np_ok = _HAVE_NUMBA and (W.n ** 6) * M < (1 << 60)

    def _pairs(self):
        if self._tables is None:
            self._tables = build_pair_tables(self.W)
        return self._tables

    def __call__(self, G: PartialHamCycle) -> Fraction:
        from .fourcycle import expected_q, four_cycle_norm, q_value

        W, n = self.W, self.n
        if G.is_cycle:
            H = G.to_ham_cycle()
            return Fraction(H.weight(W)) - Fraction(q_value(W, H), 2 * n)
        if G.m == n:
            # empty structure: E(q) has the closed form 2*norm/((n-1)(n-2))
            eq = Fraction(2 * four_cycle_norm(W), (n - 1) * (n - 2))
        elif G.m <= 2:
            comps = _completions(G)
            return (Fraction(sum(H.weight(W) for H in comps), len(comps))
                    - Fraction(sum(q_value(W, H) for H in comps), 2 * n * len(comps)))
        else:
            eq = expected_q(W, G)
        return expected_weight(W, G) - eq / (2 * n)

    def batch(self, G: PartialHamCycle, cands):
        if G.m <= 3 or not self._np_ok:
            return self._batch_exact(G, cands)
        return self._batch_kernel(G, cands)

    def _batch_exact(self, G, cands):
        from .fourcycle import q_value

        W, n = self.W, self.n
        out = []
        for e in cands:
            G1 = G.add_edge(e)
            if G1.m > 2 and not G1.is_cycle:
                out.append(self(G1))
                continue
            comps = _completions(G1)
            val = (Fraction(sum(H.weight(W) for H in comps), len(comps))
                   - Fraction(sum(q_value(W, H) for H in comps), 2 * n * len(comps)))
            out.append(val)
        return out

    def _batch_kernel(self, G, cands):
        n, m = self.n, G.m
        pa, pb, pc, pd_, g1, g2 = self._pairs()
        st, pid, mate, pos, plen, pend1, pend2, mem = structure_arrays(G)

        # pairs that can still lie on an extension of G
        def edge_dead(u, v):
            memb = mem[u * n + v] == 1
            return (~memb) & ((st[u] == 2) | (st[v] == 2) | (pid[u] == pid[v]))

        dead = edge_dead(pa, pb) | edge_dead(pc, pd_)
        alive = np.flatnonzero(~dead).astype(np.int64)

        cx = np.array([e[0] - 1 for e in cands], dtype=np.int64)
        cy = np.array([e[1] - 1 for e in cands], dtype=np.int64)
        cid = np.full(n * n, -1, dtype=np.int64)
        for i in range(len(cands)):
            cid[cx[i] * n + cy[i]] = i
            cid[cy[i] * n + cx[i]] = i

        GB = np.zeros(3, dtype=np.int64)
        UD = np.zeros((n, 3), dtype=np.int64)
        CORRX = np.zeros((len(cands), 3), dtype=np.int64)
        _kernel_step(alive, pa, pb, pc, pd_, g1, g2,
                     st, pid, mate, pos, plen, pend1, pend2, mem, n,
                     cid, GB, UD, CORRX)

        B = GB[None, :] + UD[cx] + UD[cy] + CORRX
        den2 = (m - 2) * (m - 3)
        num_q = 4 * den2 * B[:, 0] + 2 * (m - 3) * B[:, 1] + B[:, 2]
        ew = np.array(self._ew.batch(G, cands), dtype=np.int64)
        scores = 8 * n * (m - 3) * ew - num_q
        return [int(v) for v in scores]
