"""Weighted complete-graph instances and equivalence-preserving transforms.

A Weighting is an integer edge weighting of K_n.  Vertices are the
integers 1..n; the canonical key for an edge is the tuple (min, max).
All arithmetic is exact: weights are Python integers, averages are kept
as integer ratios, and threshold tests are cross-multiplied instead of
divided.

A TransformLedger records the linear edits that map a weighting to an
equivalent one (same ordering of Hamilton cycles up to one constant):
a per-vertex shift lambda_v added to every edge at v, plus a global
constant added to every edge.  Every Hamilton cycle weight moves by
exactly alpha = 2*sum(lambda) + constant*n under such an edit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Iterator, Sequence

from .errors import (
    DuplicateEdge,
    MissingEdge,
    NotHamiltonian,
    SelfLoop,
    SizeMismatch,
    TooSmall,
    UnknownEdge,
)

Edge = tuple[int, int]


def edge_key(u: int, v: int) -> Edge:
    """Canonical (min, max) key of an undirected edge."""
    return (u, v) if u < v else (v, u)


class Weighting:
    """Symmetric integer weight table on K_n, immutable by convention.

    The table is stored densely as n lists of n integers (diagonal 0),
    0-indexed internally; the public API is 1-based.
    """

    __slots__ = ("n", "_rows")

    def __init__(self, n: int, rows: list[list[int]]):
        self.n = n
        self._rows = rows

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "Weighting":
        if n < 3:
            raise TooSmall(f"need n >= 3, got {n}")
        return cls(n, [[0] * n for _ in range(n)])

    @classmethod
    def from_function(cls, n: int, fn) -> "Weighting":
        """Build from fn(u, v) -> int called once per pair u < v (1-based)."""
        w = cls.zero(n)
        rows = w._rows
        for u in range(1, n + 1):
            for v in range(u + 1, n + 1):
                x = int(fn(u, v))
                rows[u - 1][v - 1] = x
                rows[v - 1][u - 1] = x
        return w

    # -- access ----------------------------------------------------------

    def weight(self, u: int, v: int) -> int:
        if u == v or not (1 <= u <= self.n) or not (1 <= v <= self.n):
            raise UnknownEdge(f"no edge ({u},{v}) in K_{self.n}")
        return self._rows[u - 1][v - 1]

    def edges(self) -> Iterator[Edge]:
        for u in range(1, self.n + 1):
            for v in range(u + 1, self.n + 1):
                yield (u, v)

    def total(self) -> int:
        """w(K_n), the sum over all edges."""
        return sum(self._rows[u][v] for u in range(self.n) for v in range(u + 1, self.n))

    def max_abs(self) -> int:
        return max((abs(x) for row in self._rows for x in row), default=0)

    def rows(self) -> list[list[int]]:
        """The raw 0-indexed table; callers must not mutate it."""
        return self._rows

    def as_matrix(self):
        """numpy int64 copy of the table; raises OverflowError for huge weights."""
        import numpy as np

        return np.array(self._rows, dtype=np.int64)

    def replace(self, updates: dict[Edge, int]) -> "Weighting":
        """New weighting with the given edges overwritten."""
        rows = [row[:] for row in self._rows]
        for (u, v), x in updates.items():
            if u == v or not (1 <= u <= self.n) or not (1 <= v <= self.n):
                raise UnknownEdge(f"no edge ({u},{v}) in K_{self.n}")
            rows[u - 1][v - 1] = int(x)
            rows[v - 1][u - 1] = int(x)
        return Weighting(self.n, rows)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Weighting)
            and self.n == other.n
            and self._rows == other._rows
        )

    def __repr__(self) -> str:
        return f"Weighting(n={self.n})"


@dataclass(frozen=True)
class TransformLedger:
    """Record of per-vertex shifts and a global constant.

    lam[v-1] is the shift at vertex v; constant is added to every edge.
    """

    lam: tuple[int, ...]
    constant: int = 0

    @classmethod
    def identity(cls, n: int) -> "TransformLedger":
        return cls(lam=(0,) * n, constant=0)

    @classmethod
    def shift(cls, n: int, shifts: dict[int, int], constant: int = 0) -> "TransformLedger":
        lam = [0] * n
        for v, x in shifts.items():
            lam[v - 1] = int(x)
        return cls(lam=tuple(lam), constant=constant)

    @property
    def n(self) -> int:
        return len(self.lam)

    @property
    def alpha(self) -> int:
        """Offset added to every Hamilton cycle weight."""
        return 2 * sum(self.lam) + self.constant * self.n

    def compose(self, other: "TransformLedger") -> "TransformLedger":
        if self.n != other.n:
            raise SizeMismatch(f"ledgers on {self.n} and {other.n} vertices")
        return TransformLedger(
            lam=tuple(a + b for a, b in zip(self.lam, other.lam)),
            constant=self.constant + other.constant,
        )


@dataclass(frozen=True)
class DensityRatio:
    """Average edge weight kept as an unreduced integer ratio."""

    numerator: int
    denominator: int

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)


# -- operations -----------------------------------------------------------


def validate(n: int, entries: Iterable[tuple[Edge, int]]) -> Weighting:
    """Check a pair-weight list and build the Weighting.

    Exactly one entry per unordered pair of 1..n is required.
    """
    if n < 3:
        raise TooSmall(f"need n >= 3, got {n}")
    rows = [[0] * n for _ in range(n)]
    seen: set[Edge] = set()
    for (u, v), x in entries:
        if u == v:
            raise SelfLoop(f"self loop at vertex {u}")
        if not (1 <= u <= n) or not (1 <= v <= n):
            raise UnknownEdge(f"edge ({u},{v}) outside 1..{n}")
        k = edge_key(u, v)
        if k in seen:
            raise DuplicateEdge(f"edge {k} given twice")
        seen.add(k)
        rows[k[0] - 1][k[1] - 1] = int(x)
        rows[k[1] - 1][k[0] - 1] = int(x)
    if len(seen) != comb(n, 2):
        for u in range(1, n + 1):
            for v in range(u + 1, n + 1):
                if (u, v) not in seen:
                    raise MissingEdge(f"no weight for edge ({u},{v})")
    return Weighting(n, rows)


def subgraph_weight(W: Weighting, edges: Iterable[Edge]) -> int:
    """Exact sum of w(e) over the given edges."""
    return sum(W.weight(u, v) for u, v in edges)


def abs_weight(W: Weighting, edges: Iterable[Edge]) -> int:
    """Exact sum of |w(e)| over the given edges."""
    return sum(abs(W.weight(u, v)) for u, v in edges)


def total_abs_weight(W: Weighting) -> int:
    """w[K_n]: sum of |w(e)| over every edge."""
    rows = W.rows()
    return sum(abs(rows[u][v]) for u in range(W.n) for v in range(u + 1, W.n))


def density(W: Weighting) -> DensityRatio:
    """Average edge weight w(K_n) / C(n,2), never reduced to a float."""
    return DensityRatio(numerator=W.total(), denominator=comb(W.n, 2))


def cycle_edges(n: int, order: Sequence[int]) -> list[Edge]:
    """Edge list of a claimed Hamilton cycle; raises NotHamiltonian."""
    if len(order) != n or sorted(order) != list(range(1, n + 1)):
        raise NotHamiltonian(f"sequence is not a permutation of 1..{n}")
    return [edge_key(order[i], order[(i + 1) % n]) for i in range(n)]


def _order_of(cycle) -> Sequence[int]:
    return cycle.order if hasattr(cycle, "order") else cycle


def cycle_weight(W: Weighting, cycle) -> int:
    """Exact weight of a Hamilton cycle (HamCycle or raw vertex sequence)."""
    return subgraph_weight(W, cycle_edges(W.n, _order_of(cycle)))


def beats_average(W: Weighting, cycle, k: int, *, strict: bool = False) -> bool:
    """Exact test of w(cycle) <= dn - k (or < with strict=True).

    Cross-multiplied by C(n,2); no rounding anywhere.
    """
    n = W.n
    lhs = cycle_weight(W, cycle) * comb(n, 2)
    rhs = n * W.total() - k * comb(n, 2)
    return lhs < rhs if strict else lhs <= rhs


def apply_transform(W: Weighting, L: TransformLedger) -> Weighting:
    """w'(uv) = w(uv) + lam_u + lam_v + constant for every edge."""
    if L.n != W.n:
        raise SizeMismatch(f"ledger on {L.n} vertices, weighting on {W.n}")
    n, lam, c = W.n, L.lam, L.constant
    old = W.rows()
    rows = [[0] * n for _ in range(n)]
    for u in range(n):
        for v in range(u + 1, n):
            x = old[u][v] + lam[u] + lam[v] + c
            rows[u][v] = x
            rows[v][u] = x
    return Weighting(n, rows)


def support_split(W: Weighting) -> tuple[set[Edge], set[Edge], set[Edge]]:
    """Partition all edges into (positive, negative, zero) weight sets."""
    pos: set[Edge] = set()
    neg: set[Edge] = set()
    zero: set[Edge] = set()
    rows = W.rows()
    for u in range(W.n):
        for v in range(u + 1, W.n):
            x = rows[u][v]
            (pos if x > 0 else neg if x < 0 else zero).add((u + 1, v + 1))
    return pos, neg, zero


def certificate_failure(W: Weighting, k: int, cycle) -> str | None:
    """None if cycle is a valid certificate for (W, k), else the reason."""
    try:
        edges = cycle_edges(W.n, _order_of(cycle))
    except NotHamiltonian as exc:
        return f"NotHamiltonian: {exc}"
    n = W.n
    lhs = subgraph_weight(W, edges) * comb(n, 2)
    rhs = n * W.total() - k * comb(n, 2)
    if lhs > rhs:
        return "ThresholdMissed: cycle weight exceeds dn - k"
    return None


def verify_certificate(W: Weighting, k: int, cycle) -> bool:
    """True iff cycle is a Hamilton cycle of K_n with weight <= dn - k."""
    return certificate_failure(W, k, cycle) is None
