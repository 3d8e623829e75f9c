"""Finite vertex-transitive graphs the walkers move on.

Three families are supported: the cycle on n vertices, the d-dimensional
discrete torus with side n, and the complete graph.  Vertices are the
integers 0..vertex_count-1; torus vertices are base-n encodings of their
coordinate vectors (coordinate i is ``(v // n**i) % n``).

Every vertex has the same degree and the jump kernel is uniform over
neighbours, so a single neighbour table of shape (vertex_count, degree)
describes the graph completely.  The table rows are sorted ascending,
which fixes the meaning of "the k-th neighbour" for seeded draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Topology:
    """A finite vertex-transitive graph with a uniform jump kernel."""

    kind: str
    n: int
    d: int
    vertex_count: int
    degree: int
    neighbor_table: np.ndarray = field(repr=False, compare=False)

    def neighbors(self, v: int) -> list[int]:
        """Neighbours of v in ascending vertex order."""
        if not 0 <= v < self.vertex_count:
            raise ValueError(f"vertex {v} out of range for {self.label()}")
        return [int(u) for u in self.neighbor_table[v]]

    def sample_neighbor(self, v: int, rng: np.random.Generator) -> int:
        # One generator draw per call: an index into the sorted row.
        k = int(rng.integers(0, self.degree))
        return int(self.neighbor_table[v, k])

    def label(self) -> str:
        if self.kind == "torus":
            return f"torus({self.n},{self.d})"
        return f"{self.kind}({self.n})"


def cycle(n: int) -> Topology:
    if n < 3:
        raise ValueError(f"cycle needs n >= 3, got {n}")
    idx = np.arange(n)
    table = np.stack([(idx - 1) % n, (idx + 1) % n], axis=1)
    table.sort(axis=1)
    return Topology("cycle", n, 1, n, 2, table.astype(np.int64))


def torus(n: int, d: int) -> Topology:
    if n < 3:
        raise ValueError(f"torus needs n >= 3, got {n}")
    if d < 1:
        raise ValueError(f"torus needs d >= 1, got {d}")
    count = n**d
    idx = np.arange(count)
    cols = []
    for axis in range(d):
        stride = n**axis
        coord = (idx // stride) % n
        up = idx + ((coord + 1) % n - coord) * stride
        down = idx + ((coord - 1) % n - coord) * stride
        cols.extend([up, down])
    table = np.stack(cols, axis=1)
    table.sort(axis=1)
    return Topology("torus", n, d, count, 2 * d, table.astype(np.int64))


def complete(n: int) -> Topology:
    if n < 2:
        raise ValueError(f"complete needs n >= 2, got {n}")
    table = np.empty((n, n - 1), dtype=np.int64)
    for v in range(n):
        row = [u for u in range(n) if u != v]
        table[v] = row
    return Topology("complete", n, 1, n, n - 1, table)


def make_topology(kind: str, n: int, d: int = 1) -> Topology:
    """Build a graph by family name; raises on unknown kinds."""
    if kind == "cycle":
        return cycle(n)
    if kind == "torus":
        return torus(n, d)
    if kind == "complete":
        return complete(n)
    raise ValueError(f"unknown graph kind {kind!r} (expected cycle, torus, or complete)")
