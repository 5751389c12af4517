"""Witness graph and percolation detection.

A witness vertex ``(C, t)`` exists for every step ``t >= n`` whose scanned
vertex lies in edge ``C``; its stamps are the last update times of the
members of ``C`` up to ``t``.  Vertex ``(C, t)`` points to ``(C', t')`` when
``t' < t`` and the two stamp sets intersect.  A vertex is open when every one
of its stamps received proposal bit 1.

:func:`detect` never builds the full graph.  It first computes all open
vertices with one vectorized pass over the bit block, then runs a
breadth-first search among open vertices only, starting from those anchored
in the final ``n`` steps.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hypergraph import Hypergraph
from .scan import upd_time

# Bound on the booleans materialized per chunk in open_vertices.
_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class WitnessVertex:
    label: int
    anchor: int
    stamps: tuple[int, ...]


def horizon(n: int, L: int) -> int:
    return n * (L + 1)


def witness_vertex(H: Hypergraph, c: int, t: int) -> WitnessVertex:
    if not 0 <= c < H.m:
        raise IndexError(f"edge index {c} out of range for {H.m} edges")
    if t < H.n:
        raise ValueError(f"witness vertices need t >= n = {H.n}, got t = {t}")
    if t % H.n not in H.edges[c]:
        raise ValueError(f"step {t} updates vertex {t % H.n + 1}, which is not in edge {c}")
    stamps = tuple(sorted(upd_time(u, t, H.n) for u in H.edges[c]))
    return WitnessVertex(c, t, stamps)


def is_open(e: WitnessVertex, bits: Sequence[int] | np.ndarray) -> bool:
    """True iff ``bits[s - 1] == 1`` for every stamp ``s`` of ``e`` (stamps are 1-based)."""
    for s in e.stamps:
        if not 1 <= s <= len(bits):
            raise ValueError(f"stamp {s} outside the bit block of length {len(bits)}")
    return all(bits[s - 1] for s in e.stamps)


def _check_block(H: Hypergraph, bits: np.ndarray, L: int) -> int:
    if L < 1:
        raise ValueError(f"path length L must be >= 1, got {L}")
    T = horizon(H.n, L)
    if len(bits) != T:
        raise ValueError(f"bit block has length {len(bits)}, expected T = n(L+1) = {T}")
    return T


def open_vertices(H: Hypergraph, bits: Sequence[int] | np.ndarray, L: int) -> tuple[np.ndarray, np.ndarray]:
    """Labels and anchors of all open witness vertices.

    Lay the proposals out as rows of one scan period: row ``q`` holds steps
    ``q*n .. q*n + n - 1``.  For edge ``C`` with sorted members
    ``c_0 < ... < c_{s-1}``, the vertex anchored at ``q*n + c_j`` has stamps
    ``q*n + c_i`` for ``i <= j`` and ``(q-1)*n + c_i`` for ``i > j``.  It is
    open iff the row-``q`` prefix and the row-``q-1`` suffix are all 1s.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    T = _check_block(H, bits, L)
    n, rows = H.n, L + 2
    if H.m == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    grid = np.zeros((rows, n + 1), dtype=bool)
    grid[:, n] = True  # padding column used by ragged edges
    flat = np.zeros(rows * n, dtype=bool)
    flat[1 : T + 1] = bits
    grid[:, :n] = flat.reshape(rows, n)

    members = H.member_matrix
    width = members.shape[1]
    real = np.arange(width)[None, :] < H.edge_sizes[:, None]
    per_row = H.m * width
    step = max(1, _CHUNK_CELLS // per_row - 1)
    labels, anchors = [], []
    for q0 in range(1, rows, step):
        q1 = min(rows, q0 + step)
        X = grid[q0 - 1 : q1][:, members]
        prefix = np.logical_and.accumulate(X[1:], axis=2)
        suffix = np.ones_like(X[:-1])
        suffix[:, :, :-1] = np.logical_and.accumulate(X[:-1, :, :0:-1], axis=2)[:, :, ::-1]
        qi, ci, ji = np.nonzero(prefix & suffix & real)
        labels.append(ci)
        anchors.append((qi + q0) * n + members[ci, ji])
    return np.concatenate(labels), np.concatenate(anchors)


@dataclass
class Census:
    open_vertex_count: int
    start_count: int
    depth_histogram: list[int]
    L: int
    path: list[tuple[int, int]] | None = field(default=None, repr=False)

    @property
    def max_depth(self) -> int:
        return len(self.depth_histogram)

    @property
    def verdict(self) -> bool:
        return self.max_depth >= self.L

    def to_dict(self) -> dict:
        return {
            "open_vertex_count": self.open_vertex_count,
            "start_count": self.start_count,
            "max_depth": self.max_depth,
            "depth_histogram": list(self.depth_histogram),
            "L": self.L,
            "verdict": self.verdict,
        }


def _bfs(H: Hypergraph, labels: np.ndarray, anchors: np.ndarray, T: int, stop_at: int | None,
         want_path: bool = False):
    """Level-synchronous BFS over open vertices; returns (histogram, path or None)."""
    n, m = H.n, H.m
    keys = (anchors * m + labels).tolist()
    is_open = set(keys)
    window = T - n
    frontier = [(int(t), int(c)) for t, c in zip(anchors.tolist(), labels.tolist()) if t > window]
    hist: list[int] = []
    parent: dict[int, int] | None = {} if want_path else None
    seen = {t * m + c for t, c in frontier}
    overlaps, edges = H.overlaps, H.edges
    last: list[tuple[int, int]] = []
    while frontier:
        hist.append(len(frontier))
        last = frontier
        if stop_at is not None and len(hist) >= stop_at:
            break
        nxt = []
        for t, c in frontier:
            prev = t - 1
            for c2, shared in overlaps[c]:
                lo = min(t - (t - u) % n for u in shared)
                for w in edges[c2]:
                    t2 = prev - (prev - w) % n
                    if t2 < lo:
                        continue
                    key = t2 * m + c2
                    if key in is_open and key not in seen:
                        seen.add(key)
                        nxt.append((t2, c2))
                        if parent is not None:
                            parent[key] = t * m + c
        frontier = nxt
    path = None
    if want_path and hist:
        t, c = last[0]
        key = t * m + c
        path = [(c, t)]
        while key in parent:
            key = parent[key]
            path.append((key % m, key // m))
    return hist, path


def detect(H: Hypergraph, bits: Sequence[int] | np.ndarray, L: int) -> bool:
    """True iff BFS from the open vertices anchored in ``(T-n, T]`` reaches depth ``L``.

    Depth counts vertices, so the start set is depth 1.  A ``False`` verdict
    certifies that the scan driven by ``bits`` maps every independent set to
    the same coloring.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    T = _check_block(H, bits, L)
    labels, anchors = open_vertices(H, bits, L)
    if L == 1:
        return bool(np.any(anchors > T - H.n))
    hist, _ = _bfs(H, labels, anchors, T, stop_at=L)
    return len(hist) >= L


def open_component_census(H: Hypergraph, bits: Sequence[int] | np.ndarray, L: int,
                          with_path: bool = False) -> Census:
    """Full BFS statistics: open vertex count and reachable vertices per depth.

    With ``with_path`` the census also carries one shortest path, from a start
    vertex to a deepest vertex, as ``(label, anchor)`` pairs.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    T = _check_block(H, bits, L)
    labels, anchors = open_vertices(H, bits, L)
    hist, path = _bfs(H, labels, anchors, T, stop_at=None, want_path=with_path)
    start_count = int(np.count_nonzero(anchors > T - H.n))
    # the path is traced from the deepest level back to the start set
    return Census(len(anchors), start_count, hist, L, path[::-1] if path else None)


# --------------------------------------------------------------------------
# explicit witness graph, for small instances and cross-checks


@dataclass
class WitnessGraph:
    """The whole graph for horizon ``T``, built directly from its definition."""

    H: Hypergraph
    T: int
    vertices: list[WitnessVertex]
    succ: list[list[int]]
    index: dict[tuple[int, int], int]

    @property
    def L(self) -> int:
        return self.T // self.H.n - 1

    def edge_count(self) -> int:
        return sum(len(s) for s in self.succ)

    def open_mask(self, bits: Sequence[int] | np.ndarray) -> list[bool]:
        return [is_open(e, bits) for e in self.vertices]

    def distances_from(self, i: int, limit: int | None = None) -> dict[int, int]:
        dist = {i: 0}
        queue = deque([i])
        while queue:
            a = queue.popleft()
            if limit is not None and dist[a] >= limit:
                continue
            for b in self.succ[a]:
                if b not in dist:
                    dist[b] = dist[a] + 1
                    queue.append(b)
        return dist

    def bfs_depth(self, bits: Sequence[int] | np.ndarray) -> int:
        """Depth (in vertices) reached by BFS over open vertices from the open start set."""
        ok = self.open_mask(bits)
        n = self.H.n
        frontier = [i for i, e in enumerate(self.vertices) if ok[i] and e.anchor > self.T - n]
        seen = set(frontier)
        depth = 0
        while frontier:
            depth += 1
            nxt = []
            for a in frontier:
                for b in self.succ[a]:
                    if ok[b] and b not in seen:
                        seen.add(b)
                        nxt.append(b)
            frontier = nxt
        return depth

    def has_induced_open_path(self, bits: Sequence[int] | np.ndarray, length: int) -> bool:
        """Exhaustive search for an induced open path of ``length`` vertices from the final window."""
        ok = self.open_mask(bits)
        adj = [set() for _ in self.vertices]
        for a, outs in enumerate(self.succ):
            for b in outs:
                adj[a].add(b)
                adj[b].add(a)
        n = self.H.n

        def grow(path: list[int]) -> bool:
            if len(path) == length:
                return True
            last = path[-1]
            for b in self.succ[last]:
                if ok[b] and all(b not in adj[p] for p in path[:-1]) and b not in path:
                    path.append(b)
                    if grow(path):
                        return True
                    path.pop()
            return False

        starts = [i for i, e in enumerate(self.vertices) if ok[i] and e.stamps[-1] > self.T - n]
        return any(grow([s]) for s in starts)


def build_witness_graph(H: Hypergraph, L: int) -> WitnessGraph:
    T = horizon(H.n, L)
    vertices: list[WitnessVertex] = []
    for t in range(H.n, T + 1):
        for c in H.incidence[t % H.n]:
            vertices.append(witness_vertex(H, c, t))
    index = {(e.label, e.anchor): i for i, e in enumerate(vertices)}
    stamp_sets = [set(e.stamps) for e in vertices]
    succ: list[list[int]] = [[] for _ in vertices]
    for a, e in enumerate(vertices):
        for b, f in enumerate(vertices):
            if f.anchor < e.anchor and not stamp_sets[a].isdisjoint(stamp_sets[b]):
                succ[a].append(b)
    return WitnessGraph(H, T, vertices, succ, index)
