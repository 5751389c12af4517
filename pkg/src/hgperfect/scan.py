"""Systematic-scan dynamics on hypergraph independent sets.

Step ``t`` (1-based) updates the vertex with 0-based index ``t % n``, i.e. the
1-based vertex ``(t mod n) + 1``.  A proposal bit ``r`` recolors that vertex
unless the result would fill an edge with 1s.  Bit sequences are indexed so
that ``bits[i]`` is the proposal for step ``start + i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .hypergraph import Hypergraph, coloring_key, is_independent


class NotIndependentError(ValueError):
    """A coloring that must be an independent set fills some edge."""


def scan_vertex(i: int, n: int) -> int:
    """1-based vertex updated at step ``i``."""
    return i % n + 1


def scan_index(i: int, n: int) -> int:
    """0-based vertex index updated at step ``i``."""
    return i % n


def upd_time(u: int, t: int, n: int) -> int:
    """Latest step ``<= t`` that updated 0-based vertex ``u``."""
    first = u if u > 0 else n
    if t < first:
        raise ValueError(f"vertex {u} has not been updated by step {t} (first update at step {first})")
    return t - (t - u) % n


def _as_list(bits: Sequence[int] | np.ndarray) -> list[int]:
    if isinstance(bits, np.ndarray):
        return bits.tolist()
    return list(bits)


def _require_independent(H: Hypergraph, sigma) -> None:
    if not is_independent(H, sigma):
        raise NotIndependentError(f"starting coloring {coloring_key(sigma)} is not an independent set")


def transition(H: Hypergraph, sigma: Sequence[int] | np.ndarray, v: int, r: int) -> np.ndarray:
    """One update: ``sigma`` with vertex ``v`` set to ``r``, unless that fills an edge."""
    _require_independent(H, sigma)
    out = np.array(sigma, dtype=np.uint8)
    if r:
        for c in H.incidence[v]:
            if all(out[w] for w in H.edges[c] if w != v):
                return out
    out[v] = 1 if r else 0
    return out


def _scan_kernel(state: list[int], zeros: list[int], inc, bits: list[int], n: int, start: int) -> None:
    # zeros[c] counts members of edge c currently colored 0; a 1-proposal at u
    # is blocked iff some edge through u has u as its only 0.
    u = start % n
    for r in bits:
        if r:
            if not state[u]:
                cs = inc[u]
                for c in cs:
                    if zeros[c] == 1:
                        break
                else:
                    state[u] = 1
                    for c in cs:
                        zeros[c] -= 1
        elif state[u]:
            state[u] = 0
            for c in inc[u]:
                zeros[c] += 1
        u += 1
        if u == n:
            u = 0


def _zero_counts(H: Hypergraph, state: list[int]) -> list[int]:
    return [sum(1 for v in edge if not state[v]) for edge in H.edges]


def run_scan(
    H: Hypergraph,
    sigma: Sequence[int] | np.ndarray,
    bits: Sequence[int] | np.ndarray,
    start: int = 1,
) -> np.ndarray:
    """Apply ``len(bits)`` scan steps beginning at step ``start``."""
    _require_independent(H, sigma)
    state = [1 if b else 0 for b in sigma]
    _scan_kernel(state, _zero_counts(H, state), H.incidence, _as_list(bits), H.n, start)
    return np.array(state, dtype=np.uint8)


def run_scan_from_zero(H: Hypergraph, blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Run consecutive bit blocks, in the given order, from the all-zero coloring.

    Every block starts at step 1, which is the correct phase as long as each
    block length is a multiple of ``n``.
    """
    state = [0] * H.n
    zeros = [len(e) for e in H.edges]
    for block in blocks:
        _scan_kernel(state, zeros, H.incidence, _as_list(block), H.n, 1)
    return np.array(state, dtype=np.uint8)


@dataclass
class Trajectory:
    initial: np.ndarray
    final: np.ndarray
    steps: list[tuple[int, int, bool]] | None = None

    def to_dict(self) -> dict:
        out = {"initial": coloring_key(self.initial), "final": coloring_key(self.final)}
        if self.steps is not None:
            out["steps"] = [{"t": t, "vertex": v + 1, "proposal": r, "accepted": a} for t, (v, r, a) in
                            enumerate(self.steps, start=1)]
        return out


def scan_trajectory(
    H: Hypergraph,
    sigma: Sequence[int] | np.ndarray,
    bits: Sequence[int] | np.ndarray,
    start: int = 1,
    log: bool = False,
) -> Trajectory:
    """Like :func:`run_scan` but keeps the start and, optionally, a per-step log."""
    if not log:
        return Trajectory(np.array(sigma, dtype=np.uint8), run_scan(H, sigma, bits, start))
    _require_independent(H, sigma)
    state = np.array(sigma, dtype=np.uint8)
    steps = []
    for i, r in enumerate(_as_list(bits)):
        u = (start + i) % H.n
        new = transition(H, state, u, r)
        steps.append((u, int(r), bool(new[u] == (1 if r else 0))))
        state = new
    return Trajectory(np.array(sigma, dtype=np.uint8), state, steps)


def run_monotone_upper(H: Hypergraph, bits: Sequence[int] | np.ndarray, log: bool = False) -> Trajectory:
    """The unconstrained chain started from all 1s: step ``t`` copies ``bits`` into ``v_t``."""
    state = np.ones(H.n, dtype=np.uint8)
    steps = [] if log else None
    for t, r in enumerate(_as_list(bits), start=1):
        u = t % H.n
        state[u] = 1 if r else 0
        if steps is not None:
            steps.append((u, int(r), True))
    return Trajectory(np.ones(H.n, dtype=np.uint8), state, steps)


# --------------------------------------------------------------------------
# grand coupling over every independent set


def iter_independent_sets(H: Hypergraph) -> Iterator[tuple[int, ...]]:
    """All independent sets as 0/1 tuples, in lexicographic order (vertex 0 first).

    Backtracking assigns vertices in order and prunes as soon as an edge whose
    largest vertex was just set to 1 is full.
    """
    n = H.n
    closing: list[list[tuple[int, ...]]] = [[] for _ in range(n)]
    for edge in H.edges:
        closing[edge[-1]].append(edge[:-1])
    state = [0] * n

    def extend(v: int) -> Iterator[tuple[int, ...]]:
        if v == n:
            yield tuple(state)
            return
        state[v] = 0
        yield from extend(v + 1)
        if all(not all(state[w] for w in rest) for rest in closing[v]):
            state[v] = 1
            yield from extend(v + 1)
            state[v] = 0

    yield from extend(0)


def independent_set_matrix(H: Hypergraph, max_n: int = 20) -> np.ndarray:
    if H.n > max_n:
        raise ValueError(f"refusing to enumerate independent sets of an instance with n={H.n} > {max_n}")
    return np.array(list(iter_independent_sets(H)), dtype=np.uint8).reshape(-1, H.n)


def _blocking_index(H: Hypergraph) -> list[list[np.ndarray]]:
    return [[np.array([w for w in H.edges[c] if w != u]) for c in H.incidence[u]] for u in range(H.n)]


def iter_grand_coupling(
    H: Hypergraph,
    bits: Sequence[int] | np.ndarray,
    starts: np.ndarray | None = None,
    max_n: int = 20,
) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Drive one chain per start state with shared proposals.

    Yields ``(t, X, Y)`` after every step ``t``: ``X`` holds one row per chain,
    ``Y`` is the dominating all-ones chain.  Both arrays are reused between
    steps; copy them to keep a snapshot.
    """
    X = independent_set_matrix(H, max_n) if starts is None else np.array(starts, dtype=np.uint8)
    Y = np.ones(H.n, dtype=np.uint8)
    blockers = _blocking_index(H)
    for t, r in enumerate(_as_list(bits), start=1):
        u = t % H.n
        if r:
            blocked = np.zeros(len(X), dtype=bool)
            for others in blockers[u]:
                blocked |= X[:, others].all(axis=1)
            X[:, u] = ~blocked
            Y[u] = 1
        else:
            X[:, u] = 0
            Y[u] = 0
        yield t, X, Y


def run_all_starts(H: Hypergraph, bits: Sequence[int] | np.ndarray, max_n: int = 20) -> set[str]:
    """Distinct results of the scan from every independent set, as coloring keys."""
    X = independent_set_matrix(H, max_n)
    for _, X, _ in iter_grand_coupling(H, bits, starts=X):
        pass
    return {coloring_key(row) for row in np.unique(X, axis=0)}
