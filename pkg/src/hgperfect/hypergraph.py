"""Hypergraph instances: representation, parsing, structural queries, generation.

Vertices are 0-indexed inside Python and 1-indexed in every text format.
A :class:`Hypergraph` is immutable once built; derived indices are computed
lazily and cached on the instance.
"""

from __future__ import annotations

import re
import warnings
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class HypergraphError(ValueError):
    """An instance violates a structural requirement."""


class ParseError(HypergraphError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class DuplicateEdgeWarning(UserWarning):
    pass


class GenerationError(RuntimeError):
    """The generator could not produce an instance within its budget."""


@dataclass(frozen=True, eq=True)
class Hypergraph:
    """A hypergraph on vertices ``0..n-1``.

    ``edges`` keeps the caller's edge order; each edge is stored as a sorted
    tuple.  Edges must have at least two distinct vertices and may not repeat.
    """

    n: int
    edges: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise HypergraphError(f"vertex count must be a positive integer, got {self.n!r}")
        normalized = []
        seen: dict[tuple[int, ...], int] = {}
        for idx, edge in enumerate(self.edges):
            members = tuple(int(v) for v in edge)
            if len(members) < 2:
                raise HypergraphError(f"edge {idx} has size {len(members)}; edges need at least 2 vertices")
            if len(set(members)) != len(members):
                raise HypergraphError(f"edge {idx} repeats a vertex: {members}")
            for v in members:
                if not 0 <= v < self.n:
                    raise HypergraphError(f"edge {idx} has vertex {v} outside [0, {self.n})")
            key = tuple(sorted(members))
            if key in seen:
                raise HypergraphError(f"edge {idx} duplicates edge {seen[key]}")
            seen[key] = idx
            normalized.append(key)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", tuple(normalized))

    @classmethod
    def from_one_based(cls, n: int, edges: Iterable[Iterable[int]]) -> Hypergraph:
        """Build from edges written with 1-indexed vertex ids."""
        return cls(n, tuple(tuple(v - 1 for v in e) for e in edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def incidence(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in range(self.n)]
        for c, edge in enumerate(self.edges):
            for v in edge:
                inc[v].append(c)
        return tuple(tuple(lst) for lst in inc)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(lst) for lst in self.incidence)

    @property
    def max_degree(self) -> int:
        return max(self.degrees)

    @cached_property
    def uniform_k(self) -> int | None:
        sizes = {len(e) for e in self.edges}
        return sizes.pop() if len(sizes) == 1 else None

    @property
    def is_regular(self) -> bool:
        return len(set(self.degrees)) == 1

    @cached_property
    def edge_sizes(self) -> np.ndarray:
        return np.fromiter((len(e) for e in self.edges), dtype=np.int64, count=self.m)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Per edge, the other edges it intersects (sorted)."""
        out = []
        for c, edge in enumerate(self.edges):
            near = {c2 for v in edge for c2 in self.incidence[v]}
            near.discard(c)
            out.append(tuple(sorted(near)))
        return tuple(out)

    @cached_property
    def overlaps(self) -> tuple[tuple[tuple[int, tuple[int, ...]], ...], ...]:
        """Per edge ``C``, pairs ``(C', C & C')`` for every ``C'`` meeting ``C``, ``C`` included."""
        out = []
        for c, edge in enumerate(self.edges):
            shared: dict[int, list[int]] = {}
            for v in edge:
                for c2 in self.incidence[v]:
                    shared.setdefault(c2, []).append(v)
            out.append(tuple((c2, tuple(vs)) for c2, vs in sorted(shared.items())))
        return tuple(out)

    @cached_property
    def dist2(self) -> tuple[tuple[int, ...], ...]:
        """Per edge, the edges within distance 2 of it, itself excluded."""
        out = []
        for c in range(self.m):
            reach = set(self.neighbors[c])
            for c2 in self.neighbors[c]:
                reach.update(self.neighbors[c2])
            reach.discard(c)
            out.append(tuple(sorted(reach)))
        return tuple(out)

    @cached_property
    def linearity_violation(self) -> tuple[int, int] | None:
        """First pair of edges sharing two or more vertices, or ``None``."""
        for c, pairs in enumerate(self.overlaps):
            for c2, shared in pairs:
                if c2 > c and len(shared) >= 2:
                    return (c, c2)
        return None

    @property
    def is_linear(self) -> bool:
        return self.linearity_violation is None

    @cached_property
    def member_matrix(self) -> np.ndarray:
        """Edges as an ``(m, k_max)`` array, padded with the sentinel ``n``."""
        width = int(self.edge_sizes.max()) if self.m else 1
        mat = np.full((self.m, width), self.n, dtype=np.int64)
        for c, edge in enumerate(self.edges):
            mat[c, : len(edge)] = edge
        return mat

    def __repr__(self) -> str:
        return f"Hypergraph(n={self.n}, m={self.m}, d={self.max_degree}, k={self.uniform_k})"


def _check_edge_index(H: Hypergraph, c: int) -> None:
    if not 0 <= c < H.m:
        raise IndexError(f"edge index {c} out of range for {H.m} edges")


def neighborhood(H: Hypergraph, c: int) -> frozenset[int]:
    _check_edge_index(H, c)
    return frozenset(H.neighbors[c])


def dist2_neighborhood(H: Hypergraph, c: int) -> frozenset[int]:
    _check_edge_index(H, c)
    return frozenset(H.dist2[c])


def is_independent(H: Hypergraph, sigma: Sequence[int] | np.ndarray) -> bool:
    """True iff no edge of ``H`` is entirely colored 1 by ``sigma``."""
    if len(sigma) != H.n:
        raise ValueError(f"coloring has length {len(sigma)}, expected {H.n}")
    return all(any(sigma[v] == 0 for v in edge) for edge in H.edges)


def degree_stats(H: Hypergraph) -> dict:
    degs = np.asarray(H.degrees)
    return {
        "n": H.n,
        "m": H.m,
        "min_degree": int(degs.min()),
        "max_degree": int(degs.max()),
        "mean_degree": float(degs.mean()),
        "regular": H.is_regular,
        "uniform_k": H.uniform_k,
        "min_edge_size": int(H.edge_sizes.min()) if H.m else None,
        "max_edge_size": int(H.edge_sizes.max()) if H.m else None,
        "linear": H.is_linear,
    }


# --------------------------------------------------------------------------
# colorings


def coloring_key(sigma: Sequence[int] | np.ndarray) -> str:
    """Canonical string form, vertex 0 first: ``[1, 0, 1] -> "101"``."""
    return "".join("1" if b else "0" for b in sigma)


def coloring_from_key(key: str) -> np.ndarray:
    return np.frombuffer(key.encode("ascii"), dtype=np.uint8) - ord("0")


# --------------------------------------------------------------------------
# text formats

_DIMACS_HEADER = re.compile(r"^p\s+cnf\s+(\d+)\s+(\d+)\s*$", re.IGNORECASE)


def _dedupe(edges: list[tuple[int, ...]], linenos: list[int], strict: bool) -> list[tuple[int, ...]]:
    seen: dict[tuple[int, ...], int] = {}
    kept = []
    for edge, lineno in zip(edges, linenos):
        key = tuple(sorted(edge))
        if key in seen:
            msg = f"duplicate edge {[v + 1 for v in key]} (first seen on line {seen[key]})"
            if strict:
                raise ParseError(msg, lineno)
            warnings.warn(f"line {lineno}: {msg}; dropped", DuplicateEdgeWarning, stacklevel=3)
            continue
        seen[key] = lineno
        kept.append(edge)
    return kept


def _check_edge(vertices: list[int], n: int, lineno: int) -> tuple[int, ...]:
    if len(vertices) < 2:
        raise ParseError(f"edge of size {len(vertices)}; edges need at least 2 vertices", lineno)
    for v in vertices:
        if not 1 <= v <= n:
            raise ParseError(f"vertex id {v} out of range [1, {n}]", lineno)
    if len(set(vertices)) != len(vertices):
        raise ParseError(f"duplicate vertex in edge {vertices}", lineno)
    return tuple(v - 1 for v in vertices)


def _ints(tokens: list[str], lineno: int) -> list[int]:
    try:
        return [int(tok) for tok in tokens]
    except ValueError as exc:
        raise ParseError(f"expected integers, got {' '.join(tokens)!r}", lineno) from exc


def _parse_hg(lines: list[tuple[int, str]], strict: bool) -> Hypergraph:
    if not lines:
        raise ParseError("empty input: missing 'n m' header")
    lineno, header = lines[0]
    head = _ints(header.split(), lineno)
    if len(head) != 2:
        raise ParseError(f"malformed header {header!r}; expected 'n m'", lineno)
    n, m = head
    if n < 1 or m < 0:
        raise ParseError(f"malformed header {header!r}; need n >= 1 and m >= 0", lineno)
    body = lines[1:]
    if len(body) != m:
        raise ParseError(f"header declares {m} edges but {len(body)} edge lines follow", lineno)
    edges, linenos = [], []
    for lineno, text in body:
        vals = _ints(text.split(), lineno)
        size, vertices = vals[0], vals[1:]
        if size != len(vertices):
            raise ParseError(f"edge declares size {size} but lists {len(vertices)} vertices", lineno)
        edges.append(_check_edge(vertices, n, lineno))
        linenos.append(lineno)
    return Hypergraph(n, tuple(_dedupe(edges, linenos, strict)))


def _parse_dimacs(lines: list[tuple[int, str]], strict: bool) -> Hypergraph:
    lineno, header = lines[0]
    match = _DIMACS_HEADER.match(header)
    if not match:
        raise ParseError(f"malformed DIMACS header {header!r}", lineno)
    n, m = int(match.group(1)), int(match.group(2))
    if n < 1:
        raise ParseError("DIMACS header needs at least one variable", lineno)
    edges, linenos = [], []
    current: list[int] = []
    start = None
    for lineno, text in lines[1:]:
        if text.startswith("%"):
            break
        for lit in _ints(text.split(), lineno):
            if lit == 0:
                edges.append(_check_edge(current, n, start or lineno))
                linenos.append(start or lineno)
                current, start = [], None
                continue
            if lit > 0:
                raise ParseError(
                    f"positive literal {lit}: only all-negative (monotone) clauses encode hyperedges", lineno
                )
            if start is None:
                start = lineno
            current.append(-lit)
    if current:
        raise ParseError("last clause is not terminated by 0", start)
    if len(edges) != m:
        raise ParseError(f"header declares {m} clauses but {len(edges)} were read", lines[0][0])
    return Hypergraph(n, tuple(_dedupe(edges, linenos, strict)))


def parse_hypergraph(text: str, strict: bool = False, fmt: str = "auto") -> Hypergraph:
    """Parse the canonical ``.hg`` format or a monotone DIMACS CNF.

    Args:
        text: file contents.
        strict: raise on duplicate edges instead of dropping them with a warning.
        fmt: ``"hg"``, ``"dimacs"`` or ``"auto"`` (DIMACS iff a ``p cnf`` header comes first).
    """
    raw = [(i, line.strip()) for i, line in enumerate(text.splitlines(), start=1)]
    raw = [(i, line) for i, line in raw if line and not line.startswith("#")]
    if fmt == "auto":
        first = next((line for _, line in raw if not line.lower().startswith("c")), "")
        fmt = "dimacs" if first.lower().startswith("p") else "hg"
    if fmt == "dimacs":
        lines = [(i, line) for i, line in raw if not line.lower().startswith("c")]
        if not lines:
            raise ParseError("empty input: missing 'p cnf' header")
        return _parse_dimacs(lines, strict)
    if fmt == "hg":
        return _parse_hg(raw, strict)
    raise ValueError(f"unknown format {fmt!r}")


def read_hypergraph(path: str | Path, strict: bool = False) -> Hypergraph:
    path = Path(path)
    fmt = "dimacs" if path.suffix.lower() in {".cnf", ".dimacs"} else "auto"
    return parse_hypergraph(path.read_text(), strict=strict, fmt=fmt)


def format_hypergraph(H: Hypergraph) -> str:
    lines = [f"{H.n} {H.m}"]
    lines += [" ".join(map(str, [len(e), *(v + 1 for v in e)])) for e in H.edges]
    return "\n".join(lines) + "\n"


def format_dimacs(H: Hypergraph) -> str:
    lines = [f"p cnf {H.n} {H.m}"]
    lines += [" ".join(str(-(v + 1)) for v in e) + " 0" for e in H.edges]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# random regular instances


def _edge_badness(edge_id: int, edges: list[list[int]], inc: list[list[int]], linear: bool) -> int:
    edge = edges[edge_id]
    bad = len(edge) - len(set(edge))
    shared = Counter(c for v in set(edge) for c in inc[v] if c != edge_id)
    if linear:
        bad += sum(1 for cnt in shared.values() if cnt >= 2)
    else:
        key = sorted(edge)
        bad += sum(1 for c, cnt in shared.items() if cnt == len(edge) and sorted(edges[c]) == key)
    return bad


def generate_random_regular(
    n: int,
    k: int,
    d: int,
    linear: bool = False,
    seed: int | None = None,
    max_retries: int = 10_000,
) -> Hypergraph:
    """Random ``k``-uniform ``d``-regular hypergraph via the configuration model.

    The ``n*d`` vertex stubs are shuffled and cut into groups of ``k``.  Groups
    with a repeated vertex, duplicated edges, and (for ``linear=True``) pairs of
    edges sharing two or more vertices are then repaired by random stub swaps
    that never increase the number of defects.  ``max_retries`` bounds the
    number of swap attempts.
    """
    if k < 2 or d < 1 or n < k:
        raise GenerationError(f"infeasible parameters n={n}, k={k}, d={d}: need 2 <= k <= n, d >= 1")
    if (n * d) % k:
        raise GenerationError(f"n*d = {n * d} is not divisible by k = {k}")
    m = n * d // k
    if linear and m > 1 and m - 1 < k * (d - 1):
        raise GenerationError(f"no linear {k}-uniform {d}-regular hypergraph has only {m} edges")
    rng = np.random.default_rng(seed)
    stubs = rng.permutation(np.repeat(np.arange(n), d))
    edges = [list(map(int, row)) for row in stubs.reshape(m, k)]
    inc: list[list[int]] = [[] for _ in range(n)]
    for c, edge in enumerate(edges):
        for v in edge:
            inc[v].append(c)

    badness = [_edge_badness(c, edges, inc, linear) for c in range(m)]
    bad = {c for c in range(m) if badness[c]}
    attempts = 0
    while bad:
        if attempts >= max_retries:
            raise GenerationError(
                f"retry budget of {max_retries} swaps exhausted with {len(bad)} defective edges; "
                "change the seed or parameters"
            )
        attempts += 1
        e = int(rng.choice(sorted(bad)))
        f = int(rng.integers(m - 1))
        f += f >= e
        i, j = int(rng.integers(k)), int(rng.integers(k))
        u, w = edges[e][i], edges[f][j]
        if u == w:
            continue
        touched = {e, f, *inc[u], *inc[w]}
        edges[e][i], edges[f][j] = w, u
        inc[u].remove(e)
        inc[u].append(f)
        inc[w].remove(f)
        inc[w].append(e)
        touched.update(inc[u], inc[w])
        after_vals = {c: _edge_badness(c, edges, inc, linear) for c in touched}
        before = sum(badness[c] for c in touched)
        if sum(after_vals.values()) <= before:
            for c, val in after_vals.items():
                badness[c] = val
                if val:
                    bad.add(c)
                else:
                    bad.discard(c)
        else:
            edges[e][i], edges[f][j] = u, w
            inc[u].remove(f)
            inc[u].append(e)
            inc[w].remove(e)
            inc[w].append(f)
    return Hypergraph(n, tuple(tuple(e) for e in edges))


def parse_generator_spec(spec: str) -> dict:
    """Parse ``"n=9,k=3,d=2,linear"`` into keyword arguments for the generator."""
    out: dict = {"linear": False}
    for part in filter(None, (p.strip() for p in spec.split(","))):
        if part == "linear":
            out["linear"] = True
            continue
        key, sep, value = part.partition("=")
        if not sep or key not in {"n", "k", "d", "seed", "max_retries"}:
            raise ValueError(f"bad generator spec component {part!r}")
        out[key] = int(value)
    missing = {"n", "k", "d"} - out.keys()
    if missing:
        raise ValueError(f"generator spec missing {sorted(missing)}")
    return out
