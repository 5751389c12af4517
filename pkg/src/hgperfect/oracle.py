"""Ground truth for small instances: exact enumeration, distance tests,
percolation estimates and the multi-type Galton-Watson process over edges."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy import stats

from .cftp import block_bits, check_seed
from .hypergraph import Hypergraph, coloring_key
from .scan import iter_independent_sets
from .witness import detect, horizon

DEFAULT_ENUM_LIMIT = 22
EXACT_PERCOLATION_MAX_T = 24


class GuardExceeded(ValueError):
    """Refused: exhaustive work would be too large for this instance."""


# --------------------------------------------------------------------------
# exact uniform distribution


@dataclass(frozen=True)
class ExactDistribution:
    """Uniform measure on all independent sets, in lexicographic order."""

    support: tuple[str, ...]
    n: int
    index: dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.index:
            self.index.update((key, i) for i, key in enumerate(self.support))

    @property
    def size(self) -> int:
        return len(self.support)

    def prob(self, key: str) -> float:
        return 1.0 / self.size if key in self.index else 0.0

    def matrix(self) -> np.ndarray:
        return np.array([[int(ch) for ch in key] for key in self.support], dtype=np.uint8).reshape(-1, self.n)


def enumerate_independent_sets(H: Hypergraph, max_n: int = DEFAULT_ENUM_LIMIT) -> ExactDistribution:
    if H.n > max_n:
        raise GuardExceeded(f"enumeration limited to n <= {max_n}, instance has n = {H.n}")
    return ExactDistribution(tuple(coloring_key(s) for s in iter_independent_sets(H)), H.n)


def exact_sample(dist: ExactDistribution, rng: np.random.Generator) -> np.ndarray:
    if dist.size == 0:
        raise ValueError("empty support")
    key = dist.support[int(rng.integers(dist.size))]
    return np.array([int(ch) for ch in key], dtype=np.uint8)


# --------------------------------------------------------------------------
# distance tests


def _split_counts(counts: Mapping[str, int] | Sequence[int] | np.ndarray,
                  dist: ExactDistribution) -> tuple[np.ndarray, dict[str, int]]:
    """Counts aligned with ``dist.support`` plus any out-of-support counts."""
    if isinstance(counts, Mapping):
        aligned = np.zeros(dist.size, dtype=np.int64)
        outside = {}
        for key, c in counts.items():
            i = dist.index.get(key)
            if i is None:
                if c:
                    outside[key] = int(c)
            else:
                aligned[i] += int(c)
        return aligned, outside
    aligned = np.asarray(counts, dtype=np.int64)
    if aligned.shape != (dist.size,):
        raise ValueError(f"count vector of shape {aligned.shape} does not match support size {dist.size}")
    return aligned, {}


@dataclass
class TVResult:
    distance: float
    total: int
    out_of_support_mass: float
    out_of_support: dict[str, int]

    def to_dict(self) -> dict:
        return {"tv": self.distance, "total": self.total, "out_of_support_mass": self.out_of_support_mass,
                "out_of_support": self.out_of_support}


def tv_distance(counts: Mapping[str, int] | Sequence[int] | np.ndarray, dist: ExactDistribution) -> TVResult:
    """Half the L1 distance between empirical frequencies and the uniform measure.

    Out-of-support outcomes count toward the distance with target mass 0.
    """
    aligned, outside = _split_counts(counts, dist)
    total = int(aligned.sum()) + sum(outside.values())
    if total == 0:
        raise ValueError("zero total count")
    out_mass = sum(outside.values()) / total
    inside = np.abs(aligned / total - 1.0 / dist.size).sum()
    return TVResult(0.5 * float(inside + out_mass), total, out_mass, outside)


@dataclass
class ChiSquareResult:
    statistic: float
    pvalue: float
    df: int
    cells: int
    merged: bool
    out_of_support: dict[str, int]

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "pvalue": self.pvalue, "df": self.df, "cells": self.cells,
                "merged": self.merged, "out_of_support": self.out_of_support}


def chi_square(counts: Mapping[str, int] | Sequence[int] | np.ndarray, dist: ExactDistribution,
               min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson goodness of fit against the uniform measure.

    Cells are pooled in support order until each pool expects at least
    ``min_expected`` draws.  Any out-of-support draw makes the statistic
    infinite, since it is impossible under the null.
    """
    aligned, outside = _split_counts(counts, dist)
    total = int(aligned.sum()) + sum(outside.values())
    if total == 0:
        raise ValueError("zero total count")
    if outside:
        return ChiSquareResult(math.inf, 0.0, dist.size - 1, dist.size, False, outside)
    expected = total / dist.size
    per_pool = max(1, math.ceil(min_expected / expected))
    pools = max(1, dist.size // per_pool)
    # leftover cells join the last pool
    bounds = [i * per_pool for i in range(pools)] + [dist.size]
    observed = np.add.reduceat(aligned, bounds[:-1])
    exp = np.diff(bounds) * expected
    if pools == 1:
        return ChiSquareResult(0.0, 1.0, 0, 1, per_pool > 1, {})
    stat = float(((observed - exp) ** 2 / exp).sum())
    return ChiSquareResult(stat, float(stats.chi2.sf(stat, pools - 1)), pools - 1, pools, per_pool > 1, {})


# --------------------------------------------------------------------------
# percolation probabilities


@dataclass
class PercolationEstimate:
    L: int
    trials: int
    successes: int
    lower: float
    upper: float

    @property
    def p_hat(self) -> float:
        return self.successes / self.trials

    def to_dict(self) -> dict:
        return {"L": self.L, "trials": self.trials, "successes": self.successes, "p_hat": self.p_hat,
                "wilson_lower": self.lower, "wilson_upper": self.upper}


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def estimate_percolation_prob(H: Hypergraph, L: int, trials: int, seed: int,
                              confidence: float = 0.95) -> PercolationEstimate:
    """Monte Carlo rate of ``detect`` over fresh uniform blocks, with a Wilson interval."""
    if trials < 1:
        raise ValueError("trials must be positive")
    seed = check_seed(seed)
    T = horizon(H.n, L)
    hits = sum(detect(H, block_bits(seed, j, T), L) for j in range(1, trials + 1))
    lo, hi = wilson_interval(hits, trials, confidence)
    return PercolationEstimate(L, trials, hits, lo, hi)


def exact_percolation_prob(H: Hypergraph, L: int, max_T: int = EXACT_PERCOLATION_MAX_T) -> float:
    """Exact ``Pr[detect]`` by running the detector on all ``2^T`` blocks."""
    T = horizon(H.n, L)
    if T > max_T:
        raise GuardExceeded(f"exact percolation enumeration limited to T <= {max_T}, got T = {T}")
    hits = 0
    for code in range(1 << T):
        bits = np.array([(code >> i) & 1 for i in range(T)], dtype=np.uint8)
        hits += detect(H, bits, L)
    return hits / (1 << T)


# --------------------------------------------------------------------------
# Galton-Watson trees over edge labels


@dataclass(frozen=True)
class LabelledTree:
    """Rooted tree with edge-index labels; children are kept in canonical order.

    ``truncated`` marks a sampled tree whose growth was stopped by a cap; it
    does not take part in equality.
    """

    label: int
    children: tuple["LabelledTree", ...] = ()
    truncated: bool = field(default=False, compare=False)

    @classmethod
    def make(cls, label: int, children: Sequence["LabelledTree"] = (), truncated: bool = False) -> "LabelledTree":
        return cls(label, tuple(sorted(children, key=LabelledTree.canonical)), truncated)

    @classmethod
    def from_canonical(cls, form: tuple) -> "LabelledTree":
        label, kids = form
        return cls.make(label, [cls.from_canonical(k) for k in kids])

    def canonical(self) -> tuple:
        return (self.label, tuple(c.canonical() for c in self.children))

    @property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children)

    @property
    def depth(self) -> int:
        return 1 + max((c.depth for c in self.children), default=0)

    def nodes(self) -> Iterator["LabelledTree"]:
        yield self
        for c in self.children:
            yield from c.nodes()


def _weights(H: Hypergraph, x: Sequence[float] | np.ndarray | float) -> np.ndarray:
    w = np.full(H.m, float(x)) if np.isscalar(x) else np.asarray(x, dtype=float)
    if w.shape != (H.m,):
        raise ValueError(f"need one weight per edge ({H.m}), got shape {w.shape}")
    if np.any((w <= 0.0) | (w >= 1.0)):
        raise ValueError("weights must lie strictly between 0 and 1")
    return w


def closed_neighborhood(H: Hypergraph, c: int) -> tuple[int, ...]:
    """Candidate child labels of a node labelled ``c``: its distance-2 edges and ``c`` itself."""
    return tuple(sorted((*H.dist2[c], c)))


def gw_sample(H: Hypergraph, root: int, x: Sequence[float] | np.ndarray | float, rng: np.random.Generator,
              depth_cap: int = 1000, node_cap: int = 1_000_000) -> LabelledTree:
    """One tree of the branching process rooted at label ``root``.

    Every node labelled ``C`` gets, independently for each candidate label
    ``C'`` in the closed distance-2 neighborhood of ``C``, a child labelled
    ``C'`` with probability ``x(C')``.  Nodes at depth ``depth_cap`` (root is
    depth 1) or beyond ``node_cap`` nodes do not grow; the result is flagged
    ``truncated`` when a child would have been created there.
    """
    if not 0 <= root < H.m:
        raise IndexError(f"edge index {root} out of range for {H.m} edges")
    if depth_cap < 1:
        raise ValueError("depth_cap must be >= 1")
    w = _weights(H, x)
    cands = [np.array(closed_neighborhood(H, c)) for c in range(H.m)]
    labels, parents, depths = [root], [-1], [1]
    truncated = False
    i = 0
    while i < len(labels):
        cs = cands[labels[i]]
        born = cs[rng.random(len(cs)) < w[cs]]
        if born.size:
            if depths[i] >= depth_cap or len(labels) + born.size > node_cap:
                truncated = True
            else:
                labels.extend(born.tolist())
                parents.extend([i] * born.size)
                depths.extend([depths[i] + 1] * born.size)
        i += 1
    kids: list[list[LabelledTree]] = [[] for _ in labels]
    for j in range(len(labels) - 1, -1, -1):
        node = LabelledTree.make(labels[j], kids[j])
        if parents[j] >= 0:
            kids[parents[j]].append(node)
    return LabelledTree.make(root, kids[0], truncated)


def validate_tree(H: Hypergraph, root: int, tree: LabelledTree) -> None:
    if tree.label != root:
        raise ValueError(f"root label {tree.label} differs from {root}")
    for node in tree.nodes():
        allowed = set(closed_neighborhood(H, node.label))
        labels = [c.label for c in node.children]
        if len(set(labels)) != len(labels):
            raise ValueError(f"node labelled {node.label} has two children with the same label")
        if not set(labels) <= allowed:
            raise ValueError(f"node labelled {node.label} has a child label outside its neighborhood")


def gw_tree_prob(H: Hypergraph, root: int, tree: LabelledTree, x: Sequence[float] | np.ndarray | float) -> float:
    """Closed-form probability that the process produces exactly ``tree``.

    ``(1-x(C))/x(C) * prod_v x(label v) * prod_{C' near label v} (1 - x(C'))``
    with "near" the distance-2 neighborhood excluding the label itself.
    """
    w = _weights(H, x)
    validate_tree(H, root, tree)
    log_keep = np.array([np.log1p(-w[list(H.dist2[c])]).sum() for c in range(H.m)])
    total = math.log1p(-w[root]) - math.log(w[root])
    for node in tree.nodes():
        total += math.log(w[node.label]) + log_keep[node.label]
    return math.exp(total)


def gw_tree_prob_direct(H: Hypergraph, root: int, tree: LabelledTree,
                        x: Sequence[float] | np.ndarray | float) -> float:
    """The same probability, multiplied out child decision by child decision."""
    w = _weights(H, x)
    validate_tree(H, root, tree)
    p = 1.0
    for node in tree.nodes():
        present = {c.label for c in node.children}
        for c in closed_neighborhood(H, node.label):
            p *= w[c] if c in present else 1.0 - w[c]
    return p


def enumerate_trees(H: Hypergraph, root: int, max_nodes: int) -> list[LabelledTree]:
    """Every tree the process can produce with at most ``max_nodes`` nodes."""
    cands = {c: closed_neighborhood(H, c) for c in range(H.m)}
    memo: dict[tuple[int, int], list[LabelledTree]] = {}

    def grow(label: int, budget: int) -> list[LabelledTree]:
        key = (label, budget)
        if key in memo:
            return memo[key]
        out = []
        room = budget - 1
        for r in range(0, min(room, len(cands[label])) + 1):
            for chosen in itertools.combinations(cands[label], r):
                out.extend(LabelledTree.make(label, kids) for kids in forests(chosen, room))
        memo[key] = out
        return out

    def forests(labels: Sequence[int], budget: int) -> Iterator[list[LabelledTree]]:
        if not labels:
            yield []
            return
        rest = len(labels) - 1
        for sub in grow(labels[0], budget - rest):
            for tail in forests(labels[1:], budget - sub.size):
                yield [sub, *tail]

    if max_nodes < 1:
        return []
    return grow(root, max_nodes)
