"""Verification harness: a tiny instance corpus, seeded sampler mutants and
the checks shared by the ``verify`` command and the acceptance tests."""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from . import cftp
from .cftp import CFTPSampler, Regime, block_bits, choose_L, trial_seeds
from .hypergraph import Hypergraph, coloring_key, generate_random_regular, is_independent
from .oracle import (
    ExactDistribution,
    GuardExceeded,
    chi_square,
    enumerate_independent_sets,
    enumerate_trees,
    estimate_percolation_prob,
    gw_sample,
    gw_tree_prob,
    tv_distance,
)
from .scan import independent_set_matrix, iter_grand_coupling, run_all_starts
from .witness import build_witness_graph, detect, horizon

TV_TOLERANCE = 0.02
CHI2_MIN_PVALUE = 1e-4
ORACLE_LIMIT = 20


@dataclass(frozen=True)
class CorpusInstance:
    name: str
    H: Hypergraph
    L: int


def _h(n: int, edges: Iterable[Iterable[int]]) -> Hypergraph:
    return Hypergraph.from_one_based(n, edges)


def _k4(offset: int) -> list[tuple[int, int]]:
    return [(a + offset, b + offset) for a in range(1, 5) for b in range(a + 1, 5)]


def tiny_corpus() -> list[CorpusInstance]:
    """Small instances with a fixed percolation length each, chosen so a round
    percolates with probability around one half or less."""
    return [
        CorpusInstance("single-edge", _h(3, [(1, 2, 3)]), 1),
        CorpusInstance("two-pairs", _h(4, [(1, 2), (3, 4)]), 2),
        CorpusInstance("path", _h(3, [(1, 2), (2, 3)]), 2),
        CorpusInstance("triangle", _h(3, [(1, 2), (2, 3), (1, 3)]), 2),
        CorpusInstance("path5", _h(5, [(1, 2), (2, 3), (3, 4), (4, 5)]), 3),
        CorpusInstance("edge-tail", _h(4, [(1, 2, 3), (3, 4)]), 2),
        CorpusInstance("star", _h(7, [(1, 2, 3), (1, 4, 5), (1, 6, 7)]), 2),
        CorpusInstance("mixed-sizes", _h(7, [(1, 2), (2, 3, 4), (4, 5, 6, 7)]), 2),
        CorpusInstance("fano", _h(7, [(1, 2, 3), (1, 4, 5), (1, 6, 7), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 5, 6)]), 3),
        CorpusInstance("cycle5", _h(5, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)]), 4),
        CorpusInstance("k4", _h(4, _k4(0)), 4),
        CorpusInstance("three-k4", _h(12, _k4(0) + _k4(4) + _k4(8)), 6),
        CorpusInstance("edge-isolated", _h(4, [(1, 2, 3)]), 1),
        CorpusInstance("triple-cycle", _h(6, [(1, 2, 3), (3, 4, 5), (5, 6, 1)]), 2),
        CorpusInstance("ring12", _h(12, [(1, 2, 3, 4), (4, 5, 6, 7), (7, 8, 9, 10), (10, 11, 12, 1)]), 1),
    ]


def corpus_instance(name: str) -> CorpusInstance:
    for inst in tiny_corpus():
        if inst.name == name:
            return inst
    raise KeyError(name)


# --------------------------------------------------------------------------
# seeded sampler bugs; each must be caught by the support, uniformity or
# soundness checks


class ReversedReplaySampler(CFTPSampler):
    """Replays the oldest block last."""

    def replay_order(self, J: int) -> range:
        return range(1, J + 1)


class RedrawSampler(CFTPSampler):
    """Draws fresh bits every time a block is looked at."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._draws = 0

    def block(self, j: int) -> np.ndarray:
        self._draws += 1
        return block_bits(self.master_seed ^ (self._draws * 0x9E3779B97F4A7C15 % (1 << 64)), j, self.T)


class InvertedPolaritySampler(CFTPSampler):
    """Stops at the first percolating block instead of the first clean one."""

    def coalesced(self, bits: np.ndarray) -> bool:
        return detect(self.H, bits, self.L)


MUTANTS: dict[str, type[CFTPSampler]] = {
    "reversed-replay": ReversedReplaySampler,
    "redraw": RedrawSampler,
    "inverted-polarity": InvertedPolaritySampler,
}


# --------------------------------------------------------------------------
# check results


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    skipped: bool = False

    @property
    def status(self) -> str:
        return "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")

    def line(self) -> str:
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items() if not isinstance(v, (dict, list)))
        return f"{self.status} {self.name}: {shown}"

    def to_dict(self) -> dict:
        return {"check": self.name, "status": self.status, **self.detail}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


# --------------------------------------------------------------------------
# sampling-based checks


@dataclass
class SampleSummary:
    counts: Counter
    rounds: list[int]
    invalid: int

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def collect_samples(H: Hypergraph, L: int, count: int, seed: int,
                    sampler_cls: type[CFTPSampler] = CFTPSampler) -> SampleSummary:
    counts: Counter = Counter()
    rounds, invalid = [], 0
    for sigma, J in cftp.sample_stream(H, L, seed, count, sampler_cls=sampler_cls):
        if not is_independent(H, sigma):
            invalid += 1
        counts[coloring_key(sigma)] += 1
        rounds.append(J)
    return SampleSummary(counts, rounds, invalid)


def check_support(summaries: dict[str, SampleSummary]) -> CheckOutcome:
    total = sum(s.total for s in summaries.values())
    invalid = sum(s.invalid for s in summaries.values())
    return CheckOutcome("perfect-support", invalid == 0,
                        {"samples": total, "instances": len(summaries), "invalid": invalid})


def check_uniformity(name: str, summary: SampleSummary, dist: ExactDistribution) -> CheckOutcome:
    tv = tv_distance(dict(summary.counts), dist)
    chi = chi_square(dict(summary.counts), dist)
    ok = tv.distance <= TV_TOLERANCE and chi.pvalue >= CHI2_MIN_PVALUE
    return CheckOutcome(f"uniformity[{name}]", ok,
                        {"omega": dist.size, "samples": tv.total, "tv": tv.distance, "chi2": chi.statistic,
                         "pvalue": chi.pvalue, "out_of_support": tv.out_of_support_mass})


def check_soundness(name: str, H: Hypergraph, L: int, blocks: int, seed: int,
                    sampler_cls: type[CFTPSampler] = CFTPSampler) -> CheckOutcome:
    """Every block the sampler accepts as coalescing must map all of Omega to one point."""
    sampler = sampler_cls(H, L, seed)
    T = horizon(H.n, L)
    accepted = violations = 0
    for j in range(1, blocks + 1):
        bits = block_bits(seed, j, T)
        if sampler.coalesced(bits):
            accepted += 1
            if len(run_all_starts(H, bits, max_n=ORACLE_LIMIT)) != 1:
                violations += 1
    return CheckOutcome(f"soundness[{name}]", violations == 0,
                        {"blocks": blocks, "L": L, "accepted": accepted, "violations": violations})


def check_domination(name: str, H: Hypergraph, sequences: int, length: int, seed: int) -> CheckOutcome:
    """Every chain stays below the all-ones chain, and any disagreement at the
    updated vertex sits inside an edge the all-ones chain has filled."""
    rng = np.random.default_rng(seed)
    omega = independent_set_matrix(H, ORACLE_LIMIT)
    dominated = witnessed = 0
    for _ in range(sequences):
        bits = rng.integers(0, 2, size=length, dtype=np.uint8)
        for t, X, Y in iter_grand_coupling(H, bits, starts=omega.copy()):
            if np.any(X > Y[None, :]):
                dominated += 1
            u = t % H.n
            col = X[:, u]
            if col.min() != col.max() and not any(Y[list(H.edges[c])].all() for c in H.incidence[u]):
                witnessed += 1
    return CheckOutcome(f"domination[{name}]", dominated == 0 and witnessed == 0,
                        {"omega": len(omega), "sequences": sequences, "domination_violations": dominated,
                         "witness_violations": witnessed})


# --------------------------------------------------------------------------
# regime-level checks


def check_rounds(H: Hypergraph, regime: Regime, trials: int, seed: int) -> CheckOutcome:
    st = cftp.estimate_round_distribution(H, regime, trials, seed)
    mean_cap = 2.0 + 3.0 * st.sd / math.sqrt(trials)
    p_cap = 0.5 + 3.0 * st.p_se
    ok = st.mean <= mean_cap and st.p_hat <= p_cap
    return CheckOutcome("round-distribution", ok,
                        {"n": H.n, "L": choose_L(regime), "trials": trials, "mean_J": st.mean,
                         "mean_cap": mean_cap, "p_hat": st.p_hat, "p_cap": p_cap})


def check_percolation_bound(H: Hypergraph, regime: Regime, Ls: Sequence[int], trials: int,
                            seed: int) -> CheckOutcome:
    rows, ok = [], True
    for L, s in zip(Ls, trial_seeds(seed, len(Ls))):
        est = estimate_percolation_prob(H, L, trials, int(s))
        bound = regime.tail_bound(L)
        rows.append({"L": L, "hits": est.successes, "upper": est.upper, "bound": bound})
        ok &= est.upper < bound
    worst = max(rows, key=lambda r: r["upper"] / r["bound"])
    return CheckOutcome("percolation-bound", ok,
                        {"n": H.n, "trials_per_L": trials, "worst_L": worst["L"], "worst_upper": worst["upper"],
                         "worst_bound": worst["bound"], "rows": rows})


def branching_counts(H: Hypergraph, L: int) -> tuple[int, int, int]:
    """Worst ratio of distance-2 vertices with a given label to ``2|C'|``.

    Returns ``(vertex pairs checked, violations, largest count)``; distance is
    measured along edges, which always point backwards in time.
    """
    G = build_witness_graph(H, L)
    checked = violations = largest = 0
    for i in range(len(G.vertices)):
        dist = G.distances_from(i, limit=2)
        per_label = Counter(G.vertices[b].label for b, d in dist.items() if d == 2)
        for c2 in range(H.m):
            count = per_label.get(c2, 0)
            checked += 1
            largest = max(largest, count)
            if count > 2 * len(H.edges[c2]):
                violations += 1
    return checked, violations, largest


def check_branching(instances: Sequence[tuple[str, Hypergraph]], Ls: Sequence[int]) -> CheckOutcome:
    checked = violations = 0
    for _, H in instances:
        for L in Ls:
            c, v, _ = branching_counts(H, L)
            checked += c
            violations += v
    return CheckOutcome("branching-bound", violations == 0,
                        {"instances": len(instances), "L_max": max(Ls), "pairs": checked, "violations": violations})


def check_gw(H: Hypergraph, root: int, x: float, draws: int, max_nodes: int, seed: int,
             z_max: float = 4.0) -> CheckOutcome:
    rng = np.random.default_rng(seed)
    counts: Counter = Counter()
    truncated = 0
    for _ in range(draws):
        tree = gw_sample(H, root, x, rng)
        truncated += tree.truncated
        counts[tree.canonical()] += 1
    worst = 0.0
    shapes = enumerate_trees(H, root, max_nodes)
    for tree in shapes:
        p = gw_tree_prob(H, root, tree, x)
        se = math.sqrt(p * (1.0 - p) / draws)
        worst = max(worst, abs(counts[tree.canonical()] / draws - p) / se)
    return CheckOutcome("galton-watson", worst <= z_max,
                        {"draws": draws, "shapes": len(shapes), "worst_z": worst, "truncated": truncated})


# --------------------------------------------------------------------------
# timing


def median_time(fn: Callable[[], object], repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return float(np.median(times))


def detect_times(H: Hypergraph, Ls: Sequence[int], repeats: int, seed: int) -> list[float]:
    out = []
    for L in Ls:
        T = horizon(H.n, L)
        blocks = [block_bits(seed, j, T) for j in range(1, repeats + 1)]
        it = iter(blocks)
        out.append(median_time(lambda: detect(H, next(it), L), repeats))
    return out


def check_scaling_L(H: Hypergraph, Ls: Sequence[int], repeats: int, seed: int,
                    r2_min: float = 0.95) -> CheckOutcome:
    times = detect_times(H, Ls, repeats, seed)
    fit = stats.linregress(Ls, times)
    return CheckOutcome("detect-linear-in-L", fit.rvalue**2 >= r2_min,
                        {"n": H.n, "r2": fit.rvalue**2, "slope_ms_per_L": fit.slope * 1e3,
                         "times_ms": [round(t * 1e3, 3) for t in times]})


def sample_time(H: Hypergraph, regime: Regime, repeats: int, seed: int) -> tuple[float, float]:
    """Median wall time of a full sample and the mean round count."""
    seeds = trial_seeds(seed, repeats)
    times, rounds = [], []
    for s in seeds:
        t = time.perf_counter()
        _, report = cftp.sample(H, regime, int(s))
        times.append(time.perf_counter() - t)
        rounds.append(report.J)
    return float(np.median(times)), float(np.mean(rounds))


def check_scaling_n(ns: Sequence[int], k: int, d: int, eps: float, repeats: int, seed: int,
                    slope_range: tuple[float, float] = (0.8, 1.5)) -> CheckOutcome:
    times, Ls = [], []
    for n in ns:
        H = generate_random_regular(n, k, d, linear=True, seed=seed)
        res = cftp.check_linear(H, eps)
        if not res.passed:
            return CheckOutcome("total-time-near-linear-in-n", False, {"n": n, "reason": "linear regime fails"})
        Ls.append(choose_L(res.regime))
        times.append(sample_time(H, res.regime, repeats, seed)[0])
    slope = stats.linregress(np.log(ns), np.log(times)).slope
    lo, hi = slope_range
    return CheckOutcome("total-time-near-linear-in-n", lo <= slope <= hi,
                        {"loglog_slope": slope, "ns": list(ns), "Ls": Ls,
                         "times_ms": [round(t * 1e3, 2) for t in times]})


# --------------------------------------------------------------------------
# per-instance verification used by the CLI


def verify_instance(
    H: Hypergraph,
    L: int,
    seed: int,
    samples: int = 20_000,
    blocks: int = 1000,
    sampler_cls: type[CFTPSampler] = CFTPSampler,
    regime: Regime | None = None,
    trials: int = 1000,
) -> list[CheckOutcome]:
    """Oracle-backed checks on one instance; oracle checks are skipped past the enumeration limit."""
    out: list[CheckOutcome] = []
    summary = collect_samples(H, L, samples, seed, sampler_cls)
    out.append(check_support({"instance": summary}))
    try:
        dist = enumerate_independent_sets(H, max_n=ORACLE_LIMIT)
    except GuardExceeded as exc:
        for name in ("uniformity[instance]", "soundness[instance]"):
            out.append(CheckOutcome(name, True, {"reason": str(exc)}, skipped=True))
    else:
        out.append(check_uniformity("instance", summary, dist))
        out.append(check_soundness("instance", H, L, blocks, seed, sampler_cls))
    if regime is not None and regime.kind != "manual":
        out.append(check_rounds(H, regime, trials, seed))
    return out
