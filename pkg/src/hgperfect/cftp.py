"""Coupling-from-the-past sampler and the conditions that size its blocks.

The sampler draws independent blocks of ``T = n(L+1)`` proposal bits going
backwards in time until a block shows no percolation in its witness graph.
That block alone already maps every independent set to one coloring, so
replaying the blocks forward from the all-zero coloring (oldest block first)
yields an exactly uniform independent set.

Each regime check turns a local-lemma-type condition on the instance into a
tail bound ``beta * (1 - eps) ** exponent(L)`` on the percolation
probability; :func:`choose_L` picks the smallest ``L`` making it at most 1/2.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .hypergraph import Hypergraph, coloring_key, is_independent
from .scan import run_scan_from_zero
from .witness import detect, horizon

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.1
DEFAULT_ROUND_CAP = 64
_U64 = 1 << 64


class RegimeError(ValueError):
    """A regime check cannot be evaluated on this instance or parameter set."""


class RoundCapExceeded(RuntimeError):
    def __init__(self, rounds: int, L: int):
        self.rounds = rounds
        self.L = L
        super().__init__(
            f"no coalescing block within {rounds} rounds at L={L}; the regime condition "
            "probably does not hold (the sample was discarded, not truncated)"
        )


# --------------------------------------------------------------------------
# regimes


@dataclass(frozen=True)
class Regime:
    """A verified tail bound ``Pr[percolation at L] <= beta * (1-eps)**exponent(L)``.

    ``kind == "manual"`` carries a user-chosen ``L`` and no bound.
    """

    kind: str
    epsilon: float | None = None
    beta: float | None = None
    x: tuple[float, ...] | None = field(default=None, repr=False)
    manual_L: int | None = None

    def exponent(self, L: int) -> int:
        if self.kind == "asymmetric":
            return (L + 1) // 2
        if self.kind in ("symmetric", "linear"):
            return L // 2 - 1
        raise RegimeError(f"regime {self.kind!r} has no tail exponent")

    def tail_bound(self, L: int) -> float:
        return self.beta * (1.0 - self.epsilon) ** self.exponent(L)

    def effective_exponent(self, L: int) -> int:
        """Exponent used to size ``L``; never negative.

        At ``L = 1`` the symmetric and linear exponents are ``-1``, but a plain
        union bound over the ``sum |C|`` start vertices already gives
        ``beta``, and the percolation event only shrinks as ``L`` grows.
        """
        return max(0, self.exponent(L))

    def summary(self) -> dict:
        return {"kind": self.kind, "epsilon": self.epsilon, "beta": self.beta, "manual_L": self.manual_L}


@dataclass
class CheckResult:
    kind: str
    passed: bool
    regime: Regime | None
    detail: dict

    def to_dict(self) -> dict:
        out = {"regime": self.kind, "passed": self.passed, **self.detail}
        if self.regime is not None:
            out["beta"] = self.regime.beta
            out["L"] = choose_L(self.regime)
        return out


def _check_epsilon(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise RegimeError(f"epsilon must lie in (0, 1), got {eps}")


def _uniform_regular(H: Hypergraph, kind: str) -> tuple[int, int]:
    if H.uniform_k is None:
        raise RegimeError(f"{kind} regime needs a k-uniform instance; edge sizes range over "
                          f"{sorted({len(e) for e in H.edges})}")
    if not H.is_regular:
        raise RegimeError(f"{kind} regime needs a d-regular instance; degrees range over "
                          f"[{min(H.degrees)}, {max(H.degrees)}]")
    return H.uniform_k, H.max_degree


def check_asymmetric(H: Hypergraph, eps: float, x: Sequence[float] | np.ndarray) -> CheckResult:
    """Per-edge condition ``2|C| 2^-|C| <= (1-eps) x(C) prod_{C' near C} (1 - x(C'))``.

    "Near" means within distance 2 of ``C``, ``C`` itself excluded.  On success
    ``beta = sum_C x(C) / (1 - x(C))``.
    """
    _check_epsilon(eps)
    x = np.asarray(x, dtype=float)
    if x.shape != (H.m,):
        raise RegimeError(f"need one weight per edge ({H.m}), got shape {x.shape}")
    if np.any((x <= 0.0) | (x >= 1.0)):
        bad = int(np.flatnonzero((x <= 0.0) | (x >= 1.0))[0])
        raise RegimeError(f"weights must lie in (0, 1); x[{bad}] = {x[bad]}")
    sizes = H.edge_sizes.astype(float)
    lhs = 2.0 * sizes * np.exp2(-sizes)
    rows = np.repeat(np.arange(H.m), [len(near) for near in H.dist2])
    cols = np.fromiter((c2 for near in H.dist2 for c2 in near), dtype=np.int64, count=len(rows))
    log_keep = np.bincount(rows, weights=np.log1p(-x[cols]), minlength=H.m)
    rhs = (1.0 - eps) * x * np.exp(log_keep)
    ratio = lhs / rhs
    binding = int(np.argmax(ratio))
    failing = np.flatnonzero(lhs > rhs)
    detail = {"binding_edge": binding, "lhs": float(lhs[binding]), "rhs": float(rhs[binding])}
    if failing.size:
        c = int(failing[0])
        detail.update(violating_edge=c, violating_lhs=float(lhs[c]), violating_rhs=float(rhs[c]))
        return CheckResult("asymmetric", False, None, detail)
    beta = float(np.sum(x / (1.0 - x)))
    return CheckResult("asymmetric", True, Regime("asymmetric", eps, beta, tuple(map(float, x))), detail)


def check_symmetric(H: Hypergraph, eps: float) -> CheckResult:
    """``d <= (1-eps)/20 * 2^(k/2) / k`` on a k-uniform d-regular instance."""
    _check_epsilon(eps)
    k, d = _uniform_regular(H, "symmetric")
    threshold = (1.0 - eps) / 20.0 * 2.0 ** (k / 2) / k
    detail = {"k": k, "d": d, "threshold": threshold}
    if d > threshold:
        return CheckResult("symmetric", False, None, detail)
    return CheckResult("symmetric", True, Regime("symmetric", eps, k * H.m * 2.0**-k), detail)


def check_linear(H: Hypergraph, eps: float) -> CheckResult:
    """``d <= (1-eps)/4 * 2^k / k^2`` on a linear k-uniform d-regular instance."""
    _check_epsilon(eps)
    pair = H.linearity_violation
    if pair is not None:
        a, b = pair
        shared = sorted(set(H.edges[a]) & set(H.edges[b]))
        raise RegimeError(f"instance is not linear: edges {a} and {b} share vertices {[v + 1 for v in shared]}")
    k, d = _uniform_regular(H, "linear")
    threshold = (1.0 - eps) / 4.0 * 2.0**k / k**2
    detail = {"k": k, "d": d, "threshold": threshold}
    if d > threshold:
        return CheckResult("linear", False, None, detail)
    return CheckResult("linear", True, Regime("linear", eps, k * H.m * 2.0**-k), detail)


def suggest_x(H: Hypergraph, eps: float = DEFAULT_EPSILON) -> np.ndarray:
    """Heuristic weights ``x(C) = min(1/2, 1/(d^2 |C|^2))`` with ``d`` the max degree."""
    d = H.max_degree
    return np.minimum(0.5, 1.0 / (d**2 * H.edge_sizes.astype(float) ** 2))


def manual_regime(L: int) -> Regime:
    if L < 1:
        raise RegimeError(f"manual L must be >= 1, got {L}")
    return Regime("manual", manual_L=int(L))


def smallest_length(beta: float, eps: float, exponent: Callable[[int], int], max_L: int = 10**8) -> int:
    """Smallest ``L >= 1`` with ``beta * (1-eps)**exponent(L) <= 1/2``."""
    if beta <= 0:
        return 1
    rate = -math.log1p(-eps)
    needed = math.log(2.0 * beta) / rate  # exponent that brings the bound to exactly 1/2
    L = 1
    while exponent(L) < needed - 1e-9:
        L += 1
        if L > max_L:
            raise RegimeError(f"no L <= {max_L} brings the bound below 1/2 (beta={beta}, eps={eps})")
    return L


def choose_L(regime: Regime) -> int:
    if regime.kind == "manual":
        return regime.manual_L
    return smallest_length(regime.beta, regime.epsilon, regime.effective_exponent)


def select_regime(
    H: Hypergraph,
    kind: str = "auto",
    eps: float = DEFAULT_EPSILON,
    x: Sequence[float] | None = None,
    L: int | None = None,
) -> tuple[Regime | None, list[CheckResult]]:
    """Resolve a regime for ``H``.

    ``auto`` tries linear, then symmetric, then asymmetric (with ``x`` or the
    suggested weights); the first pass wins.  When nothing passes and ``L`` is
    given, a manual regime is returned.
    """
    checks: list[CheckResult] = []
    order = {"auto": ["linear", "symmetric", "asymmetric"], "asym": ["asymmetric"], "asymmetric": ["asymmetric"],
             "sym": ["symmetric"], "symmetric": ["symmetric"], "linear": ["linear"], "manual": []}
    if kind not in order:
        raise RegimeError(f"unknown regime {kind!r}")
    for name in order[kind]:
        try:
            if name == "linear":
                res = check_linear(H, eps)
            elif name == "symmetric":
                res = check_symmetric(H, eps)
            else:
                res = check_asymmetric(H, eps, suggest_x(H, eps) if x is None else x)
        except RegimeError as exc:
            res = CheckResult(name, False, None, {"error": str(exc)})
        checks.append(res)
        if res.passed:
            return res.regime, checks
    if L is not None:
        logger.warning(
            "using manual L=%d: samples stay exactly uniform, but no regime bounds the expected "
            "number of rounds", L)
        return manual_regime(L), checks
    return None, checks


# --------------------------------------------------------------------------
# randomness


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < _U64:
        raise ValueError(f"master seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def block_bits(master_seed: int, j: int, T: int) -> np.ndarray:
    """Bits of block ``j``: a Philox stream keyed by ``(master_seed, j)``.

    Distinct ``j`` use distinct keys, so blocks are independent, and any block
    can be regenerated without touching the others.
    """
    key = (check_seed(master_seed) << 64) | int(j)
    words = np.random.Philox(key=key).random_raw((T + 63) // 64)
    return np.unpackbits(words.view(np.uint8), bitorder="little")[:T]


def trial_seeds(master_seed: int, count: int) -> np.ndarray:
    """``count`` derived 64-bit seeds, one per independent run."""
    return np.random.SeedSequence(check_seed(master_seed)).generate_state(count, dtype=np.uint64)


@dataclass(frozen=True)
class RandomnessBlock:
    index: int
    master_seed: int
    bits: np.ndarray = field(repr=False)


# --------------------------------------------------------------------------
# the sampler


@dataclass
class RunReport:
    J: int
    L: int
    T: int
    bits_consumed: int
    wall_ms: float
    master_seed: int
    sample: np.ndarray
    regime: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "sample": coloring_key(self.sample),
            "vertices": [int(v) + 1 for v in np.flatnonzero(self.sample)],
            "J": self.J,
            "L": self.L,
            "T": self.T,
            "bits_consumed": self.bits_consumed,
            "master_seed": self.master_seed,
            "regime": self.regime.get("kind"),
            "epsilon": self.regime.get("epsilon"),
            "beta": self.regime.get("beta"),
        }
        if timing:
            out["wall_ms"] = round(self.wall_ms, 3)
        return out


class CFTPSampler:
    """One perfect sample of a fixed instance with fixed ``L`` and master seed.

    Blocks are drawn at most once each and kept for the forward replay.
    """

    def __init__(self, H: Hypergraph, L: int, master_seed: int, round_cap: int = DEFAULT_ROUND_CAP):
        if L < 1:
            raise ValueError(f"L must be >= 1, got {L}")
        if round_cap < 1:
            raise ValueError(f"round cap must be >= 1, got {round_cap}")
        self.H = H
        self.L = int(L)
        self.T = horizon(H.n, L)
        self.master_seed = check_seed(master_seed)
        self.round_cap = int(round_cap)
        self._blocks: dict[int, np.ndarray] = {}

    def block(self, j: int) -> np.ndarray:
        bits = self._blocks.get(j)
        if bits is None:
            bits = self._blocks[j] = block_bits(self.master_seed, j, self.T)
        return bits

    def coalesced(self, bits: np.ndarray) -> bool:
        """Stopping rule: no percolation certifies coalescence."""
        return not detect(self.H, bits, self.L)

    def replay_order(self, J: int) -> range:
        return range(J, 0, -1)

    def replay(self, J: int) -> np.ndarray:
        return run_scan_from_zero(self.H, [self.block(j) for j in self.replay_order(J)])

    def rounds(self) -> int:
        for j in range(1, self.round_cap + 1):
            if self.coalesced(self.block(j)):
                return j
        raise RoundCapExceeded(self.round_cap, self.L)

    def run(self) -> tuple[np.ndarray, int]:
        J = self.rounds()
        return self.replay(J), J


def sample(
    H: Hypergraph,
    regime: Regime,
    master_seed: int,
    round_cap: int = DEFAULT_ROUND_CAP,
    sampler_cls: type[CFTPSampler] = CFTPSampler,
) -> tuple[np.ndarray, RunReport]:
    """Draw one exactly uniform independent set of ``H``."""
    start = time.perf_counter()
    L = choose_L(regime)
    sampler = sampler_cls(H, L, master_seed, round_cap)
    sigma, J = sampler.run()
    wall_ms = (time.perf_counter() - start) * 1e3
    if not is_independent(H, sigma):
        raise AssertionError(f"sampler produced a non-independent coloring {coloring_key(sigma)}")
    report = RunReport(J, L, sampler.T, J * sampler.T, wall_ms, sampler.master_seed, sigma, regime.summary())
    return sigma, report


def sample_stream(
    H: Hypergraph,
    L: int,
    master_seed: int,
    count: int,
    round_cap: int = DEFAULT_ROUND_CAP,
    sampler_cls: type[CFTPSampler] = CFTPSampler,
) -> Iterator[tuple[np.ndarray, int]]:
    """``count`` independent runs at fixed ``L``; yields ``(coloring, J)``."""
    for seed in trial_seeds(master_seed, count):
        yield sampler_cls(H, L, int(seed), round_cap).run()


@dataclass
class RoundStats:
    histogram: dict[int, int]
    trials: int
    mean: float
    sd: float
    p_hat: float
    p_se: float

    def to_dict(self) -> dict:
        return {
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "trials": self.trials,
            "mean_J": self.mean,
            "sd_J": self.sd,
            "p_hat": self.p_hat,
            "p_se": self.p_se,
        }


def round_stats(rounds: Sequence[int]) -> RoundStats:
    """Summaries of observed round counts ``J`` (each ``J - 1`` percolating blocks, then one clean one)."""
    J = np.asarray(rounds, dtype=float)
    if J.size == 0:
        raise ValueError("no runs to summarize")
    values, counts = np.unique(J.astype(int), return_counts=True)
    total = J.sum()
    p_hat = float((total - J.size) / total)
    return RoundStats(
        histogram={int(v): int(c) for v, c in zip(values, counts)},
        trials=int(J.size),
        mean=float(J.mean()),
        sd=float(J.std(ddof=1)) if J.size > 1 else 0.0,
        p_hat=p_hat,
        p_se=math.sqrt(p_hat * (1.0 - p_hat) / total),
    )


def estimate_round_distribution(
    H: Hypergraph,
    regime: Regime,
    trials: int,
    master_seed: int,
    round_cap: int = DEFAULT_ROUND_CAP,
) -> RoundStats:
    if trials < 1:
        raise ValueError("need at least one trial")
    L = choose_L(regime)
    return round_stats([J for _, J in sample_stream(H, L, master_seed, trials, round_cap)])
