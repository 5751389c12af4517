"""Command-line interface: ``hgperfect {sample,check,verify,bench}``.

Machine output is JSON (CSV for ``bench``) on stdout or ``--out``; human
summaries go to stderr.  Exit codes: 0 success, 1 bad input, 2 no regime
applies, 3 round cap exceeded, 4 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import secrets
import sys
from pathlib import Path
from typing import Sequence

from . import cftp, verify
from .cftp import RegimeError, RoundCapExceeded, choose_L, select_regime, trial_seeds
from .hypergraph import (
    GenerationError,
    Hypergraph,
    HypergraphError,
    degree_stats,
    format_hypergraph,
    generate_random_regular,
    parse_generator_spec,
    read_hypergraph,
)
from .witness import detect, horizon

EXIT_OK, EXIT_INPUT, EXIT_NO_REGIME, EXIT_ROUND_CAP, EXIT_CHECK_FAILED = 0, 1, 2, 3, 4
REGIME_CHOICES = ("auto", "asym", "sym", "linear", "manual")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit status 2 is reserved for "no regime"
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--in", dest="input", metavar="PATH", help="instance file (.hg, or DIMACS .cnf)")
    src.add_argument("--gen", metavar="SPEC", help="generator spec such as n=9,k=3,d=2,linear")
    common.add_argument("--eps", type=float, default=cftp.DEFAULT_EPSILON, help="slack in (0,1) (default 0.1)")
    common.add_argument("--regime", choices=REGIME_CHOICES, default="auto")
    common.add_argument("--L", type=_positive, help="percolation length; used directly by --regime manual "
                        "and as a fallback when no regime passes")
    common.add_argument("--x", metavar="PATH", help="per-edge weights for the asymmetric check "
                        "(JSON list, or one number per line)")
    common.add_argument("--seed", type=_u64, help="master seed (random and reported if omitted)")
    common.add_argument("--trials", type=_positive, help="number of runs")
    common.add_argument("--strict", action="store_true", help="duplicate edges are an error")
    common.add_argument("--round-cap", type=_positive, default=cftp.DEFAULT_ROUND_CAP)
    common.add_argument("--out", metavar="PATH", help="write machine output here instead of stdout")
    common.add_argument("--timing", action="store_true", help="include wall-clock fields in JSON")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="hgperfect", description="Perfect sampling of hypergraph independent sets.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("sample", parents=[common], help="draw exactly uniform independent sets")
    p.add_argument("--sidecar", metavar="PATH", help="where to write a generated instance")
    sub.add_parser("check", parents=[common], help="evaluate every regime condition")
    p = sub.add_parser("verify", parents=[common], help="oracle-backed checks on an instance or the tiny corpus")
    p.add_argument("--mutant", choices=sorted(verify.MUTANTS), help="run with a deliberately broken sampler")
    p = sub.add_parser("bench", parents=[common], help="timing sweep, CSV output")
    p.add_argument("--sweep", metavar="VAR=V1,V2,...", help="sweep n (regenerating) or L (fixed instance)")
    return parser


# --------------------------------------------------------------------------
# helpers


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj) -> None:
    _emit(args, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(64)
        print(f"master seed {args.seed}", file=sys.stderr)
    return args.seed


def _load(args, gen_overrides: dict | None = None) -> Hypergraph:
    try:
        if args.input:
            return read_hypergraph(args.input, strict=args.strict)
        if args.gen:
            spec = parse_generator_spec(args.gen)
            spec.update(gen_overrides or {})
            spec.setdefault("seed", _seed(args))
            return generate_random_regular(**spec)
    except FileNotFoundError as exc:
        raise InputError(f"cannot read instance: {exc}") from exc
    except (HypergraphError, GenerationError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    raise InputError("one of --in or --gen is required")


def _weights(args) -> list[float] | None:
    if not args.x:
        return None
    try:
        text = Path(args.x).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            data = [float(tok) for tok in text.split()]
        return [float(v) for v in data]
    except (OSError, ValueError, TypeError) as exc:
        raise InputError(f"cannot read weights from {args.x}: {exc}") from exc


def _regime_kind(name: str) -> str:
    return {"asym": "asymmetric", "sym": "symmetric"}.get(name, name)


def _resolve(args, H: Hypergraph):
    if args.regime == "manual" and args.L is None:
        raise InputError("--regime manual needs --L")
    try:
        return select_regime(H, _regime_kind(args.regime), args.eps, _weights(args), args.L)
    except RegimeError as exc:
        raise InputError(str(exc)) from exc


def _report_checks(checks) -> None:
    for res in checks:
        state = "pass" if res.passed else "fail"
        extra = ", ".join(f"{k}={v}" for k, v in res.detail.items())
        print(f"  {res.kind}: {state} ({extra})", file=sys.stderr)


# --------------------------------------------------------------------------
# commands


def cmd_sample(args) -> int:
    seed = _seed(args)
    H = _load(args)
    if args.gen:
        side = Path(args.sidecar) if args.sidecar else (
            Path(args.out).with_suffix(".hg") if args.out else Path(f"generated-{seed}.hg"))
        side.write_text(format_hypergraph(H))
        print(f"generated instance written to {side}", file=sys.stderr)
    regime, checks = _resolve(args, H)
    if regime is None:
        print("no regime condition holds for this instance; pass --L to sample anyway:", file=sys.stderr)
        _report_checks(checks)
        return EXIT_NO_REGIME
    trials = args.trials or 1
    seeds = [seed] if trials == 1 else [int(s) for s in trial_seeds(seed, trials)]
    reports = []
    try:
        for s in seeds:
            _, report = cftp.sample(H, regime, s, round_cap=args.round_cap)
            reports.append(report)
    except RoundCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ROUND_CAP
    if trials == 1:
        _emit_json(args, reports[0].to_dict(timing=args.timing))
    else:
        stats = cftp.round_stats([r.J for r in reports])
        _emit_json(args, {"master_seed": seed, "trials": trials,
                          "runs": [r.to_dict(timing=args.timing) for r in reports],
                          "rounds": stats.to_dict()})
    print(f"{trials} sample(s), L={reports[0].L}, regime={regime.kind}", file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    H = _load(args)
    weights = _weights(args)
    results = []
    for kind in ("asymmetric", "symmetric", "linear"):
        try:
            if kind == "asymmetric":
                res = cftp.check_asymmetric(H, args.eps, cftp.suggest_x(H, args.eps) if weights is None else weights)
            elif kind == "symmetric":
                res = cftp.check_symmetric(H, args.eps)
            else:
                res = cftp.check_linear(H, args.eps)
        except RegimeError as exc:
            res = cftp.CheckResult(kind, False, None, {"error": str(exc)})
        results.append(res)
    _emit_json(args, {"instance": degree_stats(H), "epsilon": args.eps,
                      "regimes": [r.to_dict() for r in results]})
    _report_checks(results)
    return EXIT_OK if any(r.passed for r in results) else EXIT_NO_REGIME


def cmd_verify(args) -> int:
    seed = _seed(args)
    sampler_cls = verify.MUTANTS[args.mutant] if args.mutant else cftp.CFTPSampler
    samples = args.trials or 20_000
    outcomes = []
    if args.input or args.gen:
        H = _load(args)
        regime, _ = _resolve(args, H)
        if regime is None:
            print("no regime condition holds; pass --L", file=sys.stderr)
            return EXIT_NO_REGIME
        outcomes = verify.verify_instance(H, choose_L(regime), seed, samples=samples,
                                          sampler_cls=sampler_cls, regime=regime,
                                          trials=min(samples, 1000))
    else:
        for inst in verify.tiny_corpus():
            for o in verify.verify_instance(inst.H, inst.L, seed, samples=samples, blocks=200,
                                            sampler_cls=sampler_cls):
                o.name = o.name.replace("instance", inst.name)
                outcomes.append(o)
    _emit_json(args, {"master_seed": seed, "mutant": args.mutant, "checks": [o.to_dict() for o in outcomes]})
    for o in outcomes:
        print(o.line(), file=sys.stderr)
    return EXIT_OK if all(o.passed for o in outcomes) else EXIT_CHECK_FAILED


def _parse_sweep(text: str | None) -> tuple[str | None, list[int]]:
    if not text:
        return None, []
    var, sep, values = text.partition("=")
    if not sep or var not in ("n", "L"):
        raise InputError(f"--sweep takes n=... or L=..., got {text!r}")
    try:
        return var, [int(v) for v in values.split(",") if v]
    except ValueError as exc:
        raise InputError(f"bad sweep values in {text!r}") from exc


def _bench_row(H: Hypergraph, regime, repeats: int, seed: int) -> dict:
    L = choose_L(regime)
    T = horizon(H.n, L)
    blocks = [cftp.block_bits(seed, j, T) for j in range(1, repeats + 1)]
    it = iter(blocks)
    detect_s = verify.median_time(lambda: detect(H, next(it), L), repeats)
    total_s, mean_J = verify.sample_time(H, regime, repeats, seed)
    k = H.uniform_k if H.uniform_k is not None else ""
    return {"n": H.n, "k": k, "d": H.max_degree, "L": L, "mean_J": round(mean_J, 4),
            "mean_detect_us": round(detect_s * 1e6, 1), "mean_total_ms": round(total_s * 1e3, 3)}


def cmd_bench(args) -> int:
    seed = _seed(args)
    var, values = _parse_sweep(args.sweep)
    repeats = args.trials or 5
    rows = []
    try:
        if var == "n":
            if not args.gen:
                raise InputError("an n sweep needs --gen")
            instances = [_load(args, {"n": n}) for n in values]
        else:
            instances = [_load(args)]
        for H in instances:
            if var == "L":
                for L in values:
                    rows.append(_bench_row(H, cftp.manual_regime(L), repeats, seed))
                continue
            regime, checks = _resolve(args, H)
            if regime is None:
                print(f"no regime condition holds at n={H.n}; pass --L", file=sys.stderr)
                _report_checks(checks)
                return EXIT_NO_REGIME
            rows.append(_bench_row(H, regime, repeats, seed))
    except RoundCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ROUND_CAP
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["n", "k", "d", "L", "mean_J", "mean_detect_us", "mean_total_ms"],
                            lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _emit(args, buf.getvalue())
    return EXIT_OK


COMMANDS = {"sample": cmd_sample, "check": cmd_check, "verify": cmd_verify, "bench": cmd_bench}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
