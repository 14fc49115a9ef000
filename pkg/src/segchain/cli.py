"""Command-line entry point: simulate, analyze, verify-proof, export-segment.

Exit codes: 0 ok, 1 proof rejected, 2 usage or configuration error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .analysis import CaptureParams, DomainError, PlacementInfeasible, capture_probability
from .chain import header_hash
from .config import ConfigError, SimConfig, StrategyKind, load_config, make_config
from .figures import (
    CAPTURE_COLUMNS,
    RATIO_COLUMNS,
    STORAGE_COLUMNS,
    FigureConfig,
    capture_rows,
    emit_figures,
    ratio_rows,
    storage_rows,
    svg_line_plot,
    write_csv,
)
from .membership import pow_meets_target, write_roster_csv
from .segmentation import write_segment_dump
from .sim import World, run_trials
from .storage_proof import ProofOfStorage, load_chain_view, verify_proof

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _out_dir(args) -> Path:
    return Path(os.environ.get("SEGCHAIN_OUT") or args.out)


def _write(path: Path, text: str, written: list[Path]) -> None:
    path.write_text(text)
    written.append(path)


def _manifest(out: Path, command: str, config: dict | None, seed: int | None, written: list[Path],
              started: float, extra: dict | None = None) -> None:
    doc = {
        "command": command,
        "tool_version": __version__,
        "seed": seed,
        "config": config,
        "outputs": sorted(p.name for p in written),
        "wall_clock_seconds": round(time.perf_counter() - started, 3),
        "argv": sys.argv[1:],
    }
    doc.update(extra or {})
    (out / "manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------- simulate

def _sim_config(args) -> SimConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if args.m is not None:
        overrides["m"] = args.m
    if args.s is not None:
        overrides["s0"] = args.s
    if args.strategy is not None:
        overrides["adversary_strategy"] = args.strategy
    base = load_config(args.config, overrides) if args.config else make_config(overrides)
    if args.adversary_fraction is not None:
        f = args.adversary_fraction
        if not 0 <= f < 1:
            raise ConfigError("adversary_fraction", "must lie in [0, 1)")
        extra = {"adversary_power": f * base.n0}
        if f > 0 and base.adversary_strategy is StrategyKind.NONE:
            extra["adversary_strategy"] = StrategyKind.OPTIMAL_PLACEMENT.value
        base = make_config(extra, base)
    return base


def _events_csv(events: list[dict]) -> str:
    lines = ["height,kind,payload"]
    for e in events:
        payload = json.dumps(e["payload"], sort_keys=True, separators=(",", ":")).replace('"', '""')
        lines.append(f'{e["height"]},{e["kind"]},"{payload}"')
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = _sim_config(args)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if args.trials > 1:
        summaries = run_trials(cfg, args.trials, args.trials_parallel)
        _write(out / "outcome.json", json.dumps({"trials": summaries}, sort_keys=True, indent=1) + "\n", written)
        if args.format == "csv":
            rows = [(i, s["config"]["seed"], s["final_s"], len(s["segments_lost"]), s["adversary_identities_max"],
                     s["tip_hash"]) for i, s in enumerate(summaries)]
            write_csv(out / "trials.csv", ("trial", "seed", "final_s", "losses", "adversary_max", "tip_hash"), rows)
            written.append(out / "trials.csv")
        print(f"{args.trials} trials, losses in {sum(1 for s in summaries if s['segments_lost'])}")
    else:
        world = World(cfg)
        for _ in range(cfg.iterations):
            world.step()
        outcome = world.outcome()
        _write(out / "outcome.json", outcome.summary_json(), written)
        if args.format == "csv":
            _write(out / "events.csv", _events_csv(outcome.event_log), written)
        else:
            _write(out / "events.jsonl", outcome.events_jsonl(), written)
        with open(out / "roster.csv", "w", newline="") as fh:
            write_roster_csv(world.roster, fh)
        written.append(out / "roster.csv")
        if world.last_proof is not None:
            lp = world.last_proof
            _write(out / "proof.json", json.dumps(lp.proof.to_json(), indent=1) + "\n", written)
            _write(out / "chain_view.json", json.dumps(lp.chain_view(world)) + "\n", written)
        counts = outcome.event_counts()
        print(f"h={outcome.iterations_run} s={outcome.final_s} losses={len(outcome.segments_lost)} "
              + " ".join(f"{k}={v}" for k, v in counts.items() if v))
    _manifest(out, "simulate", cfg.to_dict(), cfg.seed, written, started,
              {"trials": args.trials, "trials_parallel": args.trials_parallel})
    return EXIT_OK


# ---------------------------------------------------------------- analyze

def _table(out: Path, name: str, columns, rows, fmt: str, written: list[Path]) -> None:
    if fmt == "json":
        path = out / f"{name}.json"
        path.write_text(json.dumps([dict(zip(columns, r)) for r in rows], indent=1) + "\n")
    else:
        path = out / f"{name}.csv"
        write_csv(path, columns, rows)
    written.append(path)


def cmd_analyze(args) -> int:
    started = time.perf_counter()
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    kind = args.analysis

    if kind == "capture":
        rows = capture_rows(args.m, args.s, args.ad_fraction, args.trials, args.seed, args.T, args.trials_parallel)
        for m, row in zip(args.m, rows):
            params = CaptureParams(n=row[1], m=m, s=args.s, AD=row[2], T=args.T)
            res = capture_probability(params)
            shown = list(res.placement[:8])
            print(f"m={m} s={args.s} AD={row[2]} T={params.T} placement={shown}{'...' if len(res.placement) > 8 else ''}")
            print(f"  exact  = {res.exact_str()}")
            print(f"  approx = {_sci(res.approx)}")
            if row[5]:
                print(f"  mc     = {row[5]} +/- {row[6]}")
        _table(out, "capture", CAPTURE_COLUMNS, rows, args.format, written)
        svg_line_plot(out / "capture.svg", {"exact": [(r[0], float(r[3])) for r in rows]}, "occupations m",
                      "capture probability", logy=True)
        written.append(out / "capture.svg")
    elif kind == "ratio":
        rows = ratio_rows(args.n, args.s1, args.t_frac, args.T)
        for r in rows:
            print(f"n={r[0]} s1={r[1]} T={r[2]} s0={float(r[3]):.4f} ratio={float(r[4]):.4f}")
        _table(out, "ratio", RATIO_COLUMNS, rows, args.format, written)
        series = {f"n={n}": [(r[1], float(r[4])) for r in rows if r[0] == n] for n in args.n}
        svg_line_plot(out / "ratio.svg", series, "s1 (shards)", "s0/s1")
        written.append(out / "ratio.svg")
    elif kind == "storage":
        heights = range(args.h_min, args.h_max + 1, args.h_step)
        rows = storage_rows(heights, args.s, args.accounts, args.SB, args.pending)
        _table(out, "storage", STORAGE_COLUMNS, rows, args.format, written)
        series = {f"accounts={a}": [(r[0], r[3] / 1e6) for r in rows if r[2] == a] for a in args.accounts}
        series["nakamoto"] = [(r[0], r[4] / 1e6) for r in rows if r[2] == args.accounts[0]]
        svg_line_plot(out / "storage.svg", series, "height h", "bytes per node (MB)", logy=True)
        written.append(out / "storage.svg")
        last = rows[-1]
        print(f"{len(rows)} rows; at h={last[0]} s={last[1]} accounts={last[2]}: "
              f"segment {last[3]} bytes vs nakamoto {last[4]} bytes ({last[3] / last[4]:.4f})")
    else:
        written += emit_figures(out, FigureConfig(seed=args.seed, capture_trials=args.trials))
        print("\n".join(str(p) for p in written))
    _manifest(out, f"analyze {kind}", {k: v for k, v in vars(args).items() if k != "func"}, args.seed,
              written, started)
    return EXIT_OK


def _sci(p) -> str:
    return f"{float(p):.6e}" if float(p) > 0 else str(p)


# ---------------------------------------------------------------- proofs

def cmd_verify_proof(args) -> int:
    try:
        proof = ProofOfStorage.from_json(json.loads(Path(args.proof).read_text()))
        view = json.loads(Path(args.chain_view).read_text())
        headers, counts, s, P, roster = load_chain_view(view)
        if not headers:
            raise ValueError("chain view holds no headers")
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        print(f"parse error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    check = pow_meets_target if view.get("pow_mode") == "hash" else None
    verdict = verify_proof(proof, headers, header_hash(headers[-1]), roster, s=s, P=P, tx_counts=counts,
                           pow_check=check)
    print(verdict.reason.value)
    return EXIT_OK if verdict else EXIT_REJECT


def cmd_export_segment(args) -> int:
    cfg = _sim_config(args)
    world = World(cfg)
    for _ in range(cfg.iterations):
        world.step()
    if world.layout is None:
        raise UsageError(f"no segments yet at h={world.h} with s={world.s}")
    if not 1 <= args.segment <= world.s:
        raise UsageError(f"segment must lie in 1..{world.s}")
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"segment_{args.segment}.txt"
    with open(path, "w") as fh:
        write_segment_dump(world.segments.resolve(args.segment), world.h, world.s, fh)
    print(path)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--m", type=int, help="occupations")
    p.add_argument("--s", type=int, help="initial segment count")
    p.add_argument("--adversary-fraction", type=float,
                   help="adversary power as a fraction of m*s0; selects optimal_placement unless --strategy is given")
    p.add_argument("--strategy", choices=[k.value for k in StrategyKind])
    p.add_argument("--out", default="out")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="segchain", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the protocol engine")
    _sim_flags(p)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--trials-parallel", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="closed-form and Monte Carlo analysis")
    asub = p.add_subparsers(dest="analysis", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out")
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--trials-parallel", type=int, default=1)

    c = asub.add_parser("capture", parents=[common])
    c.add_argument("--m", type=int, nargs="+", default=[256])
    c.add_argument("--s", type=int, default=64)
    c.add_argument("--ad-fraction", type=float, default=0.5)
    c.add_argument("--T", type=int)
    c.add_argument("--trials", type=int, default=0, help="Monte Carlo trials per m (0 skips)")

    r = asub.add_parser("ratio", parents=[common])
    r.add_argument("--n", type=int, nargs="+", default=[4000, 8000])
    r.add_argument("--s1", type=int, nargs="+", default=[8, 16, 32])
    r.add_argument("--t-frac", type=float, default=0.6)
    r.add_argument("--T", type=float, help="fixed T instead of t_frac*n/s1")

    st = asub.add_parser("storage", parents=[common])
    st.add_argument("--h-min", type=int, default=1)
    st.add_argument("--h-max", type=int, default=100_000)
    st.add_argument("--h-step", type=int, default=1)
    st.add_argument("--s", type=int, default=31)
    st.add_argument("--accounts", type=int, nargs="+", default=[1_000_000])
    st.add_argument("--SB", type=int, default=1_000_000)
    st.add_argument("--pending", type=int, default=256)

    f = asub.add_parser("figures", parents=[common])
    f.add_argument("--trials", type=int, default=0)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify-proof", help="check a proof against a public chain view")
    p.add_argument("proof")
    p.add_argument("chain_view")
    p.set_defaults(func=cmd_verify_proof)

    p = sub.add_parser("export-segment", help="simulate, then dump one segment copy")
    _sim_flags(p)
    p.add_argument("--segment", type=int, default=1)
    p.set_defaults(func=cmd_export_segment)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, PlacementInfeasible, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
