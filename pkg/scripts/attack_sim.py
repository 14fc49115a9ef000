"""Capture-and-vanish runs across adversary power shares.

For each share the engine runs independent trials; a trial counts as a loss
when the adversary at some point holds every copy of a segment. The closed
form per-reassignment capture chance is printed next to it for scale.
"""
import argparse

from segchain.analysis import CaptureParams, capture_probability
from segchain.config import make_config
from segchain.sim import run_trials


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--s0", type=int, default=3)
    ap.add_argument("--shares", type=float, nargs="+", default=[0.0, 0.34, 0.5, 0.67])
    ap.add_argument("--iterations", type=int, default=150)
    ap.add_argument("--trials", type=int, default=40)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    n = args.m * args.s0
    print(f"{'share':>6} {'AD':>4} {'per-epoch exact':>16} {'trials lost':>12}")
    for share in args.shares:
        AD = int(share * n)
        cfg = make_config(dict(m=args.m, s0=args.s0, adversary_power=AD, adversary_genesis=AD,
                               honest_power=n - AD + 4, adversary_strategy="capture_and_vanish",
                               iterations=args.iterations, seed=args.seed))
        summaries = run_trials(cfg, args.trials, args.workers) if AD else []
        lost = sum(1 for s in summaries if s["segments_lost"])
        exact = capture_probability(CaptureParams(n=n, m=args.m, s=args.s0, AD=AD)).exact if AD else 0
        print(f"{share:>6.2f} {AD:>4} {float(exact):>16.4f} {lost:>6}/{args.trials}")


if __name__ == "__main__":
    main()
