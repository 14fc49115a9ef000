"""Regenerate the ratio, storage and capture tables and plots."""
import argparse

from segchain.figures import FigureConfig, emit_figures


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/figures")
    ap.add_argument("--trials", type=int, default=0, help="Monte Carlo trials per capture row")
    ap.add_argument("--h-max", type=int, default=100_000)
    args = ap.parse_args()
    for p in emit_figures(args.out, FigureConfig(capture_trials=args.trials, h_max=args.h_max)):
        print(p)


if __name__ == "__main__":
    main()
