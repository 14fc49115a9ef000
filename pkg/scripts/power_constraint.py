"""How many identities can an adversary with half the power keep alive?

Sweeps the number of identities the adversary tries to sustain and prints the
worst sliding-window average of live identities, with and without identities
that already failed a check and only await removal.
"""
import argparse

from segchain.config import make_config
from segchain.sim import run_simulation


def worst_window(series, w):
    return max(sum(series[i:i + w]) / w for i in range(len(series) - w + 1))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=4)
    ap.add_argument("--s0", type=int, nargs="+", default=[4, 8])
    ap.add_argument("--extra", type=int, nargs="+", default=[0, 1, 2, 5, 8])
    ap.add_argument("--iterations", type=int, default=400)
    ap.add_argument("--seeds", type=int, nargs="+", default=[3, 4, 5])
    args = ap.parse_args()

    print(f"{'n':>4} {'k':>3} {'seed':>5} {'sustained':>10} {'with doomed':>12} {'bound':>6} {'final s':>8} {'elims':>6}")
    for s0 in args.s0:
        n = args.m * s0
        for k in args.extra:
            for seed in args.seeds:
                cfg = make_config(dict(m=args.m, s0=s0, adversary_power=n / 2, adversary_identities=n // 2 + k,
                                       adversary_genesis=n // 2, honest_power=n / 2 + 8,
                                       adversary_strategy="optimal_placement", iterations=args.iterations,
                                       seed=seed))
                out = run_simulation(cfg)
                w = 4 * s0
                print(f"{n:>4} {k:>3} {seed:>5} {worst_window(out.adversary_identities, w):>10.3f} "
                      f"{worst_window(out.adversary_identities_raw, w):>12.3f} {n / 2 + 1:>6g} "
                      f"{out.final_s:>8} {out.event_counts()['eliminate']:>6}")


if __name__ == "__main__":
    main()
