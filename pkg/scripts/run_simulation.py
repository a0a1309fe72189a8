"""Grid-search experiment on simulated tensors.

For each true structure, generate a tensor (noiseless and noisy), run the
full grid and print the top candidates with mean and SD. The defaults are
small enough for a laptop; raise --max-R/--max-L/--repeats and use the
50x60x70 size for the full experiment.

    python scripts/run_simulation.py --dims 50,60,70 --truth 2,2,2,2 --max-R 6 --max-L 6 --repeats 100
"""
import argparse
import time

from btdcorcondia import BlockStructure, SearchSpace, SimSpec, generate, grid_search
from btdcorcondia.cli import _dims


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[1])
    p.add_argument("--dims", type=_dims, default=(25, 30, 35))
    p.add_argument("--truth", action="append", type=BlockStructure.parse,
                   help="true structure, repeatable (default: 2,2 and 1,3)")
    p.add_argument("--snr", type=float, action="append", help="noise level in dB, repeatable; noiseless always runs")
    p.add_argument("--max-R", type=int, default=4)
    p.add_argument("--max-L", type=int, default=4)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker processes (default: all CPUs)")
    p.add_argument("--top", type=int, default=10)
    args = p.parse_args()

    truths = args.truth or [BlockStructure((2, 2)), BlockStructure((1, 3))]
    for truth in truths:
        for snr in [None] + (args.snr or [50.0]):
            t, _ = generate(SimSpec(args.dims, truth, seed=args.seed, snr_db=snr))
            start = time.perf_counter()
            report = grid_search(t, SearchSpace(args.max_R, args.max_L), repeats=args.repeats,
                                 seed=args.seed, threads=args.threads)
            label = "noiseless" if snr is None else f"{snr:g} dB"
            print(f"\ntruth {truth}, {label}, {time.perf_counter() - start:.1f} s")
            print(f"{'rank':>4} {'structure':<14} {'mean %':>12} {'SD':>10} {'fails':>5}")
            for i, row in enumerate(report.top(args.top), 1):
                mark = "  <- truth" if row.structure == truth.canonical() else ""
                print(f"{i:>4} {str(row.structure):<14} {row.mean_pct:>12.2f} {row.sd_pct:>10.2f} {row.failures:>5}{mark}")


if __name__ == "__main__":
    main()
