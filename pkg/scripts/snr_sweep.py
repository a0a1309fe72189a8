"""Consistency against SNR for a fixed true structure, with an optional plot."""
import argparse

from btdcorcondia import BlockStructure, SimSpec, snr_sweep
from btdcorcondia.cli import _dims, _floats


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dims", type=_dims, default=(50, 60, 70))
    p.add_argument("--L", type=BlockStructure.parse, default=BlockStructure((3, 3, 3, 3)))
    p.add_argument("--snr-list", type=_floats, default=[80, 60, 40, 30, 20, 10, 5])
    p.add_argument("--seeds", type=int, default=5, help="average over this many ground truths")
    p.add_argument("--plot", help="write a PNG here (needs matplotlib)")
    args = p.parse_args()

    curves = [snr_sweep(SimSpec(args.dims, args.L, seed=s), args.snr_list) for s in range(args.seeds)]
    print(f"{'SNR dB':>7} " + " ".join(f"{'seed ' + str(s):>10}" for s in range(args.seeds)))
    for i, snr in enumerate(args.snr_list):
        print(f"{snr:>7g} " + " ".join(f"{c.rows[i].consistency_pct:>10.3f}" for c in curves))

    if args.plot:
        import matplotlib.pyplot as plt

        for s, c in enumerate(curves):
            plt.plot(args.snr_list, [r.consistency_pct for r in c.rows], marker="o", label=f"seed {s}")
        plt.xlabel("SNR (dB)")
        plt.ylabel("consistency (%)")
        plt.gca().invert_xaxis()
        plt.legend()
        plt.savefig(args.plot, dpi=120)


if __name__ == "__main__":
    main()
