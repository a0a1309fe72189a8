"""Effect of per-block F_r transforms on the score, with and without noise.

On an exact fit the core is ideal and F_r leaves the score untouched. Once
noise moves the core away from ideal, F_r rescales that deviation and the
score can shift a lot.
"""
import argparse

import numpy as np

from btdcorcondia import BlockStructure, FitOptions, SimSpec, apply_block_transform, btd_corcondia, fit_ll1, generate
from btdcorcondia.cli import _dims
from btdcorcondia.datagen import random_transforms


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--dims", type=_dims, default=(10, 11, 12))
    p.add_argument("--L", type=BlockStructure.parse, default=BlockStructure((2, 3)))
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--max-cond", type=float, default=1e4)
    args = p.parse_args()

    print(f"{'SNR':>9} {'trial':>5} {'before %':>14} {'after %':>14} {'|diff|':>10}")
    for snr in (None, 50.0, 20.0):
        for trial in range(args.trials):
            t, _ = generate(SimSpec(args.dims, args.L, seed=trial, snr_db=snr))
            model = fit_ll1(t, args.L, FitOptions(seed=trial))
            rng = np.random.default_rng(trial)
            moved = apply_block_transform(model, random_transforms(args.L, rng, args.max_cond), args.max_cond)
            a, b = btd_corcondia(t, model).percentage, btd_corcondia(t, moved).percentage
            label = "noiseless" if snr is None else f"{snr:g} dB"
            print(f"{label:>9} {trial:>5} {a:>14.6f} {b:>14.6f} {abs(a - b):>10.2e}")


if __name__ == "__main__":
    main()
