"""Size-class fractions of mitochondria under three fission/fusion mixes.

For each mix the mean fractions of small, medium and large mitochondria are
printed at every 300 s cycle, along with the total mass.

    python3 demos/mito_homeostasis.py --reps 5
"""

import argparse

import numpy as np

from ebdevs import GridSampler, RootCoordinator
from ebdevs.models.mito import MitoParams, build_mito, mito_observe


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()

    for fp in (0.2, 0.5, 0.8):
        p = MitoParams(fission_p=fp, fusion_p=round(1 - fp, 12))
        runs = []
        for i in range(args.reps):
            sampler = GridSampler(p.cycle_period, mito_observe)
            RootCoordinator(build_mito(p, 0, i)).run_until(p.horizon, sampler)
            runs.append([row for _, row in sampler.rows])
        mean = np.mean(np.array(runs, dtype=float), axis=0)
        print(f"fission {fp:.0%} / fusion {1 - fp:.0%}")
        print(f"  {'cycle':>5} {'small':>7} {'medium':>7} {'large':>7} {'mass':>8}")
        for k, row in enumerate(mean):
            print(f"  {k:5d} {row[3]:7.3f} {row[4]:7.3f} {row[5]:7.3f} {row[6]:8.2f}")


if __name__ == "__main__":
    main()
