"""Cluster dynamics of the three flocking variants.

Prints the mean number of clusters every 25 steps for vanilla, fixed
anti-cohesion (fa) and bounded anti-cohesion (ba) flocks.

    python3 demos/boids_clusters.py --reps 3
"""

import argparse

import numpy as np

from ebdevs import GridSampler, RootCoordinator
from ebdevs.models.boids import VARIANTS, BoidsParams, boids_observe, build_boids


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--birds", type=int, default=200)
    args = ap.parse_args()

    table = {}
    for variant in VARIANTS:
        p = BoidsParams(variant=variant, n_birds=args.birds)
        runs = []
        for i in range(args.reps):
            sampler = GridSampler(1.0, boids_observe)
            RootCoordinator(build_boids(p, 0, i)).run_until(p.horizon, sampler)
            runs.append([row[0] for _, row in sampler.rows])
        table[variant] = np.mean(runs, axis=0)

    print(f"{'step':>5}" + "".join(f"{v:>9}" for v in VARIANTS))
    for k in range(0, len(table["vanilla"]), 25):
        print(f"{k:5d}" + "".join(f"{table[v][k]:9.1f}" for v in VARIANTS))


if __name__ == "__main__":
    main()
