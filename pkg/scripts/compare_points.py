"""Compare the two built-in parameter sets: mean and spread of (f1, f2) over
repeated runs, then the loiter fit around the arena corner.

    python scripts/compare_points.py --runs 20
"""
import argparse

import numpy as np

from flockopt.config import POINT_A, POINT_B, SimConfig, TransferParams
from flockopt.errors import FlockoptError
from flockopt.metrics import score_log
from flockopt.moea import run_seeds
from flockopt.sim import run_simulation
from flockopt.target import TargetSeries, com_distance_series, sinusoid_fit, target_fitness


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--settle", type=float, default=100.0)
    args = parser.parse_args()

    tp = TransferParams()
    for name, point in (("A", POINT_A), ("B", POINT_B)):
        reduced = [score_log(run_simulation(point, SimConfig(seed=s)), tp)[2]
                   for s in run_seeds(args.seed, args.runs)]
        scores = np.array([[r.f1, r.f2] for r in reduced])
        mean, std = scores.mean(axis=0), scores.std(axis=0, ddof=1)
        print(f"point {name}: f1 = {mean[0]:.3f} +- {std[0]:.3f}   f2 = {mean[1]:.3f} +- {std[1]:.3f}")

        config = SimConfig(seed=args.seed)
        corner = (config.arena_side / 2, config.arena_side / 2)
        full = com_distance_series(run_simulation(point, config, target=corner), corner)
        k = int(round(args.settle / config.dt))
        try:
            fit = sinusoid_fit(TargetSeries(full.times[k:], full.d_bar[k:], corner))
            print(f"  loiter: a = {fit.amplitude:.3f} m, w = {fit.angular_frequency:.3f} rad/s, "
                  f"F_target = {target_fitness(fit):.3f}")
        except FlockoptError as exc:
            print(f"  loiter fit unavailable: {exc}")


if __name__ == "__main__":
    main()
