"""Random parameter sweeps followed by PCA, repeated over several master seeds.

    python scripts/pca_sweep.py --samples 500 --seeds 0 1 2
"""
import argparse

import numpy as np

from flockopt.config import SimConfig
from flockopt.metrics import PCA_ORDER
from flockopt.pca import run_pca, sample_random_runs


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=500)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--duration", type=float, default=300.0)
    parser.add_argument("--jobs", type=int, default=None)
    args = parser.parse_args()

    np.set_printoptions(precision=3, suppress=True)
    config = SimConfig(duration=args.duration)
    for seed in args.seeds:
        result = run_pca(sample_random_runs(args.samples, None, config, seed, jobs=args.jobs))
        print(f"master seed {seed}")
        print(result.table())
        if result.partition is None:
            print("no clean sign split\n")
            continue
        a, b = ([PCA_ORDER[j] for j in g] for g in result.partition)
        print(f"F1 group: {', '.join(a)}   F2 group: {', '.join(b)}\n")


if __name__ == "__main__":
    main()
