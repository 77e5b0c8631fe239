"""NSGA-II over the flocking parameters, printing the final front.

    python scripts/optimize.py --pop 24 --generations 10 --duration 120
"""
import argparse

from flockopt.config import PARAM_NAMES, EvolutionConfig, SimConfig
from flockopt.moea import FlockingProblem, evolve


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pop", type=int, default=24)
    parser.add_argument("--generations", type=int, default=10)
    parser.add_argument("--evals", type=int, default=1)
    parser.add_argument("--duration", type=float, default=120.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=None)
    args = parser.parse_args()

    problem = FlockingProblem(SimConfig(duration=args.duration), evals_per_individual=args.evals, jobs=args.jobs)
    cfg = EvolutionConfig(pop_size=args.pop, generations=args.generations, master_seed=args.seed)
    X, F = evolve(problem, cfg, log=print).final_front()
    print("f1      f2      " + " ".join(f"{n:>9}" for n in PARAM_NAMES))
    for x, f in sorted(zip(X, F), key=lambda r: -r[1][0]):
        print(f"{f[0]:.4f}  {f[1]:.4f}  " + " ".join(f"{v:9.3f}" for v in x))


if __name__ == "__main__":
    main()
