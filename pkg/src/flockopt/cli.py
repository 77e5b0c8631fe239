"""flockopt command line: simulate, sample, pca, optimize, evaluate, target.

Every command writes ``manifest.json`` into its output directory before any
computation. Exit codes: 0 success, 2 configuration or parse error,
3 numerical divergence, 4 degenerate analysis.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from .config import (
    PARAM_NAMES,
    POINT_A,
    POINT_B,
    FlockParams,
    RunConfig,
    load_params,
    load_run_config,
    read_json,
)
from .errors import (
    AmbiguousPartitionError,
    ConfigError,
    DegenerateColumnError,
    DegenerateFitError,
    FitFailed,
    NumericalFailure,
    SimulationDiverged,
    ZeroAmplitudeError,
)
from .metrics import PCA_ORDER, score_log
from .workers import default_jobs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_DEGENERATE = 4

NAMED_POINTS = {"A": POINT_A, "B": POINT_B}


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def _write_json(path, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


class Context:
    """Resolved inputs of one command invocation."""

    def __init__(self, args, run: RunConfig, params: FlockParams | None, seed: int, out: Path):
        self.args = args
        self.run = run
        self.params = params
        self.seed = seed
        self.out = out

    def manifest(self) -> dict:
        return {
            "command": self.args.command,
            "config_path": self.args.config,
            "params_path": getattr(self.args, "params", None),
            "seed": self.seed,
            "tool_version": tool_version(),
            "out": str(self.out),
            "options": {k: v for k, v in sorted(vars(self.args).items())
                        if k not in ("func", "command", "config", "params", "out", "seed")},
            "config": self.run.to_dict(),
            "flock_params": None if self.params is None else self.params.to_dict(),
        }


def _resolve_seed(args, default: int) -> int:
    if args.seed is not None:
        seed = args.seed
    elif os.environ.get("FLOCKOPT_SEED"):
        try:
            seed = int(os.environ["FLOCKOPT_SEED"])
        except ValueError as exc:
            raise ConfigError(f"FLOCKOPT_SEED is not an integer: {os.environ['FLOCKOPT_SEED']!r}") from exc
    else:
        seed = default
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return seed


def _resolve_params(args) -> FlockParams | None:
    point = getattr(args, "point", None)
    path = getattr(args, "params", None)
    if path:
        return load_params(path)
    if point:
        return NAMED_POINTS[point]
    return None


def _prepare(args, seed_default=None, needs_params=False) -> Context:
    run = load_run_config(args.config)
    params = _resolve_params(args)
    if needs_params and params is None:
        raise ConfigError("this command needs --params <file> or --point A|B")
    seed = _resolve_seed(args, run.sim.seed if seed_default is None else seed_default)
    out = Path(args.out) if args.out else Path("runs") / f"{args.command}-{time.strftime('%Y%m%d-%H%M%S')}"
    out.mkdir(parents=True, exist_ok=True)
    ctx = Context(args, run, params, seed, out)
    _write_json(out / "manifest.json", ctx.manifest())
    return ctx


def _jobs(args) -> int:
    return default_jobs() if args.jobs is None else max(1, args.jobs)


# --- commands ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    from .sim import run_simulation

    ctx = _prepare(args, needs_params=True)
    config = ctx.run.sim.replace(seed=ctx.seed)
    log = run_simulation(ctx.params, config)
    op, fv, ro = score_log(log, ctx.run.transfer)
    log.write_csv(ctx.out / "log.csv")
    sidecar = log.sidecar()
    sidecar.update(order_params=op.to_dict(), fitness=fv.to_dict(), reduced=ro.to_dict())
    _write_json(ctx.out / "log.json", sidecar)
    print(f"f1 = {ro.f1:.4f}  f2 = {ro.f2:.4f}  -> {ctx.out}")
    return EXIT_OK


def cmd_sample(args) -> int:
    from .pca import sample_random_runs

    ctx = _prepare(args)
    dm = sample_random_runs(args.n, ctx.run.bounds, ctx.run.sim, ctx.seed, ctx.run.transfer, _jobs(args))
    dm.write_csv(ctx.out / "design.csv")
    with open(ctx.out / "genomes.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sim_seed", *PARAM_NAMES])
        for seed, genome in zip(dm.seeds, dm.genomes):
            writer.writerow([int(seed), *(f"{v:.17g}" for v in genome)])
    print(f"{dm.n} samples -> {ctx.out / 'design.csv'}")
    return EXIT_OK


def cmd_pca(args) -> int:
    from .pca import DesignMatrix, run_pca

    ctx = _prepare(args)
    try:
        dm = DesignMatrix.read_csv(args.design)
    except (OSError, ValueError, StopIteration) as exc:
        raise ConfigError(f"cannot read design matrix {args.design}: {exc}") from exc
    if tuple(dm.columns) != PCA_ORDER:
        raise ConfigError(f"design columns must be {','.join(PCA_ORDER)}")
    result = run_pca(dm)
    result.write_json(ctx.out / "pca.json")
    print(result.table())
    if result.partition is None:
        print("first component does not split the objectives by sign")
    else:
        a, b = ([PCA_ORDER[j] for j in g] for g in result.partition)
        print(f"F1 group: {', '.join(a)}   F2 group: {', '.join(b)}")
    return EXIT_OK


def _write_front(path, X, F) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        names = PARAM_NAMES if X.shape[1] == len(PARAM_NAMES) else [f"x{j}" for j in range(X.shape[1])]
        writer.writerow(["f1", "f2", *names])
        for x, f in sorted(zip(X.tolist(), F.tolist()), key=lambda r: (-r[1][0], -r[1][1])):
            writer.writerow([f"{v:.17g}" for v in (*f, *x)])


def cmd_optimize(args) -> int:
    from dataclasses import replace

    from .moea import FlockingProblem, SquaresBenchmark, evolve, hypervolume_2d, load_archive, save_generation

    archive = None
    if args.resume:
        resume_dir = Path(args.resume)
        manifest = read_json(resume_dir / "manifest.json")
        # restore the original invocation so the continued run is identical
        for key in ("benchmark", "generations", "pop", "evals"):
            setattr(args, key, manifest["options"].get(key))
        args.config = manifest["config_path"]
        args.seed = manifest["seed"]
        args.out = str(resume_dir)
        run = RunConfig.from_dict(manifest["config"])
        archive = load_archive(resume_dir / "generations")
        seed = manifest["seed"]
        out = resume_dir
    else:
        ctx = _prepare(args, seed_default=load_run_config(args.config).evolution.master_seed)
        run, seed, out = ctx.run, ctx.seed, ctx.out

    evo = run.evolution
    changes = {"master_seed": seed}
    if args.generations is not None:
        changes["generations"] = args.generations
    if args.pop is not None:
        changes["pop_size"] = args.pop
    if args.evals is not None:
        changes["evals_per_individual"] = args.evals
    try:
        evo = replace(evo, **changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc

    if args.benchmark:
        problem = SquaresBenchmark()
    else:
        problem = FlockingProblem(run.sim, run.transfer, run.bounds, evo.evals_per_individual, _jobs(args))
    gen_dir = out / "generations"
    gen_dir.mkdir(exist_ok=True)

    def checkpoint(arch):
        save_generation(arch.last, gen_dir, arch.rng_state)

    archive = evolve(problem, evo, archive, on_generation=checkpoint, log=print)
    X, F = archive.final_front()
    _write_front(out / "front.csv", X, F)
    if args.benchmark:
        hv = hypervolume_2d(F, (-4.0, -4.0))
        print(f"hypervolume {hv:.6f} (analytic {40 / 3:.6f})")
    print(f"final front: {len(X)} members -> {out / 'front.csv'}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .moea import run_seeds
    from .sim import run_simulation

    ctx = _prepare(args, needs_params=True)
    rows = []
    for run_seed in run_seeds(ctx.seed, args.n):
        config = ctx.run.sim.replace(seed=run_seed)
        op, fv, ro = score_log(run_simulation(ctx.params, config), ctx.run.transfer)
        rows.append({"seed": run_seed, **ro.to_dict(), **fv.to_dict()})
    keys = [k for k in rows[0] if k != "seed"]
    table = np.array([[r[k] for k in keys] for r in rows])
    summary = {
        "n": args.n,
        "seed": ctx.seed,
        "mean": dict(zip(keys, table.mean(axis=0).tolist())),
        "std": dict(zip(keys, table.std(axis=0, ddof=1 if args.n > 1 else 0).tolist())),
    }
    _write_json(ctx.out / "evaluate.json", summary)
    with open(ctx.out / "runs.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", *keys])
        for r in rows:
            writer.writerow([r["seed"], *(f"{r[k]:.17g}" for k in keys)])
    for k in ("f1", "f2"):
        print(f"{k} = {summary['mean'][k]:.4f} +- {summary['std'][k]:.4f}")
    return EXIT_OK


def cmd_target(args) -> int:
    from .sim import run_simulation
    from .target import (
        TargetSeries,
        com_distance_series,
        initial_guess,
        sinusoid_fit,
        target_fitness,
        write_fit_json,
    )

    if args.series is None and args.params is None and args.point is None:
        raise ConfigError("target needs --params/--point, or --series for replay")
    ctx = _prepare(args)
    if args.series:
        try:
            series = TargetSeries.read_csv(args.series)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read series {args.series}: {exc}") from exc
    else:
        half = ctx.run.sim.arena_side / 2.0
        target = tuple(args.target) if args.target else (half, half)
        config = ctx.run.sim.replace(seed=ctx.seed)
        full = com_distance_series(run_simulation(ctx.params, config, target=target), target)
        k = int(round(args.settle / config.dt))
        try:
            series = TargetSeries(full.times[k:], full.d_bar[k:], target)
        except ValueError as exc:
            raise ConfigError(f"--settle leaves too few samples: {exc}") from exc
    guess = initial_guess(series)
    fit = sinusoid_fit(series, guess)
    f_target = target_fitness(fit)
    series.write_csv(ctx.out / "series.csv", fit.model(series.times))
    write_fit_json(ctx.out / "fit.json", fit, guess, f_target)
    print(f"a = {fit.amplitude:.4f} m  w = {fit.angular_frequency:.4f} rad/s  F_target = {f_target:.4f}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flockopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text, params=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="run configuration JSON (defaults built in)")
        p.add_argument("--seed", type=int, help="master seed (fallback: $FLOCKOPT_SEED, then config)")
        p.add_argument("--out", help="output directory (default runs/<command>-<timestamp>)")
        p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
        if params:
            group = p.add_mutually_exclusive_group()
            group.add_argument("--params", help="flock parameter JSON")
            group.add_argument("--point", choices=sorted(NAMED_POINTS), help="built-in parameter set")
        p.set_defaults(func=func)
        return p

    command("simulate", cmd_simulate, "run one simulation and score it", params=True)
    p = command("sample", cmd_sample, "random parameter sweep for PCA")
    p.add_argument("--n", type=int, default=500, help="number of samples")
    p = command("pca", cmd_pca, "principal components of a design matrix")
    p.add_argument("--design", required=True, help="design-matrix CSV from `sample`")
    p = command("optimize", cmd_optimize, "NSGA-II search")
    p.add_argument("--generations", type=int)
    p.add_argument("--pop", type=int)
    p.add_argument("--evals", type=int, help="simulations averaged per individual")
    p.add_argument("--benchmark", action="store_true", help="solve the x^2, (x-2)^2 test problem")
    p.add_argument("--resume", help="output directory of an interrupted run")
    p = command("evaluate", cmd_evaluate, "mean and spread over repeated runs", params=True)
    p.add_argument("--n", type=int, default=100, help="number of runs")
    p = command("target", cmd_target, "loiter analysis around a fixed target", params=True)
    p.add_argument("--target", type=float, nargs=2, metavar=("X", "Y"),
                   help="target position (default: arena corner)")
    p.add_argument("--settle", type=float, default=100.0, help="seconds of approach to discard")
    p.add_argument("--series", help="replay a t,d_bar CSV instead of simulating")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
        print("error: --n must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DegenerateColumnError, AmbiguousPartitionError, ZeroAmplitudeError, DegenerateFitError,
            FitFailed, NumericalFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
