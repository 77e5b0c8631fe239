"""NSGA-II for maximization: non-dominated sorting, crowding distance,
binary tournament, SBX crossover, polynomial mutation and elitist survival.

Objectives are always maximized here; a benchmark stated as minimization is
negated before it reaches the optimizer.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import EvolutionConfig, FlockParams, SimConfig, TransferParams, bounds_arrays
from .errors import SimulationDiverged
from .metrics import fitness_vector, order_params, reduce_objectives
from .sim import run_simulation
from .workers import map_ordered


def dominates(a, b) -> bool:
    """True iff ``a`` is at least as good everywhere and strictly better somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return bool(np.all(a >= b) and np.any(a > b))


def domination_matrix(F) -> np.ndarray:
    """D[i, j] is True when individual i dominates individual j."""
    F = np.asarray(F, dtype=float)
    ge = np.all(F[:, None, :] >= F[None, :, :], axis=-1)
    gt = np.any(F[:, None, :] > F[None, :, :], axis=-1)
    return ge & gt


def fast_nondominated_sort(F) -> list[np.ndarray]:
    """Partition indices into successive non-dominated fronts (Deb's counting scheme)."""
    F = np.asarray(F, dtype=float)
    n = len(F)
    if n == 0:
        return []
    D = domination_matrix(F)
    dominated_by_count = D.sum(axis=0)
    fronts = []
    current = np.flatnonzero(dominated_by_count == 0)
    while len(current):
        fronts.append(current)
        # each member of the current front releases the individuals it dominates
        dominated_by_count = dominated_by_count - D[current].sum(axis=0)
        dominated_by_count[current] = -1
        nxt = np.flatnonzero(dominated_by_count == 0)
        current = nxt
    return fronts


def crowding_distance(F) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    n, m = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        vals = F[order, k]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        span = vals[-1] - vals[0]
        if span > 0:
            dist[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    return dist


def rank_and_crowd(F) -> tuple[np.ndarray, np.ndarray, list]:
    fronts = fast_nondominated_sort(F)
    rank = np.empty(len(F), dtype=int)
    crowd = np.empty(len(F))
    for r, front in enumerate(fronts):
        rank[front] = r
        crowd[front] = crowding_distance(np.asarray(F)[front])
    return rank, crowd, fronts


def tournament_select(rank, crowd, rng: np.random.Generator, size: int = 2) -> int:
    n = len(rank)
    candidates = rng.choice(n, size=size, replace=n < size)
    return int(min(candidates, key=lambda i: (rank[i], -crowd[i], i)))


def sbx_crossover(p1, p2, lower, upper, prob: float, eta: float, rng: np.random.Generator,
                  prob_var: float = 0.5):
    """Bounded simulated binary crossover; each gene crosses with ``prob_var``."""
    c1 = np.array(p1, dtype=float)
    c2 = np.array(p2, dtype=float)
    if rng.random() >= prob:
        return c1, c2
    for i in range(len(c1)):
        if rng.random() > prob_var:
            continue
        y1, y2 = min(c1[i], c2[i]), max(c1[i], c2[i])
        if y2 - y1 < 1e-14:
            continue
        yl, yu = lower[i], upper[i]
        u = rng.random()
        expo = 1.0 / (eta + 1.0)

        def spread(beta):
            alpha = 2.0 - beta ** -(eta + 1.0)
            if u <= 1.0 / alpha:
                return (u * alpha) ** expo
            return (1.0 / (2.0 - u * alpha)) ** expo

        lo = 0.5 * ((y1 + y2) - spread(1.0 + 2.0 * (y1 - yl) / (y2 - y1)) * (y2 - y1))
        hi = 0.5 * ((y1 + y2) + spread(1.0 + 2.0 * (yu - y2) / (y2 - y1)) * (y2 - y1))
        lo = min(max(lo, yl), yu)
        hi = min(max(hi, yl), yu)
        if rng.random() < 0.5:
            lo, hi = hi, lo
        c1[i], c2[i] = lo, hi
    return c1, c2


def polynomial_mutation(g, lower, upper, prob: float, eta: float,
                        rng: np.random.Generator) -> np.ndarray:
    y = np.array(g, dtype=float)
    expo = 1.0 / (eta + 1.0)
    for i in range(len(y)):
        if rng.random() >= prob:
            continue
        yl, yu = lower[i], upper[i]
        if yu <= yl:
            continue
        d1 = (y[i] - yl) / (yu - yl)
        d2 = (yu - y[i]) / (yu - yl)
        u = rng.random()
        if u < 0.5:
            val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
            dq = val ** expo - 1.0
        else:
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
            dq = 1.0 - val ** expo
        y[i] = min(max(y[i] + dq * (yu - yl), yl), yu)
    return y


def hypervolume_2d(F, ref) -> float:
    """Area dominated by the points in ``F`` (maximization) above ``ref``."""
    F = np.asarray(F, dtype=float).reshape(-1, 2)
    ref = np.asarray(ref, dtype=float)
    F = F[np.all(F > ref, axis=1)]
    if len(F) == 0:
        return 0.0
    F = F[np.lexsort((-F[:, 1], -F[:, 0]))]
    area = 0.0
    best_f2 = ref[1]
    # sweep by decreasing f1; each point adds the strip above the best f2 so far
    for f1, f2 in F:
        if f2 > best_f2:
            area += (f1 - ref[0]) * (f2 - best_f2)
            best_f2 = f2
    return float(area)


# --- problems ---------------------------------------------------------------


def run_seeds(seed: int, n: int) -> list[int]:
    """Simulation seeds of ``n`` repeated runs; the first run uses ``seed`` itself."""
    return [(int(seed) + k) % 2**64 for k in range(n)]


def evaluate(genome, config: SimConfig, tp: TransferParams, evals_per_individual: int,
             seed: int) -> tuple[np.ndarray, bool]:
    """Mean (f1, f2) over independent seeded runs.

    Returns (objectives, diverged); a diverged individual scores (0, 0).
    """
    params = genome if isinstance(genome, FlockParams) else FlockParams.from_array(genome)
    total = np.zeros(2)
    for run_seed in run_seeds(seed, evals_per_individual):
        sim_config = config.replace(seed=run_seed)
        try:
            log = run_simulation(params, sim_config)
        except SimulationDiverged:
            return np.zeros(2), True
        ro = reduce_objectives(fitness_vector(order_params(log), tp, sim_config))
        total += ro.as_tuple()
    return total / evals_per_individual, False


def _evaluate_task(args):
    return evaluate(*args)


class FlockingProblem:
    """Maximize (F1, F2) over the twelve controller parameters."""

    n_obj = 2

    def __init__(self, config: SimConfig, tp: TransferParams | None = None,
                 bounds: dict | None = None, evals_per_individual: int = 1, jobs: int = 1):
        self.config = config
        self.tp = TransferParams() if tp is None else tp
        self.lower, self.upper = bounds_arrays(bounds)
        self.evals_per_individual = evals_per_individual
        self.jobs = jobs

    @property
    def n_var(self) -> int:
        return len(self.lower)

    def evaluate(self, X, seeds):
        tasks = [(x, self.config, self.tp, self.evals_per_individual, int(s)) for x, s in zip(X, seeds)]
        results = map_ordered(_evaluate_task, tasks, self.jobs)
        F = np.array([r[0] for r in results]).reshape(-1, 2)
        flags = np.array([r[1] for r in results], dtype=bool)
        return F, flags


class SquaresBenchmark:
    """minimize (x^2, (x - 2)^2) on [-5, 5], negated for maximization.

    Pareto set x in [0, 2]; against reference (-4, -4) the front dominates
    an area of 40/3.
    """

    n_obj = 2
    lower = np.array([-5.0])
    upper = np.array([5.0])
    n_var = 1

    def evaluate(self, X, seeds=None):
        x = np.asarray(X, dtype=float)[:, 0]
        return np.column_stack([-(x ** 2), -((x - 2.0) ** 2)]), np.zeros(len(x), dtype=bool)


# --- evolution --------------------------------------------------------------


@dataclass
class Generation:
    index: int
    X: np.ndarray
    F: np.ndarray
    rank: np.ndarray
    crowding: np.ndarray
    seeds: np.ndarray
    flagged: np.ndarray

    def front(self) -> tuple[np.ndarray, np.ndarray]:
        mask = self.rank == 0
        return self.X[mask], self.F[mask]

    def to_dict(self) -> dict:
        return {
            "generation": self.index,
            "genomes": self.X.tolist(),
            "objectives": self.F.tolist(),
            "ranks": self.rank.tolist(),
            "crowding": [None if math.isinf(c) else c for c in self.crowding.tolist()],
            "eval_seeds": [int(s) for s in self.seeds],
            "flagged": self.flagged.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Generation":
        return cls(
            index=int(d["generation"]),
            X=np.array(d["genomes"], dtype=float),
            F=np.array(d["objectives"], dtype=float).reshape(-1, 2),
            rank=np.array(d["ranks"], dtype=int),
            crowding=np.array([np.inf if c is None else c for c in d["crowding"]], dtype=float),
            seeds=np.array(d["eval_seeds"], dtype=np.uint64),
            flagged=np.array(d["flagged"], dtype=bool),
        )


@dataclass
class ParetoArchive:
    generations: list = field(default_factory=list)
    rng_state: dict | None = None

    @property
    def last(self) -> Generation:
        return self.generations[-1]

    def fronts(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [g.front() for g in self.generations]

    def final_front(self) -> tuple[np.ndarray, np.ndarray]:
        return self.last.front()


def _eval_seeds(master_seed: int, generation: int, count: int) -> np.ndarray:
    ss = np.random.SeedSequence(master_seed, spawn_key=(2, generation))
    return ss.generate_state(count, np.uint64)


def operator_rng(master_seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(3,))))


def _make_offspring(gen: Generation, problem, cfg: EvolutionConfig, rng):
    lower, upper = problem.lower, problem.upper
    mut_prob = cfg.mutation_prob if cfg.mutation_prob is not None else 1.0 / problem.n_var
    children = []
    while len(children) < cfg.pop_size:
        a = tournament_select(gen.rank, gen.crowding, rng, cfg.tournament_size)
        b = tournament_select(gen.rank, gen.crowding, rng, cfg.tournament_size)
        c1, c2 = sbx_crossover(gen.X[a], gen.X[b], lower, upper, cfg.crossover_prob,
                               cfg.crossover_eta, rng)
        children.append(polynomial_mutation(c1, lower, upper, mut_prob, cfg.mutation_eta, rng))
        children.append(polynomial_mutation(c2, lower, upper, mut_prob, cfg.mutation_eta, rng))
    return np.array(children[:cfg.pop_size])


def survive(X, F, seeds, flagged, n: int, index: int) -> Generation:
    """Keep ``n`` individuals by front rank, then by crowding within the split front."""
    rank, crowd, fronts = rank_and_crowd(F)
    keep = []
    for front in fronts:
        if len(keep) + len(front) <= n:
            keep.extend(front.tolist())
            continue
        room = n - len(keep)
        order = sorted(front.tolist(), key=lambda i: (-crowd[i], i))
        keep.extend(order[:room])
        break
    keep = np.array(sorted(keep, key=lambda i: (rank[i], -crowd[i], i)))
    return Generation(index, X[keep], F[keep], rank[keep], crowd[keep], seeds[keep], flagged[keep])


def evolve(problem, cfg: EvolutionConfig, archive: ParetoArchive | None = None,
           on_generation=None, log=None) -> ParetoArchive:
    """Run (or resume) the generational loop.

    Passing an archive whose ``rng_state`` was saved after its last generation
    continues from there and reproduces the uninterrupted run exactly.
    ``on_generation(archive)`` is called after every completed generation.
    """
    rng = operator_rng(cfg.master_seed)
    if archive is None or not archive.generations:
        archive = ParetoArchive()
        X = problem.lower + rng.random((cfg.pop_size, problem.n_var)) * (problem.upper - problem.lower)
        seeds = _eval_seeds(cfg.master_seed, 0, cfg.pop_size)
        F, flagged = problem.evaluate(X, seeds)
        gen = survive(X, F, seeds, flagged, cfg.pop_size, 0)
        archive.generations.append(gen)
        archive.rng_state = rng.bit_generator.state
        if on_generation:
            on_generation(archive)
    else:
        rng.bit_generator.state = archive.rng_state

    while archive.last.index < cfg.generations:
        gen = archive.last
        Q = _make_offspring(gen, problem, cfg, rng)
        q_seeds = _eval_seeds(cfg.master_seed, gen.index + 1, cfg.pop_size)
        FQ, q_flags = problem.evaluate(Q, q_seeds)
        merged = survive(
            np.vstack([gen.X, Q]), np.vstack([gen.F, FQ]),
            np.concatenate([gen.seeds, q_seeds]), np.concatenate([gen.flagged, q_flags]),
            cfg.pop_size, gen.index + 1,
        )
        archive.generations.append(merged)
        archive.rng_state = rng.bit_generator.state
        if log:
            best = merged.F.max(axis=0)
            log(f"generation {merged.index}: front size {int(np.sum(merged.rank == 0))}, "
                f"best f1 {best[0]:.4f}, best f2 {best[1]:.4f}")
        if on_generation:
            on_generation(archive)
    return archive


def save_generation(gen: Generation, directory, rng_state=None) -> Path:
    path = Path(directory) / f"generation_{gen.index:04d}.json"
    data = gen.to_dict()
    if rng_state is not None:
        data["rng_state"] = rng_state
    # write-then-rename so an interrupted run never leaves a truncated checkpoint
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(data, indent=1))
    tmp.replace(path)
    return path


def load_archive(directory) -> ParetoArchive:
    paths = sorted(Path(directory).glob("generation_*.json"))
    archive = ParetoArchive()
    for path in paths:
        data = json.loads(path.read_text())
        archive.generations.append(Generation.from_dict(data))
        archive.rng_state = data.get("rng_state", archive.rng_state)
    return archive
