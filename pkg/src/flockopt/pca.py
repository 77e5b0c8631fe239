"""Principal component analysis of the six fitnesses over random runs.

Columns are standardized with the population (1/n) standard deviation and the
covariance uses the unbiased 1/(n-1) scaling, so every diagonal entry of the
covariance equals n / (n - 1).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import PARAM_NAMES, FlockParams, SimConfig, TransferParams, bounds_arrays
from .errors import (
    AmbiguousPartitionError,
    DegenerateColumnError,
    NumericalFailure,
    SimulationDiverged,
)
from .metrics import PCA_ORDER, fitness_vector, order_params
from .sim import run_simulation
from .workers import map_ordered


@dataclass
class DesignMatrix:
    rows: np.ndarray
    columns: tuple = PCA_ORDER
    genomes: np.ndarray | None = None
    seeds: np.ndarray | None = None

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if self.rows.shape[1] != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} columns, got {self.rows.shape[1]}")

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def means(self) -> np.ndarray:
        return self.rows.mean(axis=0)

    @property
    def stds(self) -> np.ndarray:
        return self.rows.std(axis=0)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([f"{v:.17g}" for v in row])

    @classmethod
    def read_csv(cls, path) -> "DesignMatrix":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(h.strip() for h in next(reader))
            rows = [[float(v) for v in line] for line in reader if line]
        return cls(np.array(rows, dtype=float).reshape(-1, len(header)), columns=header)


def _sample_task(args):
    genome, seed, config, tp = args
    sim_config = config.replace(seed=int(seed))
    params = FlockParams.from_array(genome)
    try:
        log = run_simulation(params, sim_config)
    except SimulationDiverged:
        return None
    return fitness_vector(order_params(log), tp, sim_config).pca_row()


def _draw(master_seed: int, k: int, attempt: int, lower, upper):
    ss = np.random.SeedSequence(master_seed, spawn_key=(k, attempt))
    rng = np.random.Generator(np.random.PCG64(ss))
    genome = lower + rng.random(len(lower)) * (upper - lower)
    seed = int(ss.generate_state(1, np.uint64)[0])
    return genome, seed


def sample_random_runs(n: int, bounds: dict | None, config: SimConfig,
                       master_seed: int, tp: TransferParams | None = None,
                       jobs: int = 1) -> DesignMatrix:
    """Simulate ``n`` uniformly drawn parameter vectors once each.

    Draws are keyed by (sample index, attempt) so the matrix does not depend on
    worker scheduling; diverged runs are redrawn, at most 3n attempts in total.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    tp = TransferParams() if tp is None else tp
    lower, upper = bounds_arrays(bounds)
    rows = [None] * n
    genomes = np.empty((n, len(PARAM_NAMES)))
    seeds = np.empty(n, dtype=np.uint64)
    attempt_of = [0] * n
    pending = list(range(n))
    total = 0
    while pending:
        total += len(pending)
        if total > 3 * n:
            raise SimulationDiverged(-1, f"{len(pending)} samples still diverging after {3 * n} attempts")
        draws = [_draw(master_seed, k, attempt_of[k], lower, upper) for k in pending]
        results = map_ordered(_sample_task, [(g, s, config, tp) for g, s in draws], jobs)
        retry = []
        for k, (genome, seed), row in zip(pending, draws, results):
            if row is None:
                attempt_of[k] += 1
                retry.append(k)
            else:
                rows[k] = row
                genomes[k] = genome
                seeds[k] = seed
        pending = retry
    return DesignMatrix(np.vstack(rows), genomes=genomes, seeds=seeds)


def normalize(X, ddof: int = 0, columns=PCA_ORDER) -> np.ndarray:
    """Zero-mean, unit-standard-deviation columns."""
    if isinstance(X, DesignMatrix):
        columns = X.columns
        X = X.rows
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    sigma = X.std(axis=0, ddof=ddof)
    for j, s in enumerate(sigma):
        # relative test: constant columns leave rounding-level spread
        if not s > 1e-12 * max(1.0, abs(mu[j])):
            raise DegenerateColumnError(columns[j] if j < len(columns) else j)
    return (X - mu) / sigma


def covariance(Xnorm, ddof: int = 1) -> np.ndarray:
    X = np.asarray(Xnorm, dtype=float)
    K = X.T @ X / (X.shape[0] - ddof)
    return (K + K.T) / 2.0


def jacobi_eigen(K, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi eigen-decomposition of a symmetric matrix.

    Returns eigenvalues in descending order and the matching orthonormal
    eigenvectors as columns, each with its first nonzero entry positive.
    """
    A = np.array(K, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("K must be square")
    n = A.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(A)
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps + 1):
        # summed directly: total-minus-diagonal cancels below ~1e-8 relative
        off = math.sqrt(float(np.sum(A[off_mask] ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * scale:
                    # far below tolerance; rotating would overflow theta
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                v_p = V[:, p].copy()
                v_q = V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q
    else:
        raise NumericalFailure(f"Jacobi did not converge in {max_sweeps} sweeps")

    eigenvalues = np.diag(A).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    V = V[:, order]
    for k in range(n):
        nz = np.flatnonzero(np.abs(V[:, k]) > 1e-12)
        if len(nz) and V[nz[0], k] < 0:
            V[:, k] = -V[:, k]
    return eigenvalues, V


def partition_objectives(w, columns=PCA_ORDER, anchor: str = "wall", tol: float = 1e-9):
    """Split objectives by the sign of the first principal component.

    Returns (group_a, group_b) as sorted index tuples; group_a is the group
    containing ``anchor``.
    """
    w = np.asarray(w, dtype=float)
    near_zero = [columns[j] for j in np.flatnonzero(np.abs(w) <= tol)]
    if near_zero:
        raise AmbiguousPartitionError(near_zero)
    positive = tuple(int(j) for j in np.flatnonzero(w > 0))
    negative = tuple(int(j) for j in np.flatnonzero(w < 0))
    if not positive or not negative:
        raise AmbiguousPartitionError(list(columns), "first component has a single sign")
    a = columns.index(anchor)
    return (positive, negative) if a in positive else (negative, positive)


@dataclass
class PcaResult:
    covariance: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    columns: tuple = PCA_ORDER
    partition: tuple | None = field(default=None)

    @property
    def first_component(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    def to_dict(self) -> dict:
        groups = None
        if self.partition is not None:
            groups = [[self.columns[j] for j in g] for g in self.partition]
        return {
            "columns": list(self.columns),
            "covariance": self.covariance.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            # column-major: one list per eigenvector
            "eigenvectors": self.eigenvectors.T.tolist(),
            "first_component": self.first_component.tolist(),
            "partition": groups,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def table(self) -> str:
        """Covariance and first component laid out one objective per row."""
        lines = [f"{'':>8} {'w':>8}   " + " ".join(f"{c:>8}" for c in self.columns)]
        for j, name in enumerate(self.columns):
            cells = " ".join(f"{v:8.3f}" for v in self.covariance[j])
            lines.append(f"{name:>8} {self.first_component[j]:8.3f}   {cells}")
        return "\n".join(lines)


def run_pca(X, normalize_ddof: int = 0, covariance_ddof: int = 1) -> PcaResult:
    columns = X.columns if isinstance(X, DesignMatrix) else PCA_ORDER
    K = covariance(normalize(X, ddof=normalize_ddof, columns=columns), ddof=covariance_ddof)
    values, vectors = jacobi_eigen(K)
    result = PcaResult(K, values, vectors, columns=tuple(columns))
    try:
        result.partition = partition_objectives(result.first_component, columns)
    except AmbiguousPartitionError:
        result.partition = None
    return result
