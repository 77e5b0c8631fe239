"""Loiter analysis of a target-following run.

The swarm's centre-of-mass distance to a fixed waypoint is fit with
a*sin(w*t + psi) + c; the loiter fitness is w / a.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateFitError, FitFailed, ZeroAmplitudeError

MIN_SAMPLES = 16


@dataclass
class TargetSeries:
    times: np.ndarray
    d_bar: np.ndarray
    target: tuple = (0.0, 0.0)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.d_bar = np.asarray(self.d_bar, dtype=float)
        self.target = tuple(float(v) for v in self.target)
        if self.times.shape != self.d_bar.shape or self.times.ndim != 1:
            raise ValueError("times and d_bar must be 1-D and of equal length")
        if len(self.times) < MIN_SAMPLES:
            raise ValueError(f"need at least {MIN_SAMPLES} samples, got {len(self.times)}")
        gaps = np.diff(self.times)
        if not (gaps[0] > 0 and np.allclose(gaps, gaps[0], rtol=1e-6, atol=0.0)):
            raise ValueError("times must be uniformly spaced and increasing")

    @property
    def dt(self) -> float:
        return float((self.times[-1] - self.times[0]) / (len(self.times) - 1))

    def write_csv(self, path, model=None) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "d_bar", "model"])
            for k, (t, d) in enumerate(zip(self.times, self.d_bar)):
                m = "" if model is None else f"{model[k]:.9g}"
                writer.writerow([f"{t:.9g}", f"{d:.9g}", m])

    @classmethod
    def read_csv(cls, path, target=(0.0, 0.0)) -> "TargetSeries":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = [(float(r["t"]), float(r["d_bar"])) for r in reader]
        t, d = zip(*rows) if rows else ((), ())
        return cls(np.array(t), np.array(d), target)


@dataclass(frozen=True)
class SinusoidFit:
    amplitude: float
    angular_frequency: float
    phase: float
    offset: float
    residual: float
    iterations: int = 0

    def model(self, t) -> np.ndarray:
        return sinusoid(np.asarray(t, dtype=float), self.as_array())

    def as_array(self) -> np.ndarray:
        return np.array([self.amplitude, self.angular_frequency, self.phase, self.offset])

    def to_dict(self) -> dict:
        return asdict(self)


def com_distance_series(log, target) -> TargetSeries:
    target = np.asarray(target, dtype=float)
    com = log.positions.mean(axis=1)
    return TargetSeries(log.times(), np.linalg.norm(com - target, axis=1), tuple(target))


def sinusoid(t, theta) -> np.ndarray:
    a, w, psi, c = theta
    return a * np.sin(w * t + psi) + c


def _jacobian(t, theta) -> np.ndarray:
    a, w, psi, _ = theta
    phase = w * t + psi
    s, co = np.sin(phase), np.cos(phase)
    return np.column_stack([s, a * t * co, a * co, np.ones_like(t)])


def initial_guess(series: TargetSeries) -> tuple[float, float, float, float]:
    """(a0, f0, psi0, c0) with f0 in Hz taken from the dominant nonzero DFT bin."""
    d = series.d_bar
    c0 = float(d.mean())
    dev = d - c0
    rms = math.sqrt(float(np.mean(dev * dev)))
    if not rms > 1e-12 * max(1.0, abs(c0)):
        raise ZeroAmplitudeError("series is constant; nothing to fit")
    spectrum = np.abs(np.fft.rfft(dev))
    freqs = np.fft.rfftfreq(len(d), series.dt)
    k = 1 + int(np.argmax(spectrum[1:]))
    return math.sqrt(2.0) * rms, float(abs(freqs[k])), 0.0, c0


def canonical(theta) -> np.ndarray:
    """Equivalent parameters with a >= 0, w >= 0 and psi in (-pi, pi]."""
    a, w, psi, c = (float(v) for v in theta)
    if w < 0:
        # a sin(-wt + psi) = a sin(wt - psi + pi)
        w, psi = -w, math.pi - psi
    if a < 0:
        a, psi = -a, psi + math.pi
    psi = math.remainder(psi, 2.0 * math.pi)
    if psi <= -math.pi:
        psi += 2.0 * math.pi
    return np.array([a, w, psi, c])


def _project(t, y, w):
    """Best (a, w, psi, c) at fixed w; the remaining model is linear."""
    B = np.column_stack([np.sin(w * t), np.cos(w * t), np.ones_like(t)])
    (p, q, c), *_ = np.linalg.lstsq(B, y, rcond=None)
    # p sin + q cos = a sin(wt + psi) with a cos(psi) = p, a sin(psi) = q
    return np.array([math.hypot(p, q), w, math.atan2(q, p), c])


def warm_start(series: TargetSeries, guess, span_bins: float = 1.0, points: int = 41):
    """Refine a DFT-seeded guess before the nonlinear fit.

    The frequency is scanned over +-span_bins DFT bins around the guess and,
    at each candidate, amplitude, phase and offset are solved exactly. The
    lowest-cost candidate is returned unless the raw guess is already better.
    """
    t, y = series.times, series.d_bar
    a0, f0, psi0, c0 = guess
    raw = np.array([a0, 2.0 * math.pi * f0, psi0, c0], dtype=float)
    best, best_cost = raw, float(np.sum((sinusoid(t, raw) - y) ** 2))
    bin_w = 2.0 * math.pi / (len(t) * series.dt)
    for w in raw[1] + bin_w * span_bins * np.linspace(-1.0, 1.0, points):
        if w <= 0:
            continue
        cand = _project(t, y, w)
        cost = float(np.sum((sinusoid(t, cand) - y) ** 2))
        if cost < best_cost:
            best, best_cost = cand, cost
    return best


def sinusoid_fit(series: TargetSeries, guess=None, max_iter: int = 200, step_tol: float = 1e-10,
                 damping: float = 1e-3, refine: bool = True) -> SinusoidFit:
    """Levenberg-Marquardt refinement of (a, w, psi, c) over time.

    ``guess`` is (a0, f0 [Hz], psi0, c0) as returned by :func:`initial_guess`;
    with ``refine`` it first passes through :func:`warm_start`. Each trial
    step counts as one iteration.
    """
    t, y = series.times, series.d_bar
    if guess is None:
        guess = initial_guess(series)
    if refine:
        theta = warm_start(series, guess)
    else:
        a0, f0, psi0, c0 = guess
        theta = np.array([a0, 2.0 * math.pi * f0, psi0, c0], dtype=float)
    r = sinusoid(t, theta) - y
    cost = float(r @ r)
    lam = damping
    for it in range(1, max_iter + 1):
        J = _jacobian(t, theta)
        A = J.T @ J
        g = J.T @ r
        diag = np.diag(A).copy()
        diag[diag == 0] = 1.0
        try:
            step = np.linalg.solve(A + lam * np.diag(diag), -g)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        cand = theta + step
        r_new = sinusoid(t, cand) - y
        cost_new = float(r_new @ r_new)
        small = np.linalg.norm(step) <= step_tol * (np.linalg.norm(theta) + step_tol)
        if cost_new <= cost:
            theta, r, cost = cand, r_new, cost_new
            lam = max(lam / 10.0, 1e-15)
        else:
            lam *= 10.0
        if small:
            a, w, psi, c = canonical(theta)
            return SinusoidFit(a, w, psi, c, math.sqrt(cost / len(t)), it)
    raise FitFailed(canonical(theta), math.sqrt(cost / len(t)),
                    f"no convergence in {max_iter} iterations")


def target_fitness(fit: SinusoidFit) -> float:
    """Loiter fitness: angular frequency over amplitude."""
    if fit.amplitude <= 1e-9:
        raise DegenerateFitError(f"amplitude {fit.amplitude!r} too small")
    return fit.angular_frequency / fit.amplitude


def write_fit_json(path, fit: SinusoidFit, guess, f_target) -> None:
    data = fit.to_dict()
    data["initial_guess"] = dict(zip(("a0", "f0", "psi0", "c0"), (float(v) for v in guess)))
    data["f_target"] = f_target
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
