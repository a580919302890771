"""CMA-ES with an ask/tell interface and joint/sequential schedules.

Standard (mu/mu_w, lambda) CMA-ES with cumulative step-size adaptation,
rank-one and rank-mu covariance updates and positive recombination
weights. No restarts.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import InvalidArgumentError

__all__ = [
    "CmaState",
    "cma_init",
    "cma_ask",
    "cma_tell",
    "default_popsize",
    "OptimizationSchedule",
    "Phase",
    "run_schedule",
    "make_evaluator",
    "CMAESMinimizer",
]

log = logging.getLogger(__name__)

MIN_EIGENVALUE = 1e-14


def default_popsize(n: int) -> int:
    return 4 + int(np.floor(3 * np.log(n)))


@dataclass
class CmaState:
    mean: np.ndarray
    sigma: float
    C: np.ndarray
    ps: np.ndarray
    pc: np.ndarray
    eigvecs: np.ndarray
    eigvals: np.ndarray
    rng: np.random.Generator
    lam: int
    mu: int
    weights: np.ndarray
    mueff: float
    cc: float
    cs: float
    c1: float
    cmu: float
    damps: float
    chi_n: float
    generation: int = 0
    counteval: int = 0
    best_x: Optional[np.ndarray] = None
    best_f: float = np.inf
    jitter_events: int = 0

    @property
    def n(self) -> int:
        return self.mean.size


def cma_init(n: int, mean0=None, sigma0: float = 0.3, lam: Optional[int] = None, seed=0) -> CmaState:
    if n < 1:
        raise InvalidArgumentError("dimension must be >= 1")
    if not sigma0 > 0:
        raise InvalidArgumentError("sigma0 must be positive")
    mean = np.zeros(n) if mean0 is None else np.array(mean0, dtype=float).reshape(n)
    lam = default_popsize(n) if lam is None else int(lam)
    if lam < 2:
        raise InvalidArgumentError("population size must be >= 2")
    mu = lam // 2
    w = np.log(lam / 2 + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mueff = 1.0 / np.sum(w ** 2)
    cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
    cs = (mueff + 2) / (n + mueff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, np.sqrt((mueff - 1) / (n + 1)) - 1) + cs
    chi_n = np.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n ** 2))
    return CmaState(
        mean=mean, sigma=float(sigma0), C=np.eye(n), ps=np.zeros(n), pc=np.zeros(n),
        eigvecs=np.eye(n), eigvals=np.ones(n), rng=np.random.default_rng(seed),
        lam=lam, mu=mu, weights=w, mueff=mueff, cc=cc, cs=cs, c1=c1, cmu=cmu,
        damps=damps, chi_n=chi_n,
    )


def cma_ask(state: CmaState) -> np.ndarray:
    """Draw ``lam`` candidates from ``N(mean, sigma^2 C)`` as a ``(lam, n)`` array."""
    z = state.rng.standard_normal((state.lam, state.n))
    y = (z * np.sqrt(state.eigvals)) @ state.eigvecs.T
    return state.mean + state.sigma * y


def _refresh_eigensystem(state: CmaState):
    C = 0.5 * (state.C + state.C.T)
    vals, vecs = np.linalg.eigh(C)
    if vals.min() < MIN_EIGENVALUE:
        shift = MIN_EIGENVALUE - vals.min()
        C = C + shift * np.eye(state.n)
        vals = vals + shift
        state.jitter_events += 1
        log.debug("covariance jitter %.3g at generation %d", shift, state.generation)
    state.C = C
    state.eigvals = vals
    state.eigvecs = vecs


def cma_tell(state: CmaState, candidates, values) -> CmaState:
    """Rank-based update of mean, paths, covariance and step size (in place)."""
    X = np.asarray(candidates, dtype=float)
    f = np.asarray(values, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != f.size or X.shape[1] != state.n:
        raise InvalidArgumentError(
            f"got {X.shape[0] if X.ndim == 2 else '?'} candidates for {f.size} values "
            f"(dimension {state.n})"
        )
    if X.shape[0] < state.mu:
        raise InvalidArgumentError("fewer candidates than parents")
    n, mu, w = state.n, state.mu, state.weights
    state.counteval += f.size
    state.generation += 1

    order = np.argsort(f, kind="stable")
    if f[order[0]] < state.best_f:
        state.best_f = float(f[order[0]])
        state.best_x = X[order[0]].copy()

    old = state.mean
    parents = X[order[:mu]]
    state.mean = w @ parents
    y = (state.mean - old) / state.sigma
    z = state.eigvecs @ ((state.eigvecs.T @ y) / np.sqrt(state.eigvals))

    state.ps = (1 - state.cs) * state.ps + np.sqrt(state.cs * (2 - state.cs) * state.mueff) * z
    ps_norm = np.linalg.norm(state.ps)
    expected = np.sqrt(1 - (1 - state.cs) ** (2 * state.counteval / state.lam))
    hsig = float(ps_norm / expected / state.chi_n < 1.4 + 2 / (n + 1))
    state.pc = (1 - state.cc) * state.pc + hsig * np.sqrt(state.cc * (2 - state.cc) * state.mueff) * y

    steps = (parents - old) / state.sigma
    c1a = state.c1 * (1 - (1 - hsig) * state.cc * (2 - state.cc))
    state.C = (
        (1 - c1a - state.cmu) * state.C
        + state.c1 * np.outer(state.pc, state.pc)
        + state.cmu * (steps.T * w) @ steps
    )
    state.sigma *= float(np.exp(min(1.0, (state.cs / state.damps) * (ps_norm / state.chi_n - 1))))
    _refresh_eigensystem(state)
    return state


@dataclass(frozen=True)
class Phase:
    generations: int
    free: Optional[np.ndarray] = None  # None means all coordinates


@dataclass(frozen=True)
class OptimizationSchedule:
    """Ordered optimization phases; each phase frees a subset of coordinates."""

    mode: str
    phases: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.mode not in ("joint", "sequential"):
            raise InvalidArgumentError(f"unknown schedule mode {self.mode!r}")
        if not self.phases or any(p.generations < 1 for p in self.phases):
            raise InvalidArgumentError("every phase needs at least one generation")

    @property
    def total_generations(self) -> int:
        return sum(p.generations for p in self.phases)

    @classmethod
    def joint(cls, generations: int) -> "OptimizationSchedule":
        return cls("joint", (Phase(generations),))

    @classmethod
    def sequential(cls, morphology_mask, actuation_mask, budgets=(150, 50)) -> "OptimizationSchedule":
        """Morphology first (actuation frozen), then actuation alone."""
        m = np.asarray(morphology_mask, dtype=bool)
        a = np.asarray(actuation_mask, dtype=bool)
        return cls("sequential", (Phase(int(budgets[0]), m), Phase(int(budgets[1]), a)))


def make_evaluator(objective: Callable, workers: int = 1) -> Callable:
    """Batch evaluator returning values in candidate order."""
    if workers <= 1:
        return lambda X: np.array([objective(x) for x in X], dtype=float)

    def evaluate(X):
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.array(list(pool.map(objective, list(X))), dtype=float)

    return evaluate


@dataclass
class ScheduleResult:
    history: list
    best_x: np.ndarray
    best_f: float
    evaluations: int


def run_schedule(
    objective: Callable,
    n: int,
    schedule: OptimizationSchedule,
    seed=0,
    *,
    x0=None,
    sigma0: float = 0.3,
    lam: Optional[int] = 50,
    workers: int = 1,
    evaluate: Optional[Callable] = None,
) -> ScheduleResult:
    """Run every phase of ``schedule`` and collect per-generation history.

    History rows are dicts with ``generation``, ``best_loss`` (best so far),
    ``mean_loss`` (generation mean) and ``sigma`` (step size used to sample).
    """
    evaluate = evaluate or make_evaluator(objective, workers)
    base = np.zeros(n) if x0 is None else np.array(x0, dtype=float).reshape(n)
    seeds = np.random.SeedSequence(seed).spawn(len(schedule.phases))
    history = []
    best_x, best_f = base.copy(), np.inf
    evaluations = 0
    gen = 0
    for phase, ss in zip(schedule.phases, seeds):
        free = np.ones(n, dtype=bool) if phase.free is None else np.asarray(phase.free, dtype=bool)
        idx = np.flatnonzero(free)
        state = cma_init(idx.size, base[idx], sigma0, lam, np.random.default_rng(ss))
        for _ in range(phase.generations):
            sigma = state.sigma
            sub = cma_ask(state)
            full = np.repeat(base[None, :], sub.shape[0], axis=0)
            full[:, idx] = sub
            values = np.asarray(evaluate(full), dtype=float)
            evaluations += values.size
            cma_tell(state, sub, values)
            k = int(np.argmin(values))
            if values[k] < best_f:
                best_f, best_x = float(values[k]), full[k].copy()
            gen += 1
            history.append(
                {"generation": gen, "best_loss": best_f, "mean_loss": float(values.mean()), "sigma": sigma}
            )
        # the next phase starts from the best design found so far
        base = best_x.copy()
    return ScheduleResult(history, best_x, best_f, evaluations)


class CMAESMinimizer(BaseEstimator):
    """Estimator-style wrapper: ``minimize(objective, x0)`` runs a joint schedule.

    Fitted attributes: ``best_x_``, ``best_f_``, ``history_``, ``n_evals_``.
    """

    def __init__(self, sigma0: float = 0.3, popsize: Optional[int] = None, generations: int = 100,
                 seed: int = 0, workers: int = 1):
        self.sigma0 = sigma0
        self.popsize = popsize
        self.generations = generations
        self.seed = seed
        self.workers = workers

    def minimize(self, objective: Callable, x0: Sequence[float]):
        x0 = np.asarray(x0, dtype=float)
        res = run_schedule(
            objective, x0.size, OptimizationSchedule.joint(self.generations), self.seed,
            x0=x0, sigma0=self.sigma0, lam=self.popsize, workers=self.workers,
        )
        self.best_x_, self.best_f_ = res.best_x, res.best_f
        self.history_, self.n_evals_ = res.history, res.evaluations
        return self
