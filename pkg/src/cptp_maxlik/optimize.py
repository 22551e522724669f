"""Downhill-simplex (Nelder-Mead) minimizer with restarts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import InvalidArgumentError, InvalidStartError

REFLECT = 1.0
EXPAND = 2.0
CONTRACT = 0.5
SHRINK = 0.5


@dataclass(frozen=True)
class SolverConfig:
    """Shared solver settings.

    ``max_iterations`` caps each Nelder-Mead run and the fixed-point
    iteration alike. ``tol_likelihood`` is relative; ``tol_step`` is an
    absolute step or simplex-diameter bound.
    """

    max_iterations: int = 20000
    tol_likelihood: float = 1e-10
    tol_step: float = 1e-9
    seed: int = 0
    dilution_init: float = 1.0
    restarts: int = 3

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidArgumentError("max_iterations must be at least 1")
        if not (self.tol_likelihood > 0 and self.tol_step > 0):
            raise InvalidArgumentError("tolerances must be positive")
        if not 0 < self.dilution_init <= 1:
            raise InvalidArgumentError("dilution_init must lie in (0, 1]")
        if self.restarts < 0:
            raise InvalidArgumentError("restarts must be nonnegative")


class SimplexResult(NamedTuple):
    x: np.ndarray
    fun: float
    trace: list
    iterations: int
    converged: bool


def _initial_simplex(x0: np.ndarray, signs: np.ndarray) -> np.ndarray:
    n = x0.size
    steps = np.maximum(0.05 * np.abs(x0), 0.05) * signs
    simplex = np.tile(x0, (n + 1, 1))
    simplex[1:][np.arange(n), np.arange(n)] += steps
    return simplex


def _run(objective, x0, f0, signs, max_iter, tol_f, tol_x, it_offset, trace):
    n = x0.size
    xs = _initial_simplex(x0, signs)
    fs = np.empty(n + 1)
    fs[0] = f0
    for i in range(1, n + 1):
        fs[i] = objective(xs[i])
    ages = np.arange(n + 1)
    next_age = n + 1
    converged = False
    it = 0
    while it < max_iter:
        # order by objective, ties broken by insertion age
        order = np.lexsort((ages, fs))
        xs, fs, ages = xs[order], fs[order], ages[order]
        spread = fs[-1] - fs[0]
        diameter = np.max(np.abs(xs[1:] - xs[0]))
        if diameter < tol_x or spread <= tol_f * abs(fs[0]):
            converged = True
            break
        it += 1
        centroid = xs[:-1].mean(axis=0)
        worst = xs[-1]
        xr = centroid + REFLECT * (centroid - worst)
        fr = objective(xr)
        new_x = new_f = None
        if fr < fs[0]:
            xe = centroid + EXPAND * (xr - centroid)
            fe = objective(xe)
            new_x, new_f = (xe, fe) if fe < fr else (xr, fr)
        elif fr < fs[-2]:
            new_x, new_f = xr, fr
        elif fr < fs[-1]:
            xc = centroid + CONTRACT * (xr - centroid)
            fc = objective(xc)
            if fc <= fr:
                new_x, new_f = xc, fc
        else:
            xcc = centroid + CONTRACT * (worst - centroid)
            fcc = objective(xcc)
            if fcc < fs[-1]:
                new_x, new_f = xcc, fcc
        if new_x is not None:
            xs[-1], fs[-1], ages[-1] = new_x, new_f, next_age
            next_age += 1
        else:
            xs[1:] = xs[0] + SHRINK * (xs[1:] - xs[0])
            for i in range(1, n + 1):
                fs[i] = objective(xs[i])
            ages[1:] = np.arange(next_age, next_age + n)
            next_age += n
        trace.append((it_offset + it, float(np.min(fs))))
    best = int(np.lexsort((ages, fs))[0])
    return xs[best].copy(), float(fs[best]), it, converged


def nelder_mead(
    objective: Callable[[np.ndarray], float], x0, cfg: SolverConfig | None = None
) -> SimplexResult:
    """Minimize ``objective`` from ``x0``.

    After the first run the simplex is rebuilt around the incumbent up to
    ``cfg.restarts`` times, with perturbation signs drawn from a generator
    seeded by ``cfg.seed``; restarts stop early once one fails to improve.
    ``trace`` lists ``(iteration, best objective)`` pairs.
    """
    cfg = cfg or SolverConfig()
    x0 = np.array(x0, dtype=float).reshape(-1)
    f0 = float(objective(x0))
    if not np.isfinite(f0):
        raise InvalidStartError(f"objective is not finite at the starting point ({f0})")
    rng = np.random.default_rng(cfg.seed)
    best_x, best_f = x0, f0
    trace = [(0, f0)]
    total = 0
    converged = False
    for run in range(cfg.restarts + 1):
        signs = np.ones(x0.size) if run == 0 else rng.choice((-1.0, 1.0), size=x0.size)
        x, f, used, conv = _run(
            objective, best_x, best_f, signs, cfg.max_iterations,
            cfg.tol_likelihood, cfg.tol_step, total, trace,
        )
        total += used
        improved = f < best_f - cfg.tol_likelihood * abs(best_f)
        if f < best_f:
            best_x, best_f = x, f
        converged = conv
        if run > 0 and not improved:
            break
    return SimplexResult(best_x, best_f, trace, total, converged)
