"""Bounded particle-swarm minimizer.

Standard inertia-weight update::

    v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x)
    x <- x + v

with velocities clamped to ``velocity_clamp * (hi - lo)`` per dimension and
positions reflected back into the box (the offending velocity component is
zeroed).  Random numbers come from numpy's PCG64 seeded with ``seed``; the
draw order is fixed so a run is a pure function of (objective, config).
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_INERTIA = 0.729
DEFAULT_ACCEL = 1.49445


@dataclass(frozen=True)
class PsoConfig:
    bounds: tuple  # ((lo, hi), ...) one pair per dimension
    swarm_size: int = 40
    max_iterations: int = 100
    inertia: float = DEFAULT_INERTIA
    cognitive: float = DEFAULT_ACCEL
    social: float = DEFAULT_ACCEL
    velocity_clamp: float = 0.2
    seed: int = 0
    # (window, epsilon): stop once the best cost improved by less than
    # epsilon over the last ``window`` iterations; None disables
    stall_tolerance: tuple | None = None
    # Warm-start scatter as a fraction of bound width.  None draws the
    # non-incumbent particles uniformly over the box.
    init_spread: float | None = None

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", b)
        if not b:
            raise ValueError("bounds must have at least one dimension")
        if any(not (math.isfinite(lo) and math.isfinite(hi) and lo < hi) for lo, hi in b):
            raise ValueError("every bound must be a finite interval with lo < hi")
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be at least 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0.0 < self.inertia < 1.0:
            raise ValueError("inertia must lie in (0, 1)")
        if not (self.cognitive > 0 and self.social > 0):
            raise ValueError("cognitive and social coefficients must be positive")
        if not 0.0 < self.velocity_clamp <= 1.0:
            raise ValueError("velocity_clamp must lie in (0, 1]")
        if self.stall_tolerance is not None:
            window, eps = self.stall_tolerance
            if int(window) < 1 or float(eps) < 0:
                raise ValueError("stall_tolerance needs window >= 1 and epsilon >= 0")
            object.__setattr__(self, "stall_tolerance", (int(window), float(eps)))
        if self.init_spread is not None and not self.init_spread > 0:
            raise ValueError("init_spread must be positive")

    @property
    def dimension(self) -> int:
        return len(self.bounds)

    def with_bounds(self, bounds) -> "PsoConfig":
        return replace(self, bounds=tuple(bounds))


@dataclass
class PsoResult:
    best_position: np.ndarray
    best_cost: float
    cost_history: np.ndarray = field(repr=False)
    iterations_run: int = 0


def _sanitize(costs, where: str) -> np.ndarray:
    c = np.asarray(costs, dtype=float).reshape(-1)
    bad = ~np.isfinite(c)
    if bad.any():
        log.warning("%d non-finite objective value(s) at %s treated as +inf", int(bad.sum()), where)
        c = np.where(bad, np.inf, c)
    return c


def _reflect(x, v, lo, hi):
    below = x < lo
    above = x > hi
    x = np.where(below, 2 * lo - x, x)
    x = np.where(above, 2 * hi - x, x)
    v = np.where(below | above, 0.0, v)
    # a reflection can only overshoot when the clamp exceeds the box width
    return np.clip(x, lo, hi), v


def minimize(
    objective: Callable,
    config: PsoConfig,
    *,
    initial: Sequence[float] | None = None,
    batch: bool = False,
    threads: int = 1,
    callback: Callable | None = None,
) -> PsoResult:
    """Minimize ``objective`` over the box in ``config``.

    ``objective`` maps one position vector to a float, or with ``batch=True``
    a (swarm, dim) array to a vector of costs.  ``initial`` is injected as
    particle 0.  ``callback(iteration, best_cost, best_position)`` runs after
    every iteration.  Evaluation order never affects the result; ties in the
    global best go to the lowest particle index.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed))
    lo = np.array([b[0] for b in config.bounds])
    hi = np.array([b[1] for b in config.bounds])
    width = hi - lo
    vmax = config.velocity_clamp * width
    P, D = config.swarm_size, config.dimension

    x = lo + rng.random((P, D)) * width
    if initial is not None:
        x0 = np.clip(np.asarray(initial, dtype=float).reshape(-1), lo, hi)
        if x0.size != D:
            raise ValueError(f"initial position has {x0.size} entries, expected {D}")
        if config.init_spread is not None:
            x = np.clip(x0 + config.init_spread * width * rng.standard_normal((P, D)), lo, hi)
        x[0] = x0
    v = (2.0 * rng.random((P, D)) - 1.0) * vmax

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 and not batch else None

    def evaluate(pos, where):
        if batch:
            return _sanitize(objective(pos), where)
        if pool is not None:
            return _sanitize(list(pool.map(objective, pos)), where)
        return _sanitize([objective(p) for p in pos], where)

    try:
        cost = evaluate(x, "initialization")
        pbest, pcost = x.copy(), cost.copy()
        g = int(np.argmin(pcost))
        gpos, gcost = pbest[g].copy(), float(pcost[g])
        history = []
        for it in range(config.max_iterations):
            r1 = rng.random((P, D))
            r2 = rng.random((P, D))
            v = config.inertia * v + config.cognitive * r1 * (pbest - x) + config.social * r2 * (gpos - x)
            v = np.clip(v, -vmax, vmax)
            x, v = _reflect(x + v, v, lo, hi)
            cost = evaluate(x, f"iteration {it}")
            better = cost < pcost
            pbest[better] = x[better]
            pcost[better] = cost[better]
            g = int(np.argmin(pcost))
            if pcost[g] < gcost:
                gpos, gcost = pbest[g].copy(), float(pcost[g])
            history.append(gcost)
            if callback is not None:
                callback(it, gcost, gpos)
            if config.stall_tolerance is not None:
                window, eps = config.stall_tolerance
                if len(history) > window and history[-window - 1] - history[-1] < eps:
                    break
    finally:
        if pool is not None:
            pool.shutdown()

    return PsoResult(gpos, gcost, np.array(history), len(history))


def write_history(history, path, start: int = 0) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "best_cost"])
        for k, c in enumerate(history):
            w.writerow([start + k, repr(float(c))])


def read_history(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["iteration", "best_cost"]:
        raise ValueError(f"{path}: not a cost-history file")
    return np.array([float(r[1]) for r in rows[1:]])
