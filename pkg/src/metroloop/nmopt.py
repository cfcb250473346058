"""Nelder-Mead simplex minimizer with an explicit, logged step API.

The moves are the standard ones: reflection of the worst vertex through the
centroid of the others, expansion, outside/inside contraction and shrinkage
toward the best vertex. Proposals are clamped to the box bounds before they
are evaluated.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .qcore import ValidationError

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]

MOVES = ("init", "reflect", "expand", "contract_outside", "contract_inside", "shrink")


@dataclass(frozen=True)
class OptimizerConfig:
    """Nelder-Mead factors and run controls.

    ``init_range`` is either a scalar pair or a pair of per-coordinate
    arrays; it is both the sampling box for the initial simplex and the
    clamping box for proposals (unless ``clamp`` is off).
    """

    alpha: float = 1.0
    gamma_exp: float = 2.0
    beta: float = 0.5
    delta_shrink: float = 0.5
    max_iterations: int = 25
    init_range: tuple = (-1000.0, 1000.0)
    seed: int = 0
    stall_tolerance: float | None = None
    stall_window: int = 10
    clamp: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError("alpha must be > 0")
        if not self.gamma_exp > 1:
            raise ValidationError("gamma_exp must be > 1")
        if not 0 < self.beta < 1:
            raise ValidationError("beta must lie in (0, 1)")
        if not 0 < self.delta_shrink < 1:
            raise ValidationError("delta_shrink must lie in (0, 1)")
        if self.max_iterations < 0:
            raise ValidationError("max_iterations must be >= 0")
        if self.stall_window < 1:
            raise ValidationError("stall_window must be >= 1")

    def bounds(self, dimension: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.init_range
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (dimension,)).copy()
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (dimension,)).copy()
        if np.any(lo > hi):
            raise ValidationError("init_range lower bound exceeds upper bound")
        return lo, hi


@dataclass(eq=False)
class Simplex:
    vertices: np.ndarray  # (D+1, D)
    values: np.ndarray  # (D+1,), ascending

    @property
    def dimension(self) -> int:
        return self.vertices.shape[1]

    @property
    def best_vertex(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def best_value(self) -> float:
        return float(self.values[0])

    def sorted(self) -> "Simplex":
        order = np.argsort(self.values, kind="stable")
        return Simplex(self.vertices[order], self.values[order])

    def copy(self) -> "Simplex":
        return Simplex(self.vertices.copy(), self.values.copy())


@dataclass(frozen=True)
class IterationEvent:
    iteration: int
    move: str
    best_value: float
    best_vertex: np.ndarray
    evaluations_used: int


@dataclass
class RunResult:
    best_vertex: np.ndarray
    best_value: float
    events: list[IterationEvent] = field(default_factory=list)
    stalled: bool = False
    evaluations: int = 0

    def __iter__(self):
        # allows ``best, value, events = run(...)``
        return iter((self.best_vertex, self.best_value, self.events))


class _Counted:
    """Objective wrapper: evaluation counter and NaN -> +inf."""

    def __init__(self, fn: Objective):
        self.fn = fn
        self.calls = 0

    def __call__(self, x: np.ndarray) -> float:
        self.calls += 1
        v = float(self.fn(x))
        if math.isnan(v):
            logger.warning("objective returned NaN; treating as +inf")
            return math.inf
        return v


def _as_counted(objective) -> _Counted:
    return objective if isinstance(objective, _Counted) else _Counted(objective)


def initialize(dimension: int, config: OptimizerConfig, objective: Objective,
               vertices: np.ndarray | None = None) -> Simplex:
    """Draw ``D + 1`` vertices uniformly from ``init_range`` (or use ``vertices``), evaluate, sort."""
    if dimension < 1:
        raise ValidationError("dimension must be >= 1")
    f = _as_counted(objective)
    if vertices is None:
        lo, hi = config.bounds(dimension)
        rng = np.random.default_rng(config.seed)
        vertices = lo + (hi - lo) * rng.random((dimension + 1, dimension))
    else:
        vertices = np.array(vertices, dtype=float)
        if vertices.shape != (dimension + 1, dimension):
            raise ValidationError(f"expected vertices of shape {(dimension + 1, dimension)}")
    values = np.array([f(v) for v in vertices])
    return Simplex(vertices, values).sorted()


def step(simplex: Simplex, config: OptimizerConfig, objective: Objective,
         iteration: int = 0) -> tuple[Simplex, IterationEvent]:
    """One Nelder-Mead iteration on a sorted simplex; returns the new sorted simplex."""
    f = _as_counted(objective)
    calls0 = f.calls
    s = simplex.copy()
    verts, vals = s.vertices, s.values
    d = s.dimension
    if config.clamp:
        lo, hi = config.bounds(d)
        clip = lambda x: np.clip(x, lo, hi)  # noqa: E731
    else:
        clip = lambda x: x  # noqa: E731

    worst = verts[-1]
    centroid = verts[:-1].mean(axis=0)
    direction = centroid - worst
    f_best, f_second, f_worst = vals[0], vals[-2], vals[-1]

    x_r = clip(centroid + config.alpha * direction)
    f_r = f(x_r)
    if f_r < f_best:
        x_e = clip(centroid + config.gamma_exp * config.alpha * direction)
        f_e = f(x_e)
        if f_e < f_r:
            move, new = "expand", (x_e, f_e)
        else:
            move, new = "reflect", (x_r, f_r)
    elif f_r < f_second:
        move, new = "reflect", (x_r, f_r)
    else:
        if f_r < f_worst:
            move = "contract_outside"
            x_c = clip(centroid + config.beta * config.alpha * direction)
            f_c = f(x_c)
            accepted = f_c <= f_r
        else:
            move = "contract_inside"
            x_c = clip(centroid - config.beta * config.alpha * direction)
            f_c = f(x_c)
            accepted = f_c < f_worst
        if accepted:
            new = (x_c, f_c)
        else:
            move, new = "shrink", None
            best = verts[0]
            for i in range(1, d + 1):
                verts[i] = best + config.delta_shrink * (verts[i] - best)
                vals[i] = f(verts[i])
    if new is not None:
        verts[-1], vals[-1] = new
    s = s.sorted()
    event = IterationEvent(iteration, move, s.best_value, s.best_vertex.copy(), f.calls - calls0)
    return s, event


def run(dimension: int, config: OptimizerConfig, objective: Objective,
        vertices: np.ndarray | None = None, callback=None) -> RunResult:
    """Iterate until ``max_iterations`` or a stall.

    A stall is declared when the best value improved by less than
    ``stall_tolerance`` over the last ``stall_window`` iterations.
    ``callback(simplex, event)`` is invoked after initialization (event
    iteration 0, move ``"init"``) and after every step.
    """
    f = _as_counted(objective)
    simplex = initialize(dimension, config, f, vertices)
    init_event = IterationEvent(0, "init", simplex.best_value, simplex.best_vertex.copy(), f.calls)
    if callback is not None:
        callback(simplex, init_event)
    events: list[IterationEvent] = []
    history = [simplex.best_value]
    stalled = False
    for g in range(1, config.max_iterations + 1):
        simplex, event = step(simplex, config, f, iteration=g)
        events.append(event)
        history.append(event.best_value)
        if callback is not None:
            callback(simplex, event)
        if (config.stall_tolerance is not None and len(history) > config.stall_window
                and history[-1 - config.stall_window] - history[-1] < config.stall_tolerance):
            stalled = True
            break
    return RunResult(simplex.best_vertex.copy(), simplex.best_value, events, stalled, f.calls)
