"""
Free-support barycenter of uniform measures by subgradient descent on the
positions of a uniform candidate (stochastic uniform approximation).

The candidate is an S x D position matrix ``X``. For each input support
``Y^i`` an optimal assignment ``sigma_i`` gives the projection
``P_i = Y^i[sigma_i]`` and the subgradient ``V_i = 2 (X - P_i)`` of the
squared transport cost. The update is ``X <- X - (alpha/N) sum_i V_i``; with
``alpha = 1/2`` it is exactly ``X <- mean_i P_i``.

Only the squared Euclidean cost is supported here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import MeasureError
from .measures import DiscreteMeasure, diameter
from .ot import solve_assignment

__all__ = [
    "ConstantStep",
    "HarmonicStep",
    "SuaConfig",
    "SuaState",
    "barycentric_projection",
    "sua_step",
    "warmstart",
    "sua_solve",
    "parse_schedule",
]

MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class ConstantStep:
    alpha: float = 0.5

    def __call__(self, n: int) -> float:
        return self.alpha


@dataclass(frozen=True)
class HarmonicStep:
    """Step ``a / (b + n)``."""

    a: float = 1.0
    b: float = 1.0

    def __call__(self, n: int) -> float:
        return self.a / (self.b + n)


def parse_schedule(text: str):
    """Parse ``"constant:0.5"`` or ``"harmonic:a,b"``."""
    kind, _, args = text.partition(":")
    vals = [float(t) for t in args.split(",") if t.strip()]
    if kind == "constant":
        return ConstantStep(*vals)
    if kind == "harmonic":
        return HarmonicStep(*vals)
    raise ValueError(f"unknown step schedule {text!r}")


@dataclass
class SuaConfig:
    """Parameters of the resampling + SUA pipeline.

    Attributes
    ----------
    sample_size : int or None
        Resample size S; ``None`` means use the inputs as they are.
    repeats : int
        Number R of independent resampling repeats.
    step : callable
        Step schedule ``n -> alpha_n > 0``.
    warmstart_steps : int or None
        Number of single-measure warmstart steps; ``None`` means ``2 N``.
    max_iters : int
    tol : float
        Stop when the largest row displacement is below ``tol * diam``.
    restarts : int
        Independent initialisations per solve; the best value is kept.
    seed : int
    """

    sample_size: int | None = None
    repeats: int = 1
    step: Callable[[int], float] = field(default_factory=ConstantStep)
    warmstart_steps: int | None = None
    max_iters: int = 500
    tol: float = 1e-7
    restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.sample_size is not None and self.sample_size < 1:
            raise ValueError("sample size must be >= 1")
        if self.repeats < 1 or self.restarts < 1:
            raise ValueError("repeats and restarts must be >= 1")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.warmstart_steps is not None and self.warmstart_steps < 0:
            raise ValueError("warmstart steps must be >= 0")

    def with_(self, **changes) -> "SuaConfig":
        return replace(self, **changes)


@dataclass
class SuaState:
    """Current positions plus the projections and value they induce."""

    positions: np.ndarray
    iteration: int
    value: float
    displacement: float
    projections: np.ndarray = field(repr=False)


def barycentric_projection(X, Y) -> tuple[np.ndarray, float]:
    """Rows of ``Y`` reordered by the optimal assignment from ``X``.

    Returns the projection ``Y[sigma]`` and the assignment cost
    ``mean_k |X_k - Y_sigma(k)|^2``.
    """
    perm, cost = solve_assignment(X, Y, 2.0)
    return np.asarray(Y)[perm], cost


def _evaluate(X, supports) -> tuple[np.ndarray, float]:
    projections = np.empty((len(supports),) + X.shape)
    total = 0.0
    for i, Y in enumerate(supports):
        projections[i], cost = barycentric_projection(X, Y)
        total += cost
    return projections, total / len(supports)


def initial_state(X, supports) -> SuaState:
    X = np.array(X, dtype=float)
    projections, value = _evaluate(X, supports)
    return SuaState(X, 0, value, np.inf, projections)


def sua_step(state: SuaState, supports: Sequence[np.ndarray],
             alpha: float) -> SuaState:
    """One full subgradient step on the positions.

    ``X <- X - (alpha/N) sum_i 2 (X - P_i)`` where ``P_i`` are the
    projections cached in ``state``; the new assignments are computed at the
    updated positions.
    """
    X = state.positions
    grad = 2.0 * (X[None] - state.projections).sum(axis=0)
    new_X = X - (alpha / len(supports)) * grad
    projections, value = _evaluate(new_X, supports)
    disp = float(np.linalg.norm(new_X - X, axis=1).max())
    return SuaState(new_X, state.iteration + 1, value, disp, projections)


def warmstart(supports: Sequence[np.ndarray], steps: int, rng,
              X0=None, alpha: float = 0.5) -> np.ndarray:
    """Stochastic warmstart: ``steps`` updates, each against one random measure.

    The update uses the full-step formula restricted to a single index ``i``,
    ``X <- X - (alpha/N) * 2 (X - P_i)``, so with ``alpha = 1/2`` each step
    moves ``X`` a fraction ``1/N`` of the way to its projection onto the
    sampled measure.

    Parameters
    ----------
    supports : sequence of ndarray, shape (S, D)
    steps : int
    rng : numpy.random.Generator
    X0 : ndarray, optional
        Defaults to the support of a uniformly chosen input.
    """
    N = len(supports)
    if X0 is None:
        X0 = supports[rng.integers(N)]
    X = np.array(X0, dtype=float)
    for _ in range(steps):
        i = rng.integers(N)
        P, _ = barycentric_projection(X, supports[i])
        X = X - (alpha / N) * 2.0 * (X - P)
    return X


def _check_inputs(measures) -> list[np.ndarray]:
    supports = []
    for mu in measures:
        if isinstance(mu, DiscreteMeasure):
            if not mu.is_uniform():
                raise MeasureError("SUA needs uniform input measures")
            supports.append(mu.points)
        else:
            supports.append(np.atleast_2d(np.asarray(mu, dtype=float)))
    sizes = {Y.shape for Y in supports}
    if len(sizes) != 1:
        raise MeasureError(
            "SUA needs inputs with the same number of atoms and dimension, "
            f"got shapes {sorted(sizes)}")
    return supports


def descend(X0, supports, config: SuaConfig, diam: float) -> SuaState:
    """Full (non-stochastic) descent from ``X0`` until convergence."""
    state = initial_state(X0, supports)
    threshold = config.tol * diam
    for n in range(config.max_iters):
        alpha = config.step(n)
        new = sua_step(state, supports, alpha)
        halvings = 0
        while new.value > state.value + MONOTONE_SLACK and halvings < 20:
            alpha *= 0.5
            halvings += 1
            new = sua_step(state, supports, alpha)
        if new.value > state.value + MONOTONE_SLACK:
            break
        state = new
        if state.displacement < threshold:
            break
    return state


def sua_solve(measures, config: SuaConfig | None = None,
              seed=None) -> tuple[DiscreteMeasure, float]:
    """Uniform free-support barycenter of uniform measures with equal size.

    Parameters
    ----------
    measures : sequence of DiscreteMeasure or ndarray
        Uniform measures (or raw S x D supports) with the same S; duplicate
        rows are allowed.
    config : SuaConfig
    seed : int, optional
        Overrides ``config.seed``.

    Returns
    -------
    barycenter : DiscreteMeasure
        Uniform on exactly S points.
    value : float
        ``(1/N) sum_i W_2^2(mu_i, barycenter)`` at the returned positions.
    """
    config = config or SuaConfig()
    supports = _check_inputs(measures)
    rng = np.random.default_rng(config.seed if seed is None else seed)
    N = len(supports)
    W = 2 * N if config.warmstart_steps is None else config.warmstart_steps
    diam = diameter(np.vstack(supports)) or 1.0
    # restarts cycle through the inputs in a random order as starting points
    order = rng.permutation(N)
    best = None
    for r in range(config.restarts):
        X0 = warmstart(supports, W, rng, X0=supports[order[r % N]])
        state = descend(X0, supports, config, diam)
        if best is None or state.value < best.value:
            best = state
    S = best.positions.shape[0]
    return DiscreteMeasure(best.positions, np.full(S, 1.0 / S)), best.value
