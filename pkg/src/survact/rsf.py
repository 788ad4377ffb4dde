"""Random survival forest: bootstrapped log-rank trees with Nelson-Aalen leaves.

Each tree draws its own generator from (seed, tree index), so serial and
parallel builds produce identical forests. The ensemble mortality score is
the sum over the training event-time grid of the tree-averaged cumulative
hazard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend as kernels
from .data import Dataset
from .errors import DegenerateDataError, DimensionError, NoEventsError


@dataclass(frozen=True)
class RsfConfig:
    n_trees: int = 200
    mtry: int | None = None  # default: ceil(sqrt(p))
    min_leaf_events: int = 3
    max_depth: int | None = None
    seed: int = 0


@dataclass(frozen=True)
class Leaf:
    """Nelson-Aalen cumulative hazard of the in-bag records that landed here."""

    times: np.ndarray
    cumhaz: np.ndarray

    def cumhaz_at(self, grid: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.times, grid, side="right") - 1
        padded = np.concatenate([[0.0], self.cumhaz])
        return padded[idx + 1]


@dataclass(frozen=True)
class Node:
    feature: int
    threshold: float
    left: "Node | Leaf"
    right: "Node | Leaf"


@dataclass(frozen=True)
class RsfModel:
    trees: list
    grid: np.ndarray  # union of all training event times
    n_features: int
    config: RsfConfig

    def _leaf(self, tree, x: np.ndarray) -> Leaf:
        node = tree
        while isinstance(node, Node):
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node

    def average_cumhaz(self, x: np.ndarray) -> np.ndarray:
        """Tree-averaged cumulative hazard evaluated on the training grid."""
        x = self._check_vector(x)
        total = np.zeros(len(self.grid))
        for tree in self.trees:
            total += self._leaf(tree, x).cumhaz_at(self.grid)
        return total / len(self.trees)

    def risk_scores(self, covariates: np.ndarray) -> np.ndarray:
        covariates = np.asarray(covariates, dtype=np.float64)
        if covariates.ndim == 1:
            covariates = covariates[None, :]
        return np.array([predict_mortality(self, row) for row in covariates])

    def _check_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_features,):
            raise DimensionError(f"expected {self.n_features} features, got {x.shape}")
        return x


def _nelson_aalen(time: np.ndarray, event: np.ndarray) -> Leaf:
    order = np.argsort(time, kind="stable")
    t = time[order]
    e = event[order]
    ev_times, counts = np.unique(t[e], return_counts=True)
    at_risk = len(t) - np.searchsorted(t, ev_times, side="left")
    increments = counts / at_risk
    return Leaf(times=ev_times, cumhaz=np.cumsum(increments))


def _build_tree(x, time, event, depth, mtry, config: RsfConfig, rng) -> Node | Leaf:
    n_events = int(event.sum())
    if (
        n_events < 2 * config.min_leaf_events
        or (config.max_depth is not None and depth >= config.max_depth)
        or np.all(time == time[0])
    ):
        return _nelson_aalen(time, event)

    p = x.shape[1]
    features = rng.choice(p, size=min(mtry, p), replace=False)
    best = (-math.inf, -1, math.nan)
    for f in features:
        threshold, stat = kernels.best_split_logrank(x[:, f], time, event, config.min_leaf_events)
        if stat > best[0]:
            best = (stat, int(f), threshold)
    if not math.isfinite(best[0]):
        return _nelson_aalen(time, event)

    _, feature, threshold = best
    mask = x[:, feature] <= threshold
    left = _build_tree(x[mask], time[mask], event[mask], depth + 1, mtry, config, rng)
    right = _build_tree(x[~mask], time[~mask], event[~mask], depth + 1, mtry, config, rng)
    return Node(feature=feature, threshold=threshold, left=left, right=right)


def fit_rsf(data: Dataset, config: RsfConfig | None = None) -> RsfModel:
    """Grow the forest; deterministic given (data, config, seed)."""
    config = config or RsfConfig()
    if data.n_events < config.min_leaf_events:
        raise NoEventsError(
            f"need at least min_leaf_events={config.min_leaf_events} events, got {data.n_events}"
        )
    if np.all(data.time == data.time[0]):
        raise DegenerateDataError("all observed times are equal")

    n, p = data.covariates.shape
    mtry = config.mtry if config.mtry is not None else math.ceil(math.sqrt(p))
    grid = np.unique(data.time[data.event])

    trees = []
    for tree_idx in range(config.n_trees):
        rng = np.random.default_rng((config.seed, tree_idx))
        idx = rng.integers(0, n, size=n)
        trees.append(
            _build_tree(data.covariates[idx], data.time[idx], data.event[idx], 0, mtry, config, rng)
        )
    return RsfModel(trees=trees, grid=grid, n_features=p, config=config)


def predict_mortality(model: RsfModel, x: np.ndarray) -> float:
    """Ensemble mortality: grid sum of the tree-averaged cumulative hazard."""
    return float(model.average_cumhaz(x).sum())


def hazard_at(model: RsfModel, t: float, x: np.ndarray, return_flag: bool = False):
    """Tree-averaged hazard increment at the grid time nearest ``t``."""
    if len(model.grid) == 0 or t < model.grid[0]:
        return (0.0, True) if return_flag else 0.0
    cumhaz = model.average_cumhaz(x)
    increments = np.diff(cumhaz, prepend=0.0)
    pos = int(np.searchsorted(model.grid, t, side="left"))
    if pos >= len(model.grid):
        pos = len(model.grid) - 1
    elif pos > 0 and t - model.grid[pos - 1] <= model.grid[pos] - t:
        pos -= 1
    value = float(increments[pos])
    return (value, False) if return_flag else value
