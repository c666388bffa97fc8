"""Gini decision tree that predicts the building type from meter data.

Features, in order: meter count, volume (m^3), PV present, heat pump present.
Boolean features split at 0.5, which makes their threshold test a plain
boolean test.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ..model import Building, BuildingType

FEATURES = ("meter_count", "volume", "has_pv", "has_heat_pump")


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledBuildingExample:
    meter_count: int
    volume: float
    has_pv: bool
    has_heat_pump: bool
    label: BuildingType

    def __post_init__(self):
        if not isinstance(self.label, BuildingType):
            object.__setattr__(self, "label", BuildingType(self.label))


@dataclass
class Node:
    """Split node when ``feature`` is set, leaf otherwise."""

    counts: np.ndarray
    label: int
    feature: Optional[int] = None
    threshold: float = 0.0
    left: Optional["Node"] = None
    right: Optional["Node"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class DecisionTree:
    root: Node
    classes: list = field(default_factory=list)
    max_depth: int = 0

    def depth(self) -> int:
        def _d(n):
            return 0 if n.is_leaf else 1 + max(_d(n.left), _d(n.right))
        return _d(self.root)

    def leaf_for(self, x) -> Node:
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node

    def predict_one(self, x):
        return self.classes[self.leaf_for(x).label]


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return 1.0 - float(np.sum(p * p))


def _best_split(X: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int):
    """Lowest weighted Gini single split, or None if nothing improves on the parent.

    Ties keep the first candidate in (feature, ascending threshold) order.
    """
    n = len(y)
    parent_counts = np.bincount(y, minlength=n_classes)
    best_score = gini(parent_counts) - 1e-12
    best = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), ys] = 1.0
        left = np.cumsum(onehot, axis=0)
        for i in range(min_leaf - 1, n - min_leaf):
            if xs[i] == xs[i + 1]:
                continue
            lc = left[i]
            rc = parent_counts - lc
            nl = i + 1
            score = (nl * gini(lc) + (n - nl) * gini(rc)) / n
            if score < best_score:
                best_score = score
                best = (f, (xs[i] + xs[i + 1]) / 2.0)
    return best


def _grow(X, y, n_classes, depth, max_depth, min_leaf) -> Node:
    counts = np.bincount(y, minlength=n_classes)
    node = Node(counts=counts, label=int(np.argmax(counts)))
    if depth >= max_depth or np.count_nonzero(counts) <= 1 or len(y) < 2 * min_leaf:
        return node
    split = _best_split(X, y, n_classes, min_leaf)
    if split is None:
        return node
    node.feature, node.threshold = split
    mask = X[:, node.feature] <= node.threshold
    node.left = _grow(X[mask], y[mask], n_classes, depth + 1, max_depth, min_leaf)
    node.right = _grow(X[~mask], y[~mask], n_classes, depth + 1, max_depth, min_leaf)
    return node


def fit_tree(X, y, max_depth: int = 5, min_leaf: int = 1) -> DecisionTree:
    """Greedy recursive partitioning on a numeric feature matrix."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(y) == 0:
        raise TrainingError("cannot train a decision tree on an empty training set")
    if X.ndim != 2 or X.shape[0] != len(y):
        raise TrainingError("X must be 2-d with one row per label")
    if max_depth < 0 or min_leaf < 1:
        raise TrainingError("max_depth must be >= 0 and min_leaf >= 1")
    classes, y_idx = np.unique(y, return_inverse=True)
    root = _grow(X, y_idx, len(classes), 0, max_depth, min_leaf)
    return DecisionTree(root=root, classes=list(classes), max_depth=max_depth)


def building_features(b) -> list[float]:
    return [float(b.meter_count), float(b.volume), float(b.has_pv), float(b.has_heat_pump)]


def train_tree(
    examples: Sequence[LabeledBuildingExample], max_depth: int = 5, min_leaf: int = 1
) -> DecisionTree:
    if not examples:
        raise TrainingError("no labeled building examples")
    X = [building_features(e) for e in examples]
    y = [e.label.value for e in examples]
    tree = fit_tree(X, y, max_depth=max_depth, min_leaf=min_leaf)
    tree.classes = [BuildingType(c) for c in tree.classes]
    return tree


def classify_building(tree: DecisionTree, b: Building) -> BuildingType:
    return tree.predict_one(building_features(b))


def rule_based_type(meter_count: int) -> BuildingType:
    """Fallback when no labeled examples are available."""
    if meter_count <= 1:
        return BuildingType.SINGLE_FAMILY
    if meter_count == 2:
        return BuildingType.TWO_FAMILY
    return BuildingType.APARTMENT_TOWER


class BuildingTypeClassifier(ClassifierMixin, BaseEstimator):
    """Scikit-learn compatible wrapper around :func:`fit_tree`.

    Parameters
    ----------
    max_depth : int
        Maximum depth of the tree.
    min_leaf : int
        Minimum number of training samples per leaf.
    """

    def __init__(self, max_depth=5, min_leaf=1):
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be 2-d")
        self.tree_ = fit_tree(X, y, max_depth=self.max_depth, min_leaf=self.min_leaf)
        self.classes_ = np.asarray(self.tree_.classes)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features")
        return np.array([self.tree_.predict_one(row) for row in X], dtype=self.classes_.dtype)

    def predict_proba(self, X):
        check_is_fitted(self, "tree_")
        X = np.asarray(X, dtype=float)
        out = []
        for row in X:
            c = self.tree_.leaf_for(row).counts
            out.append(c / c.sum())
        return np.array(out)
