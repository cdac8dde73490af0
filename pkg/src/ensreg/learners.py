"""The four base learners: linear least squares, k-nearest neighbors,
stochastic gradient descent, and a random forest.

Each learner is built from primitives here (no fitting library underneath).
`fit` turns a LearnerSpec plus a training Dataset into a trained model;
`predict` evaluates any trained model on a feature matrix. Learners that
depend on feature scale (KNN, SGD) standardize internally with statistics
from their own training data; LR and RF see the raw features.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._neighbors import nearest_indices
from .dataset import Standardizer
from .errors import DimensionMismatch, InvalidHyperparameter, SingularSystem

LEARNER_KINDS = ("LR", "KNN", "SGD", "RF")

_ALLOWED_HP = {
    "LR": {"ridge_fallback"},
    "KNN": {"k"},
    "SGD": {"learning_rate", "epochs", "l2_penalty"},
    "RF": {"n_trees", "max_depth", "min_samples_split", "max_features"},
}

_SGD_DECAY_POWER = 0.25


def _require_int(hp, key, minimum):
    v = hp[key]
    if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < minimum:
        raise InvalidHyperparameter(f"{key} must be an integer >= {minimum}, got {v!r}")
    return int(v)


@dataclass(frozen=True)
class LearnerSpec:
    """What to train: a learner kind, its hyperparameters, and a seed.

    Unspecified hyperparameters take the kind's defaults; unknown keys and
    out-of-range values are rejected at construction.
    """

    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise InvalidHyperparameter(
                f"kind must be one of {LEARNER_KINDS}, got {self.kind!r}"
            )
        hp = dict(self.hyperparameters)
        unknown = set(hp) - _ALLOWED_HP[self.kind]
        if unknown:
            raise InvalidHyperparameter(
                f"unknown hyperparameters for {self.kind}: {sorted(unknown)}"
            )
        if "k" in hp:
            _require_int(hp, "k", 1)
        if "epochs" in hp:
            _require_int(hp, "epochs", 1)
        if "n_trees" in hp:
            _require_int(hp, "n_trees", 1)
        if hp.get("max_depth") is not None and "max_depth" in hp:
            _require_int(hp, "max_depth", 1)
        if "min_samples_split" in hp:
            _require_int(hp, "min_samples_split", 2)
        if hp.get("max_features") is not None and "max_features" in hp:
            _require_int(hp, "max_features", 1)
        if "learning_rate" in hp and not hp["learning_rate"] > 0.0:
            raise InvalidHyperparameter("learning_rate must be positive")
        if "l2_penalty" in hp and hp["l2_penalty"] < 0.0:
            raise InvalidHyperparameter("l2_penalty must be non-negative")
        object.__setattr__(self, "hyperparameters", hp)
        object.__setattr__(self, "seed", int(self.seed))

    def hp(self, key, default):
        return self.hyperparameters.get(key, default)


class TrainedLearner:
    """Base for trained models: holds its spec and the expected width."""

    def __init__(self, spec, n_features):
        self.spec = spec
        self.n_features = n_features

    def _check(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"model expects {self.n_features} features, got shape {X.shape}"
            )
        return X

    def predict(self, X):
        raise NotImplementedError


class LinearModel(TrainedLearner):
    def __init__(self, spec, n_features, coef, intercept):
        super().__init__(spec, n_features)
        self.coef = np.asarray(coef, dtype=np.float64)
        self.intercept = float(intercept)

    def predict(self, X):
        X = self._check(X)
        return X @ self.coef + self.intercept


class KNNModel(TrainedLearner):
    def __init__(self, spec, n_features, standardizer, features_std, targets, k):
        super().__init__(spec, n_features)
        self.standardizer = standardizer
        self.features_std = features_std
        self.targets = targets
        self.k = k

    def predict(self, X):
        X = self._check(X)
        q = self.standardizer.transform(X)
        idx = nearest_indices(q, self.features_std, self.k)
        return self.targets[idx].mean(axis=1)


class SGDModel(TrainedLearner):
    def __init__(self, spec, n_features, standardizer, coef, intercept, target_offset):
        super().__init__(spec, n_features)
        self.standardizer = standardizer
        self.coef = coef
        self.intercept = float(intercept)
        self.target_offset = float(target_offset)

    def predict(self, X):
        X = self._check(X)
        q = self.standardizer.transform(X)
        return q @ self.coef + self.intercept + self.target_offset


class DecisionTree:
    """A single variance-reduction regression tree over flat node arrays.

    feature[i] == -1 marks node i as a leaf with prediction value[i];
    otherwise rows with X[:, feature[i]] <= threshold[i] descend to
    left[i] and the rest to right[i].
    """

    def __init__(self, feature, threshold, left, right, value, n_features):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value
        self.n_features = n_features

    @classmethod
    def fit(cls, X, y, max_depth=None, min_samples_split=2, max_features=None, seed=0):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DimensionMismatch(
                f"features {X.shape} do not match {y.shape[0]} targets"
            )
        if min_samples_split < 2:
            raise InvalidHyperparameter("min_samples_split must be >= 2")
        idx = np.arange(X.shape[0], dtype=np.int64)
        arrays = _kernels.build_tree(
            X,
            y,
            idx,
            -1 if max_depth is None else int(max_depth),
            int(min_samples_split),
            0 if max_features is None else int(max_features),
            np.uint64(seed),
        )
        return cls(*arrays, n_features=X.shape[1])

    def predict(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"tree expects {self.n_features} features, got shape {X.shape}"
            )
        return _kernels.predict_tree(
            self.feature, self.threshold, self.left, self.right, self.value, X
        )

    def depth(self):
        """Length of the longest root-to-leaf path, 0 for a lone leaf."""
        depths = np.zeros(self.feature.shape[0], dtype=np.int64)
        best = 0
        for i in range(self.feature.shape[0]):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
            else:
                best = max(best, int(depths[i]))
        return best


class ForestModel(TrainedLearner):
    def __init__(self, spec, n_features, trees):
        super().__init__(spec, n_features)
        self.trees = trees

    def predict(self, X):
        X = self._check(X)
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict(X)
        return acc / len(self.trees)


def _fit_lr(spec, train):
    X, y = train.features, train.targets
    A = np.column_stack([np.ones(train.n), X])
    Q, R = np.linalg.qr(A)
    diag = np.abs(np.diag(R))
    tol = max(A.shape) * np.finfo(np.float64).eps * (diag.max() if diag.size else 0.0)
    if diag.size and diag.min() > tol:
        beta = np.linalg.solve(R, Q.T @ y)
    else:
        if not spec.hp("ridge_fallback", True):
            raise SingularSystem("design matrix is rank deficient")
        lam = 1e-8
        penalty = np.eye(A.shape[1]) * lam
        penalty[0, 0] = 0.0  # never shrink the intercept
        try:
            beta = np.linalg.solve(A.T @ A + penalty, A.T @ y)
        except np.linalg.LinAlgError:
            raise SingularSystem("normal equations are singular") from None
    return LinearModel(spec, train.m, beta[1:], beta[0])


def _fit_knn(spec, train):
    k = spec.hp("k", 5)
    if k > train.n:
        raise InvalidHyperparameter(f"k={k} exceeds {train.n} training rows")
    std = Standardizer.from_features(train.features)
    return KNNModel(spec, train.m, std, std.transform(train.features), train.targets, k)


def _fit_sgd(spec, train):
    lr0 = float(spec.hp("learning_rate", 1e-3))
    epochs = spec.hp("epochs", 1000)
    l2 = float(spec.hp("l2_penalty", 1e-4))
    std = Standardizer.from_features(train.features)
    Xs = np.ascontiguousarray(std.transform(train.features))
    offset = float(train.targets.mean())
    yc = np.ascontiguousarray(train.targets - offset)
    w = np.zeros(train.m)
    b = 0.0
    t = 1.0
    rng = np.random.default_rng(spec.seed)
    for _ in range(epochs):
        order = rng.permutation(train.n).astype(np.int64)
        b, t = _kernels.sgd_epoch(Xs, yc, w, b, lr0, _SGD_DECAY_POWER, l2, t, order)
    return SGDModel(spec, train.m, std, w, b, offset)


def _fit_rf(spec, train):
    n_trees = spec.hp("n_trees", 100)
    max_depth = spec.hp("max_depth", None)
    mss = spec.hp("min_samples_split", 2)
    max_features = spec.hp("max_features", None)
    if max_features is not None and max_features > train.m:
        raise InvalidHyperparameter(
            f"max_features={max_features} exceeds {train.m} features"
        )
    X = np.ascontiguousarray(train.features)
    y = np.ascontiguousarray(train.targets)
    trees = []
    for child in np.random.SeedSequence(spec.seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        boot = rng.integers(0, train.n, size=train.n).astype(np.int64)
        tree_seed = np.uint64(rng.integers(0, 2**63, dtype=np.int64))
        arrays = _kernels.build_tree(
            X,
            y,
            boot,
            -1 if max_depth is None else int(max_depth),
            int(mss),
            0 if max_features is None else int(max_features),
            tree_seed,
        )
        trees.append(DecisionTree(*arrays, n_features=train.m))
    return ForestModel(spec, train.m, trees)


_FITTERS = {"LR": _fit_lr, "KNN": _fit_knn, "SGD": _fit_sgd, "RF": _fit_rf}


def fit(spec, train):
    """Train one learner on a Dataset."""
    return _FITTERS[spec.kind](spec, train)


def predict(model, X):
    """Evaluate a trained learner on a feature matrix."""
    return model.predict(X)


def default_pool(seed=0):
    """One LearnerSpec of each kind, with per-member seeds derived from seed."""
    return [
        LearnerSpec(kind, seed=seed + i) for i, kind in enumerate(LEARNER_KINDS)
    ]


def warm_up():
    """Force kernel compilation on tiny inputs so later timings are honest."""
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0.0, 1.0, 2.0, 3.0])
    tree = DecisionTree.fit(X, y)
    tree.predict(X)
    w = np.zeros(1)
    _kernels.sgd_epoch(X, y, w, 0.0, 1e-3, 0.25, 0.0, 1.0, np.arange(4, dtype=np.int64))
