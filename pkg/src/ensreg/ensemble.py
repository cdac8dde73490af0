"""Ensemble constructors: weighted voting, bagging, and query-local weighting.

Every ensemble here trains the same heterogeneous pool of base learners
and differs only in how member predictions are combined:

  voting   one static weight per member (uniform, inverse relative error,
           or covariance-minimizing)
  bagging  uniform average over members trained on resampled copies
  dwr      weights recomputed per query from neighborhood errors
"""

from dataclasses import dataclass

import numpy as np

from .dataset import Standardizer, train_test_split
from .errors import EmptyPool, InvalidHyperparameter, UnknownMethod
from .learners import fit as fit_learner
from .weighting import (
    EPS_FLOOR,
    NeighborStore,
    error_profile,
    gem_weights,
    localized_error_matrix,
    misfit_matrix,
    rrmse_weights,
    uniform_weights,
)

VOTING_STRATEGIES = ("uniform", "rrmse", "bem", "gem", "dwr")
WEIGHT_SOURCES = ("train", "holdout")


def prune_pool(pool, strategy="none"):
    """Pool reduction stage. The only strategy today is "none": keep all.

    The hook exists so selection policies can slot in without touching the
    fit paths, which already call it.
    """
    if strategy != "none":
        raise UnknownMethod(f"unknown pruning strategy {strategy!r}")
    return list(pool)


@dataclass(frozen=True)
class EnsembleModel:
    """A trained pool plus its combination rule.

    ``weights`` is set for voting strategies, ``store`` for query-local
    weighting, and neither for bagging (members average uniformly).
    """

    members: tuple
    strategy: str
    weights: object = None
    store: object = None
    k_nn: int = 0
    neighbor_weighting: str = "flat"

    def predict(self, X):
        if self.strategy == "dwr":
            return predict_dwr(self, X)
        if self.strategy == "bagging":
            return predict_bagging(self, X)
        return predict_voting(self, X)


def _member_predictions(members, X):
    return np.array([m.predict(X) for m in members])


def _fit_pool(specs, train):
    specs = list(specs)
    if not specs:
        raise EmptyPool("need at least one learner spec")
    return prune_pool([fit_learner(s, train) for s in specs])


def _weight_basis(specs, train, pool, weight_source, holdout_fraction, seed):
    """Predictions/actuals used to estimate weights.

    "train": the deployed pool scored on its own training rows.
    "holdout": a shadow pool fitted on part of the training data and
    scored on the held-back rest, so the error estimates are out of
    sample; the deployed pool still trains on everything.
    """
    if weight_source == "train":
        return train.targets, _member_predictions(pool, train.features)
    split = train_test_split(train, holdout_fraction, seed)
    shadow = [fit_learner(s, split.train) for s in specs]
    return split.test.targets, _member_predictions(shadow, split.test.features)


def fit_voting(
    specs,
    train,
    strategy,
    weight_source="train",
    holdout_fraction=0.2,
    seed=0,
):
    """Train a static-weight voting ensemble.

    Strategies: "uniform" (and "bem", which reduces to the same weights),
    "rrmse" (inverse relative error), "gem" (covariance-minimizing,
    weights may be negative). For "rrmse" and "gem", ``weight_source``
    picks where the errors are measured.
    """
    if strategy not in ("uniform", "rrmse", "bem", "gem"):
        raise UnknownMethod(f"unknown voting strategy {strategy!r}")
    if weight_source not in WEIGHT_SOURCES:
        raise UnknownMethod(f"weight_source must be one of {WEIGHT_SOURCES}")
    pool = _fit_pool(specs, train)
    if strategy in ("uniform", "bem"):
        weights = uniform_weights(len(pool))
    else:
        y, preds = _weight_basis(
            specs, train, pool, weight_source, holdout_fraction, seed
        )
        if strategy == "rrmse":
            weights = rrmse_weights(error_profile(y, preds))
        else:
            weights = gem_weights(misfit_matrix(y, preds))
    return EnsembleModel(members=tuple(pool), strategy=strategy, weights=weights)


def predict_voting(model, X):
    """Weighted sum of member predictions, one row at a time."""
    P = _member_predictions(model.members, X)
    return model.weights.values @ P


def fit_bagging(specs, train, n_bags_per_spec=5, seed=0, resample="bootstrap"):
    """Train every spec on ``n_bags_per_spec`` resampled training sets.

    "bootstrap" draws n rows with replacement per bag; "identity" feeds
    every bag the original data (useful to isolate the resampling effect).
    Members are averaged uniformly at prediction time.
    """
    if n_bags_per_spec < 1:
        raise InvalidHyperparameter(
            f"n_bags_per_spec must be >= 1, got {n_bags_per_spec}"
        )
    if resample not in ("bootstrap", "identity"):
        raise UnknownMethod(f"unknown resample mode {resample!r}")
    specs = list(specs)
    if not specs:
        raise EmptyPool("need at least one learner spec")
    members = []
    streams = np.random.SeedSequence(seed).spawn(len(specs) * n_bags_per_spec)
    pos = 0
    for spec in specs:
        for _ in range(n_bags_per_spec):
            rng = np.random.default_rng(streams[pos])
            pos += 1
            member_seed = int(rng.integers(0, 2**63))
            bag_spec = type(spec)(spec.kind, spec.hyperparameters, member_seed)
            if resample == "bootstrap":
                rows = rng.integers(0, train.n, size=train.n)
                bag = train.take(rows)
            else:
                bag = train
            members.append(fit_learner(bag_spec, bag))
    members = prune_pool(members)
    return EnsembleModel(members=tuple(members), strategy="bagging")


def predict_bagging(model, X):
    return _member_predictions(model.members, X).mean(axis=0)


def fit_dwr(specs, train, k_nn=10, neighbor_weighting="flat"):
    """Train a pool and record per-row absolute errors for local weighting.

    Distances are measured in standardized feature space. k_nn larger than
    the training set is clamped to it at query time.
    """
    if k_nn < 1:
        raise InvalidHyperparameter(f"k_nn must be >= 1, got {k_nn}")
    pool = _fit_pool(specs, train)
    std = Standardizer.from_features(train.features)
    preds = _member_predictions(pool, train.features)
    abs_errors = np.abs(train.targets[None, :] - preds).T
    store = NeighborStore(std.transform(train.features), abs_errors, std)
    return EnsembleModel(
        members=tuple(pool),
        strategy="dwr",
        store=store,
        k_nn=int(k_nn),
        neighbor_weighting=neighbor_weighting,
    )


def predict_dwr(model, X):
    """Combine member predictions with weights local to each query."""
    X = np.asarray(X, dtype=np.float64)
    P = _member_predictions(model.members, X)  # (k, nq)
    q = model.store.standardizer.transform(X)
    loc = localized_error_matrix(
        model.store, q, model.k_nn, model.neighbor_weighting
    )  # (nq, k)
    out = np.empty(X.shape[0])
    inv = 1.0 / np.maximum(loc, EPS_FLOOR)
    W = inv / inv.sum(axis=1)[:, None]
    np.einsum("qk,kq->q", W, P, out=out)
    return out
