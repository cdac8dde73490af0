"""Weight construction for combining a pool of trained learners.

All strategies end in a WeightVector over the pool. The inverse-error
family (relative-error voting, localized voting) clamps errors at
EPS_FLOOR before inverting so a perfect learner gets a huge but finite
weight instead of a division by zero.
"""

from dataclasses import dataclass

import numpy as np

from ._neighbors import nearest_indices, pairwise_sq_dists
from .errors import (
    DimensionMismatch,
    EmptyPool,
    EmptyStore,
    InvalidHyperparameter,
    LengthMismatch,
    SingularMisfitMatrix,
)
from .metrics import rrmse_per_sample, zero_division_constant

EPS_FLOOR = 1e-12


@dataclass(frozen=True)
class WeightVector:
    """Weights over a learner pool.

    Plain voting weights form a probability vector (non-negative, unit
    sum). Covariance-based weights may be negative, so ``signed`` relaxes
    the non-negativity check and loosens the unit-sum tolerance.
    """

    values: np.ndarray
    signed: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).ravel()
        if v.shape[0] < 1:
            raise EmptyPool("weight vector needs at least one entry")
        if not np.isfinite(v).all():
            raise InvalidHyperparameter("weights must be finite")
        total = float(v.sum())
        tol = 1e-9 if self.signed else 1e-12
        if abs(total - 1.0) > tol:
            raise InvalidHyperparameter(f"weights sum to {total}, expected 1")
        if not self.signed and (v < 0.0).any():
            raise InvalidHyperparameter("voting weights must be non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def k(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class ErrorProfile:
    """Per-learner relative error on one evaluation set.

    ``errors[i]`` is the per-sample relative RMSE of learner i, all
    computed with the same denominator shift ``constant``.
    """

    errors: np.ndarray
    constant: float

    def __post_init__(self):
        e = np.array(self.errors, dtype=np.float64).ravel()
        if e.shape[0] < 1:
            raise EmptyPool("error profile needs at least one learner")
        if not np.isfinite(e).all() or (e < 0.0).any():
            raise InvalidHyperparameter("errors must be finite and non-negative")
        e.setflags(write=False)
        object.__setattr__(self, "errors", e)
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def k(self):
        return self.errors.shape[0]


def _stack_predictions(predictions):
    P = np.asarray(predictions, dtype=np.float64)
    if P.ndim != 2:
        raise DimensionMismatch(f"expected a (k, n) prediction matrix, got {P.shape}")
    if P.shape[0] < 1:
        raise EmptyPool("need predictions from at least one learner")
    return P

def error_profile(y_true, predictions):
    """Relative errors of each learner against shared actuals.

    The denominator shift is the mean absolute deviation of the actuals,
    computed once and reused for every learner.
    """
    y = np.asarray(y_true, dtype=np.float64).ravel()
    P = _stack_predictions(predictions)
    if P.shape[1] != y.shape[0]:
        raise LengthMismatch(
            f"predictions cover {P.shape[1]} samples, actuals {y.shape[0]}"
        )
    c = zero_division_constant(y)
    errs = np.array([rrmse_per_sample(y, P[i], c) for i in range(P.shape[0])])
    return ErrorProfile(errs, c)


def inverse_error_weights(errors):
    """Clamp errors at EPS_FLOOR, invert, and normalize to unit sum."""
    e = np.asarray(errors, dtype=np.float64).ravel()
    if e.shape[0] < 1:
        raise EmptyPool("need at least one error value")
    if not np.isfinite(e).all() or (e < 0.0).any():
        raise InvalidHyperparameter("errors must be finite and non-negative")
    inv = 1.0 / np.maximum(e, EPS_FLOOR)
    return WeightVector(inv / inv.sum())


def rrmse_weights(profile):
    """Voting weights proportional to inverse relative error."""
    if isinstance(profile, ErrorProfile):
        return inverse_error_weights(profile.errors)
    return inverse_error_weights(profile)


def uniform_weights(k):
    """Equal weights 1/k."""
    if k < 1:
        raise EmptyPool(f"pool size must be >= 1, got {k}")
    return WeightVector(np.full(k, 1.0 / k))


def bem_combine(predictions):
    """Basic ensemble combination: the plain average across learners.

    Weighting every learner by 1/k and summing reduces to the column mean
    of the prediction matrix, so that is what this computes.
    """
    P = _stack_predictions(predictions)
    return P.mean(axis=0)


@dataclass(frozen=True)
class MisfitMatrix:
    """Second-moment matrix of learner misfits m_i = y - prediction_i.

    Entry (i, j) is the mean over samples of m_i * m_j; symmetric with
    non-negative diagonal by construction.
    """

    matrix: np.ndarray

    def __post_init__(self):
        C = np.array(self.matrix, dtype=np.float64)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise DimensionMismatch(f"misfit matrix must be square, got {C.shape}")
        if C.shape[0] < 1:
            raise EmptyPool("misfit matrix needs at least one learner")
        if not np.isfinite(C).all():
            raise InvalidHyperparameter("misfit matrix must be finite")
        if not np.allclose(C, C.T, rtol=0.0, atol=1e-9 * max(1.0, np.abs(C).max())):
            raise InvalidHyperparameter("misfit matrix must be symmetric")
        if (np.diag(C) < 0.0).any():
            raise InvalidHyperparameter("misfit matrix diagonal must be non-negative")
        C.setflags(write=False)
        object.__setattr__(self, "matrix", C)

    @property
    def k(self):
        return self.matrix.shape[0]


def misfit_matrix(y_true, predictions):
    """Build the MisfitMatrix of a pool from shared actuals."""
    y = np.asarray(y_true, dtype=np.float64).ravel()
    P = _stack_predictions(predictions)
    if P.shape[1] != y.shape[0]:
        raise LengthMismatch(
            f"predictions cover {P.shape[1]} samples, actuals {y.shape[0]}"
        )
    M = y[None, :] - P
    C = (M @ M.T) / y.shape[0]
    C = 0.5 * (C + C.T)  # kill rounding asymmetry from the matmul
    return MisfitMatrix(C)


def gem_weights(misfit):
    """Minimum-variance combination weights from a misfit matrix.

    Solves C u = 1 and normalizes u to unit sum; entries may be negative.
    The exact solve is tried first so well-posed inputs are reproduced at
    full precision. Only if it fails (singular, non-finite, or a sloppy
    residual) is an escalating ridge trace*1e-8/k .. trace*1e-2/k added;
    if nothing stabilizes it, the matrix is reported as singular.
    """
    if not isinstance(misfit, MisfitMatrix):
        misfit = MisfitMatrix(misfit)
    C = misfit.matrix
    k = misfit.k
    ones = np.ones(k)
    trace = float(np.trace(C))
    lambdas = [0.0]
    if trace > 0.0:
        lambdas.extend(1e-8 * trace / k * 10.0**j for j in range(7))
    eye = np.eye(k)
    for lam in lambdas:
        A = C + lam * eye
        try:
            u = np.linalg.solve(A, ones)
        except np.linalg.LinAlgError:
            continue
        if not np.isfinite(u).all():
            continue
        resid = np.abs(A @ u - ones).max()
        scale = 1.0 + np.abs(A).max() * np.abs(u).max()
        if resid > 1e-6 * scale:
            continue
        total = u.sum()
        if total == 0.0 or not np.isfinite(total):
            continue
        return WeightVector(u / total, signed=True)
    raise SingularMisfitMatrix("misfit matrix could not be stably inverted")


@dataclass(frozen=True)
class NeighborStore:
    """Training-set state needed for query-local weighting.

    Holds standardized training features, the standardizer that produced
    them, and each learner's absolute error on every training row.
    """

    features_std: np.ndarray
    abs_errors: np.ndarray
    standardizer: object

    def __post_init__(self):
        F = np.array(self.features_std, dtype=np.float64)
        E = np.array(self.abs_errors, dtype=np.float64)
        if F.ndim != 2 or E.ndim != 2:
            raise DimensionMismatch("store arrays must be 2-D")
        if F.shape[0] < 1 or E.shape[1] < 1:
            raise EmptyStore("store needs at least one row and one learner")
        if F.shape[0] != E.shape[0]:
            raise DimensionMismatch(
                f"{F.shape[0]} feature rows but {E.shape[0]} error rows"
            )
        if not (np.isfinite(F).all() and np.isfinite(E).all()) or (E < 0.0).any():
            raise InvalidHyperparameter("store errors must be finite and non-negative")
        F.setflags(write=False)
        E.setflags(write=False)
        object.__setattr__(self, "features_std", F)
        object.__setattr__(self, "abs_errors", E)

    @property
    def n(self):
        return self.features_std.shape[0]

    @property
    def k(self):
        return self.abs_errors.shape[1]


def localized_error_matrix(store, queries, k_nn, neighbor_weighting="flat"):
    """Per-learner error averaged over each query's nearest neighbors.

    Returns an (n_queries, k) matrix. k_nn is clamped to the store size.
    With "flat" weighting neighbors count equally; with "distance" each
    neighbor's error is weighted by inverse Euclidean distance.
    """
    if neighbor_weighting not in ("flat", "distance"):
        raise InvalidHyperparameter(
            f"neighbor_weighting must be 'flat' or 'distance', got {neighbor_weighting!r}"
        )
    if k_nn < 1:
        raise InvalidHyperparameter(f"k_nn must be >= 1, got {k_nn}")
    Q = np.asarray(queries, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[1] != store.features_std.shape[1]:
        raise DimensionMismatch(
            f"queries must be (n, {store.features_std.shape[1]}), got {Q.shape}"
        )
    k_eff = min(k_nn, store.n)
    idx = nearest_indices(Q, store.features_std, k_eff)
    # average in row order, not distance order, so the result depends only
    # on WHICH rows are in the neighborhood (queries with equal
    # neighborhoods get bitwise-equal means)
    idx = np.sort(idx, axis=1)
    hood = store.abs_errors[idx]  # (nq, k_eff, k)
    if neighbor_weighting == "flat":
        return hood.mean(axis=1)
    d2 = np.take_along_axis(
        pairwise_sq_dists(Q, store.features_std), idx, axis=1
    )
    w = 1.0 / (np.sqrt(d2) + EPS_FLOOR)
    return (hood * w[:, :, None]).sum(axis=1) / w.sum(axis=1)[:, None]


def dwr_weights(query, store, k_nn, neighbor_weighting="flat"):
    """Voting weights for one query from its neighborhood errors."""
    q = np.asarray(query, dtype=np.float64).ravel()[None, :]
    loc = localized_error_matrix(store, q, k_nn, neighbor_weighting)
    return inverse_error_weights(loc[0])
