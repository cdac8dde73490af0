"""Shared nearest-neighbor search used by the KNN learner and local weighting."""

import numpy as np


def pairwise_sq_dists(A, B):
    """Exact squared Euclidean distances, one feature at a time.

    Accumulating (a_j - b_j)^2 per column avoids both the (n_a, n_b, m)
    broadcast tensor and the cancellation of the dot-product shortcut, so
    identical rows come out at exactly 0 and true ties stay exact.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    out = np.zeros((A.shape[0], B.shape[0]))
    for j in range(A.shape[1]):
        d = A[:, j : j + 1] - B[None, :, j]
        out += d * d
    return out


def nearest_indices(Q, S, k, chunk=512):
    """Indices of the k nearest rows of S for each row of Q.

    Ties in distance are broken by the lower row index (stable sort), and
    each result row is ordered nearest-first. Queries are processed in
    chunks to bound memory.
    """
    Q = np.asarray(Q, dtype=np.float64)
    nq = Q.shape[0]
    out = np.empty((nq, k), dtype=np.int64)
    for start in range(0, nq, chunk):
        stop = min(start + chunk, nq)
        d2 = pairwise_sq_dists(Q[start:stop], S)
        out[start:stop] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out
