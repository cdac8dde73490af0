"""Compiled inner loops for the tree learner and the SGD learner.

Everything here is deterministic given its arguments: randomness (bootstrap
rows, feature subsets, visit order) is either passed in as arrays or driven
by an explicit integer state, never pulled from global RNGs.
"""

import numpy as np
from numba import njit

# splitmix64 constants, used for per-node feature subsampling
_SM_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SM_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MUL2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _splitmix64(state):
    state = state + _SM_GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _SM_MUL1
    z = (z ^ (z >> np.uint64(27))) * _SM_MUL2
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True)
def build_tree(X, y, idx, max_depth, min_samples_split, max_features, seed):
    """Grow one variance-reduction regression tree.

    X, y are the full training arrays; idx lists the rows this tree trains
    on (bootstrap indices, possibly with repeats) and is permuted in place.
    max_depth < 0 means unlimited; max_features <= 0 or >= m means all.

    Splits maximize the drop in sum of squared errors. Candidate thresholds
    are midpoints between adjacent distinct sorted values. Ties in gain are
    broken toward the lowest feature index, then the lowest threshold, by
    scanning features and thresholds in ascending order and only replacing
    the incumbent on a strict improvement.

    Returns flat node arrays (feature, threshold, left, right, value);
    feature == -1 marks a leaf.
    """
    n = idx.shape[0]
    m = X.shape[1]
    cap = 2 * n + 2
    feat = np.full(cap, -1, np.int64)
    thr = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    val = np.zeros(cap, np.float64)

    tmp = np.empty(n, np.int64)
    featbuf = np.empty(m, np.int64)
    stack_node = np.empty(cap, np.int64)
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    stack_depth = np.empty(cap, np.int64)

    state = np.uint64(seed) ^ _SM_GOLDEN
    nf = m
    if 0 < max_features < m:
        nf = max_features

    n_nodes = 1
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    stack_depth[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_depth[top]
        s = hi - lo

        ysum = 0.0
        ysq = 0.0
        for t in range(lo, hi):
            v = y[idx[t]]
            ysum += v
            ysq += v * v
        val[node] = ysum / s

        if s < min_samples_split:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue
        parent_sse = ysq - ysum * ysum / s
        if parent_sse <= 0.0:
            continue

        if nf == m:
            for j in range(m):
                featbuf[j] = j
        else:
            for j in range(m):
                featbuf[j] = j
            for j in range(nf):
                state, z = _splitmix64(state)
                r = j + int(z % np.uint64(m - j))
                featbuf[j], featbuf[r] = featbuf[r], featbuf[j]
            # ascending order keeps the tie-break deterministic
            for a in range(1, nf):
                key = featbuf[a]
                b = a - 1
                while b >= 0 and featbuf[b] > key:
                    featbuf[b + 1] = featbuf[b]
                    b -= 1
                featbuf[b + 1] = key

        best_gain = 0.0
        best_f = -1
        best_t = 0.0
        vals = np.empty(s, np.float64)
        for c in range(nf):
            f = featbuf[c]
            for t in range(s):
                vals[t] = X[idx[lo + t], f]
            order = np.argsort(vals, kind="mergesort")
            lsum = 0.0
            lsq = 0.0
            for t in range(s - 1):
                yv = y[idx[lo + order[t]]]
                lsum += yv
                lsq += yv * yv
                xv = vals[order[t]]
                xn = vals[order[t + 1]]
                if xn == xv:
                    continue
                nl = t + 1
                nr = s - nl
                rsum = ysum - lsum
                rsq = ysq - lsq
                sse = (lsq - lsum * lsum / nl) + (rsq - rsum * rsum / nr)
                gain = parent_sse - sse
                if gain > best_gain:
                    cut = 0.5 * (xv + xn)
                    if cut >= xn:
                        cut = xv
                    best_gain = gain
                    best_f = f
                    best_t = cut
        if best_f < 0:
            continue

        nl = 0
        for t in range(lo, hi):
            if X[idx[t], best_f] <= best_t:
                nl += 1
        a = 0
        b = 0
        for t in range(lo, hi):
            i0 = idx[t]
            if X[i0, best_f] <= best_t:
                tmp[a] = i0
                a += 1
            else:
                tmp[nl + b] = i0
                b += 1
        for t in range(s):
            idx[lo + t] = tmp[t]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feat[node] = best_f
        thr[node] = best_t
        left[node] = lid
        right[node] = rid
        stack_node[top] = lid
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = rid
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        stack_depth[top] = depth + 1
        top += 1

    return (
        feat[:n_nodes].copy(),
        thr[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        val[:n_nodes].copy(),
    )


@njit(cache=True)
def predict_tree(feat, thr, left, right, val, X):
    nq = X.shape[0]
    out = np.empty(nq, np.float64)
    for q in range(nq):
        node = 0
        while feat[node] >= 0:
            if X[q, feat[node]] <= thr[node]:
                node = left[node]
            else:
                node = right[node]
        out[q] = val[node]
    return out


@njit(cache=True)
def sgd_epoch(X, y, w, b, lr0, power, l2, t_start, order):
    """One pass of per-sample gradient descent on squared error.

    Visits rows in the given order. The step size decays as
    lr0 / t**power with t counting samples from 1 across epochs; the L2
    penalty applies to the weights only, never the intercept. Updates w
    in place and returns the new intercept and counter.
    """
    m = X.shape[1]
    t = t_start
    for s in range(order.shape[0]):
        i = order[s]
        pred = b
        for j in range(m):
            pred += X[i, j] * w[j]
        err = pred - y[i]
        eta = lr0 / t**power
        for j in range(m):
            w[j] -= eta * (err * X[i, j] + l2 * w[j])
        b -= eta * err
        t += 1.0
    return b, t
