"""Compiled kernels for regression-tree growth and traversal.

Randomness is derived with splitmix64 so that every tree and every node
owns an independent, reproducible stream:

    tree_seed = mix64(seed ^ mix64(tree_index + GOLDEN))
    node_seed = mix64(tree_seed ^ mix64(node_id + GOLDEN))

Node ids are assigned in creation order, which is itself deterministic.
"""

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


@njit(cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def derive_seed(seed, index):
    return mix64(np.uint64(seed) ^ mix64(np.uint64(index) + GOLDEN))


@njit(cache=True, nogil=True)
def build_tree(X, y, sample, min_leaf, max_features, tree_seed):
    """Grow one CART regression tree on the rows listed in ``sample``.

    Returns node arrays ``(feature, threshold, left, right, value, gain)``
    trimmed to the number of nodes; ``feature == -1`` marks a leaf and
    ``gain`` is the drop in sum of squared deviations produced by the split.
    """
    n = sample.shape[0]
    d = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap, np.float64)
    gain = np.zeros(cap, np.float64)

    idx = sample.copy()
    tmp = np.empty(n, np.int64)
    xv = np.empty(n, np.float64)
    yv = np.empty(n, np.float64)
    perm = np.empty(d, np.int64)

    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_node = np.empty(cap, np.int64)
    sp = 0
    st_start[0] = 0
    st_end[0] = n
    st_node[0] = 0
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        start = st_start[sp]
        end = st_end[sp]
        node = st_node[sp]
        m = end - start

        s = 0.0
        ymin = y[idx[start]]
        ymax = ymin
        for i in range(start, end):
            v = y[idx[i]]
            s += v
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        mean = s / m
        if mean < ymin:
            mean = ymin
        if mean > ymax:
            mean = ymax
        value[node] = mean
        if m < 2 * min_leaf or ymin == ymax:
            continue

        # per-node feature shuffle (Fisher-Yates)
        state = mix64(tree_seed ^ mix64(np.uint64(node) + GOLDEN))
        for j in range(d):
            perm[j] = j
        for j in range(d - 1, 0, -1):
            state = state + GOLDEN
            r = np.int64(mix64(state) % np.uint64(j + 1))
            t = perm[j]
            perm[j] = perm[r]
            perm[r] = t

        parent_score = s * s / m
        best_score = -np.inf
        best_f = -1
        best_thr = 0.0
        evaluated = 0
        for j in range(d):
            if evaluated >= max_features:
                break
            f = perm[j]
            for i in range(m):
                xv[i] = X[idx[start + i], f]
                yv[i] = y[idx[start + i]]
            order = np.argsort(xv[:m], kind="mergesort")
            if xv[order[0]] == xv[order[m - 1]]:
                continue
            valid = False
            sl = 0.0
            for i in range(m - 1):
                sl += yv[order[i]]
                nl = i + 1
                if nl < min_leaf:
                    continue
                nr = m - nl
                if nr < min_leaf:
                    break
                a = xv[order[i]]
                b = xv[order[i + 1]]
                if a == b:
                    continue
                sr = s - sl
                score = sl * sl / nl + sr * sr / nr
                valid = True
                if score > best_score:
                    best_score = score
                    best_f = f
                    t_mid = 0.5 * (a + b)
                    if t_mid >= b or t_mid < a:
                        t_mid = a
                    best_thr = t_mid
            if valid:
                evaluated += 1

        if best_f < 0:
            continue

        # stable partition: x <= threshold goes left
        nl = 0
        for i in range(start, end):
            if X[idx[i], best_f] <= best_thr:
                idx[start + nl] = idx[i]
                nl += 1
            else:
                tmp[i - start - nl] = idx[i]
        for i in range(m - nl):
            idx[start + nl + i] = tmp[i]

        feature[node] = best_f
        threshold[node] = best_thr
        g = best_score - parent_score
        gain[node] = g if g > 0.0 else 0.0
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        # push right first so the left subtree is grown first
        st_start[sp] = start + nl
        st_end[sp] = end
        st_node[sp] = rnode
        sp += 1
        st_start[sp] = start
        st_end[sp] = start + nl
        st_node[sp] = lnode
        sp += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        gain[:n_nodes].copy(),
    )


@njit(cache=True, nogil=True)
def predict_tree(feature, threshold, left, right, value, X):
    n = X.shape[0]
    out = np.empty(n, np.float64)
    for r in range(n):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out
