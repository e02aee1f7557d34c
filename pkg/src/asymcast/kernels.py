"""Hot numeric kernels: tree building and neural-net training loops.

Every kernel is written in the numba-compatible numpy subset and compiled
with ``@njit(cache=True)`` when numba is available. Setting the
environment variable ``ASYMCAST_DISABLE_NUMBA=1`` (or running without
numba installed) selects the pure-numpy fallback path: the same
functions, interpreted. ``benchmarks/bench_kernels.py`` compares the two.

In-kernel randomness (random-forest feature subsampling, mini-batch
shuffling) uses a small explicit LCG so both paths consume an identical,
seed-determined stream.
"""

import os

import numpy as np

_flag = os.environ.get("ASYMCAST_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag not in ("", "0", "false", "no")

try:
    from numba import njit as _njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised via the env flag instead
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and not NUMBA_DISABLED


def _maybe_jit(func):
    if USE_NUMBA:
        return _njit(cache=True, nogil=True)(func)
    return func


# 32-bit LCG (Numerical Recipes constants). Intermediates stay below
# 2**53 so the arithmetic is exact in both compiled and interpreted mode.
_LCG_A = 1664525
_LCG_C = 1013904223
_LCG_M = 4294967296  # 2**32


def _lcg_next_impl(state):
    return (_LCG_A * state + _LCG_C) % _LCG_M


def _lcg_choice_impl(state, k):
    # next state and a draw in [0, k)
    state = (_LCG_A * state + _LCG_C) % _LCG_M
    return state, (state * k) // _LCG_M


lcg_next = _maybe_jit(_lcg_next_impl)
_lcg_choice = _maybe_jit(_lcg_choice_impl)


# ----------------------------------------------------------------- trees

def _tree_build_impl(
    X, y, sample_idx, min_node, complexity, mtry, lcg_state, max_depth
):
    """Grow a regression tree on rows ``sample_idx`` (repeats allowed).

    Splits greedily maximize the sum-of-squares reduction; a split is
    kept only when it reduces the node sum of squares by at least
    ``complexity`` times the root sum of squares and leaves at least
    ``min_node`` rows on each side. ``mtry < n_features`` samples that
    many candidate features per split (random forests).

    Returns (feature, threshold, left, right, value, n_nodes); leaves
    carry feature -1. Rows with value <= threshold go left.
    """
    n = sample_idx.shape[0]
    m = X.shape[1]
    cap = 2 * n + 3
    node_feature = np.full(cap, -1, dtype=np.int64)
    node_threshold = np.zeros(cap, dtype=np.float64)
    node_left = np.full(cap, -1, dtype=np.int64)
    node_right = np.full(cap, -1, dtype=np.int64)
    node_value = np.zeros(cap, dtype=np.float64)

    idx = sample_idx.copy()
    feat_pool = np.arange(m)

    # root sum of squares, the reference scale for the complexity gate
    y_root = y[idx]
    root_sum = np.sum(y_root)
    root_sse = np.sum(y_root * y_root) - root_sum * root_sum / n

    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    stack_depth[0] = 0
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        lo = stack_lo[sp]
        hi = stack_hi[sp]
        depth = stack_depth[sp]
        seg = idx[lo:hi]
        n_node = hi - lo
        ys = y[seg]
        total = np.sum(ys)
        node_value[node] = total / n_node

        if n_node < 2 * min_node or depth >= max_depth:
            continue

        if mtry < m:
            # partial Fisher-Yates draw of mtry distinct features
            for i in range(mtry):
                lcg_state, j = _lcg_choice(lcg_state, m - i)
                j = j + i
                tmp = feat_pool[i]
                feat_pool[i] = feat_pool[j]
                feat_pool[j] = tmp
            n_feat = mtry
        else:
            n_feat = m

    # candidate scan: maximize sum_L^2/n_L + sum_R^2/n_R (equivalent to
    # the variance-reduction objective since sum of y^2 is constant)
        base = total * total / n_node
        best_gain = 0.0
        best_feature = -1
        best_threshold = 0.0
        for fi in range(n_feat):
            f = feat_pool[fi] if mtry < m else fi
            col = X[:, f]
            xs = col[seg]
            order = np.argsort(xs, kind="mergesort")
            xs_s = xs[order]
            if xs_s[0] == xs_s[n_node - 1]:
                continue
            ys_s = ys[order]
            cum = np.cumsum(ys_s)
            n_left = np.arange(1, n_node).astype(np.float64)
            sum_left = cum[: n_node - 1]
            gains = (
                sum_left * sum_left / n_left
                + (total - sum_left) * (total - sum_left) / (n_node - n_left)
                - base
            )
            distinct = xs_s[1:] > xs_s[: n_node - 1]
            sized = (n_left >= min_node) & (n_left <= n_node - min_node)
            gains = np.where(distinct & sized, gains, -1.0)
            j = int(np.argmax(gains))
            if gains[j] > best_gain:
                best_gain = gains[j]
                best_feature = f
                best_threshold = 0.5 * (xs_s[j] + xs_s[j + 1])

        if best_feature < 0 or best_gain < complexity * root_sse:
            continue

        col = X[:, best_feature]
        mask = col[seg] <= best_threshold
        left_part = seg[mask]
        right_part = seg[~mask]
        n_left_rows = left_part.shape[0]
        idx[lo : lo + n_left_rows] = left_part
        idx[lo + n_left_rows : hi] = right_part

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        node_feature[node] = best_feature
        node_threshold[node] = best_threshold
        node_left[node] = left_id
        node_right[node] = right_id

        stack_node[sp] = left_id
        stack_lo[sp] = lo
        stack_hi[sp] = lo + n_left_rows
        stack_depth[sp] = depth + 1
        sp += 1
        stack_node[sp] = right_id
        stack_lo[sp] = lo + n_left_rows
        stack_hi[sp] = hi
        stack_depth[sp] = depth + 1
        sp += 1

    return (
        node_feature[:n_nodes],
        node_threshold[:n_nodes],
        node_left[:n_nodes],
        node_right[:n_nodes],
        node_value[:n_nodes],
        n_nodes,
    )


def _tree_predict_impl(node_feature, node_threshold, node_left, node_right, node_value, X):
    n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        node = 0
        while node_feature[node] >= 0:
            if X[i, node_feature[node]] <= node_threshold[node]:
                node = node_left[node]
            else:
                node = node_right[node]
        out[i] = node_value[node]
    return out


tree_build = _maybe_jit(_tree_build_impl)
tree_predict = _maybe_jit(_tree_predict_impl)


# ------------------------------------------------------------ neural net

# loss codes used inside the training kernel
LOSS_SQUARED = 0
LOSS_PINBALL = 1
LOSS_QQC_APPROX = 2

# activation codes
ACT_LOGISTIC = 0
ACT_TANH = 1

_EXP_CLIP = 700.0


def _nn_train_impl(
    X,
    y,
    W1,
    b1,
    v,
    v0,
    act_code,
    loss_code,
    loss_a,
    loss_b,
    loss_tau,
    loss_steepness,
    pinball_eps,
    lam1,
    lam2,
    learning_rate,
    epochs,
    batch_size,
    lcg_state,
):
    """Adam descent on mean(loss(residual)) + lam1*sum(W1^2) + lam2*sum(v^2).

    Biases (b1, v0) are not penalized. ``batch_size == 0`` means full
    batch; otherwise mini-batches are drawn from an LCG-shuffled
    permutation each epoch. ``pinball_eps > 0`` replaces the pinball kink
    by a quadratic band on [-eps, eps]. Parameters are updated in place;
    returns 0 on success, 1 if the parameters went non-finite.
    """
    n = X.shape[0]
    k = W1.shape[1]
    m = W1.shape[0]

    mW = np.zeros((m, k))
    vW = np.zeros((m, k))
    mb = np.zeros(k)
    vb = np.zeros(k)
    mv = np.zeros(k)
    vv = np.zeros(k)
    mv0 = np.zeros(1)
    vv0 = np.zeros(1)
    beta1 = 0.9
    beta2 = 0.999
    eps = 1e-8

    perm = np.arange(n)
    full = batch_size <= 0 or batch_size >= n
    step = 0

    for _epoch in range(epochs):
        if not full:
            for i in range(n - 1, 0, -1):
                lcg_state, j = _lcg_choice(lcg_state, i + 1)
                tmp = perm[i]
                perm[i] = perm[j]
                perm[j] = tmp
        start = 0
        while start < n:
            if full:
                Xb = X
                yb = y
                start = n
            else:
                stop = min(start + batch_size, n)
                rows = perm[start:stop]
                Xb = X[rows]
                yb = y[rows]
                start = stop
            nb = Xb.shape[0]

            Z = np.dot(Xb, W1) + b1
            if act_code == ACT_TANH:
                H = np.tanh(Z)
                Hder = 1.0 - H * H
            else:
                ZC = np.minimum(np.maximum(-Z, -_EXP_CLIP), _EXP_CLIP)
                H = 1.0 / (1.0 + np.exp(ZC))
                Hder = H * (1.0 - H)
            yhat = np.dot(H, v) + v0[0]
            e = yb - yhat

            if loss_code == LOSS_PINBALL:
                g = np.where(e > 0, loss_tau, np.where(e < 0, loss_tau - 1.0, loss_tau))
                if pinball_eps > 0.0:
                    band = e / (2.0 * pinball_eps) + (loss_tau - 0.5)
                    g = np.where(np.abs(e) <= pinball_eps, band, g)
            elif loss_code == LOSS_QQC_APPROX:
                zc = np.minimum(np.maximum(loss_steepness * e, -_EXP_CLIP), _EXP_CLIP)
                sig = 1.0 / (1.0 + np.exp(zc))
                weight = loss_a + (loss_b - loss_a) * sig
                dsig = -loss_steepness * sig * (1.0 - sig)
                g = 2.0 * e * weight + (e * e) * (loss_b - loss_a) * dsig
            else:
                g = 2.0 * e

            dyhat = -g / nb
            dv = np.dot(dyhat, H) + 2.0 * lam2 * v
            dv0 = np.sum(dyhat)
            dH = dyhat.reshape(nb, 1) * v.reshape(1, k)
            dZ = dH * Hder
            dW1 = np.dot(Xb.T.copy(), dZ) + 2.0 * lam1 * W1
            db1 = np.sum(dZ, axis=0)

            step += 1
            c1 = 1.0 - beta1**step
            c2 = 1.0 - beta2**step

            mW = beta1 * mW + (1.0 - beta1) * dW1
            vW = beta2 * vW + (1.0 - beta2) * dW1 * dW1
            W1 -= learning_rate * (mW / c1) / (np.sqrt(vW / c2) + eps)

            mb = beta1 * mb + (1.0 - beta1) * db1
            vb = beta2 * vb + (1.0 - beta2) * db1 * db1
            b1 -= learning_rate * (mb / c1) / (np.sqrt(vb / c2) + eps)

            mv = beta1 * mv + (1.0 - beta1) * dv
            vv = beta2 * vv + (1.0 - beta2) * dv * dv
            v -= learning_rate * (mv / c1) / (np.sqrt(vv / c2) + eps)

            mv0[0] = beta1 * mv0[0] + (1.0 - beta1) * dv0
            vv0[0] = beta2 * vv0[0] + (1.0 - beta2) * dv0 * dv0
            v0[0] -= learning_rate * (mv0[0] / c1) / (np.sqrt(vv0[0] / c2) + eps)

    ok = (
        np.all(np.isfinite(W1))
        and np.all(np.isfinite(b1))
        and np.all(np.isfinite(v))
        and np.isfinite(v0[0])
    )
    return 0 if ok else 1


def _nn_forward_impl(X, W1, b1, v, v0, act_code):
    Z = np.dot(X, W1) + b1
    if act_code == ACT_TANH:
        H = np.tanh(Z)
    else:
        ZC = np.minimum(np.maximum(-Z, -_EXP_CLIP), _EXP_CLIP)
        H = 1.0 / (1.0 + np.exp(ZC))
    return np.dot(H, v) + v0[0]


nn_train = _maybe_jit(_nn_train_impl)
nn_forward = _maybe_jit(_nn_forward_impl)
