"""Pure-Python kernel backend.

Operation-for-operation mirror of the compiled backend in ``_ext.pyx``.  The
two must stay bit-identical, which constrains how this file is written:

* every floating-point reduction is a left-to-right sequential accumulation
  (``np.cumsum``, never ``np.sum``, which sums pairwise);
* split scores are composed with the exact same expression tree as the C
  code, so rounding happens in the same places;
* candidate comparisons use strict ``<`` so the first optimum wins (lowest
  feature position, then smallest threshold);
* random draws come from the shared xoshiro256** mapping in
  :mod:`factorforge.rng`.

Any behavioral change here must be mirrored in ``_ext.pyx``.
"""

from __future__ import annotations

import numpy as np

from factorforge.rng import Xoshiro256StarStar

NAME = "python"


def bootstrap_counts(seed: int, n: int):
    """Draw ``n`` samples with replacement from ``range(n)``; return counts.

    Returns ``(counts, state)`` where ``counts`` is float64 (integer valued)
    and ``state`` is the generator state after the draws, for callers that
    continue consuming the same stream.
    """
    rng = Xoshiro256StarStar(seed)
    counts = np.zeros(n, dtype=np.float64)
    for _ in range(n):
        counts[rng.next_below(n)] += 1.0
    return counts, rng.state


def _sample_features(rng: Xoshiro256StarStar, d: int, k: int) -> list[int]:
    # partial Fisher-Yates; result sorted so the scan order stays ascending
    pool = list(range(d))
    for t in range(k):
        j = t + rng.next_below(d - t)
        pool[t], pool[j] = pool[j], pool[t]
    sel = pool[:k]
    sel.sort()
    return sel


def build_tree(
    X,
    y,
    w,
    order,
    feature_ids,
    max_depth,
    min_samples_split,
    k_features,
    rng_state=None,
):
    """Grow one variance-reduction regression tree.

    Parameters
    ----------
    X : float64 array (n, d_total)
        Full design matrix; only columns named in ``feature_ids`` are used.
    y : float64 array (n,)
    w : float64 array (n,)
        Nonnegative sample weights; rows with ``w > 0`` are tree members.
    order : int64 array (len(feature_ids), n)
        ``order[j]`` holds all row ids sorted ascending by column
        ``feature_ids[j]`` (stable sort, so ties keep row order).
    feature_ids : int64 array
        Global column ids to consider; node ``feature`` fields store the
        *position* within this list, not the global id.
    max_depth : int
        Depth 0 is the root; nodes at ``depth == max_depth`` become leaves.
    min_samples_split : float
        Nodes with total weight below this become leaves.
    k_features : int
        Features drawn per node.  ``k_features >= len(feature_ids)`` means
        all features and consumes no randomness.
    rng_state : tuple of 4 ints, optional
        xoshiro256** state used for per-node feature sampling.

    Returns a dict of flat node arrays (preorder ids, left child first) plus
    ``leaf_for_row`` giving each member row's leaf id (-1 for non-members).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    feature_ids = np.asarray(feature_ids, dtype=np.int64)
    n = X.shape[0]
    d = feature_ids.shape[0]
    max_depth = int(max_depth)
    min_samples_split = float(min_samples_split)
    k = int(k_features)

    rng = None
    if k < d:
        if rng_state is None:
            raise ValueError("rng_state required when sampling features")
        rng = Xoshiro256StarStar(0)
        rng._s = list(rng_state)

    alive = w > 0.0
    members0 = np.flatnonzero(alive).astype(np.int64)
    if members0.size == 0:
        raise ValueError("no rows with positive weight")
    sorted0 = [order[j][alive[order[j]]] for j in range(d)]

    feat_out: list[int] = []
    thr_out: list[float] = []
    left_out: list[int] = []
    right_out: list[int] = []
    val_out: list[float] = []
    cov_out: list[float] = []
    leaf_for_row = np.full(n, -1, dtype=np.int64)

    def scan(j, idx, W, S, Q):
        # best boundary for one feature; returns (score, position) with
        # score = SSE_left + SSE_right, +inf when no valid boundary exists
        fid = feature_ids[j]
        vals = X[idx, fid]
        ws = w[idx]
        wy = ws * y[idx]
        wyy = wy * y[idx]
        valid = vals[:-1] < vals[1:]
        if not valid.any():
            return np.inf, -1
        cw = np.cumsum(ws)
        cwy = np.cumsum(wy)
        cwyy = np.cumsum(wyy)
        Wl = cw[:-1]
        Sl = cwy[:-1]
        Ql = cwyy[:-1]
        Wr = W - Wl
        Sr = S - Sl
        Qr = Q - Ql
        score = (Ql - Sl * Sl / Wl) + (Qr - Sr * Sr / Wr)
        score = np.where(valid, score, np.inf)
        pos = int(np.argmin(score))
        return float(score[pos]), pos

    def build(members, sorted_lists, depth):
        node_id = len(feat_out)
        feat_out.append(-1)
        thr_out.append(0.0)
        left_out.append(-1)
        right_out.append(-1)

        ws = w[members]
        wy = ws * y[members]
        wyy = wy * y[members]
        W = float(np.cumsum(ws)[-1])
        S = float(np.cumsum(wy)[-1])
        Q = float(np.cumsum(wyy)[-1])
        val_out.append(S / W)
        cov_out.append(W)

        ym = y[members]
        splittable = (
            depth < max_depth
            and W >= min_samples_split
            and float(np.min(ym)) < float(np.max(ym))
        )
        best_j = -1
        best_pos = -1
        best_score = np.inf
        if splittable:
            parent_sse = Q - S * S / W
            cand = _sample_features(rng, d, k) if k < d else range(d)
            for j in cand:
                sc, pos = scan(j, sorted_lists[j], W, S, Q)
                if sc < best_score:
                    best_score = sc
                    best_pos = pos
                    best_j = j
            if best_j >= 0 and not best_score < parent_sse:
                best_j = -1

        if best_j < 0:
            leaf_for_row[members] = node_id
            return node_id

        idxj = sorted_lists[best_j]
        fid = feature_ids[best_j]
        vlo = float(X[idxj[best_pos], fid])
        vhi = float(X[idxj[best_pos + 1], fid])
        thr = 0.5 * (vlo + vhi)
        if not (vlo <= thr < vhi):
            thr = vlo

        go_left = np.zeros(n, dtype=bool)
        go_left[idxj[: best_pos + 1]] = True
        lm = members[go_left[members]]
        rm = members[~go_left[members]]
        ls = [sl[go_left[sl]] for sl in sorted_lists]
        rs = [sl[~go_left[sl]] for sl in sorted_lists]

        feat_out[node_id] = int(best_j)
        thr_out[node_id] = thr
        left_out[node_id] = build(lm, ls, depth + 1)
        right_out[node_id] = build(rm, rs, depth + 1)
        return node_id

    build(members0, sorted0, 0)
    return {
        "feature": np.array(feat_out, dtype=np.int64),
        "threshold": np.array(thr_out, dtype=np.float64),
        "left": np.array(left_out, dtype=np.int64),
        "right": np.array(right_out, dtype=np.int64),
        "value": np.array(val_out, dtype=np.float64),
        "cover": np.array(cov_out, dtype=np.float64),
        "leaf_for_row": leaf_for_row,
    }


def predict_tree(feature, threshold, left, right, value, X):
    """Route every row of ``X`` to its leaf and return the leaf values."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    cur = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    while True:
        feat = feature[cur]
        internal = feat >= 0
        if not internal.any():
            break
        f = np.where(internal, feat, 0)
        go = X[rows, f] <= threshold[cur]
        nxt = np.where(go, left[cur], right[cur])
        cur = np.where(internal, nxt, cur)
    return value[cur].astype(np.float64, copy=True)


def tree_shap(feature, threshold, left, right, value, cover, x, n_features):
    """Exact per-instance attribution for one tree.

    Path-dependent formulation: the conditional expectation of the tree for
    a feature subset follows child cover proportions wherever the subset
    does not pin the split.  Returns ``(phi, base)`` with ``phi`` of length
    ``n_features`` and ``base`` the cover-weighted expectation of the tree,
    satisfying ``base + phi.sum() == prediction(x)`` up to rounding.
    """
    x = np.asarray(x, dtype=np.float64)
    phi = np.zeros(int(n_features), dtype=np.float64)

    def extend(pd, pz, po, pw, feat, z, o):
        l = len(pd)
        pd.append(feat)
        pz.append(z)
        po.append(o)
        pw.append(1.0 if l == 0 else 0.0)
        for i in range(l - 1, -1, -1):
            pw[i + 1] += o * pw[i] * (i + 1) / (l + 1)
            pw[i] = z * pw[i] * (l - i) / (l + 1)

    def unwound_sum(pd, pz, po, pw, i):
        L = len(pd)
        one = po[i]
        zero = pz[i]
        nxt = pw[L - 1]
        total = 0.0
        for j in range(L - 2, -1, -1):
            if one != 0.0:
                tmp = nxt * L / ((j + 1) * one)
                total += tmp
                nxt = pw[j] - tmp * zero * (L - 1 - j) / L
            else:
                total += pw[j] * L / (zero * (L - 1 - j))
        return total

    def unwind(pd, pz, po, pw, i):
        L = len(pd)
        one = po[i]
        zero = pz[i]
        nxt = pw[L - 1]
        for j in range(L - 2, -1, -1):
            if one != 0.0:
                tmp = pw[j]
                pw[j] = nxt * L / ((j + 1) * one)
                nxt = tmp - pw[j] * zero * (L - 1 - j) / L
            else:
                pw[j] = pw[j] * L / (zero * (L - 1 - j))
        for j in range(i, L - 1):
            pd[j] = pd[j + 1]
            pz[j] = pz[j + 1]
            po[j] = po[j + 1]
        pd.pop()
        pz.pop()
        po.pop()
        pw.pop()

    def recurse(node, pd, pz, po, pw, feat, z, o):
        pd = pd[:]
        pz = pz[:]
        po = po[:]
        pw = pw[:]
        extend(pd, pz, po, pw, feat, z, o)
        f = int(feature[node])
        if f < 0:
            leaf_v = float(value[node])
            for i in range(1, len(pd)):
                s = unwound_sum(pd, pz, po, pw, i)
                phi[pd[i]] += s * (po[i] - pz[i]) * leaf_v
            return
        if x[f] <= threshold[node]:
            hot, cold = int(left[node]), int(right[node])
        else:
            hot, cold = int(right[node]), int(left[node])
        iz = 1.0
        io = 1.0
        kfound = -1
        for i in range(1, len(pd)):
            if pd[i] == f:
                kfound = i
                break
        if kfound >= 0:
            iz = pz[kfound]
            io = po[kfound]
            unwind(pd, pz, po, pw, kfound)
        rj = float(cover[node])
        recurse(hot, pd, pz, po, pw, f, iz * cover[hot] / rj, io)
        recurse(cold, pd, pz, po, pw, f, iz * cover[cold] / rj, 0.0)

    recurse(0, [], [], [], [], -1, 1.0, 1.0)

    def expect(node):
        if feature[node] < 0:
            return float(value[node])
        lo = int(left[node])
        hi = int(right[node])
        return (cover[lo] * expect(lo) + cover[hi] * expect(hi)) / cover[node]

    return phi, expect(0)


__all__ = ["NAME", "bootstrap_counts", "build_tree", "predict_tree", "tree_shap"]
