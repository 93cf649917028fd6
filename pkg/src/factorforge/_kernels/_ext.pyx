# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel backend.

Mirror of ``_py.py``; see that module's docstring for the parity rules.
Every floating-point expression here is written with the same association
order as the numpy fallback, and the build is pinned to strict IEEE modes
(no FMA contraction, no fast-math), so both backends produce bit-identical
trees, predictions, attributions, and bootstrap draws.
"""

import numpy as np

cimport numpy as cnp
from libc.string cimport memcpy

cnp.import_array()

NAME = "compiled"

ctypedef unsigned long long u64
ctypedef cnp.int64_t i64

cdef u64 _MASK = 0xFFFFFFFFFFFFFFFFULL
cdef u64 _GOLDEN = 0x9E3779B97F4A7C15ULL


# ---------------------------------------------------------------------------
# xoshiro256** seeded through SplitMix64 (see factorforge.rng)

cdef struct Xo:
    u64 s0
    u64 s1
    u64 s2
    u64 s3


cdef inline u64 _mix64(u64 z) noexcept:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline void _xo_seed(Xo* st, u64 seed) noexcept:
    cdef u64 state = seed
    state += _GOLDEN
    st.s0 = _mix64(state)
    state += _GOLDEN
    st.s1 = _mix64(state)
    state += _GOLDEN
    st.s2 = _mix64(state)
    state += _GOLDEN
    st.s3 = _mix64(state)


cdef inline u64 _rotl(u64 x, int k) noexcept:
    return (x << k) | (x >> (64 - k))


cdef inline u64 _xo_next(Xo* st) noexcept:
    cdef u64 result = _rotl(st.s1 * 5ULL, 7) * 9ULL
    cdef u64 t = st.s1 << 17
    st.s2 ^= st.s0
    st.s3 ^= st.s1
    st.s1 ^= st.s2
    st.s0 ^= st.s3
    st.s2 ^= t
    st.s3 = _rotl(st.s3, 45)
    return result


cdef inline u64 _xo_below(Xo* st, u64 n) noexcept:
    return ((_xo_next(st) >> 32) * n) >> 32


def bootstrap_counts(seed, n):
    """Match _py.bootstrap_counts: n draws from range(n), returned as counts."""
    cdef Xo rng
    _xo_seed(&rng, <u64>(seed & 0xFFFFFFFFFFFFFFFF))
    cdef cnp.int64_t nn = n
    out = np.zeros(nn, dtype=np.float64)
    cdef double[::1] counts = out
    cdef i64 i
    for i in range(nn):
        counts[<i64>_xo_below(&rng, <u64>nn)] += 1.0
    return out, (rng.s0, rng.s1, rng.s2, rng.s3)


# ---------------------------------------------------------------------------
# tree construction

cdef class _TreeBuilder:
    cdef const double[:, ::1] X
    cdef const double[:] y
    cdef const double[:] w
    cdef i64[:, ::1] idx_mat      # (d, m) per-feature sorted member rows
    cdef i64[::1] members         # (m,) member rows ascending
    cdef i64[::1] tmp             # (m,) partition scratch
    cdef char[::1] go_left        # (n,) split marks
    cdef const i64[:] feature_ids
    cdef i64 d
    cdef i64 max_depth
    cdef double min_samples_split
    cdef i64 k
    cdef Xo rng
    cdef bint use_rng
    cdef i64[::1] pool            # (d,) feature sampling scratch
    cdef list feat_out, thr_out, left_out, right_out, val_out, cov_out
    cdef i64[::1] leaf_for_row

    cdef void _node_sums(self, i64 start, i64 end,
                         double* W, double* S, double* Q,
                         double* ymin, double* ymax) noexcept:
        cdef double aw = 0.0, awy = 0.0, awyy = 0.0
        cdef double lo = 0.0, hi = 0.0, wr, yr, t1
        cdef i64 i, r
        for i in range(start, end):
            r = self.members[i]
            wr = self.w[r]
            yr = self.y[r]
            t1 = wr * yr
            aw += wr
            awy += t1
            awyy += t1 * yr
            if i == start:
                lo = yr
                hi = yr
            else:
                if yr < lo:
                    lo = yr
                if yr > hi:
                    hi = yr
        W[0] = aw
        S[0] = awy
        Q[0] = awyy
        ymin[0] = lo
        ymax[0] = hi

    cdef void _scan(self, i64 j, i64 start, i64 end,
                    double W, double S, double Q,
                    double* out_score, i64* out_pos) noexcept:
        cdef i64 fid = self.feature_ids[j]
        cdef double acc_w = 0.0, acc_wy = 0.0, acc_wyy = 0.0
        cdef double best = np.inf
        cdef i64 bpos = -1
        cdef i64 i, r
        cdef double wr, yr, t1, Wl, Sl, Ql, Wr, Sr, Qr, ssl, ssr, score
        cdef i64 m = end - start
        for i in range(m - 1):
            r = self.idx_mat[j, start + i]
            wr = self.w[r]
            yr = self.y[r]
            t1 = wr * yr
            acc_w += wr
            acc_wy += t1
            acc_wyy += t1 * yr
            if self.X[r, fid] < self.X[self.idx_mat[j, start + i + 1], fid]:
                Wl = acc_w
                Sl = acc_wy
                Ql = acc_wyy
                Wr = W - Wl
                Sr = S - Sl
                Qr = Q - Ql
                ssl = Ql - Sl * Sl / Wl
                ssr = Qr - Sr * Sr / Wr
                score = ssl + ssr
                if score < best:
                    best = score
                    bpos = i
        out_score[0] = best
        out_pos[0] = bpos

    cdef i64 _partition(self, i64[:] arr, i64 start, i64 end) noexcept:
        # stable partition of arr[start:end] by go_left flag; returns left count
        cdef i64 nl = 0, nr = 0, i, r
        for i in range(start, end):
            r = arr[i]
            if self.go_left[r]:
                arr[start + nl] = r
                nl += 1
            else:
                self.tmp[nr] = r
                nr += 1
        for i in range(nr):
            arr[start + nl + i] = self.tmp[i]
        return nl

    cdef i64 build(self, i64 start, i64 end, i64 depth):
        cdef i64 node_id = len(self.feat_out)
        self.feat_out.append(-1)
        self.thr_out.append(0.0)
        self.left_out.append(-1)
        self.right_out.append(-1)

        cdef double W = 0.0, S = 0.0, Q = 0.0, ymin = 0.0, ymax = 0.0
        self._node_sums(start, end, &W, &S, &Q, &ymin, &ymax)
        self.val_out.append(S / W)
        self.cov_out.append(W)

        cdef bint splittable = (
            depth < self.max_depth
            and W >= self.min_samples_split
            and ymin < ymax
        )
        cdef i64 best_j = -1, best_pos = -1
        cdef double best_score = np.inf
        cdef double parent_sse, sc
        cdef i64 pos, j, t, jj, swap, nfeat, i

        if splittable:
            parent_sse = Q - S * S / W
            if self.use_rng:
                nfeat = self.d
                for t in range(nfeat):
                    self.pool[t] = t
                for t in range(self.k):
                    jj = t + <i64>_xo_below(&self.rng, <u64>(nfeat - t))
                    swap = self.pool[t]
                    self.pool[t] = self.pool[jj]
                    self.pool[jj] = swap
                # insertion sort of pool[:k], ascending scan order
                for t in range(1, self.k):
                    swap = self.pool[t]
                    jj = t - 1
                    while jj >= 0 and self.pool[jj] > swap:
                        self.pool[jj + 1] = self.pool[jj]
                        jj -= 1
                    self.pool[jj + 1] = swap
                nfeat = self.k
            else:
                nfeat = self.d
                for t in range(nfeat):
                    self.pool[t] = t
            for t in range(nfeat):
                j = self.pool[t]
                self._scan(j, start, end, W, S, Q, &sc, &pos)
                if sc < best_score:
                    best_score = sc
                    best_pos = pos
                    best_j = j
            if best_j >= 0 and not best_score < parent_sse:
                best_j = -1

        if best_j < 0:
            for i in range(start, end):
                self.leaf_for_row[self.members[i]] = node_id
            return node_id

        cdef i64 fid = self.feature_ids[best_j]
        cdef double vlo = self.X[self.idx_mat[best_j, start + best_pos], fid]
        cdef double vhi = self.X[self.idx_mat[best_j, start + best_pos + 1], fid]
        cdef double thr = 0.5 * (vlo + vhi)
        if not (vlo <= thr and thr < vhi):
            thr = vlo

        for i in range(start, start + best_pos + 1):
            self.go_left[self.idx_mat[best_j, i]] = 1
        cdef i64 nl = 0
        for j in range(self.d):
            nl = self._partition(self.idx_mat[j, :], start, end)
        nl = self._partition(self.members, start, end)
        for i in range(start, start + nl):
            self.go_left[self.members[i]] = 0

        self.feat_out[node_id] = best_j
        self.thr_out[node_id] = thr
        cdef i64 left_id = self.build(start, start + nl, depth + 1)
        cdef i64 right_id = self.build(start + nl, end, depth + 1)
        self.left_out[node_id] = left_id
        self.right_out[node_id] = right_id
        return node_id


def build_tree(X, y, w, order, feature_ids, max_depth, min_samples_split,
               k_features, rng_state=None):
    """Match _py.build_tree; see that function for the full contract."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    order = np.ascontiguousarray(order, dtype=np.int64)
    feature_ids = np.ascontiguousarray(feature_ids, dtype=np.int64)

    cdef i64 n = X.shape[0]
    cdef i64 d = feature_ids.shape[0]
    cdef i64 k = int(k_features)

    alive = np.asarray(w, dtype=np.float64) > 0.0
    members0 = np.flatnonzero(alive).astype(np.int64)
    cdef i64 m = members0.shape[0]
    if m == 0:
        raise ValueError("no rows with positive weight")

    idx_mat = np.empty((d, m), dtype=np.int64)
    cdef i64 j
    for j in range(d):
        col = order[j]
        idx_mat[j, :] = col[alive[col]]

    cdef _TreeBuilder b = _TreeBuilder()
    b.X = X
    b.y = y
    b.w = w
    b.idx_mat = idx_mat
    b.members = members0
    b.tmp = np.empty(m, dtype=np.int64)
    b.go_left = np.zeros(n, dtype=np.int8)
    b.feature_ids = feature_ids
    b.d = d
    b.max_depth = int(max_depth)
    b.min_samples_split = float(min_samples_split)
    b.k = k
    b.use_rng = k < d
    if b.use_rng:
        if rng_state is None:
            raise ValueError("rng_state required when sampling features")
        b.rng.s0 = <u64>(rng_state[0] & 0xFFFFFFFFFFFFFFFF)
        b.rng.s1 = <u64>(rng_state[1] & 0xFFFFFFFFFFFFFFFF)
        b.rng.s2 = <u64>(rng_state[2] & 0xFFFFFFFFFFFFFFFF)
        b.rng.s3 = <u64>(rng_state[3] & 0xFFFFFFFFFFFFFFFF)
    b.pool = np.empty(d, dtype=np.int64)
    b.feat_out = []
    b.thr_out = []
    b.left_out = []
    b.right_out = []
    b.val_out = []
    b.cov_out = []
    b.leaf_for_row = np.full(n, -1, dtype=np.int64)

    b.build(0, m, 0)
    return {
        "feature": np.array(b.feat_out, dtype=np.int64),
        "threshold": np.array(b.thr_out, dtype=np.float64),
        "left": np.array(b.left_out, dtype=np.int64),
        "right": np.array(b.right_out, dtype=np.int64),
        "value": np.array(b.val_out, dtype=np.float64),
        "cover": np.array(b.cov_out, dtype=np.float64),
        "leaf_for_row": np.asarray(b.leaf_for_row),
    }


# ---------------------------------------------------------------------------
# prediction

def predict_tree(feature, threshold, left, right, value, X):
    """Match _py.predict_tree."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] Xv = X
    cdef const i64[::1] feat = np.ascontiguousarray(feature, dtype=np.int64)
    cdef const double[::1] thr = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const i64[::1] lc = np.ascontiguousarray(left, dtype=np.int64)
    cdef const i64[::1] rc = np.ascontiguousarray(right, dtype=np.int64)
    cdef const double[::1] val = np.ascontiguousarray(value, dtype=np.float64)
    cdef i64 n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef i64 i, cur, f
    for i in range(n):
        cur = 0
        f = feat[cur]
        while f >= 0:
            if Xv[i, f] <= thr[cur]:
                cur = lc[cur]
            else:
                cur = rc[cur]
            f = feat[cur]
        ov[i] = val[cur]
    return out


# ---------------------------------------------------------------------------
# per-instance attribution

cdef inline void _extend(i64* pd, double* pz, double* po, double* pw,
                         i64 plen, i64 feat, double z, double o) noexcept:
    cdef i64 i
    cdef double dl = <double>(plen + 1)
    pd[plen] = feat
    pz[plen] = z
    po[plen] = o
    pw[plen] = 1.0 if plen == 0 else 0.0
    for i in range(plen - 1, -1, -1):
        pw[i + 1] = pw[i + 1] + o * pw[i] * (<double>(i + 1)) / dl
        pw[i] = z * pw[i] * (<double>(plen - i)) / dl


cdef inline double _unwound_sum(i64* pd, double* pz, double* po, double* pw,
                                i64 L, i64 i) noexcept:
    cdef double one = po[i]
    cdef double zero = pz[i]
    cdef double nxt = pw[L - 1]
    cdef double total = 0.0
    cdef double dL = <double>L
    cdef double tmp
    cdef i64 j
    for j in range(L - 2, -1, -1):
        if one != 0.0:
            tmp = nxt * dL / ((<double>(j + 1)) * one)
            total = total + tmp
            nxt = pw[j] - tmp * zero * (<double>(L - 1 - j)) / dL
        else:
            total = total + pw[j] * dL / (zero * (<double>(L - 1 - j)))
    return total


cdef inline void _unwind(i64* pd, double* pz, double* po, double* pw,
                         i64 L, i64 i) noexcept:
    cdef double one = po[i]
    cdef double zero = pz[i]
    cdef double nxt = pw[L - 1]
    cdef double dL = <double>L
    cdef double tmp
    cdef i64 j
    for j in range(L - 2, -1, -1):
        if one != 0.0:
            tmp = pw[j]
            pw[j] = nxt * dL / ((<double>(j + 1)) * one)
            nxt = tmp - pw[j] * zero * (<double>(L - 1 - j)) / dL
        else:
            pw[j] = pw[j] * dL / (zero * (<double>(L - 1 - j)))
    for j in range(i, L - 1):
        pd[j] = pd[j + 1]
        pz[j] = pz[j + 1]
        po[j] = po[j + 1]


cdef void _srec(const i64* feature, const double* threshold,
                const i64* left, const i64* right,
                const double* value, const double* cover,
                const double* x, double* phi,
                i64* bd, double* bz, double* bo, double* bw, i64 pitch,
                i64 node, i64 level, i64 plen,
                i64 pfeat, double pz_in, double po_in) noexcept:
    cdef i64* pd = bd + level * pitch
    cdef double* pzr = bz + level * pitch
    cdef double* por = bo + level * pitch
    cdef double* pwr = bw + level * pitch
    cdef i64 i
    if level > 0:
        memcpy(pd, bd + (level - 1) * pitch, plen * sizeof(i64))
        memcpy(pzr, bz + (level - 1) * pitch, plen * sizeof(double))
        memcpy(por, bo + (level - 1) * pitch, plen * sizeof(double))
        memcpy(pwr, bw + (level - 1) * pitch, plen * sizeof(double))
    _extend(pd, pzr, por, pwr, plen, pfeat, pz_in, po_in)
    cdef i64 L = plen + 1
    cdef i64 f = feature[node]
    cdef double s
    if f < 0:
        for i in range(1, L):
            s = _unwound_sum(pd, pzr, por, pwr, L, i)
            phi[pd[i]] += s * (por[i] - pzr[i]) * value[node]
        return
    cdef i64 hot, cold
    if x[f] <= threshold[node]:
        hot = left[node]
        cold = right[node]
    else:
        hot = right[node]
        cold = left[node]
    cdef double iz = 1.0
    cdef double io = 1.0
    cdef i64 kf = -1
    for i in range(1, L):
        if pd[i] == f:
            kf = i
            break
    if kf >= 0:
        iz = pzr[kf]
        io = por[kf]
        _unwind(pd, pzr, por, pwr, L, kf)
        L -= 1
    cdef double rj = cover[node]
    _srec(feature, threshold, left, right, value, cover, x, phi,
          bd, bz, bo, bw, pitch, hot, level + 1, L, f,
          iz * cover[hot] / rj, io)
    _srec(feature, threshold, left, right, value, cover, x, phi,
          bd, bz, bo, bw, pitch, cold, level + 1, L, f,
          iz * cover[cold] / rj, 0.0)


cdef double _expect(const i64* feature, const i64* left, const i64* right,
                    const double* value, const double* cover, i64 node) noexcept:
    if feature[node] < 0:
        return value[node]
    cdef i64 lo = left[node]
    cdef i64 hi = right[node]
    cdef double el = _expect(feature, left, right, value, cover, lo)
    cdef double er = _expect(feature, left, right, value, cover, hi)
    return (cover[lo] * el + cover[hi] * er) / cover[node]


def tree_shap(feature, threshold, left, right, value, cover, x, n_features):
    """Match _py.tree_shap: returns (phi, base)."""
    feat_arr = np.ascontiguousarray(feature, dtype=np.int64)
    thr_arr = np.ascontiguousarray(threshold, dtype=np.float64)
    left_arr = np.ascontiguousarray(left, dtype=np.int64)
    right_arr = np.ascontiguousarray(right, dtype=np.int64)
    val_arr = np.ascontiguousarray(value, dtype=np.float64)
    cov_arr = np.ascontiguousarray(cover, dtype=np.float64)
    x_arr = np.ascontiguousarray(x, dtype=np.float64)

    cdef const i64[::1] featv = feat_arr
    cdef const double[::1] thrv = thr_arr
    cdef const i64[::1] leftv = left_arr
    cdef const i64[::1] rightv = right_arr
    cdef const double[::1] valv = val_arr
    cdef const double[::1] covv = cov_arr
    cdef const double[::1] xv = x_arr

    # tree depth via iterative walk, for path buffer sizing
    cdef i64 nn = feat_arr.shape[0]
    depth_arr = np.zeros(nn, dtype=np.int64)
    cdef i64[::1] dep = depth_arr
    cdef i64 i, D = 0
    for i in range(nn):
        if featv[i] >= 0:
            dep[leftv[i]] = dep[i] + 1
            dep[rightv[i]] = dep[i] + 1
        if dep[i] > D:
            D = dep[i]

    phi = np.zeros(int(n_features), dtype=np.float64)
    cdef double[::1] phiv = phi
    cdef i64 pitch = D + 3
    cdef i64 rows = D + 2
    bd = np.zeros(rows * pitch, dtype=np.int64)
    bz = np.zeros(rows * pitch, dtype=np.float64)
    bo = np.zeros(rows * pitch, dtype=np.float64)
    bw = np.zeros(rows * pitch, dtype=np.float64)
    cdef i64[::1] bdv = bd
    cdef double[::1] bzv = bz
    cdef double[::1] bov = bo
    cdef double[::1] bwv = bw

    _srec(&featv[0], &thrv[0], &leftv[0], &rightv[0], &valv[0], &covv[0],
          &xv[0], &phiv[0], &bdv[0], &bzv[0], &bov[0], &bwv[0], pitch,
          0, 0, 0, -1, 1.0, 1.0)

    cdef double base = _expect(&featv[0], &leftv[0], &rightv[0],
                               &valv[0], &covv[0], 0)
    return phi, base
