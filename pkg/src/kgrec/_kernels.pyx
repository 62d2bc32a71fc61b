# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: edit distance, title matching, cosine rows, TransE SGD.

Every function here has a drop-in twin in :mod:`kgrec._pykernels` with the
same signature and the same results (bit-identical for the integer kernels,
equal to rounding for the floating-point ones).
"""
import numpy as np

from libc.math cimport sqrt
from libc.stdlib cimport free, malloc


cdef int _lev(const Py_UCS4* a, int la, const Py_UCS4* b, int lb,
              int bound, int* row) noexcept nogil:
    cdef int i, j, diag, up, cur, rowmin
    for j in range(lb + 1):
        row[j] = j
    for i in range(1, la + 1):
        diag = row[0]
        row[0] = i
        rowmin = i
        for j in range(1, lb + 1):
            up = row[j]
            if a[i - 1] == b[j - 1]:
                cur = diag
            else:
                cur = diag
                if up < cur:
                    cur = up
                if row[j - 1] < cur:
                    cur = row[j - 1]
                cur += 1
            row[j] = cur
            diag = up
            if cur < rowmin:
                rowmin = cur
        if bound >= 0 and rowmin > bound:
            return bound + 1
    return row[lb]


cdef Py_UCS4* _codepoints(str s):
    cdef Py_ssize_t n = len(s), i
    cdef Py_UCS4* out = <Py_UCS4*> malloc((n + 1) * sizeof(Py_UCS4))
    if out == NULL:
        raise MemoryError()
    for i in range(n):
        out[i] = s[i]
    return out


def levenshtein(str a, str b):
    cdef int la = len(a), lb = len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    cdef Py_UCS4* pa = _codepoints(a)
    cdef Py_UCS4* pb = _codepoints(b)
    cdef int* row = <int*> malloc((lb + 1) * sizeof(int))
    cdef int d
    try:
        d = _lev(pa, la, pb, lb, -1, row)
    finally:
        free(pa)
        free(pb)
        free(row)
    return d


cdef int _max_allowed(int m, double threshold):
    # largest d with d / m <= threshold
    cdef int d = <int> (threshold * m)
    while d + 1 <= m and (d + 1) / <double> m <= threshold:
        d += 1
    while d >= 0 and d / <double> m > threshold:
        d -= 1
    return d


def title_match_pairs(list titles, double threshold):
    """Index pairs ``(i, j)``, ``i < j``, whose normalized distance is within threshold."""
    cdef Py_ssize_t n = len(titles)
    if n < 2:
        return []
    lengths = [len(t) for t in titles]
    order = sorted(range(n), key=lambda k: lengths[k])
    cdef Py_UCS4** cps = <Py_UCS4**> malloc(n * sizeof(Py_UCS4*))
    cdef int* lens = <int*> malloc(n * sizeof(int))
    cdef int maxlen = 0
    cdef Py_ssize_t p, q, i, j
    cdef int li, lj, bound, d
    for p in range(n):
        cps[p] = NULL
    out = []
    cdef int* row = NULL
    try:
        for p in range(n):
            i = order[p]
            cps[p] = _codepoints(titles[i])
            lens[p] = lengths[i]
            if lens[p] > maxlen:
                maxlen = lens[p]
        row = <int*> malloc((maxlen + 1) * sizeof(int))
        for p in range(n):
            li = lens[p]
            for q in range(p + 1, n):
                lj = lens[q]
                if lj == 0:
                    continue
                if (lj - li) / <double> lj > threshold:
                    break
                bound = _max_allowed(lj, threshold)
                if bound < 0:
                    continue
                d = _lev(cps[q], lj, cps[p], li, bound, row)
                if d <= bound:
                    i = order[p]
                    j = order[q]
                    out.append((i, j) if i < j else (j, i))
    finally:
        for p in range(n):
            if cps[p] != NULL:
                free(cps[p])
        free(cps)
        free(lens)
        if row != NULL:
            free(row)
    out.sort()
    return out


cdef inline double _clip(double x) noexcept nogil:
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


def dense_cosine_rows(const double[:, ::1] Q, const double[:, ::1] X):
    cdef Py_ssize_t nq = Q.shape[0], nx = X.shape[0], d = Q.shape[1]
    if X.shape[1] != d:
        raise ValueError(f"dimension mismatch: {d} vs {X.shape[1]}")
    out_arr = np.zeros((nq, nx), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    xn_arr = np.empty(nx, dtype=np.float64)
    cdef double[::1] xn = xn_arr
    cdef Py_ssize_t i, j, c
    cdef double s, qn
    with nogil:
        for j in range(nx):
            s = 0.0
            for c in range(d):
                s += X[j, c] * X[j, c]
            xn[j] = sqrt(s)
        for i in range(nq):
            s = 0.0
            for c in range(d):
                s += Q[i, c] * Q[i, c]
            qn = sqrt(s)
            if qn == 0.0:
                continue
            for j in range(nx):
                if xn[j] == 0.0:
                    continue
                s = 0.0
                for c in range(d):
                    s += Q[i, c] * X[j, c]
                out[i, j] = _clip(s / (qn * xn[j]))
    return out_arr


def sparse_cosine_rows(const long long[::1] q_indptr, const long long[::1] q_indices,
                       const double[::1] q_data, const long long[::1] x_indptr,
                       const long long[::1] x_indices, const double[::1] x_data,
                       Py_ssize_t n_features):
    cdef Py_ssize_t nq = q_indptr.shape[0] - 1, nx = x_indptr.shape[0] - 1
    out_arr = np.zeros((nq, nx), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    scratch_arr = np.zeros(n_features, dtype=np.float64)
    cdef double[::1] scratch = scratch_arr
    xn_arr = np.empty(nx, dtype=np.float64)
    cdef double[::1] xn = xn_arr
    cdef Py_ssize_t i, j, p
    cdef double s, qn
    with nogil:
        for j in range(nx):
            s = 0.0
            for p in range(x_indptr[j], x_indptr[j + 1]):
                s += x_data[p] * x_data[p]
            xn[j] = sqrt(s)
        for i in range(nq):
            s = 0.0
            for p in range(q_indptr[i], q_indptr[i + 1]):
                s += q_data[p] * q_data[p]
                scratch[q_indices[p]] = q_data[p]
            qn = sqrt(s)
            if qn != 0.0:
                for j in range(nx):
                    if xn[j] == 0.0:
                        continue
                    s = 0.0
                    for p in range(x_indptr[j], x_indptr[j + 1]):
                        s += scratch[x_indices[p]] * x_data[p]
                    out[i, j] = _clip(s / (qn * xn[j]))
            for p in range(q_indptr[i], q_indptr[i + 1]):
                scratch[q_indices[p]] = 0.0
    return out_arr


def transe_sgd_step(double[:, ::1] E, double[:, ::1] R,
                    const long long[::1] ph, const long long[::1] pr, const long long[::1] pt,
                    const long long[::1] nh, const long long[::1] nt,
                    double lr, double margin, bint l1):
    """One mini-batch update in place; returns the summed hinge loss of the batch."""
    cdef Py_ssize_t B = ph.shape[0], d = E.shape[1], i, c, k
    gp_arr = np.zeros((B, d), dtype=np.float64)
    gn_arr = np.zeros((B, d), dtype=np.float64)
    cdef double[:, ::1] gp = gp_arr
    cdef double[:, ::1] gn = gn_arr
    cdef double total = 0.0, npos, nneg, x, loss
    with nogil:
        # read phase: all gradients at the current parameters
        for i in range(B):
            npos = 0.0
            nneg = 0.0
            for c in range(d):
                x = E[ph[i], c] + R[pr[i], c] - E[pt[i], c]
                gp[i, c] = x
                if l1:
                    npos += x if x >= 0 else -x
                else:
                    npos += x * x
                x = E[nh[i], c] + R[pr[i], c] - E[nt[i], c]
                gn[i, c] = x
                if l1:
                    nneg += x if x >= 0 else -x
                else:
                    nneg += x * x
            if not l1:
                npos = sqrt(npos)
                nneg = sqrt(nneg)
            loss = npos - nneg + margin
            if loss <= 0.0:
                for c in range(d):
                    gp[i, c] = 0.0
                    gn[i, c] = 0.0
                continue
            total += loss
            for c in range(d):
                if l1:
                    x = gp[i, c]
                    gp[i, c] = 1.0 if x > 0 else (-1.0 if x < 0 else 0.0)
                    x = gn[i, c]
                    gn[i, c] = 1.0 if x > 0 else (-1.0 if x < 0 else 0.0)
                else:
                    gp[i, c] = gp[i, c] / npos if npos > 0 else 0.0
                    gn[i, c] = gn[i, c] / nneg if nneg > 0 else 0.0
        # write phase, role by role
        for i in range(B):
            for c in range(d):
                E[ph[i], c] -= lr * gp[i, c]
        for i in range(B):
            for c in range(d):
                R[pr[i], c] -= lr * (gp[i, c] - gn[i, c])
        for i in range(B):
            for c in range(d):
                E[pt[i], c] += lr * gp[i, c]
        for i in range(B):
            for c in range(d):
                E[nh[i], c] += lr * gn[i, c]
        for i in range(B):
            for c in range(d):
                E[nt[i], c] -= lr * gn[i, c]
    touched = np.unique(np.concatenate([ph, pt, nh, nt]))
    cdef const long long[::1] rows = touched
    with nogil:
        for k in range(rows.shape[0]):
            x = 0.0
            for c in range(d):
                x += E[rows[k], c] * E[rows[k], c]
            x = sqrt(x)
            if x > 0:
                for c in range(d):
                    E[rows[k], c] /= x
    return total
