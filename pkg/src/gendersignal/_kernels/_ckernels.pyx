# cython: language_level=3
"""Compiled inner loops: one-hot first convolution and exact kd-tree search."""
import numpy as np
cimport numpy as cnp
from cython cimport floating

cnp.import_array()


def onehot_conv_forward(const short[:, ::1] idx, const floating[:, :, ::1] wt,
                        const floating[::1] bias, floating[:, :, ::1] out):
    """out[b, t, :] = bias + sum_k wt[k, idx[b, t + k], :]; idx < 0 is a zero column."""
    cdef Py_ssize_t B = out.shape[0], T = out.shape[1], F = out.shape[2]
    cdef Py_ssize_t K = wt.shape[0]
    cdef Py_ssize_t b, t, k, f
    cdef short c
    with nogil:
        for b in range(B):
            for t in range(T):
                for f in range(F):
                    out[b, t, f] = bias[f]
                for k in range(K):
                    c = idx[b, t + k]
                    if c < 0:
                        continue
                    for f in range(F):
                        out[b, t, f] += wt[k, c, f]


def onehot_conv_backward(const short[:, ::1] idx, const floating[:, :, ::1] dout,
                         floating[:, :, ::1] dwt):
    """Accumulate dwt[k, idx[b, t + k], :] += dout[b, t, :]."""
    cdef Py_ssize_t B = dout.shape[0], T = dout.shape[1], F = dout.shape[2]
    cdef Py_ssize_t K = dwt.shape[0]
    cdef Py_ssize_t b, t, k, f
    cdef short c
    with nogil:
        for b in range(B):
            for t in range(T):
                for k in range(K):
                    c = idx[b, t + k]
                    if c < 0:
                        continue
                    for f in range(F):
                        dwt[k, c, f] += dout[b, t, f]


cdef inline double _box_lb(const double[:, ::1] lo, const double[:, ::1] hi,
                           Py_ssize_t node, const double[:, ::1] q, Py_ssize_t qi) noexcept nogil:
    cdef Py_ssize_t d, D = lo.shape[1]
    cdef double s = 0.0, x, diff
    for d in range(D):
        x = q[qi, d]
        if x < lo[node, d]:
            diff = lo[node, d] - x
            s += diff * diff
        elif x > hi[node, d]:
            diff = x - hi[node, d]
            s += diff * diff
    return s


def kdtree_query(const double[:, ::1] points, const long long[::1] perm,
                 const double[:, ::1] lo, const double[:, ::1] hi,
                 const long long[::1] start, const long long[::1] end,
                 const long long[::1] left, const long long[::1] right,
                 const double[:, ::1] queries, const long long[::1] exclude):
    """Exact nearest neighbour of each query.

    Ties in squared distance go to the smaller original index ``perm[i]``.
    ``exclude[j]`` (an original index, or -1) is never returned for query j.
    Returns (original index or -1, squared distance or inf).
    """
    cdef Py_ssize_t nq = queries.shape[0], D = points.shape[1]
    cdef Py_ssize_t depth = 8 * 64
    out_idx_arr = np.full(nq, -1, dtype=np.int64)
    out_d2_arr = np.full(nq, np.inf, dtype=np.float64)
    stack_arr = np.empty(depth, dtype=np.int64)
    cdef long long[::1] out_idx = out_idx_arr
    cdef double[::1] out_d2 = out_d2_arr
    cdef long long[::1] stack = stack_arr
    cdef Py_ssize_t qi, sp, node, i, d, a, c
    cdef long long best_i, key
    cdef double best, s, diff, lba, lbc
    if points.shape[0] == 0:
        return out_idx_arr, out_d2_arr
    with nogil:
        for qi in range(nq):
            best = 1.0 / 0.0
            best_i = -1
            sp = 0
            stack[sp] = 0
            sp += 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                if _box_lb(lo, hi, node, queries, qi) > best:
                    continue
                if left[node] < 0:
                    for i in range(start[node], end[node]):
                        key = perm[i]
                        if key == exclude[qi]:
                            continue
                        s = 0.0
                        for d in range(D):
                            diff = points[i, d] - queries[qi, d]
                            s += diff * diff
                        if s < best or (s == best and key < best_i):
                            best = s
                            best_i = key
                else:
                    a = left[node]
                    c = right[node]
                    lba = _box_lb(lo, hi, a, queries, qi)
                    lbc = _box_lb(lo, hi, c, queries, qi)
                    # nearer child on top of the stack
                    if lba <= lbc:
                        stack[sp] = c
                        stack[sp + 1] = a
                    else:
                        stack[sp] = a
                        stack[sp + 1] = c
                    sp += 2
            out_idx[qi] = best_i
            out_d2[qi] = best
    return out_idx_arr, out_d2_arr


def maxpool_forward(const floating[:, :, ::1] x, Py_ssize_t p, floating[:, :, ::1] out,
                    signed char[:, :, ::1] arg):
    """Non-overlapping max pool over axis 1; first maximum wins ties."""
    cdef Py_ssize_t B = out.shape[0], n = out.shape[1], F = out.shape[2]
    cdef Py_ssize_t b, i, j, f
    cdef floating v
    with nogil:
        for b in range(B):
            for i in range(n):
                for f in range(F):
                    out[b, i, f] = x[b, i * p, f]
                    arg[b, i, f] = 0
                for j in range(1, p):
                    for f in range(F):
                        v = x[b, i * p + j, f]
                        if v > out[b, i, f]:
                            out[b, i, f] = v
                            arg[b, i, f] = <signed char>j


def maxpool_backward(const floating[:, :, ::1] dout, const signed char[:, :, ::1] arg,
                     Py_ssize_t p, floating[:, :, ::1] dx):
    """Route each pooled gradient to its argmax; dx must be zeroed."""
    cdef Py_ssize_t B = dout.shape[0], n = dout.shape[1], F = dout.shape[2]
    cdef Py_ssize_t b, i, f
    with nogil:
        for b in range(B):
            for i in range(n):
                for f in range(F):
                    dx[b, i * p + arg[b, i, f], f] = dout[b, i, f]
