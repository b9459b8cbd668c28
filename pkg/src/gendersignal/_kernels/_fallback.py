"""Pure numpy/scipy versions of the compiled kernels (same signatures)."""
import numpy as np
from scipy import sparse


def onehot_conv_forward(idx, wt, bias, out):
    K, V, F = wt.shape
    B, T, _ = out.shape
    # extra zero row so that idx == -1 gathers zeros
    wpad = np.concatenate([wt, np.zeros((K, 1, F), dtype=wt.dtype)], axis=1)
    pidx = np.where(idx < 0, V, idx)
    out[...] = bias
    for k in range(K):
        out += wpad[k][pidx[:, k:k + T]]


def onehot_conv_backward(idx, dout, dwt):
    K, V, F = dwt.shape
    B, T, _ = dout.shape
    flat = dout.reshape(B * T, F)
    cols = np.arange(B * T)
    for k in range(K):
        rows = idx[:, k:k + T].reshape(-1)
        keep = rows >= 0
        m = sparse.csr_matrix(
            (np.ones(int(keep.sum()), dtype=dout.dtype), (rows[keep], cols[keep])),
            shape=(V, B * T),
        )
        dwt[k] += m @ flat


def _box_lb(lo, hi, q):
    s = 0.0
    for d in range(q.shape[0]):
        x = q[d]
        if x < lo[d]:
            diff = lo[d] - x
            s += diff * diff
        elif x > hi[d]:
            diff = x - hi[d]
            s += diff * diff
    return s


def kdtree_query(points, perm, lo, hi, start, end, left, right, queries, exclude):
    nq, D = queries.shape
    out_idx = np.full(nq, -1, dtype=np.int64)
    out_d2 = np.full(nq, np.inf)
    if points.shape[0] == 0:
        return out_idx, out_d2
    for qi in range(nq):
        q = queries[qi]
        best, best_i = np.inf, -1
        stack = [0]
        while stack:
            node = stack.pop()
            if _box_lb(lo[node], hi[node], q) > best:
                continue
            if left[node] < 0:
                pts = points[start[node]:end[node]]
                s = (pts[:, 0] - q[0]) * (pts[:, 0] - q[0])
                for d in range(1, D):
                    diff = pts[:, d] - q[d]
                    s = s + diff * diff
                keys = perm[start[node]:end[node]]
                s = np.where(keys == exclude[qi], np.inf, s)
                j = np.argmin(s)
                m = s[j]
                if m == np.inf:
                    continue
                kmin = keys[s == m].min()
                if m < best or (m == best and kmin < best_i):
                    best, best_i = float(m), int(kmin)
            else:
                a, c = left[node], right[node]
                if _box_lb(lo[a], hi[a], q) <= _box_lb(lo[c], hi[c], q):
                    stack.extend((c, a))
                else:
                    stack.extend((a, c))
        out_idx[qi] = best_i
        out_d2[qi] = best
    return out_idx, out_d2


def maxpool_forward(x, p, out, arg):
    B, n, F = out.shape
    blocks = x[:, : n * p].reshape(B, n, p, F)
    a = blocks.argmax(axis=2)
    arg[...] = a
    out[...] = np.take_along_axis(blocks, a[:, :, None, :], axis=2)[:, :, 0, :]


def maxpool_backward(dout, arg, p, dx):
    B, n, F = dout.shape
    blocks = dx[:, : n * p].reshape(B, n, p, F)
    np.put_along_axis(blocks, arg[:, :, None, :].astype(np.intp), dout[:, :, None, :], axis=2)
