import numpy as np
import pytest

from gendersignal import _kernels

compiled = _kernels.BACKENDS.get("compiled")
py = _kernels.BACKENDS["python"]
pytestmark = pytest.mark.skipif(compiled is None, reason="extension not built")


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_onehot_conv(rng, dtype):
    B, L, K, V, F = 3, 40, 7, 69, 5
    idx = rng.integers(-1, V, size=(B, L)).astype(np.int16)
    wt = rng.normal(size=(K, V, F)).astype(dtype)
    bias = rng.normal(size=F).astype(dtype)
    T = L - K + 1
    a = np.empty((B, T, F), dtype=dtype)
    b = np.empty_like(a)
    py.onehot_conv_forward(idx, wt, bias, a)
    compiled.onehot_conv_forward(idx, wt, bias, b)
    assert np.allclose(a, b, rtol=1e-5 if dtype == np.float32 else 1e-12)
    dout = rng.normal(size=(B, T, F)).astype(dtype)
    ga = np.zeros_like(wt)
    gb = np.zeros_like(wt)
    py.onehot_conv_backward(idx, dout, ga)
    compiled.onehot_conv_backward(idx, dout, gb)
    assert np.allclose(ga, gb, rtol=1e-4 if dtype == np.float32 else 1e-12, atol=1e-5)


@pytest.mark.parametrize("p", [2, 3])
def test_maxpool(rng, p):
    x = np.round(rng.normal(size=(2, 31, 4)), 1)  # rounding makes ties
    n = 31 // p
    outs, args = [], []
    for k in (py, compiled):
        out = np.empty((2, n, 4))
        arg = np.empty((2, n, 4), dtype=np.int8)
        k.maxpool_forward(x, p, out, arg)
        outs.append(out)
        args.append(arg)
    assert np.array_equal(*outs) and np.array_equal(*args)
    dout = rng.normal(size=(2, n, 4))
    dxs = []
    for k in (py, compiled):
        dx = np.zeros_like(x)
        k.maxpool_backward(dout, args[0], p, dx)
        dxs.append(dx)
    assert np.array_equal(*dxs)
    assert dxs[0][:, n * p:].sum() == 0


def test_kdtree_backends_agree(rng):
    from gendersignal.matching import KDTree
    P = np.round(rng.normal(size=(500, 5)), 1)
    tree = KDTree(P, leaf_size=8)
    Q = np.round(rng.normal(size=(200, 5)), 1)
    ex = rng.integers(-1, 500, size=200)
    a = tree.query(Q, ex, backend="python")
    b = tree.query(Q, ex, backend="compiled")
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_backend_switch():
    assert _kernels.BACKEND in _kernels.BACKENDS
    assert _kernels.get_backend("python") is py
