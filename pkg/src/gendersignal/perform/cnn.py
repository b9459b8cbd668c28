"""Character-level convolutional classifier with explicit backpropagation.

Architecture: six 1-d convolutions (ReLU, stride 1, no padding) with
non-overlapping max pooling after the first, second and sixth, followed by
two hidden fully connected ReLU layers with dropout after each, and a single
sigmoid output.  Activations are kept channels-last, ``(batch, length,
channels)``.  Inputs are character index arrays (``-1`` for zero columns),
so the first layer is a gather over the one-hot input instead of a dense
convolution.

Parameter shapes::

    conv{i}.W  (filters, in_channels, kernel_width)     conv{i}.b  (filters,)
    fc1.W      (hidden, flat_width)                     fc1.b      (hidden,)
    fc2.W      (hidden, hidden)                         fc2.b      (hidden,)
    fc3.W      (1, hidden)                              fc3.b      (1,)
"""
from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..errors import ConfigurationError
from .vocab import ALPHABET, DEFAULT_WINDOW, CharVocabulary, dense_to_indices

MODEL_VERSION = 1
PROB_EPS = 1e-7


@dataclass(frozen=True)
class HyperParams:
    """Training and architecture settings.

    Defaults are desk-scale; :meth:`full_size` gives the full-size widths.
    """

    n_filters: int = 64
    hidden: int = 128
    keep_prob: float = 0.5
    batch_size: int = 64
    learning_rate: float = 0.003
    momentum: float = 0.9
    lr_decay: float = 0.5  # step multiplier when the epoch loss stops improving
    epochs: int = 3
    seed: int = 0
    window: int = DEFAULT_WINDOW
    kernel_widths: tuple[int, ...] = (7, 7, 3, 3, 3, 3)
    pool_width: int = 3
    pool_after: tuple[int, ...] = (0, 1, 5)
    reverse: bool = False
    dtype: str = "float32"

    def __post_init__(self):
        for name in ("n_filters", "hidden", "batch_size", "window", "pool_width"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.epochs < 0 or self.learning_rate <= 0:
            raise ConfigurationError("epochs must be >= 0 and learning_rate > 0")
        if not 0 < self.keep_prob <= 1:
            raise ConfigurationError("keep_prob must be in (0, 1]")
        if len(self.kernel_widths) != 6 or min(self.kernel_widths) <= 0:
            raise ConfigurationError("need six positive kernel widths")
        object.__setattr__(self, "kernel_widths", tuple(int(k) for k in self.kernel_widths))
        object.__setattr__(self, "pool_after", tuple(int(k) for k in self.pool_after))

    @classmethod
    def full_size(cls, **kw) -> "HyperParams":
        return cls(**{"n_filters": 256, "hidden": 1024, "batch_size": 512, **kw})

    def replace(self, **kw) -> "HyperParams":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["kernel_widths"] = list(self.kernel_widths)
        d["pool_after"] = list(self.pool_after)
        return d


def layer_lengths(hp: HyperParams) -> list[int]:
    """Sequence length after each conv (and its pooling, if any)."""
    n = hp.window
    out = []
    for i, k in enumerate(hp.kernel_widths):
        n = n - k + 1
        if i in hp.pool_after:
            n //= hp.pool_width
        if n <= 0:
            raise ConfigurationError(
                f"window {hp.window} too short: layer {i + 1} output length {n}")
        out.append(n)
    return out


def flat_width(hp: HyperParams) -> int:
    return layer_lengths(hp)[-1] * hp.n_filters


@dataclass
class CnnModel:
    hp: HyperParams
    params: dict[str, np.ndarray]
    alphabet: str = ALPHABET
    version: int = MODEL_VERSION

    @property
    def vocab(self) -> CharVocabulary:
        return CharVocabulary(self.alphabet)

    def copy(self) -> "CnnModel":
        return CnnModel(self.hp, {k: v.copy() for k, v in self.params.items()}, self.alphabet, self.version)

    def astype(self, dtype) -> "CnnModel":
        return CnnModel(self.hp, {k: v.astype(dtype) for k, v in self.params.items()},
                        self.alphabet, self.version)

    def param_names(self) -> list[str]:
        return list(self.params)

    def check_shapes(self) -> None:
        expected = param_shapes(self.hp, len(self.alphabet))
        for name, shape in expected.items():
            got = self.params.get(name)
            if got is None or got.shape != shape:
                raise ConfigurationError(
                    f"parameter {name}: expected shape {shape}, got {None if got is None else got.shape}")


def param_shapes(hp: HyperParams, n_chars: int = len(ALPHABET)) -> dict[str, tuple[int, ...]]:
    shapes = {}
    c = n_chars
    for i, k in enumerate(hp.kernel_widths):
        shapes[f"conv{i + 1}.W"] = (hp.n_filters, c, k)
        shapes[f"conv{i + 1}.b"] = (hp.n_filters,)
        c = hp.n_filters
    shapes["fc1.W"] = (hp.hidden, flat_width(hp))
    shapes["fc1.b"] = (hp.hidden,)
    shapes["fc2.W"] = (hp.hidden, hp.hidden)
    shapes["fc2.b"] = (hp.hidden,)
    shapes["fc3.W"] = (1, hp.hidden)
    shapes["fc3.b"] = (1,)
    return shapes


def init_model(hp: HyperParams, alphabet: str = ALPHABET) -> CnnModel:
    """Zero biases; weights uniform in +-sqrt(6 / fan_in), seeded by ``hp.seed``."""
    rng = np.random.default_rng([hp.seed, 0])
    params = {}
    for name, shape in param_shapes(hp, len(alphabet)).items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape, dtype=hp.dtype)
        else:
            fan_in = int(np.prod(shape[1:]))
            bound = np.sqrt(6.0 / fan_in)
            params[name] = rng.uniform(-bound, bound, size=shape).astype(hp.dtype)
    return CnnModel(hp, params, alphabet)


# -- layers --------------------------------------------------------------

def _as_indices(x, n_chars: int) -> np.ndarray:
    x = np.asarray(x)
    if x.dtype in (np.uint8, np.bool_):  # quantized one-hot matrices
        if x.shape[-2] != n_chars:
            raise ConfigurationError(f"quantized input has {x.shape[-2]} rows, model expects {n_chars}")
        x = dense_to_indices(x)
    if x.ndim == 1:
        x = x[None, :]
    return np.ascontiguousarray(x, dtype=np.int16)


def _pool_forward(x: np.ndarray, p: int):
    B, T, F = x.shape
    n = T // p
    out = np.empty((B, n, F), dtype=x.dtype)
    arg = np.empty((B, n, F), dtype=np.int8)
    _kernels.maxpool_forward(x, p, out, arg)
    return out, (arg, T)


def _pool_backward(dout: np.ndarray, cache, p: int) -> np.ndarray:
    arg, T = cache
    B, n, F = dout.shape
    dx = np.zeros((B, T, F), dtype=dout.dtype)
    _kernels.maxpool_backward(np.ascontiguousarray(dout), arg, p, dx)
    return dx


def _im2col(x: np.ndarray, K: int) -> np.ndarray:
    """(B, L, C) -> (B*T, K*C) with window offset major, channel minor."""
    B, L, C = x.shape
    T = L - K + 1
    cols = np.empty((B, T, K, C), dtype=x.dtype)
    for k in range(K):
        cols[:, :, k, :] = x[:, k:k + T, :]
    return cols.reshape(B * T, K * C)


def _conv_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray):
    B, L, C = x.shape
    F, _, K = W.shape
    T = L - K + 1
    cols = _im2col(x, K)
    out = cols @ W.transpose(0, 2, 1).reshape(F, K * C).T
    out += b
    return out.reshape(B, T, F), cols


def _conv_backward(dout: np.ndarray, cols: np.ndarray, W: np.ndarray, L: int):
    B, T, F = dout.shape
    _, C, K = W.shape
    d2 = dout.reshape(B * T, F)
    dW = (d2.T @ cols).reshape(F, K, C).transpose(0, 2, 1)
    db = d2.sum(axis=0)
    dcols = (d2 @ W.transpose(0, 2, 1).reshape(F, K * C)).reshape(B, T, K, C)
    dx = np.zeros((B, L, C), dtype=dout.dtype)
    for k in range(K):
        dx[:, k:k + T, :] += dcols[:, :, k, :]
    return dx, dW, db


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class _Cache:
    idx: np.ndarray
    convs: list = field(default_factory=list)  # per layer: (input len, cols or None, pre-relu, pool cache)
    fc: dict = field(default_factory=dict)


def _forward(model: CnnModel, idx: np.ndarray, train_mode: bool, rng, keep_cache: bool):
    hp = model.hp
    P = model.params
    dtype = P["conv1.W"].dtype
    cache = _Cache(idx) if keep_cache else None
    B, L = idx.shape
    if L != hp.window:
        raise ConfigurationError(f"input length {L} != model window {hp.window}")

    K1 = hp.kernel_widths[0]
    T1 = L - K1 + 1
    wt = np.ascontiguousarray(P["conv1.W"].transpose(2, 1, 0))
    z = np.empty((B, T1, hp.n_filters), dtype=dtype)
    _kernels.onehot_conv_forward(idx, wt, P["conv1.b"], z)
    h = np.maximum(z, 0)
    cols = None
    for i in range(6):
        if i > 0:
            Lin = h.shape[1]
            z, cols = _conv_forward(h, P[f"conv{i + 1}.W"], P[f"conv{i + 1}.b"])
            h = np.maximum(z, 0)
        else:
            Lin = L
        pc = None
        if i in hp.pool_after:
            h, pc = _pool_forward(h, hp.pool_width)
        if keep_cache:
            cache.convs.append((Lin, cols, z, pc))

    flat = h.reshape(B, -1)
    a1 = flat @ P["fc1.W"].T + P["fc1.b"]
    r1 = np.maximum(a1, 0)
    m1 = m2 = None
    if train_mode and hp.keep_prob < 1:
        m1 = (rng.random(r1.shape) < hp.keep_prob).astype(dtype) / dtype.type(hp.keep_prob)
        r1 = r1 * m1
    a2 = r1 @ P["fc2.W"].T + P["fc2.b"]
    r2 = np.maximum(a2, 0)
    if train_mode and hp.keep_prob < 1:
        m2 = (rng.random(r2.shape) < hp.keep_prob).astype(dtype) / dtype.type(hp.keep_prob)
        r2 = r2 * m2
    logit = (r2 @ P["fc3.W"].T + P["fc3.b"])[:, 0]
    p = _sigmoid(logit)
    if keep_cache:
        cache.fc = dict(flat=flat, a1=a1, r1=r1, m1=m1, a2=a2, r2=r2, m2=m2, shape=h.shape)
    return p, cache


def cnn_forward(model: CnnModel, inputs, train_mode: bool = False, seed: int | None = None) -> np.ndarray:
    """Probability that each input was written by a man-signaling author.

    ``inputs`` is a quantized matrix, a stack of them, or character index
    arrays.  Dropout is applied only in ``train_mode``, with masks drawn from
    ``seed``.
    """
    idx = _as_indices(inputs, len(model.alphabet))
    rng = np.random.default_rng(seed) if train_mode else None
    p, _ = _forward(model, idx, train_mode, rng, keep_cache=False)
    return p


def cnn_loss(model: CnnModel, inputs, labels, train_mode: bool = False, seed: int | None = None) -> float:
    """Mean clipped binary cross-entropy (forward pass only)."""
    p = cnn_forward(model, inputs, train_mode, seed).astype(np.float64)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    pc = np.clip(p, PROB_EPS, 1 - PROB_EPS)
    return float(-np.mean(y * np.log(pc) + (1 - y) * np.log1p(-pc)))


def cnn_loss_and_gradient(model: CnnModel, inputs, labels, train_mode: bool = False,
                          seed: int | None = None, rng=None):
    """Mean binary cross-entropy over the batch and its gradient for every
    parameter.  Probabilities are clipped to [1e-7, 1 - 1e-7] inside the loss."""
    idx = _as_indices(inputs, len(model.alphabet))
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if idx.shape[0] == 0 or idx.shape[0] != y.size:
        raise ConfigurationError("batch must be non-empty with one label per input")
    if rng is None and train_mode:
        rng = np.random.default_rng(seed)
    hp = model.hp
    P = model.params
    dtype = P["conv1.W"].dtype
    p, cache = _forward(model, idx, train_mode, rng, keep_cache=True)
    B = idx.shape[0]

    pc = np.clip(p.astype(np.float64), PROB_EPS, 1 - PROB_EPS)
    loss = float(-np.mean(y * np.log(pc) + (1 - y) * np.log1p(-pc)))
    inside = (p > PROB_EPS) & (p < 1 - PROB_EPS)
    dlogit = (np.where(inside, p.astype(np.float64) - y, 0.0) / B).astype(dtype)

    g = {}
    fc = cache.fc
    g["fc3.W"] = dlogit[None, :] @ fc["r2"]
    g["fc3.b"] = np.array([dlogit.sum()], dtype=dtype)
    dr2 = dlogit[:, None] * P["fc3.W"]
    if fc["m2"] is not None:
        dr2 = dr2 * fc["m2"]
    da2 = dr2 * (fc["a2"] > 0)
    r1 = fc["r1"]
    g["fc2.W"] = da2.T @ r1
    g["fc2.b"] = da2.sum(axis=0)
    dr1 = da2 @ P["fc2.W"]
    if fc["m1"] is not None:
        dr1 = dr1 * fc["m1"]
    da1 = dr1 * (fc["a1"] > 0)
    g["fc1.W"] = da1.T @ fc["flat"]
    g["fc1.b"] = da1.sum(axis=0)
    dh = (da1 @ P["fc1.W"]).reshape(fc["shape"])

    for i in range(5, -1, -1):
        Lin, cols, z, pcache = cache.convs[i]
        if pcache is not None:
            dh = _pool_backward(dh, pcache, hp.pool_width)
        dz = dh * (z > 0)
        if i > 0:
            dh, g[f"conv{i + 1}.W"], g[f"conv{i + 1}.b"] = _conv_backward(dz, cols, P[f"conv{i + 1}.W"], Lin)
        else:
            K1 = hp.kernel_widths[0]
            dwt = np.zeros((K1, len(model.alphabet), hp.n_filters), dtype=dtype)
            _kernels.onehot_conv_backward(cache.idx, np.ascontiguousarray(dz), dwt)
            g["conv1.W"] = np.ascontiguousarray(dwt.transpose(2, 1, 0))
            g["conv1.b"] = dz.sum(axis=(0, 1))
    grads = {k: g[k].astype(dtype, copy=False) for k in P}
    return loss, grads


# -- checkpoint ----------------------------------------------------------

_MAGIC = b"GSCNN\0"


def save_checkpoint(model: CnnModel, path) -> None:
    """Write a portable checkpoint.

    Layout (all integers little-endian)::

        6 bytes   magic  b"GSCNN\\0"
        uint32    format version
        uint32    header length n, then n bytes of UTF-8 JSON:
                  {"hyperparams": {...}, "alphabet": "...", "tensors": [names]}
        per tensor, in header order:
            uint8   ndim
            uint32  each dimension
            float32 data, C order
    """
    names = list(model.params)
    header = json.dumps({"hyperparams": model.hp.to_dict(), "alphabet": model.alphabet,
                         "tensors": names}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", model.version, len(header)))
        fh.write(header)
        for name in names:
            a = np.ascontiguousarray(model.params[name], dtype="<f4")
            fh.write(struct.pack("<B", a.ndim))
            fh.write(struct.pack(f"<{a.ndim}I", *a.shape))
            fh.write(a.tobytes())


def load_checkpoint(path) -> CnnModel:
    from ..errors import DataError

    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise DataError(f"{path} is not a model checkpoint")
        version, n = struct.unpack("<II", fh.read(8))
        if version != MODEL_VERSION:
            raise DataError(f"unsupported checkpoint version {version}")
        header = json.loads(fh.read(n).decode("utf-8"))
        hpd = header["hyperparams"]
        hpd["kernel_widths"] = tuple(hpd["kernel_widths"])
        hpd["pool_after"] = tuple(hpd["pool_after"])
        hp = HyperParams(**hpd)
        params = {}
        for name in header["tensors"]:
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            count = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(fh.read(4 * count), dtype="<f4").reshape(shape)
            params[name] = data.astype(hp.dtype)
    model = CnnModel(hp, params, header["alphabet"], version)
    model.check_shapes()
    return model
