"""Toy trainable encoders for the visual and text views.

Encoders are immutable values; ``apply_gradients`` returns a new encoder.
"""
import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DimMismatch
from .numerics import as_matrix, l2_normalize_rows, make_rng, row_norms, _check_nonzero

KINDS = ("linear", "linear_normalized")
CHECKPOINT_MAGIC = b"DCOTCKPT"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True, eq=False)
class Encoder:
    weights: np.ndarray  # out_dim x in_dim
    bias: np.ndarray
    kind: str = "linear_normalized"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown encoder kind {self.kind!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise DimMismatch("encoder weight/bias shapes are inconsistent")
        self.weights.setflags(write=False)
        self.bias.setflags(write=False)

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]

    def params(self):
        return np.concatenate([self.weights.ravel(), self.bias])

    def with_params(self, flat):
        n = self.weights.size
        return replace(self, weights=np.array(flat[:n]).reshape(self.weights.shape),
                       bias=np.array(flat[n:n + self.out_dim]))

    def __eq__(self, other):
        return (isinstance(other, Encoder) and self.kind == other.kind
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.bias, other.bias))


@dataclass(frozen=True, eq=False)
class ModelBundle:
    visual: Encoder
    text: Encoder
    source: Encoder = None  # only used when share_text is False

    def __post_init__(self):
        if self.visual.out_dim != self.text.out_dim:
            raise DimMismatch("visual and text encoders must share out_dim")
        if self.source is not None and self.source.out_dim != self.text.out_dim:
            raise DimMismatch("source encoder must share out_dim")

    @property
    def share_text(self):
        return self.source is None

    @property
    def source_encoder(self):
        return self.text if self.source is None else self.source

    def encoders(self):
        out = {"visual": self.visual, "text": self.text}
        if self.source is not None:
            out["source"] = self.source
        return out

    def __eq__(self, other):
        return isinstance(other, ModelBundle) and self.encoders() == other.encoders()


@dataclass
class TripletEmbeddingBatch:
    v_emb: np.ndarray
    s_emb: np.ndarray
    t_emb: np.ndarray
    indices: np.ndarray = None

    def __post_init__(self):
        m = self.v_emb.shape[0]
        if self.s_emb.shape[0] != m or self.t_emb.shape[0] != m:
            raise DimMismatch("batch views have different row counts")
        if self.indices is None:
            self.indices = np.arange(m)

    def __len__(self):
        return self.v_emb.shape[0]


def init_encoder(in_dim, out_dim, kind="linear_normalized", seed=0):
    if in_dim < 1 or out_dim < 1:
        raise ConfigError("encoder dims must be >= 1")
    bound = 1.0 / np.sqrt(in_dim)
    W = make_rng(seed).uniform(-bound, bound, size=(out_dim, in_dim))
    return Encoder(W, np.zeros(out_dim), kind)


def init_bundle(in_dims, out_dim, kind="linear_normalized", seed=0, share_text=True):
    """Encoders for (visual, source, target) raw dims; seeds are derived from ``seed``."""
    v_dim, s_dim, t_dim = in_dims
    visual = init_encoder(v_dim, out_dim, kind, seed=seed * 3 + 1)
    text = init_encoder(t_dim, out_dim, kind, seed=seed * 3 + 2)
    source = None
    if share_text:
        if s_dim != t_dim:
            raise DimMismatch("a shared text encoder needs equal source and target dims")
    else:
        source = init_encoder(s_dim, out_dim, kind, seed=seed * 3 + 3)
    return ModelBundle(visual, text, source)


def _pre_activation(enc, X):
    X = as_matrix(X)
    if X.shape[1] != enc.in_dim:
        raise DimMismatch(f"input dim {X.shape[1]} != encoder in_dim {enc.in_dim}")
    return X @ enc.weights.T + enc.bias


def encode(enc, X):
    Z = _pre_activation(enc, X)
    if enc.kind == "linear_normalized":
        return l2_normalize_rows(Z)
    return Z


def encode_with_cache(enc, X):
    """Forward pass that keeps what ``encoder_backward`` needs."""
    X = as_matrix(X)
    Z = _pre_activation(enc, X)
    if enc.kind == "linear":
        return Z, (X, None, None)
    norms = row_norms(Z)
    _check_nonzero(norms)
    Y = Z / norms[:, None]
    return Y, (X, Y, norms)


def encoder_backward(enc, cache, dY):
    """Gradients ``(dW, db)`` given the upstream gradient w.r.t. the encoder output."""
    X, Y, norms = cache
    if enc.kind == "linear_normalized":
        dY = (dY - Y * np.einsum("ij,ij->i", Y, dY)[:, None]) / norms[:, None]
    return dY.T @ X, dY.sum(axis=0)


def apply_gradients(enc, grads, lr):
    """Plain gradient descent step; ``grads`` is ``(dW, db)``."""
    dW, db = grads
    dW = np.asarray(dW, dtype=np.float64)
    db = np.asarray(db, dtype=np.float64)
    if dW.shape != enc.weights.shape or db.shape != enc.bias.shape:
        raise DimMismatch("gradient shapes do not match the encoder")
    if not lr >= 0:
        raise ConfigError("learning rate must be non-negative")
    return replace(enc, weights=enc.weights - lr * dW, bias=enc.bias - lr * db)


# -- checkpoint I/O -------------------------------------------------------
#
# Layout (little-endian): magic "DCOTCKPT", u32 version, u32 encoder count,
# then per encoder: u16 name length, name (utf-8), u8 kind index,
# u32 out_dim, u32 in_dim, out_dim*in_dim f64 weights (row-major),
# out_dim f64 bias.

def save_checkpoint(bundle, path):
    encs = bundle.encoders()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(encs)))
        for name, enc in encs.items():
            raw = name.encode()
            fh.write(struct.pack("<H", len(raw)) + raw)
            fh.write(struct.pack("<BII", KINDS.index(enc.kind), enc.out_dim, enc.in_dim))
            fh.write(np.ascontiguousarray(enc.weights, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(enc.bias, dtype="<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != CHECKPOINT_MAGIC:
        raise ConfigError(f"{path} is not a checkpoint")
    version, count = struct.unpack_from("<II", data, 8)
    if version != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {version}")
    pos = 16
    encs = {}
    for _ in range(count):
        (n,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos:pos + n].decode()
        pos += n
        kind, out_dim, in_dim = struct.unpack_from("<BII", data, pos)
        pos += 9
        W = np.frombuffer(data, "<f8", out_dim * in_dim, pos).reshape(out_dim, in_dim).astype(np.float64)
        pos += 8 * out_dim * in_dim
        b = np.frombuffer(data, "<f8", out_dim, pos).astype(np.float64)
        pos += 8 * out_dim
        encs[name] = Encoder(W, b, KINDS[kind])
    return ModelBundle(encs["visual"], encs["text"], encs.get("source"))
