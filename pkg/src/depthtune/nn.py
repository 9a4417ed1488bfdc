"""Minimal numpy neural-network engine.

Dense, 2-D convolution and max-pooling layers with exact backward passes,
an MSE loss and an Adam optimizer. Every array is ``float64`` and carries a
leading batch axis; a network's ``input_shape`` excludes that axis.

Networks are described by a list of plain-dict layer specs so that they can
be rebuilt from a seed and serialized to the flat weight-file format::

    {"kind": "dense", "in": 13, "out": 100, "activation": "relu"}
    {"kind": "conv", "in_channels": 1, "out_channels": 8, "kernel": [3, 3],
     "stride": 1, "padding": 1, "activation": "relu"}
    {"kind": "maxpool", "window": [2, 2], "stride": [2, 2]}
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

ACTIVATIONS = ("relu", "identity", "softmax")


class NonFiniteError(FloatingPointError):
    """Raised when a NaN or infinity appears in a network computation."""


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite value in {what}")
    return arr


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def conv_output_size(size, kernel, stride, padding):
    out = (size + 2 * padding - kernel) // stride + 1
    if out < 1:
        raise ValueError(
            f"kernel {kernel} with padding {padding} does not fit input extent {size}"
        )
    return out


class Dense:
    """Fully-connected layer ``act(x @ W + b)``; flattens inputs of rank > 2."""

    kind = "dense"

    def __init__(self, in_dim, out_dim, activation="identity"):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.activation = activation
        self.weights = np.zeros((self.in_dim, self.out_dim))
        self.bias = np.zeros(self.out_dim)
        self._cache = None

    @property
    def params(self):
        return [self.weights, self.bias]

    def spec(self):
        return {"kind": "dense", "in": self.in_dim, "out": self.out_dim,
                "activation": self.activation}

    def output_shape(self, input_shape):
        if int(np.prod(input_shape)) != self.in_dim:
            raise ValueError(
                f"dense layer expects {self.in_dim} inputs, got shape {tuple(input_shape)}"
            )
        return (self.out_dim,)

    def fan(self):
        return self.in_dim, self.out_dim

    def forward(self, x, cache=True):
        x2 = x.reshape(x.shape[0], -1)
        z = x2 @ self.weights + self.bias
        if self.activation == "relu":
            out = np.maximum(z, 0.0)
        elif self.activation == "softmax":
            out = softmax(z)
        else:
            out = z
        if cache:
            self._cache = (x.shape, x2, z, out)
        return out

    def backward(self, dout):
        if self._cache is None:
            raise RuntimeError("backward called without a cached forward pass")
        in_shape, x2, z, out = self._cache
        if self.activation == "relu":
            dz = dout * (z > 0)
        elif self.activation == "softmax":
            # Jacobian-vector product of softmax, row by row
            dz = out * (dout - np.sum(dout * out, axis=1, keepdims=True))
        else:
            dz = dout
        grads = [x2.T @ dz, dz.sum(axis=0)]
        dx = (dz @ self.weights.T).reshape(in_shape)
        return dx, grads


class Conv2D:
    """Direct 2-D convolution over NCHW batches, implemented with im2col."""

    kind = "conv"

    def __init__(self, in_channels, out_channels, kernel=(3, 3), stride=1, padding=0,
                 activation="identity"):
        kh, kw = kernel
        if activation not in ("relu", "identity"):
            raise ValueError(f"unsupported conv activation {activation!r}")
        self.activation = activation
        if stride < 1 or padding < 0:
            raise ValueError("stride must be positive and padding non-negative")
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.kernel = (int(kh), int(kw))
        self.stride = int(stride)
        self.padding = int(padding)
        self.kernels = np.zeros((self.out_channels, self.in_channels, kh, kw))
        self.bias = np.zeros(self.out_channels)
        self._cache = None

    @property
    def params(self):
        return [self.kernels, self.bias]

    def spec(self):
        return {"kind": "conv", "in_channels": self.in_channels,
                "out_channels": self.out_channels, "kernel": list(self.kernel),
                "stride": self.stride, "padding": self.padding,
                "activation": self.activation}

    def output_shape(self, input_shape):
        if len(input_shape) != 3 or input_shape[0] != self.in_channels:
            raise ValueError(
                f"conv layer expects ({self.in_channels}, H, W) input, got {tuple(input_shape)}"
            )
        _, h, w = input_shape
        return (self.out_channels,
                conv_output_size(h, self.kernel[0], self.stride, self.padding),
                conv_output_size(w, self.kernel[1], self.stride, self.padding))

    def fan(self):
        kh, kw = self.kernel
        return self.in_channels * kh * kw, self.out_channels * kh * kw

    def forward(self, x, cache=True):
        p, s = self.padding, self.stride
        kh, kw = self.kernel
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        # (N, C, Ho, Wo, kh, kw)
        win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::s, ::s]
        n, c, ho, wo = win.shape[:4]
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * kh * kw)
        out = cols @ self.kernels.reshape(self.out_channels, -1).T + self.bias
        out = np.ascontiguousarray(out.reshape(n, ho, wo, self.out_channels).transpose(0, 3, 1, 2))
        if self.activation == "relu":
            out = np.maximum(out, 0.0)
        if cache:
            self._cache = (x.shape, xp.shape, cols, ho, wo, out)
        return out

    def backward(self, dout):
        if self._cache is None:
            raise RuntimeError("backward called without a cached forward pass")
        x_shape, xp_shape, cols, ho, wo, out = self._cache
        if self.activation == "relu":
            dout = dout * (out > 0)
        n = x_shape[0]
        p, s = self.padding, self.stride
        kh, kw = self.kernel
        d2 = dout.transpose(0, 2, 3, 1).reshape(n * ho * wo, self.out_channels)
        dk = (d2.T @ cols).reshape(self.kernels.shape)
        db = d2.sum(axis=0)
        dcols = (d2 @ self.kernels.reshape(self.out_channels, -1)).reshape(
            n, ho, wo, self.in_channels, kh, kw)
        dxp = np.zeros(xp_shape)
        for i in range(kh):
            for j in range(kw):
                dxp[:, :, i:i + s * ho:s, j:j + s * wo:s] += (
                    dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2))
        dx = dxp[:, :, p:p + x_shape[2], p:p + x_shape[3]] if p else dxp
        return dx, [dk, db]


class MaxPool2D:
    """Max pooling; the window stride defaults to the window size.

    Rows or columns left over after the last full window are dropped.
    Gradients route to the first maximum of each window.
    """

    kind = "maxpool"

    def __init__(self, window=(2, 2), stride=None):
        self.window = (int(window[0]), int(window[1]))
        stride = self.window if stride is None else stride
        self.stride = (int(stride[0]), int(stride[1]))
        if min(self.window) < 1 or min(self.stride) < 1:
            raise ValueError("pool window and stride must be positive")
        self._cache = None

    params = []

    def spec(self):
        return {"kind": "maxpool", "window": list(self.window), "stride": list(self.stride)}

    def output_shape(self, input_shape):
        if len(input_shape) != 3:
            raise ValueError(f"maxpool expects (C, H, W) input, got {tuple(input_shape)}")
        c, h, w = input_shape
        return (c, conv_output_size(h, self.window[0], self.stride[0], 0),
                conv_output_size(w, self.window[1], self.stride[1], 0))

    def fan(self):
        return None

    def forward(self, x, cache=True):
        ph, pw = self.window
        sh, sw = self.stride
        win = sliding_window_view(x, (ph, pw), axis=(2, 3))[:, :, ::sh, ::sw]
        flat = win.reshape(*win.shape[:4], ph * pw)
        idx = flat.argmax(axis=-1)
        out = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
        if cache:
            self._cache = (x.shape, idx)
        return out

    def backward(self, dout):
        if self._cache is None:
            raise RuntimeError("backward called without a cached forward pass")
        x_shape, idx = self._cache
        ph, pw = self.window
        sh, sw = self.stride
        n, c, ho, wo = idx.shape
        dx = np.zeros(x_shape)
        di, dj = np.divmod(idx, pw)
        rows = np.arange(ho)[None, None, :, None] * sh + di
        cols = np.arange(wo)[None, None, None, :] * sw + dj
        nn_ = np.arange(n)[:, None, None, None]
        cc = np.arange(c)[None, :, None, None]
        np.add.at(dx, (nn_, cc, rows, cols), dout)
        return dx, []


class Adam:
    """Adam with bias correction. Moments are allocated lazily per parameter."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0 or not 0 < beta1 < 1 or not 0 < beta2 < 1 or eps <= 0:
            raise ValueError("invalid Adam hyperparameters")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        if len(params) != len(grads):
            raise ValueError("gradient count does not match parameter count")
        for p, g in zip(params, grads):
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            _check_finite(g, "gradient")
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _make_layer(spec):
    kind = spec["kind"]
    if kind == "dense":
        return Dense(spec["in"], spec["out"], spec.get("activation", "identity"))
    if kind == "conv":
        return Conv2D(spec["in_channels"], spec["out_channels"], tuple(spec["kernel"]),
                      spec.get("stride", 1), spec.get("padding", 0),
                      spec.get("activation", "identity"))
    if kind == "maxpool":
        stride = spec.get("stride")
        return MaxPool2D(tuple(spec["window"]), tuple(stride) if stride else None)
    raise ValueError(f"unknown layer kind {kind!r}")


class Network:
    """An ordered stack of layers sharing one Adam state."""

    def __init__(self, input_shape, layers, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.input_shape = tuple(int(d) for d in input_shape)
        self.layers = list(layers)
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.output_shape(shape)
        self.output_shape = shape
        self.adam = Adam(lr, beta1, beta2, eps)
        self._has_cache = False

    @property
    def params(self):
        return [p for layer in self.layers for p in layer.params]

    def n_params(self):
        return sum(p.size for p in self.params)

    def layer_specs(self):
        return [layer.spec() for layer in self.layers]

    def forward(self, x, cache=True):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1:] != self.input_shape:
            raise ValueError(
                f"input shape {x.shape[1:]} does not match network input {self.input_shape}"
            )
        for layer in self.layers:
            x = layer.forward(x, cache=cache)
        _check_finite(x, "forward output")
        if cache:
            self._has_cache = True
        return x

    def backward(self, loss_grad):
        if not self._has_cache:
            raise RuntimeError("backward called without a cached forward pass")
        grads = []
        d = np.asarray(loss_grad, dtype=np.float64)
        for layer in reversed(self.layers):
            d, g = layer.backward(d)
            grads[:0] = g
        return grads

    def step(self, grads):
        self.adam.step(self.params, grads)
        for p in self.params:
            _check_finite(p, "parameters")
        return self

    def get_weights(self):
        return [p.copy() for p in self.params]

    def set_weights(self, weights):
        for p, w in zip(self.params, weights, strict=True):
            if p.shape != w.shape:
                raise ValueError(f"weight shape {w.shape} != parameter shape {p.shape}")
            p[...] = w


def forward(net, x):
    return net.forward(x, cache=True)


def backward(net, loss_grad):
    return net.backward(loss_grad)


def adam_step(net, grads):
    return net.step(grads)


def mse_loss(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


def mse_grad(pred, target):
    return 2.0 * (pred - target) / pred.size


def init_network(input_shape, specs, seed, lr=1e-3):
    """Build a network from layer specs with seeded Glorot-uniform weights.

    Biases start at zero. Weights are drawn layer by layer from a single
    generator, so the result is a pure function of ``(specs, seed)``.
    """
    layers = [_make_layer(s) for s in specs]
    net = Network(input_shape, layers, lr=lr)
    rng = np.random.default_rng(seed)
    for layer in layers:
        if not layer.params:
            continue
        fan_in, fan_out = layer.fan()
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = layer.params[0]
        w[...] = rng.uniform(-bound, bound, size=w.shape)
    return net


# Flat weight file:
#   4s  magic
#   <I  format version
#   <I  byte length of the UTF-8 JSON header
#   ... JSON header {"input_shape": [...], "layers": [...], "lr": float}
#   <Q  number of float64 values that follow
#   ... little-endian float64 parameters in declaration order
MAGIC = b"FMDL"
FORMAT_VERSION = 1


def save_network(net, path, magic=MAGIC):
    header = json.dumps({"input_shape": list(net.input_shape),
                         "layers": net.layer_specs(),
                         "lr": net.adam.lr}, sort_keys=True).encode("utf-8")
    flat = np.concatenate([p.ravel() for p in net.params]) if net.params else np.zeros(0)
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(header)))
        fh.write(header)
        fh.write(struct.pack("<Q", flat.size))
        fh.write(flat.astype("<f8").tobytes())


def load_network(path, magic=MAGIC):
    blob = Path(path).read_bytes()
    try:
        if blob[:4] != magic:
            raise ValueError(f"{path}: bad magic {blob[:4]!r}")
        version, hlen = struct.unpack_from("<II", blob, 4)
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        header = json.loads(blob[12:12 + hlen].decode("utf-8"))
        off = 12 + hlen
        (count,) = struct.unpack_from("<Q", blob, off)
        off += 8
        if len(blob) - off != 8 * count:
            raise ValueError(f"{path}: truncated parameter block")
        flat = np.frombuffer(blob, dtype="<f8", count=count, offset=off).astype(np.float64)
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: corrupt weight file ({exc})") from exc
    layers = [_make_layer(s) for s in header["layers"]]
    net = Network(header["input_shape"], layers, lr=header.get("lr", 1e-3))
    if count != net.n_params():
        raise ValueError(f"{path}: expected {net.n_params()} parameters, found {count}")
    pos = 0
    for p in net.params:
        p[...] = flat[pos:pos + p.size].reshape(p.shape)
        pos += p.size
    return net
