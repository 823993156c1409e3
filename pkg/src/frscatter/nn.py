"""From-scratch numpy layers, decoder architectures, and Adam.

Two decoder families are provided:

* ``g1_build``: fully-connected head (flat vector in), then
  upsample / 7x7 conv / batch-norm / relu blocks, final 7x7 conv + tanh.
* ``g2_build``: 1x1 convolution head (spatial tensor in), then blocks of
  [bilinear upsample x2, 3x3 conv, BN, relu, 3x3 conv, BN, relu] with
  channel widths halving per block (floor 16), final 3x3 conv + tanh.

All convolutions are stride 1 with zero padding preserving spatial size.
Every layer implements exact reverse-mode gradients, including the
batch-statistics pathway of batch normalization.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .tensorio import SeededRng, tensor_read, tensor_write

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_channels: int = 0
    out_channels: int = 0
    extra: tuple = ()


class Layer:
    """Base layer: trainable ``params``/``grads`` dicts plus a forward cache."""

    spec: LayerSpec

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, gout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _need_cache(self):
        if self._cache is None:
            raise RuntimeError("backward called without a cached train-mode forward")


def _uniform_init(rng: SeededRng, shape, fan_in: int) -> np.ndarray:
    b = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-b, b, int(np.prod(shape))).reshape(shape)


class Dense(Layer):
    """Fully connected layer mapping flat vectors to a (C, H, W) tensor."""

    def __init__(self, in_dim: int, out_shape: tuple, rng: SeededRng):
        super().__init__()
        self.in_dim = in_dim
        self.out_shape = tuple(out_shape)
        out_dim = int(np.prod(out_shape))
        self.params["w"] = _uniform_init(rng, (out_dim, in_dim), in_dim)
        self.params["b"] = np.zeros(out_dim)
        self.spec = LayerSpec("fully_connected", in_dim, out_dim, self.out_shape)

    def forward(self, x, train):
        x = x.reshape(x.shape[0], -1)
        if x.shape[1] != self.in_dim:
            raise ValueError(f"expected input dim {self.in_dim}, got {x.shape[1]}")
        y = x @ self.params["w"].T + self.params["b"]
        if train:
            self._cache = x
        return y.reshape(x.shape[0], *self.out_shape)

    def backward(self, gout):
        self._need_cache()
        x = self._cache
        g = gout.reshape(x.shape[0], -1)
        self.grads["w"] = g.T @ x
        self.grads["b"] = g.sum(axis=0)
        return g @ self.params["w"]


class Conv2d(Layer):
    """Same-size convolution, stride 1, zero padding k//2 (k odd)."""

    def __init__(self, in_ch: int, out_ch: int, kernel: int, rng: SeededRng):
        super().__init__()
        assert kernel % 2 == 1
        self.k = kernel
        self.in_ch, self.out_ch = in_ch, out_ch
        fan_in = in_ch * kernel * kernel
        self.params["w"] = _uniform_init(rng, (out_ch, in_ch, kernel, kernel), fan_in)
        self.params["b"] = np.zeros(out_ch)
        kind = {1: "fully_conv", 3: "conv3x3", 7: "conv7x7"}.get(kernel, f"conv{kernel}x{kernel}")
        self.spec = LayerSpec(kind, in_ch, out_ch, (kernel,))

    def forward(self, x, train):
        if x.shape[1] != self.in_ch:
            raise ValueError(f"expected {self.in_ch} channels, got {x.shape[1]}")
        n, _, h, w = x.shape
        p = self.k // 2
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        wgt = self.params["w"]
        y = np.empty((n, self.out_ch, h, w))
        y[:] = self.params["b"][None, :, None, None]
        for di in range(self.k):
            for dj in range(self.k):
                y += np.einsum(
                    "oc,nchw->nohw", wgt[:, :, di, dj], xp[:, :, di:di + h, dj:dj + w],
                    optimize=True,
                )
        if train:
            self._cache = (xp, x.shape)
        return y

    def backward(self, gout):
        self._need_cache()
        xp, xshape = self._cache
        n, _, h, w = xshape
        wgt = self.params["w"]
        gw = np.empty_like(wgt)
        gxp = np.zeros_like(xp)
        for di in range(self.k):
            for dj in range(self.k):
                patch = xp[:, :, di:di + h, dj:dj + w]
                gw[:, :, di, dj] = np.tensordot(gout, patch, axes=([0, 2, 3], [0, 2, 3]))
                gxp[:, :, di:di + h, dj:dj + w] += np.einsum(
                    "nohw,oc->nchw", gout, wgt[:, :, di, dj], optimize=True,
                )
        self.grads["w"] = gw
        self.grads["b"] = gout.sum(axis=(0, 2, 3))
        p = self.k // 2
        return gxp[:, :, p:p + h, p:p + w] if p else gxp


def _bilinear_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Row-stochastic interpolation matrix (align_corners=False convention)."""
    a = np.zeros((n_out, n_in))
    for i in range(n_out):
        src = np.clip((i + 0.5) / 2.0 - 0.5, 0.0, n_in - 1.0)
        lo = int(math.floor(src))
        hi = min(lo + 1, n_in - 1)
        frac = src - lo
        a[i, lo] += 1.0 - frac
        a[i, hi] += frac
    return a


class BilinearUp2(Layer):
    """Bilinear upsampling that exactly doubles both spatial dimensions."""

    def __init__(self):
        super().__init__()
        self._mats: dict[int, np.ndarray] = {}
        self.spec = LayerSpec("bilinear_upsample_x2")

    def _mat(self, n):
        if n not in self._mats:
            self._mats[n] = _bilinear_matrix(2 * n, n)
        return self._mats[n]

    def forward(self, x, train):
        ah, aw = self._mat(x.shape[2]), self._mat(x.shape[3])
        y = np.einsum("ij,ncjw->nciw", ah, x, optimize=True)
        y = np.einsum("kl,ncil->ncik", aw, y, optimize=True)
        if train:
            self._cache = (ah, aw)
        return y

    def backward(self, gout):
        self._need_cache()
        ah, aw = self._cache
        g = np.einsum("kl,ncik->ncil", aw, gout, optimize=True)
        return np.einsum("ij,nciw->ncjw", ah, g, optimize=True)


class BatchNorm2d(Layer):
    """Per-channel batch normalization with running statistics."""

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.spec = LayerSpec("batch_norm", channels, channels)

    def forward(self, x, train):
        if x.shape[1] != self.channels:
            raise ValueError("channel mismatch in batch norm")
        if train:
            if x.shape[0] < 2:
                raise ValueError("train-mode batch norm requires batch size >= 2")
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            self.running_mean = (1 - BN_MOMENTUM) * self.running_mean + BN_MOMENTUM * mean
            self.running_var = (1 - BN_MOMENTUM) * self.running_var + BN_MOMENTUM * var
        else:
            mean, var = self.running_mean, self.running_var
        inv = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (x - mean[None, :, None, None]) * inv[None, :, None, None]
        y = self.params["gamma"][None, :, None, None] * xhat + self.params["beta"][None, :, None, None]
        if train:
            self._cache = (xhat, inv)
        return y

    def backward(self, gout):
        self._need_cache()
        xhat, inv = self._cache
        self.grads["gamma"] = (gout * xhat).sum(axis=(0, 2, 3))
        self.grads["beta"] = gout.sum(axis=(0, 2, 3))
        m = gout.shape[0] * gout.shape[2] * gout.shape[3]
        gmean = gout.mean(axis=(0, 2, 3))
        gdot = (gout * xhat).sum(axis=(0, 2, 3)) / m
        coeff = (self.params["gamma"] * inv)[None, :, None, None]
        return coeff * (gout - gmean[None, :, None, None] - xhat * gdot[None, :, None, None])


class ReLU(Layer):
    def __init__(self):
        super().__init__()
        self.spec = LayerSpec("relu")

    def forward(self, x, train):
        if train:
            self._cache = x > 0
        return np.maximum(x, 0.0)

    def backward(self, gout):
        self._need_cache()
        return gout * self._cache


class Tanh(Layer):
    def __init__(self):
        super().__init__()
        self.spec = LayerSpec("tanh")

    def forward(self, x, train):
        y = np.tanh(x)
        if train:
            self._cache = y
        return y

    def backward(self, gout):
        self._need_cache()
        return gout * (1.0 - self._cache ** 2)


class DecoderModel:
    """Ordered layer list with a shared train/eval mode switch."""

    def __init__(self, layers: list[Layer]):
        self.layers = layers
        self.mode = "train"

    def forward(self, x: np.ndarray, mode: str | None = None) -> np.ndarray:
        train = (mode or self.mode) == "train"
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, gout: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            gout = layer.backward(gout)
        return gout

    def parameters(self):
        """(key, array) pairs in a fixed traversal order."""
        for i, layer in enumerate(self.layers):
            for name in sorted(layer.params):
                yield (i, name), layer.params[name]

    def gradients(self):
        for i, layer in enumerate(self.layers):
            for name in sorted(layer.params):
                yield (i, name), layer.grads[name]

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        manifest = {"layers": []}
        for i, layer in enumerate(self.layers):
            s = layer.spec
            manifest["layers"].append(
                {"kind": s.kind, "in": s.in_channels, "out": s.out_channels,
                 "extra": list(s.extra)}
            )
            for name, arr in layer.params.items():
                tensor_write(arr, os.path.join(directory, f"param_{i:03d}_{name}.frst"))
            if isinstance(layer, BatchNorm2d):
                tensor_write(layer.running_mean, os.path.join(directory, f"stat_{i:03d}_mean.frst"))
                tensor_write(layer.running_var, os.path.join(directory, f"stat_{i:03d}_var.frst"))
        with open(os.path.join(directory, "manifest.json"), "w") as f:
            json.dump(manifest, f, indent=2)

    def load_params(self, directory) -> None:
        for i, layer in enumerate(self.layers):
            for name in layer.params:
                layer.params[name] = tensor_read(os.path.join(directory, f"param_{i:03d}_{name}.frst"))
            if isinstance(layer, BatchNorm2d):
                layer.running_mean = tensor_read(os.path.join(directory, f"stat_{i:03d}_mean.frst"))
                layer.running_var = tensor_read(os.path.join(directory, f"stat_{i:03d}_var.frst"))


def _block_count(in_hw: int, target_hw: int) -> int:
    ratio = target_hw / in_hw
    b = round(math.log2(ratio))
    if 2 ** b != ratio:
        raise ValueError(f"target/input ratio {ratio} is not a power of two")
    return b


def g2_build(in_channels: int, in_hw: int, target_hw: int, base_width: int,
             rng: SeededRng | None = None) -> DecoderModel:
    """Tensor-input decoder: 1x1 conv head + upsampling ConvBlocks + tanh."""
    rng = rng or SeededRng(0)
    b = _block_count(in_hw, target_hw)
    layers: list[Layer] = [Conv2d(in_channels, base_width, 1, rng)]
    ch = base_width
    for _ in range(b):
        out = max(ch // 2, 16)
        layers.append(BilinearUp2())
        layers.append(Conv2d(ch, out, 3, rng))
        layers.append(BatchNorm2d(out))
        layers.append(ReLU())
        layers.append(Conv2d(out, out, 3, rng))
        layers.append(BatchNorm2d(out))
        layers.append(ReLU())
        ch = out
    layers.append(Conv2d(ch, 1, 3, rng))
    layers.append(Tanh())
    return DecoderModel(layers)


def g1_build(z_dim: int, target_hw: int, base_width: int,
             rng: SeededRng | None = None) -> DecoderModel:
    """Vector-input decoder: FC to base_width@4x4, 7x7 conv blocks, tanh."""
    if z_dim < 1:
        raise ValueError("z_dim must be >= 1")
    rng = rng or SeededRng(0)
    b = _block_count(4, target_hw) if target_hw > 4 else 0
    if target_hw < 4 or (target_hw > 4 and 4 * 2 ** b != target_hw):
        raise ValueError("target_hw must be 4 * 2**B")
    layers: list[Layer] = [Dense(z_dim, (base_width, 4, 4), rng)]
    ch = base_width
    for _ in range(b):
        out = max(ch // 2, 16)
        layers.append(BilinearUp2())
        layers.append(Conv2d(ch, out, 7, rng))
        layers.append(BatchNorm2d(out))
        layers.append(ReLU())
        ch = out
    layers.append(Conv2d(ch, 1, 7, rng))
    layers.append(Tanh())
    return DecoderModel(layers)


def forward(model: DecoderModel, batch: np.ndarray, mode: str = "train") -> np.ndarray:
    return model.forward(batch, mode)


def l1_loss(x: np.ndarray, x_gen: np.ndarray) -> float:
    """Mean absolute difference over all samples and pixels."""
    if x.shape != x_gen.shape:
        raise ValueError("shape mismatch in L1 loss")
    return float(np.abs(x - x_gen).mean())


def l1_loss_grad(x: np.ndarray, x_gen: np.ndarray) -> np.ndarray:
    """d(l1_loss)/d(x_gen)."""
    return np.sign(x_gen - x) / x.size


@dataclass
class AdamState:
    """Adam optimizer state with the standard default hyperparameters."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """One bias-corrected Adam update, in place on ``params``."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    for key, p in params.items():
        g = grads[key]
        if key not in state.m:
            state.m[key] = np.zeros_like(p)
            state.v[key] = np.zeros_like(p)
        state.m[key] = b1 * state.m[key] + (1 - b1) * g
        state.v[key] = b2 * state.v[key] + (1 - b2) * g * g
        mhat = state.m[key] / (1 - b1 ** state.t)
        vhat = state.v[key] / (1 - b2 ** state.t)
        p -= state.lr * mhat / (np.sqrt(vhat) + state.eps)
