"""
Layer kinds of the differentiable substrate.

Every layer kind works on batch-major float64 arrays and implements an
analytic backward pass. Per-sample shapes never include the batch axis.

    dense   (fan_in,)   -> (fan_out,)          y = act(x @ W + b)
    conv    (C, H, W)   -> (O, ceil(H/s), ceil(W/s))   "same" padding
    upconv  (C, H, W)   -> (O, H*s, W*s)       transposed convolution
    reshape any         -> spec.shape          same element count
    concat  (n1,), (n2,) ... -> (n1 + n2 + ...,)
"""

from __future__ import annotations

import math
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import ShapeMismatchError

LEAKY_SLOPE = 0.01

Shape = Tuple[int, ...]
LayerKind = Literal["dense", "conv", "upconv", "reshape", "concat"]
ActivationName = Literal["linear", "leaky_relu", "tanh"]


class LayerSpec(BaseModel):
    """Topology entry for one layer."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    kind: LayerKind
    inputs: List[str]
    activation: ActivationName = "linear"
    fan_in: Optional[int] = None
    fan_out: Optional[int] = None
    in_channels: Optional[int] = None
    out_channels: Optional[int] = None
    kernel: int = 3
    stride: int = 1
    shape: Optional[List[int]] = None

    @model_validator(mode="after")
    def _check_fields(self):
        if "." in self.name or "/" in self.name:
            raise ValueError(f"layer name '{self.name}' may not contain '.' or '/'")
        if self.kind == "dense" and (self.fan_in is None or self.fan_out is None):
            raise ValueError(f"dense layer '{self.name}' needs fan_in and fan_out")
        if self.kind in ("conv", "upconv"):
            if self.in_channels is None or self.out_channels is None:
                raise ValueError(f"{self.kind} layer '{self.name}' needs in_channels and out_channels")
            if self.kernel < 1 or self.stride < 1:
                raise ValueError(f"{self.kind} layer '{self.name}' needs kernel >= 1 and stride >= 1")
        if self.kind == "reshape" and not self.shape:
            raise ValueError(f"reshape layer '{self.name}' needs a target shape")
        if self.kind != "concat" and len(self.inputs) != 1:
            raise ValueError(f"layer '{self.name}' takes exactly one input")
        if self.kind == "concat" and len(self.inputs) < 2:
            raise ValueError(f"concat layer '{self.name}' needs at least two inputs")
        return self

    @property
    def has_params(self) -> bool:
        return self.kind in ("dense", "conv", "upconv")


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

def activate(name: str, pre: np.ndarray) -> np.ndarray:
    if name == "linear":
        return pre
    if name == "leaky_relu":
        return np.where(pre > 0, pre, LEAKY_SLOPE * pre)
    if name == "tanh":
        return np.tanh(pre)
    raise ValueError(f"unknown activation '{name}'")


def activation_grad(name: str, pre: np.ndarray, dy: np.ndarray) -> np.ndarray:
    if name == "linear":
        return dy
    if name == "leaky_relu":
        return np.where(pre > 0, dy, LEAKY_SLOPE * dy)
    if name == "tanh":
        t = np.tanh(pre)
        return dy * (1.0 - t * t)
    raise ValueError(f"unknown activation '{name}'")


# ---------------------------------------------------------------------------
# convolution helpers
# ---------------------------------------------------------------------------

def same_padding(size: int, kernel: int, stride: int) -> Tuple[int, int, int]:
    """Return (out_size, pad_before, pad_after) for "same" padding."""
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return out, total // 2, total - total // 2


def _window(arr: np.ndarray, ki: int, kj: int, rows: int, cols: int, stride: int) -> np.ndarray:
    return arr[:, :, ki:ki + stride * (rows - 1) + 1:stride, kj:kj + stride * (cols - 1) + 1:stride]


def conv2d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """Strided "same" convolution; weight is (O, C, k, k)."""
    n, _, h, w = x.shape
    k = weight.shape[-1]
    ho, ph0, ph1 = same_padding(h, k, stride)
    wo, pw0, pw1 = same_padding(w, k, stride)
    xp = np.pad(x, ((0, 0), (0, 0), (ph0, ph1), (pw0, pw1)))
    out = np.zeros((n, weight.shape[0], ho, wo))
    for ki in range(k):
        for kj in range(k):
            out += np.einsum("nchw,oc->nohw", _window(xp, ki, kj, ho, wo, stride), weight[:, :, ki, kj], optimize=True)
    return out + bias[None, :, None, None]


def conv2d_backward(x: np.ndarray, weight: np.ndarray, stride: int, dout: np.ndarray,
                    want_params: bool = True):
    n, c, h, w = x.shape
    k = weight.shape[-1]
    ho, ph0, ph1 = same_padding(h, k, stride)
    wo, pw0, pw1 = same_padding(w, k, stride)
    xp = np.pad(x, ((0, 0), (0, 0), (ph0, ph1), (pw0, pw1)))
    dxp = np.zeros_like(xp)
    dweight = np.zeros_like(weight)
    for ki in range(k):
        for kj in range(k):
            if want_params:
                dweight[:, :, ki, kj] = np.einsum("nohw,nchw->oc", dout, _window(xp, ki, kj, ho, wo, stride), optimize=True)
            _window(dxp, ki, kj, ho, wo, stride)[...] += np.einsum("nohw,oc->nchw", dout, weight[:, :, ki, kj], optimize=True)
    dx = dxp[:, :, ph0:ph0 + h, pw0:pw0 + w]
    dbias = dout.sum(axis=(0, 2, 3))
    return dx, dweight, dbias


def _upconv_geometry(size: int, kernel: int, stride: int) -> Tuple[int, int, int]:
    """Return (out_size, full_size, crop_before) for a transposed convolution."""
    out = size * stride
    full = (size - 1) * stride + kernel
    crop = max(full - out, 0) // 2
    return out, max(full, out), crop


def upconv2d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """Transposed convolution upsampling by `stride`; weight is (O, C, k, k)."""
    n, _, h, w = x.shape
    k = weight.shape[-1]
    ho, hf, hc = _upconv_geometry(h, k, stride)
    wo, wf, wc = _upconv_geometry(w, k, stride)
    full = np.zeros((n, weight.shape[0], hf, wf))
    for ki in range(k):
        for kj in range(k):
            _window(full, ki, kj, h, w, stride)[...] += np.einsum("nchw,oc->nohw", x, weight[:, :, ki, kj], optimize=True)
    return full[:, :, hc:hc + ho, wc:wc + wo] + bias[None, :, None, None]


def upconv2d_backward(x: np.ndarray, weight: np.ndarray, stride: int, dout: np.ndarray,
                      want_params: bool = True):
    n, c, h, w = x.shape
    k = weight.shape[-1]
    ho, hf, hc = _upconv_geometry(h, k, stride)
    wo, wf, wc = _upconv_geometry(w, k, stride)
    dfull = np.zeros((n, weight.shape[0], hf, wf))
    dfull[:, :, hc:hc + ho, wc:wc + wo] = dout
    dx = np.zeros_like(x)
    dweight = np.zeros_like(weight)
    for ki in range(k):
        for kj in range(k):
            window = _window(dfull, ki, kj, h, w, stride)
            dx += np.einsum("nohw,oc->nchw", window, weight[:, :, ki, kj], optimize=True)
            if want_params:
                dweight[:, :, ki, kj] = np.einsum("nohw,nchw->oc", window, x, optimize=True)
    dbias = dout.sum(axis=(0, 2, 3))
    return dx, dweight, dbias


# ---------------------------------------------------------------------------
# per-kind shape rules and passes
# ---------------------------------------------------------------------------

def param_shapes(spec: LayerSpec) -> Dict[str, Shape]:
    if spec.kind == "dense":
        return {"weight": (spec.fan_in, spec.fan_out), "bias": (spec.fan_out,)}
    if spec.kind in ("conv", "upconv"):
        return {
            "weight": (spec.out_channels, spec.in_channels, spec.kernel, spec.kernel),
            "bias": (spec.out_channels,),
        }
    return {}


def output_shape(spec: LayerSpec, in_shapes: Sequence[Shape]) -> Shape:
    """Per-sample output shape; raises ShapeMismatchError naming the layer."""
    if spec.kind == "dense":
        if tuple(in_shapes[0]) != (spec.fan_in,):
            raise ShapeMismatchError(spec.name, (spec.fan_in,), in_shapes[0])
        return (spec.fan_out,)
    if spec.kind in ("conv", "upconv"):
        shape = tuple(in_shapes[0])
        if len(shape) != 3 or shape[0] != spec.in_channels:
            raise ShapeMismatchError(spec.name, (spec.in_channels, None, None), shape)
        _, h, w = shape
        if spec.kind == "conv":
            return (spec.out_channels, same_padding(h, spec.kernel, spec.stride)[0],
                    same_padding(w, spec.kernel, spec.stride)[0])
        return (spec.out_channels, h * spec.stride, w * spec.stride)
    if spec.kind == "reshape":
        target = tuple(spec.shape)
        if math.prod(in_shapes[0]) != math.prod(target):
            raise ShapeMismatchError(spec.name, target, in_shapes[0])
        return target
    # concat
    for shape in in_shapes:
        if len(shape) != 1:
            raise ShapeMismatchError(spec.name, (None,), shape)
    return (sum(s[0] for s in in_shapes),)


def init_params(spec: LayerSpec, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    shapes = param_shapes(spec)
    if not shapes:
        return {}
    if spec.kind == "dense":
        fan_in = spec.fan_in
    else:
        fan_in = spec.in_channels * spec.kernel * spec.kernel
    gain = 2.0 if spec.activation == "leaky_relu" else 1.0
    weight = rng.standard_normal(shapes["weight"]) * math.sqrt(gain / fan_in)
    return {"weight": weight, "bias": np.zeros(shapes["bias"])}


def layer_forward(spec: LayerSpec, tensors: Dict[str, np.ndarray], xs: List[np.ndarray]):
    """Return (output, cache)."""
    x = xs[0]
    if spec.kind == "dense":
        pre = x @ tensors["weight"] + tensors["bias"]
    elif spec.kind == "conv":
        pre = conv2d(x, tensors["weight"], tensors["bias"], spec.stride)
    elif spec.kind == "upconv":
        pre = upconv2d(x, tensors["weight"], tensors["bias"], spec.stride)
    elif spec.kind == "reshape":
        return x.reshape((x.shape[0],) + tuple(spec.shape)), x.shape
    else:
        return np.concatenate(xs, axis=1), [a.shape[1] for a in xs]
    return activate(spec.activation, pre), (x, pre)


def layer_backward(spec: LayerSpec, tensors: Dict[str, np.ndarray], cache, dy: np.ndarray,
                   want_params: bool = True):
    """Return (list of input gradients, parameter gradients).

    With want_params=False the parameter gradients are skipped (frozen layer
    that only has to pass the gradient through).
    """
    if spec.kind == "reshape":
        return [dy.reshape(cache)], {}
    if spec.kind == "concat":
        bounds = np.cumsum(cache)[:-1]
        return list(np.split(dy, bounds, axis=1)), {}
    x, pre = cache
    dpre = activation_grad(spec.activation, pre, dy)
    if spec.kind == "dense":
        dx = dpre @ tensors["weight"].T
        if not want_params:
            return [dx], {}
        return [dx], {"weight": x.T @ dpre, "bias": dpre.sum(axis=0)}
    if spec.kind == "conv":
        dx, dw, db = conv2d_backward(x, tensors["weight"], spec.stride, dpre, want_params)
    else:
        dx, dw, db = upconv2d_backward(x, tensors["weight"], spec.stride, dpre, want_params)
    if not want_params:
        return [dx], {}
    return [dx], {"weight": dw, "bias": db}
