"""Small convolutional policy/value network in plain numpy.

Architecture: conv (valid padding, rectifier) -> conv -> dense -> two heads
(action logits, scalar value). All math runs in float64 so the analytic
backward pass can be checked against central finite differences to tight
tolerance. Parameter arrays are marked read-only; updates build new arrays,
which makes a params object safe to share across threads as a snapshot.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import PolicyDivergence


@dataclass(frozen=True)
class NetArch:
    input_h: int = 64
    input_w: int = 96
    conv1: tuple = (16, 8, 4)  # (filters, kernel, stride)
    conv2: tuple = (32, 4, 2)
    dense_units: int = 256
    n_actions: int = 8

    def conv_out(self, h: int, w: int, kernel: int, stride: int) -> tuple:
        return (h - kernel) // stride + 1, (w - kernel) // stride + 1

    def shapes(self) -> dict:
        f1, k1, s1 = self.conv1
        f2, k2, s2 = self.conv2
        h1, w1 = self.conv_out(self.input_h, self.input_w, k1, s1)
        h2, w2 = self.conv_out(h1, w1, k2, s2)
        flat = f2 * h2 * w2
        return {
            "w_conv1": (f1, 1, k1, k1),
            "b_conv1": (f1,),
            "w_conv2": (f2, f1, k2, k2),
            "b_conv2": (f2,),
            "w_dense": (flat, self.dense_units),
            "b_dense": (self.dense_units,),
            "w_policy": (self.dense_units, self.n_actions),
            "b_policy": (self.n_actions,),
            "w_value": (self.dense_units, 1),
            "b_value": (1,),
        }


# the gradient checker runs on this small variant for speed
REDUCED_ARCH = NetArch(
    input_h=8, input_w=12, conv1=(4, 3, 1), conv2=(8, 2, 2), dense_units=16
)

PARAM_ORDER = (
    "w_conv1",
    "b_conv1",
    "w_conv2",
    "b_conv2",
    "w_dense",
    "b_dense",
    "w_policy",
    "b_policy",
    "w_value",
    "b_value",
)


@dataclass(frozen=True, eq=False)
class NetworkParams:
    arch: NetArch
    tensors: dict  # name -> read-only float64 ndarray

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def replaced(self, new_tensors: dict) -> "NetworkParams":
        merged = dict(self.tensors)
        for name, arr in new_tensors.items():
            merged[name] = _freeze(arr)
        return NetworkParams(self.arch, merged)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


def init_params(arch: NetArch, seed: int) -> NetworkParams:
    """Fan-in-scaled uniform weights, zero biases, reproducible from seed."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in arch.shapes().items():
        if name.startswith("b_"):
            tensors[name] = _freeze(np.zeros(shape))
            continue
        if name.startswith("w_conv"):
            fan_in = int(np.prod(shape[1:]))
        else:
            fan_in = shape[0]
        limit = 1.0 / np.sqrt(fan_in)
        tensors[name] = _freeze(rng.uniform(-limit, limit, size=shape))
    return NetworkParams(arch, tensors)


def params_hash(params: NetworkParams) -> str:
    h = hashlib.sha256()
    h.update(repr(params.arch).encode())
    for name in PARAM_ORDER:
        h.update(params[name].astype("<f8").tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# forward / backward

def _im2col(x: np.ndarray, kernel: int, stride: int):
    """(B, C, H, W) -> (B, Ho*Wo, C*k*k) patch matrix."""
    win = np.lib.stride_tricks.sliding_window_view(x, (kernel, kernel), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]  # (B, C, Ho, Wo, k, k)
    b, c, ho, wo, _, _ = win.shape
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(b, ho * wo, c * kernel * kernel)
    return np.ascontiguousarray(cols), ho, wo


def _col2im(dcols: np.ndarray, in_shape: tuple, kernel: int, stride: int, ho: int, wo: int):
    b, c, _, _ = in_shape
    dx = np.zeros(in_shape)
    d6 = dcols.reshape(b, ho, wo, c, kernel, kernel)
    for i in range(kernel):
        for j in range(kernel):
            dx[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += (
                d6[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            )
    return dx


def forward(params: NetworkParams, x: np.ndarray):
    """x: (B, H, W) float64 in [0, 1]. Returns (logits (B, A), values (B,), cache)."""
    arch = params.arch
    f1, k1, s1 = arch.conv1
    f2, k2, s2 = arch.conv2
    b = x.shape[0]
    x = x.reshape(b, 1, arch.input_h, arch.input_w)

    cols1, h1, w1 = _im2col(x, k1, s1)
    z1 = cols1 @ params["w_conv1"].reshape(f1, -1).T + params["b_conv1"]
    a1 = np.maximum(z1, 0.0)  # (B, P1, F1)
    a1_img = a1.transpose(0, 2, 1).reshape(b, f1, h1, w1)

    cols2, h2, w2 = _im2col(a1_img, k2, s2)
    z2 = cols2 @ params["w_conv2"].reshape(f2, -1).T + params["b_conv2"]
    a2 = np.maximum(z2, 0.0)  # (B, P2, F2)
    flat = a2.transpose(0, 2, 1).reshape(b, f2 * h2 * w2)

    z3 = flat @ params["w_dense"] + params["b_dense"]
    hidden = np.maximum(z3, 0.0)

    logits = hidden @ params["w_policy"] + params["b_policy"]
    values = (hidden @ params["w_value"] + params["b_value"])[:, 0]

    cache = {
        "x_shape": x.shape,
        "cols1": cols1, "z1": z1, "h1": h1, "w1": w1, "a1_shape": a1_img.shape,
        "cols2": cols2, "z2": z2, "h2": h2, "w2": w2,
        "flat": flat, "z3": z3, "hidden": hidden,
    }
    return logits, values, cache


def backward(params: NetworkParams, cache: dict, dlogits: np.ndarray, dvalues: np.ndarray) -> dict:
    """Gradients of a scalar loss given d(loss)/d(logits) and d(loss)/d(values)."""
    arch = params.arch
    f1, k1, s1 = arch.conv1
    f2, k2, s2 = arch.conv2
    hidden = cache["hidden"]

    grads = {}
    grads["w_policy"] = hidden.T @ dlogits
    grads["b_policy"] = dlogits.sum(axis=0)
    grads["w_value"] = hidden.T @ dvalues[:, None]
    grads["b_value"] = dvalues.sum(keepdims=True)

    dhidden = dlogits @ params["w_policy"].T + np.outer(dvalues, params["w_value"][:, 0])
    dz3 = dhidden * (cache["z3"] > 0.0)
    grads["w_dense"] = cache["flat"].T @ dz3
    grads["b_dense"] = dz3.sum(axis=0)

    dflat = dz3 @ params["w_dense"].T
    b = dflat.shape[0]
    da2 = dflat.reshape(b, f2, cache["h2"] * cache["w2"]).transpose(0, 2, 1)
    dz2 = da2 * (cache["z2"] > 0.0)
    grads["w_conv2"] = np.tensordot(dz2, cache["cols2"], axes=([0, 1], [0, 1])).reshape(
        f2, f1, k2, k2
    )
    grads["b_conv2"] = dz2.sum(axis=(0, 1))

    dcols2 = dz2 @ params["w_conv2"].reshape(f2, -1)
    da1_img = _col2im(dcols2, cache["a1_shape"], k2, s2, cache["h2"], cache["w2"])
    da1 = da1_img.reshape(b, f1, cache["h1"] * cache["w1"]).transpose(0, 2, 1)
    dz1 = da1 * (cache["z1"] > 0.0)
    grads["w_conv1"] = np.tensordot(dz1, cache["cols1"], axes=([0, 1], [0, 1])).reshape(
        f1, 1, k1, k1
    )
    grads["b_conv1"] = dz1.sum(axis=(0, 1))
    return grads


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def check_finite(name: str, arr: np.ndarray) -> None:
    if not np.isfinite(arr).all():
        raise PolicyDivergence(f"non-finite {name} from policy network")


# ---------------------------------------------------------------------------
# serialization: versioned little-endian binary, 32-bit floats

MAGIC = b"PDDAA2C0"
FORMAT_VERSION = 1


def save_params(params: NetworkParams) -> bytes:
    arch = params.arch
    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", FORMAT_VERSION)
    out += struct.pack(
        "<10i",
        arch.input_h, arch.input_w,
        *arch.conv1, *arch.conv2,
        arch.dense_units, arch.n_actions,
    )
    for name in PARAM_ORDER:
        arr = params[name]
        out += struct.pack("<B", arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += arr.astype("<f4").tobytes()
    return bytes(out)


def load_params(data: bytes) -> NetworkParams:
    if data[:8] != MAGIC:
        raise ValueError("not a policy checkpoint (bad magic)")
    pos = 8
    (version,) = struct.unpack_from("<H", data, pos)
    pos += 2
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported policy checkpoint version {version}")
    vals = struct.unpack_from("<10i", data, pos)
    pos += 40
    arch = NetArch(
        input_h=vals[0], input_w=vals[1],
        conv1=tuple(vals[2:5]), conv2=tuple(vals[5:8]),
        dense_units=vals[8], n_actions=vals[9],
    )
    tensors = {}
    for name in PARAM_ORDER:
        (ndim,) = struct.unpack_from("<B", data, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        count = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=pos).astype(np.float64)
        pos += 4 * count
        tensors[name] = _freeze(arr.reshape(shape))
    expected = arch.shapes()
    for name, shape in expected.items():
        if tensors[name].shape != shape:
            raise ValueError(f"checkpoint shape mismatch for {name}")
    return NetworkParams(arch, tensors)
