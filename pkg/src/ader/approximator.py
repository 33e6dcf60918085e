"""Feed-forward networks with hand-written backprop, Adam and Polyak averaging.

Everything is float64 numpy. Inputs may be a single vector of shape ``(d,)``
or a batch of shape ``(n, d)``; outputs follow the same convention.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

RELU, TANH, IDENTITY = "relu", "tanh", "identity"
_ACT_CODES = {RELU: 0, TANH: 1, IDENTITY: 2}
_CODE_ACTS = {v: k for k, v in _ACT_CODES.items()}


class ShapeError(ValueError):
    """Raised when array dimensions do not line up with a network."""


class DivergenceError(FloatingPointError):
    """Raised when training produces non-finite numbers."""


@dataclass
class MlpParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ShapeError("weights, biases and activations must have equal length")
        for i, (w, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            if act not in _ACT_CODES:
                raise ValueError(f"layer {i}: unknown activation {act!r}")
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeError(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ShapeError(
                    f"layer {i}: in-dim {w.shape[1]} != out-dim {self.weights[i - 1].shape[0]} of layer {i - 1}"
                )

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def dims(self) -> list[int]:
        return [self.in_dim] + [w.shape[0] for w in self.weights]

    def arrays(self) -> list[np.ndarray]:
        """Parameter arrays interleaved as W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "MlpParams":
        return MlpParams(list(arrays[0::2]), list(arrays[1::2]), list(self.activations))

    def copy(self) -> "MlpParams":
        return self.with_arrays([a.copy() for a in self.arrays()])

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])


# Gradients share the exact layout of the parameters they differentiate.
MlpGrads = MlpParams


def init_mlp(sizes: Sequence[int], activations: Sequence[str], rng: np.random.Generator) -> MlpParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init for weights and biases.

    ``sizes`` lists every width including input and output, so a network with
    two hidden layers of 256 units is ``[d_in, 256, 256, d_out]``.
    """
    if len(activations) != len(sizes) - 1:
        raise ShapeError("need one activation per layer")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpParams(weights, biases, list(activations))


def _activate(z: np.ndarray, act: str) -> np.ndarray:
    if act == RELU:
        return np.maximum(z, 0.0)
    if act == TANH:
        return np.tanh(z)
    return z


def _as_batch(params: MlpParams, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.ndim != 2 or xb.shape[1] != params.in_dim:
        raise ShapeError(f"layer 0: expected input width {params.in_dim}, got shape {x.shape}")
    return xb, single


def forward_cached(params: MlpParams, x) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward pass that also returns every layer's post-activation output.

    The cache is ``[input, h1, ..., output]`` in batch layout.
    """
    xb, single = _as_batch(params, x)
    cache = [xb]
    h = xb
    for w, b, act in zip(params.weights, params.biases, params.activations):
        h = _activate(h @ w.T + b, act)
        cache.append(h)
    return (h[0] if single else h), cache


def forward(params: MlpParams, x) -> np.ndarray:
    return forward_cached(params, x)[0]


def backward(params: MlpParams, x, upstream, cache: list[np.ndarray] | None = None):
    """Reverse-mode gradients of ``sum(upstream * forward(params, x))``.

    Returns ``(grads, input_grad)``. For batched input the parameter
    gradients are summed over the batch, so callers scale ``upstream`` to
    get a mean. Pass ``cache`` from :func:`forward_cached` to skip the
    recomputation.
    """
    xb, single = _as_batch(params, x)
    if cache is None:
        _, cache = forward_cached(params, xb)
    g = np.asarray(upstream, dtype=np.float64)
    g = g[None, :] if g.ndim == 1 else g
    if g.shape != cache[-1].shape:
        raise ShapeError(f"layer {len(params.weights) - 1}: upstream shape {g.shape} != output shape {cache[-1].shape}")

    n_layers = len(params.weights)
    dws: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    dbs: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    for i in reversed(range(n_layers)):
        out, act = cache[i + 1], params.activations[i]
        if act == RELU:
            g = g * (out > 0.0)
        elif act == TANH:
            g = g * (1.0 - out * out)
        dws[i] = g.T @ cache[i]
        dbs[i] = g.sum(axis=0)
        g = g @ params.weights[i]
    grads = MlpParams(dws, dbs, list(params.activations))
    return grads, (g[0] if single else g)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params: MlpParams, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    arrays = params.arrays()
    return AdamState([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays], 0, beta1, beta2, eps)


def adam_step(params: MlpParams, grads: MlpGrads, state: AdamState, lr: float) -> tuple[MlpParams, AdamState]:
    """One bias-corrected Adam descent step. Inputs are not modified."""
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    p_arrays, g_arrays = params.arrays(), grads.arrays()
    if len(p_arrays) != len(g_arrays) or any(p.shape != g.shape for p, g in zip(p_arrays, g_arrays)):
        raise ShapeError("gradients are not shape-congruent with parameters")
    if not all(np.isfinite(g).all() for g in g_arrays):
        raise DivergenceError("non-finite gradient passed to adam_step")

    b1, b2 = state.beta1, state.beta2
    step = state.step + 1
    c1 = 1.0 - b1**step
    c2 = 1.0 - b2**step
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(p_arrays, g_arrays, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        new_p.append(p - lr * (m / c1) / (np.sqrt(v / c2) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return params.with_arrays(new_p), AdamState(new_m, new_v, step, b1, b2, state.eps)


def soft_update(target: MlpParams, online: MlpParams, tau: float) -> MlpParams:
    """Polyak average: ``tau * online + (1 - tau) * target``."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    t_arrays, o_arrays = target.arrays(), online.arrays()
    if len(t_arrays) != len(o_arrays) or any(t.shape != o.shape for t, o in zip(t_arrays, o_arrays)):
        raise ShapeError("target and online networks differ in shape")
    if tau == 1.0:
        return online.copy()
    return target.with_arrays([tau * o + (1.0 - tau) * t for t, o in zip(t_arrays, o_arrays)])


# Snapshot layout (little-endian): int32 layer count L, int32 dims[L + 1],
# int32 activation codes[L], then float64 W0 (row-major), b0, W1, b1, ...

def save_params(params: MlpParams, path) -> None:
    n = len(params.weights)
    header = struct.pack(f"<i{n + 1}i{n}i", n, *params.dims, *(_ACT_CODES[a] for a in params.activations))
    with open(path, "wb") as fh:
        fh.write(header)
        for a in params.arrays():
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_params(path) -> MlpParams:
    with open(path, "rb") as fh:
        data = fh.read()
    (n,) = struct.unpack_from("<i", data, 0)
    offset = 4
    dims = struct.unpack_from(f"<{n + 1}i", data, offset)
    offset += 4 * (n + 1)
    codes = struct.unpack_from(f"<{n}i", data, offset)
    offset += 4 * n
    flat = np.frombuffer(data, dtype="<f8", offset=offset).astype(np.float64)
    weights, biases, pos = [], [], 0
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(flat[pos:pos + fan_in * fan_out].reshape(fan_out, fan_in).copy())
        pos += fan_in * fan_out
        biases.append(flat[pos:pos + fan_out].copy())
        pos += fan_out
    if pos != flat.size:
        raise ShapeError(f"snapshot holds {flat.size} floats, header implies {pos}")
    return MlpParams(weights, biases, [_CODE_ACTS[c] for c in codes])
