"""Dense numerical kernels: affine maps, stable softmax, a gated recurrent
cell with its analytic backward pass, Glorot initialization, and a
finite-difference gradient checker used to verify every analytic gradient."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

Array = np.ndarray


def affine(x: Array, weight: Array, bias: Array) -> Array:
    """weight @ x + bias for a vector x, or row-wise for a 2-D batch."""
    if weight.ndim != 2:
        raise ValueError(f"weight must be 2-D, got shape {weight.shape}")
    out_dim, in_dim = weight.shape
    if bias.shape != (out_dim,):
        raise ValueError(f"bias shape {bias.shape} does not match weight {weight.shape}")
    if x.shape[-1] != in_dim:
        raise ValueError(f"input dim {x.shape[-1]} does not match weight {weight.shape}")
    return x @ weight.T + bias


def sigmoid(x: Array) -> Array:
    # tanh form avoids overflow warnings for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(z: Array, axis: int = -1) -> Array:
    """Probabilities via exp(z - max) / sum; stable for large-magnitude inputs."""
    z = np.asarray(z)
    if z.size == 0:
        raise ValueError("softmax of an empty vector")
    shifted = z - z.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(z: Array, axis: int = -1) -> Array:
    z = np.asarray(z)
    if z.size == 0:
        raise ValueError("log_softmax of an empty vector")
    shifted = z - z.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


@dataclass
class GruCellParams:
    """Update/reset/candidate weights of a gated recurrent cell.

    `w_*` act on the input, `u_*` on the previous hidden state; all weights
    are stored (out, in) row-major.
    """

    w_update: Array
    u_update: Array
    b_update: Array
    w_reset: Array
    u_reset: Array
    b_reset: Array
    w_cand: Array
    u_cand: Array
    b_cand: Array

    def __post_init__(self):
        hidden, inp = self.w_update.shape
        for name in ("w_update", "w_reset", "w_cand"):
            if getattr(self, name).shape != (hidden, inp):
                raise ValueError(f"{name} shape mismatch")
        for name in ("u_update", "u_reset", "u_cand"):
            if getattr(self, name).shape != (hidden, hidden):
                raise ValueError(f"{name} shape mismatch")
        for name in ("b_update", "b_reset", "b_cand"):
            if getattr(self, name).shape != (hidden,):
                raise ValueError(f"{name} shape mismatch")

    @property
    def input_dim(self) -> int:
        return self.w_update.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_update.shape[0]

    FIELDS = (
        "w_update", "u_update", "b_update",
        "w_reset", "u_reset", "b_reset",
        "w_cand", "u_cand", "b_cand",
    )


def gru_cell_forward(x: Array, h_prev: Array, p: GruCellParams) -> tuple[Array, dict]:
    """One gated recurrent step on row vectors (2-D inputs); returns the new
    state and the cache needed by gru_cell_backward.

        z = sigmoid(w_z x + u_z h + b_z)
        r = sigmoid(w_r x + u_r h + b_r)
        cand = tanh(w_c x + u_c (r * h) + b_c)
        h'   = (1 - z) * h + z * cand
    """
    z = sigmoid(x @ p.w_update.T + h_prev @ p.u_update.T + p.b_update)
    r = sigmoid(x @ p.w_reset.T + h_prev @ p.u_reset.T + p.b_reset)
    cand = np.tanh(x @ p.w_cand.T + (r * h_prev) @ p.u_cand.T + p.b_cand)
    h = (1.0 - z) * h_prev + z * cand
    return h, {"x": x, "h_prev": h_prev, "z": z, "r": r, "cand": cand}


def gru_cell(x: Array, h_prev: Array, p: GruCellParams) -> Array:
    """Gated recurrent update for a single vector or a batch of rows."""
    if x.shape[-1] != p.input_dim or h_prev.shape[-1] != p.hidden_dim:
        raise ValueError(
            f"gru_cell shapes {x.shape}/{h_prev.shape} do not match cell "
            f"({p.input_dim} -> {p.hidden_dim})"
        )
    single = x.ndim == 1
    if single:
        x = x[None, :]
        h_prev = h_prev[None, :]
    h, _ = gru_cell_forward(x, h_prev, p)
    return h[0] if single else h


def gru_cell_backward(
    dh: Array, cache: dict, p: GruCellParams, grads: dict
) -> tuple[Array, Array]:
    """Backprop one cell step; accumulates weight grads into `grads` (keyed by
    GruCellParams field name) and returns (dx, dh_prev)."""
    x, h_prev, z, r, cand = (
        cache["x"], cache["h_prev"], cache["z"], cache["r"], cache["cand"]
    )
    dz = dh * (cand - h_prev)
    dcand = dh * z
    dh_prev = dh * (1.0 - z)

    da_c = dcand * (1.0 - cand * cand)
    grads["w_cand"] += da_c.T @ x
    grads["u_cand"] += da_c.T @ (r * h_prev)
    grads["b_cand"] += da_c.sum(axis=0)
    dprod = da_c @ p.u_cand
    dr = dprod * h_prev
    dh_prev = dh_prev + dprod * r

    da_z = dz * z * (1.0 - z)
    da_r = dr * r * (1.0 - r)
    grads["w_update"] += da_z.T @ x
    grads["u_update"] += da_z.T @ h_prev
    grads["b_update"] += da_z.sum(axis=0)
    grads["w_reset"] += da_r.T @ x
    grads["u_reset"] += da_r.T @ h_prev
    grads["b_reset"] += da_r.sum(axis=0)

    dx = da_z @ p.w_update + da_r @ p.w_reset + da_c @ p.w_cand
    dh_prev = dh_prev + da_z @ p.u_update + da_r @ p.u_reset
    return dx, dh_prev


def glorot_uniform(shape: tuple[int, ...], rng: np.random.Generator, dtype) -> Array:
    """Uniform on +-sqrt(6 / (fan_in + fan_out)); 1-D shapes use fan (1, n)."""
    if len(shape) == 2:
        fan_out, fan_in = shape
    else:
        fan_out, fan_in = 1, shape[0]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def init_gru_cell(
    input_dim: int, hidden_dim: int, rng: np.random.Generator, dtype
) -> GruCellParams:
    if input_dim < 1 or hidden_dim < 1:
        raise ValueError("cell dimensions must be positive")
    kw = {}
    for gate in ("update", "reset", "cand"):
        kw[f"w_{gate}"] = glorot_uniform((hidden_dim, input_dim), rng, dtype)
        kw[f"u_{gate}"] = glorot_uniform((hidden_dim, hidden_dim), rng, dtype)
        kw[f"b_{gate}"] = np.zeros(hidden_dim, dtype=dtype)
    return GruCellParams(**kw)


def grad_check(
    loss_fn: Callable[[], float],
    blocks: Mapping[str, Array],
    analytic: Mapping[str, Array],
    *,
    eps: float = 1e-5,
    max_coords_per_block: int = 200,
    seed: int = 0,
) -> float:
    """Compare analytic gradients against central finite differences.

    `loss_fn` must read the arrays in `blocks` (they are perturbed in place
    and restored). Blocks larger than `max_coords_per_block` are sampled.
    Returns the max of |g_a - g_n| / max(|g_a|, |g_n|, 1e-8) over all checked
    coordinates. Requires double precision.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, arr in blocks.items():
        if arr.dtype != np.float64:
            raise ValueError(f"grad_check requires float64 blocks, {name} is {arr.dtype}")
        flat = arr.reshape(-1)
        grad_flat = np.asarray(analytic[name]).reshape(-1)
        if flat.shape != grad_flat.shape:
            raise ValueError(f"analytic gradient for {name} has wrong shape")
        if flat.size <= max_coords_per_block:
            coords = np.arange(flat.size)
        else:
            coords = rng.choice(flat.size, size=max_coords_per_block, replace=False)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = loss_fn()
            flat[i] = orig - eps
            f_minus = loss_fn()
            flat[i] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise ValueError(f"non-finite loss while perturbing {name}[{i}]")
            g_num = (f_plus - f_minus) / (2.0 * eps)
            g_ana = grad_flat[i]
            rel = abs(g_ana - g_num) / max(abs(g_ana), abs(g_num), 1e-8)
            worst = max(worst, rel)
    return worst
