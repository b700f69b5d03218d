"""Teacher-forced cross-entropy training: backpropagation through time over
the encoder, attention, and decoder, Adam updates, mini-batching with padding,
and validation-driven learning-rate reduction with best-checkpoint retention.

The batch loss is the mean over items of the per-item mean step loss, so the
batch gradient equals the mean of per-item gradients.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .decoding import greedy_decode
from .lexicon import PAD_ID, DatasetSplit, Lexicon, build_vocabs, encode_entry
from .model import Array, G2PModel, ModelParams, init_params, zero_gradients
from .nn import GruCellParams, gru_cell_backward, gru_cell_forward


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 50
    batch_size: int = 64
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    patience: int = 5
    lr_decay: float = 0.5
    lr_floor: float = 1e-5
    grad_clip: float | None = 5.0  # global-norm clip; None disables
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if not (0 < self.lr_decay < 1):
            raise ValueError("lr decay factor must lie in (0, 1)")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_word_acc: float
    learning_rate: float


TrainHistory = list[EpochRecord]


def cross_entropy(dists: Array, targets, mask=None) -> float:
    """Mean -log p(target) over unmasked steps; dists has one row per step."""
    dists = np.asarray(dists)
    targets = np.asarray(targets, dtype=int)
    if mask is None:
        mask = np.ones(len(targets), dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("cross entropy over zero unmasked steps")
    picked = dists[np.arange(len(targets)), targets]
    return float(-np.log(picked[mask]).mean())


def pad_batch(pairs) -> tuple[Array, Array, Array, Array]:
    """Right-pad encoded (x, y) id sequences with PAD into rectangular arrays."""
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    n = len(pairs)
    x_pad = np.full((n, max(len(x) for x in xs)), PAD_ID, dtype=np.int64)
    y_pad = np.full((n, max(len(y) for y in ys)), PAD_ID, dtype=np.int64)
    x_mask = np.zeros(x_pad.shape, dtype=bool)
    y_mask = np.zeros(y_pad.shape, dtype=bool)
    for i, (x, y) in enumerate(zip(xs, ys)):
        x_pad[i, :len(x)] = x
        x_mask[i, :len(x)] = True
        y_pad[i, :len(y)] = y
        y_mask[i, :len(y)] = True
    return x_pad, x_mask, y_pad, y_mask


def _masked_softmax_rows(scores: Array, mask: Array) -> Array:
    """Row-wise softmax over unmasked positions with exact zeros elsewhere."""
    shifted = scores - np.where(mask, scores, -np.inf).max(axis=1, keepdims=True)
    w = np.where(mask, np.exp(np.where(mask, shifted, 0.0)), 0.0)
    return w / w.sum(axis=1, keepdims=True)


def _batch_forward(params: ModelParams, x_pad, x_mask, y_pad, y_mask, want_cache: bool):
    """Teacher-forced forward over a padded batch.

    Encoder states at padded positions carry the previous state forward; those
    positions are masked out of attention and contribute nothing to the loss.
    """
    att = params.attention
    n, max_x = x_pad.shape
    max_y = y_pad.shape[1]

    emb_x = params.grapheme_embedding[x_pad]          # (n, max_x, embed)
    h = np.zeros((n, params.hidden_dim), dtype=params.dtype)
    enc_caches = []
    states = np.empty((n, max_x, params.hidden_dim), dtype=params.dtype)
    for t in range(max_x):
        h_new, cache = gru_cell_forward(emb_x[:, t], h, params.encoder)
        h = np.where(x_mask[:, t:t + 1], h_new, h)
        states[:, t] = h
        enc_caches.append(cache)

    proj = states @ att.w_enc.T                       # (n, max_x, attn), shared
    steps_per_item = y_mask.sum(axis=1) - 1           # targets exclude SOS

    s = h                                             # decoder starts at h_n
    dec_caches = []
    total_nll = np.zeros(n, dtype=np.float64)
    for t in range(1, max_y):
        prev = y_pad[:, t - 1]
        query = s @ att.w_dec.T + att.bias
        tact = np.tanh(proj + query[:, None, :])      # (n, max_x, attn)
        scores = tact @ att.v
        alpha = _masked_softmax_rows(scores, x_mask)
        context = np.einsum("bi,bij->bj", alpha, states)
        u = np.concatenate([params.phoneme_embedding[prev], context], axis=1)
        s_new, cell_cache = gru_cell_forward(u, s, params.decoder)
        logits = s_new @ params.output_weight.T + params.output_bias
        shifted = logits - logits.max(axis=1, keepdims=True)
        logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))

        target = y_pad[:, t]
        valid = y_mask[:, t]
        nll = -logp[np.arange(n), target]
        total_nll += np.where(valid, nll, 0.0)
        if want_cache:
            dec_caches.append({
                "prev": prev, "s_prev": s, "s_new": s_new, "tact": tact,
                "alpha": alpha, "cell": cell_cache, "logp": logp,
                "valid": valid, "target": target,
            })
        s = s_new

    loss = float((total_nll / steps_per_item).mean())
    if not want_cache:
        return loss, None
    return loss, {
        "emb_x": emb_x, "states": states, "enc_caches": enc_caches,
        "dec_caches": dec_caches, "steps_per_item": steps_per_item,
    }


def _batch_backward(params: ModelParams, x_pad, x_mask, cache) -> dict[str, Array]:
    """BPTT: reverse decoder steps (output projection, cell, attention), then
    the encoder chain, scattering embedding gradients by token id."""
    att = params.attention
    n = x_pad.shape[0]
    states = cache["states"]
    grads = zero_gradients(params)
    enc_grads = {f: grads[f"encoder.{f}"] for f in GruCellParams.FIELDS}
    dec_grads = {f: grads[f"decoder.{f}"] for f in GruCellParams.FIELDS}
    embed_dim = params.embed_dim

    # d(batch loss)/d(step nll) for each item: mean over items of mean over steps
    scale = 1.0 / (n * cache["steps_per_item"].astype(np.float64))

    d_states = np.zeros_like(states)
    ds = np.zeros((n, params.hidden_dim), dtype=params.dtype)
    rows = np.arange(n)
    for step in reversed(cache["dec_caches"]):
        valid = step["valid"]
        dlogits = np.exp(step["logp"]) * (valid * scale)[:, None]
        dlogits[rows[valid], step["target"][valid]] -= scale[valid]
        dlogits = dlogits.astype(params.dtype)

        grads["output.weight"] += dlogits.T @ step["s_new"]
        grads["output.bias"] += dlogits.sum(axis=0)
        ds = ds + dlogits @ params.output_weight

        du, ds_prev = gru_cell_backward(ds, step["cell"], params.decoder, dec_grads)
        np.add.at(grads["phoneme_embedding"], step["prev"], du[:, :embed_dim])
        dctx = du[:, embed_dim:]

        alpha, tact, s_prev = step["alpha"], step["tact"], step["s_prev"]
        dalpha = np.einsum("bij,bj->bi", states, dctx)
        d_states += alpha[:, :, None] * dctx[:, None, :]
        dscores = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))
        grads["attention.v"] += np.einsum("bi,bia->a", dscores, tact)
        dpre = dscores[:, :, None] * att.v * (1.0 - tact * tact)
        grads["attention.bias"] += dpre.sum(axis=(0, 1))
        dquery = dpre.sum(axis=1)
        grads["attention.w_dec"] += dquery.T @ s_prev
        grads["attention.w_enc"] += np.einsum("bia,bij->aj", dpre, states)
        d_states += np.einsum("bia,aj->bij", dpre, att.w_enc)

        ds = ds_prev + dquery @ att.w_dec

    dh = ds  # decoder start state is the encoder final state
    for t in reversed(range(x_pad.shape[1])):
        dh_total = dh + d_states[:, t]
        m = x_mask[:, t:t + 1]
        dh_cell = np.where(m, dh_total, 0.0).astype(params.dtype)
        dx, dh_prev = gru_cell_backward(dh_cell, cache["enc_caches"][t],
                                        params.encoder, enc_grads)
        np.add.at(grads["grapheme_embedding"], x_pad[:, t], dx)
        dh = dh_prev + np.where(m, 0.0, dh_total).astype(params.dtype)
    return grads


def backward(batch, params: ModelParams) -> tuple[float, dict[str, Array]]:
    """Mean batch loss and its analytic gradients for encoded (x, y) pairs."""
    if not batch:
        raise ValueError("cannot compute gradients for an empty batch")
    x_pad, x_mask, y_pad, y_mask = pad_batch(batch)
    loss, cache = _batch_forward(params, x_pad, x_mask, y_pad, y_mask, True)
    if not math.isfinite(loss):
        raise ValueError(f"non-finite training loss {loss}")
    return loss, _batch_backward(params, x_pad, x_mask, cache)


def batch_loss(batch, params: ModelParams) -> float:
    """Mean batch loss without gradients."""
    if not batch:
        raise ValueError("cannot evaluate an empty batch")
    x_pad, x_mask, y_pad, y_mask = pad_batch(batch)
    loss, _ = _batch_forward(params, x_pad, x_mask, y_pad, y_mask, False)
    return loss


@dataclass
class AdamState:
    m: dict[str, Array]
    v: dict[str, Array]
    step: int = 0


def init_adam_state(params: ModelParams) -> AdamState:
    return AdamState(m=zero_gradients(params), v=zero_gradients(params))


def adam_step(
    params: ModelParams, grads: dict[str, Array], state: AdamState, config: TrainConfig
) -> tuple[ModelParams, AdamState]:
    """Bias-corrected Adam update, applied in place; returns (params, state)."""
    state.step += 1
    bc1 = 1.0 - config.beta1 ** state.step
    bc2 = 1.0 - config.beta2 ** state.step
    for name, arr in params.blocks().items():
        g = grads[name]
        if g.shape != arr.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * g * g
        arr -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.adam_eps)
    return params, state


def gradient_global_norm(grads: dict[str, Array]) -> float:
    return math.sqrt(sum(float((g * g).sum()) for g in grads.values()))


def clip_gradients(grads: dict[str, Array], max_norm: float) -> float:
    """Scale gradients in place so the global norm is at most max_norm."""
    norm = gradient_global_norm(grads)
    if norm > max_norm:
        factor = max_norm / norm
        for g in grads.values():
            g *= factor
    return norm


class PlateauScheduler:
    """Multiply the learning rate by `decay` after `patience` epochs without
    validation improvement, never going below `floor`."""

    def __init__(self, lr: float, patience: int, decay: float, floor: float):
        self.lr = lr
        self.patience = patience
        self.decay = decay
        self.floor = floor
        self.best = math.inf
        self.wait = 0

    def update(self, val_loss: float) -> float:
        if val_loss < self.best:
            self.best = val_loss
            self.wait = 0
        else:
            self.wait += 1
            if self.wait >= self.patience:
                self.lr = max(self.lr * self.decay, self.floor)
                self.wait = 0
        return self.lr


def _dataset_loss(params: ModelParams, encoded, batch_size: int) -> float:
    total = 0.0
    for start in range(0, len(encoded), batch_size):
        chunk = encoded[start:start + batch_size]
        total += batch_loss(chunk, params) * len(chunk)
    return total / len(encoded)


def _greedy_word_accuracy(model: G2PModel, entries) -> float:
    hits = sum(
        1 for e in entries if greedy_decode(e.word, model).phonemes == e.phonemes
    )
    return hits / len(entries)


def train(
    split: DatasetSplit,
    config: TrainConfig,
    *,
    embed_dim: int = 64,
    hidden_dim: int = 128,
    dtype=np.float32,
) -> tuple[G2PModel, TrainHistory]:
    """Train on split.train with vocabularies built from the training portion
    only; retains the parameters of the best-validation epoch.

    With an empty validation set the schedule never decays and the final
    parameters are returned.
    """
    if not split.train:
        raise ValueError("training set is empty")
    graphemes, phonemes = build_vocabs(Lexicon(list(split.train)))
    encoded_train = [encode_entry(e, graphemes, phonemes) for e in split.train]
    encoded_val = [encode_entry(e, graphemes, phonemes) for e in split.validation]

    params = init_params(len(graphemes), len(phonemes), embed_dim, hidden_dim,
                         seed=config.seed, dtype=dtype)
    model = G2PModel(params, graphemes, phonemes)
    history: TrainHistory = []
    if config.epochs == 0:
        return model, history

    adam = init_adam_state(params)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    sched = PlateauScheduler(config.learning_rate, config.patience,
                             config.lr_decay, config.lr_floor)
    best_val = math.inf
    best_params: ModelParams | None = None
    n = len(encoded_train)
    for epoch in range(1, config.epochs + 1):
        lr = sched.lr
        order = shuffle_rng.permutation(n)
        running = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = backward([encoded_train[i] for i in idx], params)
            if config.grad_clip is not None:
                clip_gradients(grads, config.grad_clip)
            adam_step(params, grads, adam,
                      dataclasses.replace(config, learning_rate=lr))
            running += loss * len(idx)
        train_loss = running / n

        if encoded_val:
            val_loss = _dataset_loss(params, encoded_val, config.batch_size)
            val_acc = _greedy_word_accuracy(model, split.validation)
            if val_loss < best_val:
                best_val = val_loss
                best_params = params.copy()
            sched.update(val_loss)
        else:
            val_loss = math.nan
            val_acc = math.nan
        history.append(EpochRecord(epoch, train_loss, val_loss, val_acc, lr))

    if best_params is not None:
        model = G2PModel(best_params, graphemes, phonemes)
    return model, history
