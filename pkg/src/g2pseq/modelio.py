"""Versioned single-file model format.

Layout: magic b"G2PM", format version (uint32 LE), header byte length
(uint32 LE), UTF-8 "key=value" header lines (dims and both token lists in id
order, plus free-form provenance keys), then the parameter payload: raw
little-endian float32, row-major, blocks in the fixed order

    grapheme embedding, phoneme embedding,
    encoder cell (w_update u_update b_update w_reset u_reset b_reset
                  w_cand u_cand b_cand),
    decoder cell (same field order),
    attention (w_enc w_dec bias v),
    output weight, output bias.

Loading the saved file reproduces every parameter bit-exactly.
"""
from __future__ import annotations

import struct
from typing import Mapping

import numpy as np

from .attention import AttentionParams
from .lexicon import RESERVED_TOKENS, Vocabulary
from .model import G2PModel, ModelParams
from .nn import GruCellParams

MAGIC = b"G2PM"
FORMAT_VERSION = 1
_HEAD = struct.Struct("<4sII")


class ModelFormatError(Exception):
    """Raised when a model file is corrupt or has an unsupported version."""


def _block_shapes(n_graphemes: int, n_phonemes: int, embed: int, hidden: int):
    shapes: list[tuple[str, tuple[int, ...]]] = [
        ("grapheme_embedding", (n_graphemes, embed)),
        ("phoneme_embedding", (n_phonemes, embed)),
    ]
    for prefix, in_dim in (("encoder", embed), ("decoder", embed + hidden)):
        for gate in ("update", "reset", "cand"):
            shapes.append((f"{prefix}.w_{gate}", (hidden, in_dim)))
            shapes.append((f"{prefix}.u_{gate}", (hidden, hidden)))
            shapes.append((f"{prefix}.b_{gate}", (hidden,)))
    shapes += [
        ("attention.w_enc", (hidden, hidden)),
        ("attention.w_dec", (hidden, hidden)),
        ("attention.bias", (hidden,)),
        ("attention.v", (hidden,)),
        ("output.weight", (n_phonemes, hidden)),
        ("output.bias", (n_phonemes,)),
    ]
    return shapes


def save_model(model: G2PModel, path, extra: Mapping[str, str] | None = None) -> None:
    """Write the model; `extra` adds provenance header keys (sorted)."""
    params = model.params
    lines = [
        f"embed_dim={params.embed_dim}",
        f"hidden_dim={params.hidden_dim}",
        "grapheme_tokens=" + " ".join(model.graphemes.tokens),
        "phoneme_tokens=" + " ".join(model.phonemes.tokens),
    ]
    for key in sorted(extra or {}):
        value = str(extra[key])
        if "\n" in key or "=" in key or "\n" in value:
            raise ValueError(f"invalid header entry {key!r}")
        lines.append(f"{key}={value}")
    header = ("\n".join(lines) + "\n").encode("utf-8")

    with open(path, "wb") as f:
        f.write(_HEAD.pack(MAGIC, FORMAT_VERSION, len(header)))
        f.write(header)
        for _, arr in params.blocks().items():
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_model(path) -> G2PModel:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _HEAD.size:
        raise ModelFormatError("file too short for a model header")
    magic, version, header_len = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {version}")
    if len(data) < _HEAD.size + header_len:
        raise ModelFormatError("truncated header")
    try:
        header = data[_HEAD.size:_HEAD.size + header_len].decode("utf-8")
    except UnicodeDecodeError as e:
        raise ModelFormatError(f"header is not valid UTF-8: {e}") from e

    fields: dict[str, str] = {}
    for line in header.splitlines():
        if line:
            key, sep, value = line.partition("=")
            if not sep:
                raise ModelFormatError(f"malformed header line {line!r}")
            fields[key] = value
    try:
        embed = int(fields["embed_dim"])
        hidden = int(fields["hidden_dim"])
        grapheme_tokens = tuple(fields["grapheme_tokens"].split(" "))
        phoneme_tokens = tuple(fields["phoneme_tokens"].split(" "))
    except KeyError as e:
        raise ModelFormatError(f"missing header key {e.args[0]}") from e
    except ValueError as e:
        raise ModelFormatError(f"bad header value: {e}") from e
    if embed < 1 or hidden < 1:
        raise ModelFormatError("non-positive dimensions in header")
    for tokens in (grapheme_tokens, phoneme_tokens):
        if tokens[:4] != RESERVED_TOKENS:
            raise ModelFormatError("token list does not start with the reserved tokens")

    shapes = _block_shapes(len(grapheme_tokens), len(phoneme_tokens), embed, hidden)
    payload = data[_HEAD.size + header_len:]
    expected = sum(int(np.prod(shape)) for _, shape in shapes) * 4
    if len(payload) != expected:
        raise ModelFormatError(
            f"payload is {len(payload)} bytes, expected {expected}"
        )

    blocks: dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in shapes:
        count = int(np.prod(shape))
        flat = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        blocks[name] = flat.reshape(shape).astype(np.float32, copy=True)
        offset += count * 4

    def cell(prefix: str) -> GruCellParams:
        return GruCellParams(**{f: blocks[f"{prefix}.{f}"] for f in GruCellParams.FIELDS})

    try:
        params = ModelParams(
            grapheme_embedding=blocks["grapheme_embedding"],
            phoneme_embedding=blocks["phoneme_embedding"],
            encoder=cell("encoder"),
            decoder=cell("decoder"),
            attention=AttentionParams(
                blocks["attention.w_enc"], blocks["attention.w_dec"],
                blocks["attention.bias"], blocks["attention.v"],
            ),
            output_weight=blocks["output.weight"],
            output_bias=blocks["output.bias"],
        )
        return G2PModel(params, Vocabulary(grapheme_tokens),
                        Vocabulary(phoneme_tokens))
    except ValueError as e:
        raise ModelFormatError(f"inconsistent model contents: {e}") from e
