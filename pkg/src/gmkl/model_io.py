"""Binary model file: header, config blob, vocabulary, float32 arrays, checksum.

Layout (little-endian throughout):

    magic "GMKL" | u32 version=1 | u32 V | u32 C | u32 D
    u64 config_len | config (UTF-8 JSON of TrainConfig fields)
    V x ( u32 token_len | token UTF-8 | u64 count )
    f32 scores [V*C] | f32 means [V*C*D] | f32 log_vars [V*C*D]   (word-id major)
    u64 FNV-1a of all preceding bytes
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import asdict

import numpy as np

from .corpus import Vocabulary
from .errors import FormatError, UsageError
from .params import ParameterBank, TrainConfig

MAGIC = b"GMKL"
VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes, h: int = _FNV_OFFSET) -> int:
    """64-bit FNV-1a over a byte string; pass h to chain buffers."""
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _U64_MASK
    return h


def save_model(bank: ParameterBank, vocab: Vocabulary, cfg: TrainConfig, path) -> None:
    """Serialize bank + vocab + config; byte-deterministic for equal inputs."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<IIII", VERSION, bank.size, bank.components, bank.dim))
    blob = json.dumps(asdict(cfg), sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<Q", len(blob)))
    buf.write(blob)
    for tok, cnt in zip(vocab.tokens, vocab.counts):
        raw = tok.encode("utf-8")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<Q", int(cnt)))
    buf.write(bank.scores.astype("<f4").tobytes())
    buf.write(bank.means.astype("<f4").tobytes())
    buf.write(bank.log_vars.astype("<f4").tobytes())
    body = buf.getvalue()
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<Q", fnv1a64(body)))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("truncated model file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_model(path) -> tuple[ParameterBank, Vocabulary, TrainConfig]:
    """Read a model file back; raises FormatError before any state escapes."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read model {path}: {exc}") from exc
    if len(data) < len(MAGIC) + 4:
        raise FormatError("truncated model file")
    r = _Reader(data)
    magic = r.take(4)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version, v, c, d = r.unpack("<IIII")
    if version != VERSION:
        raise FormatError(f"unsupported model version {version}")
    if min(v, c, d) < 1:
        raise FormatError(f"invalid header dimensions V={v} C={c} D={d}")
    (blob_len,) = r.unpack("<Q")
    try:
        cfg = TrainConfig.from_dict(json.loads(r.take(blob_len).decode("utf-8")))
    except (ValueError, TypeError, UsageError) as exc:
        raise FormatError(f"bad config blob: {exc}") from exc

    tokens = []
    counts = np.empty(v, dtype=np.int64)
    for i in range(v):
        (tok_len,) = r.unpack("<I")
        try:
            tokens.append(r.take(tok_len).decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError(f"bad vocab entry {i}: {exc}") from exc
        (counts[i],) = r.unpack("<Q")

    def array(n_items, shape):
        raw = r.take(4 * n_items)
        return np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)

    scores = array(v * c, (v, c))
    means = array(v * c * d, (v, c, d))
    log_vars = array(v * c * d, (v, c, d))
    (stored,) = r.unpack("<Q")
    if r.pos != len(data):
        raise FormatError(f"{len(data) - r.pos} trailing bytes after checksum")
    if fnv1a64(data[:-8]) != stored:
        raise FormatError("checksum mismatch: model file is corrupt")

    vocab = Vocabulary(tokens, counts, int(counts.sum()))
    bank = ParameterBank(v, c, d, cfg.var_min, cfg.var_max)
    bank.scores[:] = scores
    bank.means[:] = means
    bank.log_vars[:] = log_vars
    return bank, vocab, cfg
