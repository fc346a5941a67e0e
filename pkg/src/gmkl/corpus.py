"""Corpus ingestion, vocabulary, subsampling and negative sampling.

The corpus format is text8: a single line of lowercase space-separated
tokens (bytes restricted to [a-z ]). Reading is streamed so the 17M-token
original never has to fit in memory, and a (start, end) byte range lets
parallel workers shard one file along token boundaries.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import InputError, UsageError

_ALLOWED = np.zeros(256, dtype=bool)
_ALLOWED[ord("a"):ord("z") + 1] = True
_ALLOWED[ord(" ")] = True

_CHUNK = 1 << 20


def read_text8(path, start: int = 0, end: int | None = None) -> Iterator[str]:
    """Lazily yield tokens from a text8 file.

    A byte range selects a shard: tokens are owned by the shard where they
    start, so reading stops after the first space at or past `end` (the
    straddling token is completed) and, for start > 0, everything up to and
    including the first space at or past `start` is dropped. Concatenating
    adjacent shards therefore reproduces the full stream exactly.

    A single trailing newline is tolerated; any other byte outside [a-z ]
    raises InputError with its offset.
    """
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise InputError(f"cannot read corpus {path}: {exc}") from exc
    with fh:
        fh.seek(0, 2)
        size = fh.tell()
        end = size if end is None else min(end, size)
        pos = max(0, start)
        fh.seek(pos)
        skipping = pos > 0
        partial = b""
        while True:
            chunk = fh.read(_CHUNK)
            if not chunk:
                break
            chunk_start = pos
            pos += len(chunk)
            arr = np.frombuffer(chunk, dtype=np.uint8)
            bad = np.nonzero(~_ALLOWED[arr])[0]
            if bad.size:
                i = int(bad[0])
                at = chunk_start + i
                if not (chunk[i] == 0x0A and at == size - 1):
                    raise InputError(
                        f"invalid byte 0x{chunk[i]:02x} at offset {at}: "
                        "text8 input must be lowercase letters and spaces"
                    )
                chunk = chunk[:i]
            final = False
            if pos > end:
                sp = chunk.find(b" ", max(0, end - chunk_start))
                if sp >= 0:
                    chunk = chunk[:sp]
                    final = True
            if skipping:
                sp = chunk.find(b" ")
                if sp < 0:
                    if final:
                        return
                    continue
                chunk = chunk[sp + 1:]
                skipping = False
            parts = (partial + chunk).split(b" ")
            partial = parts.pop()
            for tok in parts:
                if tok:
                    yield tok.decode("ascii")
            if final:
                break
        if not skipping and partial:
            yield partial.decode("ascii")


@dataclass
class Vocabulary:
    """Dense token<->id map; ids ordered by descending count, ties lexicographic."""

    tokens: list[str]
    counts: np.ndarray                 # [V] int64
    total_tokens: int                  # sum of retained counts
    index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def get(self, token: str, default=None):
        return self.index.get(token, default)

    def frequency(self, wid: int) -> float:
        return float(self.counts[wid]) / self.total_tokens

    def save(self, path) -> None:
        """One "token<TAB>count" line per id, in id order."""
        with open(path, "w", encoding="utf-8") as fh:
            for tok, cnt in zip(self.tokens, self.counts):
                fh.write(f"{tok}\t{int(cnt)}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        tokens, counts = [], []
        try:
            with open(path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    line = line.rstrip("\n")
                    if not line:
                        continue
                    try:
                        tok, cnt = line.split("\t")
                        counts.append(int(cnt))
                    except ValueError as exc:
                        raise InputError(f"{path}:{lineno}: malformed vocabulary line") from exc
                    tokens.append(tok)
        except OSError as exc:
            raise InputError(f"cannot read vocabulary {path}: {exc}") from exc
        arr = np.asarray(counts, dtype=np.int64)
        return cls(tokens, arr, int(arr.sum()))


def build_vocab(stream: Iterable[str], min_count: int = 5) -> Vocabulary:
    """Count the stream and keep tokens seen at least min_count times."""
    counter = Counter(stream)
    if not counter:
        raise InputError("empty corpus: no tokens found")
    kept = sorted(
        ((tok, cnt) for tok, cnt in counter.items() if cnt >= min_count),
        key=lambda kv: (-kv[1], kv[0]),
    )
    if not kept:
        raise InputError(f"no token reaches min_count={min_count}")
    tokens = [tok for tok, _ in kept]
    counts = np.asarray([cnt for _, cnt in kept], dtype=np.int64)
    return Vocabulary(tokens, counts, int(counts.sum()))


@dataclass
class SamplerTables:
    """Per-token keep probabilities and the negative-sampling CDF."""

    keep_prob: np.ndarray   # [V] in [0, 1]
    neg_cdf: np.ndarray     # [V] nondecreasing, last entry 1.0

    @property
    def size(self) -> int:
        return self.keep_prob.size


def build_tables(vocab: Vocabulary, subsample_t: float = 1e-5,
                 neg_exponent: float = 0.75,
                 subsample_formula: str = "sqrt") -> SamplerTables:
    """Subsampling keep-probabilities and the count^exponent negative CDF.

    keep = min(1, sqrt(t/f)) by default; "sqrt_plus_ratio" selects the
    min(1, sqrt(t/f) + t/f) variant. Both are nonincreasing in frequency.
    """
    freq = vocab.counts.astype(np.float64) / vocab.total_tokens
    ratio = subsample_t / freq
    if subsample_formula == "sqrt":
        keep = np.sqrt(ratio)
    elif subsample_formula == "sqrt_plus_ratio":
        keep = np.sqrt(ratio) + ratio
    else:
        raise UsageError(f"unknown subsample formula {subsample_formula!r}")
    keep = np.minimum(1.0, keep)
    weights = vocab.counts.astype(np.float64) ** neg_exponent
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return SamplerTables(keep, cdf)


class TrainingPair(NamedTuple):
    center_id: int
    context_id: int


def gen_pairs(stream: Iterable[str], vocab: Vocabulary, tables: SamplerTables,
              window: int, seed, dynamic_window: bool = True) -> Iterator[TrainingPair]:
    """Skip-gram pairs over the subsampled token stream.

    Out-of-vocabulary and subsampled tokens are removed before windowing,
    so distances are measured over kept tokens. Per center, the effective
    half-window b is drawn uniformly from 1..window (or fixed at window),
    and a pair is emitted for every kept token within distance b, left to
    right. Deterministic under (corpus, config, seed).
    """
    if window < 1:
        raise UsageError("window must be >= 1")
    keep_ss, win_ss = np.random.SeedSequence(seed).spawn(2)
    rng_keep = np.random.default_rng(keep_ss)
    rng_win = np.random.default_rng(win_ss)
    keep_prob = tables.keep_prob

    buf: deque[int] = deque()
    center = 0  # index of the next center within buf

    def emit(c: int) -> Iterator[TrainingPair]:
        b = int(rng_win.integers(1, window + 1)) if dynamic_window else window
        lo = max(0, c - b)
        hi = min(len(buf), c + b + 1)
        wid = buf[c]
        for j in range(lo, hi):
            if j != c:
                yield TrainingPair(wid, buf[j])

    for tok in stream:
        wid = vocab.index.get(tok)
        if wid is None:
            continue
        kp = keep_prob[wid]
        if kp < 1.0 and rng_keep.random() >= kp:
            continue
        buf.append(wid)
        # emit centers whose right lookahead is complete
        while len(buf) - 1 - center >= window:
            yield from emit(center)
            center += 1
            if center > window:
                buf.popleft()
                center -= 1
    while center < len(buf):
        yield from emit(center)
        center += 1
        if center > window:
            buf.popleft()
            center -= 1


def draw_negative(tables: SamplerTables, exclude: int, rng) -> int:
    """Draw a token id != exclude from the count^exponent proposal."""
    v = tables.size
    if v < 2:
        raise UsageError("negative sampling needs a vocabulary of at least 2")
    cdf = tables.neg_cdf
    while True:
        idx = int(np.searchsorted(cdf, rng.random(), side="right"))
        if idx >= v:
            idx = v - 1
        if idx != exclude:
            return idx
