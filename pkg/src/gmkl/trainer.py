"""Training loop: pair generation, negative sampling, batched Adagrad.

Single-threaded training is a pure function of (corpus bytes, config,
seed): every random stream derives from cfg.seed. With threads > 1 the
corpus is sharded by byte ranges, each worker runs its own derived seeds,
and parameter updates are serialized behind one lock; determinism is
explicitly waived in that mode.
"""

from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass, field

import numpy as np

from .corpus import SamplerTables, Vocabulary, build_tables, build_vocab, draw_negative, gen_pairs, read_text8
from .errors import TrainingError
from .model_io import save_model
from .objective import SparseGradient, TrainingTriple, WordGrad, _triple_grad_roles
from .params import ParameterBank, TrainConfig, adagrad_step, init_bank


@dataclass
class TrainResult:
    bank: ParameterBank
    vocab: Vocabulary
    config: TrainConfig
    batch_losses: list[float] = field(default_factory=list)
    context_bank: ParameterBank | None = None


def _merge(dst: SparseGradient, src: SparseGradient) -> None:
    for wid, g in src.items():
        have = dst.get(wid)
        if have is None:
            dst[wid] = WordGrad(g.scores.copy(), g.means.copy(), g.log_vars.copy())
        else:
            have.scores += g.scores
            have.means += g.means
            have.log_vars += g.log_vars


def _scale(grads: SparseGradient, factor: float) -> None:
    for g in grads.values():
        g.scores *= factor
        g.means *= factor
        g.log_vars *= factor


class _BatchState:
    """Accumulates triple gradients until batch_size, then steps Adagrad."""

    def __init__(self, bank, context_bank, cfg, lock=None):
        self.bank = bank
        self.context_bank = context_bank
        self.cfg = cfg
        self.lock = lock
        self.center: SparseGradient = {}
        self.context: SparseGradient = {}
        self.loss_sum = 0.0
        self.n = 0
        self.batch_losses: list[float] = []

    def add(self, loss: float, center: SparseGradient, context: SparseGradient) -> None:
        if not math.isfinite(loss):
            raise TrainingError(f"non-finite loss {loss!r}; aborting")
        self.loss_sum += loss
        _merge(self.center, center)
        _merge(self.context, context)
        self.n += 1
        if self.n >= self.cfg.batch_size:
            self.flush()

    def flush(self) -> None:
        if self.n == 0:
            return
        if self.cfg.batch_reduce == "mean":
            _scale(self.center, 1.0 / self.n)
            _scale(self.context, 1.0 / self.n)
        tied = self.context_bank is self.bank
        if tied:
            _merge(self.center, self.context)
        if self.lock is not None:
            with self.lock:
                self._apply(tied)
        else:
            self._apply(tied)
        self.batch_losses.append(self.loss_sum / self.n)
        self.center = {}
        self.context = {}
        self.loss_sum = 0.0
        self.n = 0

    def _apply(self, tied: bool) -> None:
        adagrad_step(self.bank, self.center, self.cfg.lr, self.cfg.adagrad_eps)
        if not tied:
            adagrad_step(self.context_bank, self.context, self.cfg.lr, self.cfg.adagrad_eps)


def _run_shard(bank, context_bank, vocab, tables, cfg, corpus_path, byte_range,
               worker: int, state: _BatchState, progress, log_every: int) -> None:
    loss_cfg = cfg.loss_config()
    start, end = byte_range
    recent_sum, recent_n, logged_at = 0.0, 0, 0
    for epoch in range(cfg.epochs):
        rng_neg = np.random.default_rng([cfg.seed, 2, epoch, worker])
        pair_seed = [cfg.seed, 1, epoch, worker]
        stream = read_text8(corpus_path, start, end)
        for center_id, context_id in gen_pairs(stream, vocab, tables, cfg.window,
                                               pair_seed, cfg.dynamic_window):
            neg_id = draw_negative(tables, context_id, rng_neg)
            triple = TrainingTriple(center_id, context_id, neg_id)
            loss, g_center, g_context = _triple_grad_roles(bank, context_bank, triple, loss_cfg)
            state.add(loss, g_center, g_context)
            recent_sum += loss
            recent_n += 1
            if progress is not None:
                batches = len(state.batch_losses)
                if batches >= logged_at + log_every:
                    progress(epoch, batches, recent_sum / recent_n)
                    recent_sum, recent_n = 0.0, 0
                    logged_at = batches
    state.flush()


def train(corpus_path, cfg: TrainConfig, out_path=None, threads: int = 1,
          progress=None, log_every: int = 100) -> TrainResult:
    """Train a model over a text8 corpus and optionally write the model file.

    progress, if given, is called as progress(epoch, batch_index, mean_loss)
    every log_every batches. threads > 1 shards the corpus by byte ranges
    (determinism waived).
    """
    cfg.validate()
    vocab = build_vocab(read_text8(corpus_path), cfg.min_count)
    tables = build_tables(vocab, cfg.subsample_t, cfg.neg_exponent, cfg.subsample_formula)
    bank = init_bank(vocab, cfg, cfg.seed)
    context_bank = bank if cfg.tied else init_bank(vocab, cfg, [cfg.seed, 3])

    if threads <= 1:
        state = _BatchState(bank, context_bank, cfg)
        _run_shard(bank, context_bank, vocab, tables, cfg, corpus_path,
                   (0, None), 0, state, progress, log_every)
        batch_losses = state.batch_losses
    else:
        size = os.path.getsize(corpus_path)
        bounds = [size * i // threads for i in range(threads + 1)]
        lock = threading.Lock()
        states = [_BatchState(bank, context_bank, cfg, lock) for _ in range(threads)]
        errors: list[BaseException] = []

        def work(w: int) -> None:
            try:
                _run_shard(bank, context_bank, vocab, tables, cfg, corpus_path,
                           (bounds[w], bounds[w + 1]), w, states[w],
                           progress if w == 0 else None, log_every)
            except BaseException as exc:  # surfaced after join
                errors.append(exc)

        workers = [threading.Thread(target=work, args=(w,)) for w in range(threads)]
        for t in workers:
            t.start()
        for t in workers:
            t.join()
        if errors:
            raise errors[0]
        batch_losses = [loss for s in states for loss in s.batch_losses]

    result = TrainResult(bank, vocab, cfg, batch_losses,
                         None if cfg.tied else context_bank)
    if out_path is not None:
        save_model(bank, vocab, cfg, out_path)
    return result
